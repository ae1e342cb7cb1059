use alloc::vec;

use super::hqr::eigenvalues;
use super::{LinalgError, Mat, SymMatrix};

/// Solves `F X + X Fᵀ + W = 0` for symmetric `X`.
///
/// The equation is vectorized into the `n² × n²` Kronecker system
/// `(I ⊗ F + F ⊗ I) vec(X) = -vec(W)` and solved densely. The operator is
/// singular exactly when two eigenvalues of `F` sum to zero; that case is
/// detected from the spectrum before solving.
pub fn solve_lyapunov(f: &Mat, w: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    if !f.is_square() {
        return Err(LinalgError::NotSquare { rows: f.rows(), cols: f.cols() });
    }
    let n = f.rows();
    if w.dim() != n {
        return Err(LinalgError::Dimension { expected: (n, n), found: (w.dim(), w.dim()) });
    }

    let spectrum = eigenvalues(f)?;
    let scale = f.norm_fro().max(f64::MIN_POSITIVE);
    let mut closest = f64::INFINITY;
    for a in &spectrum {
        for b in &spectrum {
            closest = closest.min(libm::hypot(a.re + b.re, a.im + b.im));
        }
    }
    if closest <= 1e-12 * scale {
        return Err(LinalgError::DegenerateSpectrum { min_pair_sum: closest });
    }

    let nn = n * n;
    let mut k = Mat::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for l in 0..n {
                // Σ_l F_il X_lj
                k[(row, l * n + j)] += f[(i, l)];
                // Σ_l X_il F_jl
                k[(row, i * n + l)] += f[(j, l)];
            }
        }
    }
    let mut rhs = vec![0.0; nn];
    for i in 0..n {
        for j in 0..n {
            rhs[i * n + j] = -w.get(i, j);
        }
    }
    let x = k.solve(&rhs).map_err(|_| LinalgError::DegenerateSpectrum { min_pair_sum: closest })?;
    let dense = Mat::from_row_major(n, n, x)?;
    SymMatrix::from_dense(&dense)
}

/// `‖F X + X Fᵀ + W‖_F`
pub fn lyapunov_residual(f: &Mat, x: &SymMatrix, w: &SymMatrix) -> f64 {
    let xd = x.to_dense();
    let fx = f * &xd;
    let r = &(&fx + &fx.transpose()) + &w.to_dense();
    r.norm_fro()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_identity() {
        let x = solve_lyapunov(&Mat::identity(2).scale(-1.0), &SymMatrix::identity(2).scale(2.0)).unwrap();
        assert!(x.max_abs_diff(&SymMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn diagonal_decoupled() {
        let f = Mat::from_diag(&[-1.0, -3.0]);
        let x = solve_lyapunov(&f, &SymMatrix::from_diag(&[2.0, 6.0])).unwrap();
        assert!(x.max_abs_diff(&SymMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn coupled_against_hand_elimination() {
        // F = [[-1, 1], [0, -2]], W = I. Unknowns x11, x12, x22:
        //   (1,1): -2 x11 + 2 x12 + 1 = 0
        //   (1,2): -3 x12 + x22     = 0
        //   (2,2): -4 x22 + 1       = 0
        // → x22 = 1/4, x12 = 1/12, x11 = 1/2 + 1/12 = 7/12.
        let f = Mat::from_rows(&[[-1.0, 1.0], [0.0, -2.0]]).unwrap();
        let x = solve_lyapunov(&f, &SymMatrix::identity(2)).unwrap();
        let want = SymMatrix::from_packed(2, vec![7.0 / 12.0, 1.0 / 12.0, 0.25]).unwrap();
        assert!(x.max_abs_diff(&want) < 1e-15, "{x:?}");
        assert!(lyapunov_residual(&f, &x, &SymMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn opposite_eigenvalues_are_degenerate() {
        let f = Mat::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            solve_lyapunov(&f, &SymMatrix::identity(2)),
            Err(LinalgError::DegenerateSpectrum { .. })
        ));
    }
}
