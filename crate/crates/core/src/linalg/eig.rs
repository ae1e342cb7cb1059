//! Symmetric eigendecomposition by cyclic Jacobi rotations, and the
//! factorizations built on it.

use alloc::vec::Vec;

use super::{LinalgError, Mat, SymMatrix, math};

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-12;

/// `M = V diag(values) Vᵀ` with `values` ascending and `V` orthogonal.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: Mat,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V diag(f(λ)) Vᵀ`
    pub fn reassemble(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| self.vectors[(i, k)] * fl[k] * self.vectors[(j, k)]).sum();
                out.set(i, j, s);
            }
        }
        out
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops to `1e-12 * ‖M‖_F`.
/// Each eigenvector is sign-normalized so that its largest-magnitude entry is
/// positive, which makes the output deterministic.
pub fn sym_eig(m: &SymMatrix) -> Result<SymEigen, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.dim();
    let mut a = m.to_dense();
    let mut v = Mat::identity(n);
    let scale = m.norm_fro();

    let mut converged = scale == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if math::sqrt(off) <= OFF_DIAG_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let t = 1.0 / (theta.abs() + math::sqrt(theta * theta + 1.0));
                    if theta < 0.0 { -t } else { t }
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence { iterations: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut big = 0usize;
        for k in 0..n {
            if v[(k, src)].abs() > v[(big, src)].abs() {
                big = k;
            }
        }
        let sign = if v[(big, src)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, dst)] = sign * v[(k, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig(m: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(sym_eig(m)?.min())
}

/// Symmetric PSD square root.
///
/// Eigenvalues below zero are clipped to zero when they lie within
/// `psd_tol + 1e-12 * λ_max` of it; anything more negative is rejected.
pub fn psd_sqrt(m: &SymMatrix, psd_tol: f64) -> Result<SymMatrix, LinalgError> {
    let e = sym_eig(m)?;
    let threshold = psd_tol + 1e-12 * e.max().abs();
    if e.min() < -threshold {
        return Err(LinalgError::NotPsd { min_eigenvalue: e.min() });
    }
    Ok(e.reassemble(|l| math::sqrt(l.max(0.0))))
}

/// Lower-triangular Cholesky factor, or `None` when `m` is not positive definite.
pub fn chol(m: &SymMatrix) -> Option<Mat> {
    let n = m.dim();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = math::sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let l = chol(m).ok_or(LinalgError::NotPositiveDefinite)?;
    let n = m.dim();
    // L⁻¹ by forward substitution, then M⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = Mat::zeros(n, n);
    for j in 0..n {
        linv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = s / l[(i, i)];
        }
    }
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (j..n).map(|k| linv[(k, i)] * linv[(k, j)]).sum();
            out.set(i, j, s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[[f64; 2]]) -> SymMatrix {
        SymMatrix::from_dense(&Mat::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_keeps_axis_vectors() {
        let e = sym_eig(&SymMatrix::from_diag(&[5.0, -2.0])).unwrap();
        assert_eq!(e.values, [-2.0, 5.0]);
        assert_eq!(e.vectors, Mat::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap());
    }

    #[test]
    fn classic_two_by_two() {
        let e = sym_eig(&sym(&[[2.0, 1.0], [1.0, 2.0]])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_examples() {
        let s = psd_sqrt(&SymMatrix::identity(2).scale(4.0), 1e-8).unwrap();
        assert!(s.max_abs_diff(&SymMatrix::identity(2).scale(2.0)) < 1e-14);
        let s = psd_sqrt(&SymMatrix::from_diag(&[9.0, 0.0]), 1e-8).unwrap();
        assert!(s.max_abs_diff(&SymMatrix::from_diag(&[3.0, 0.0])) < 1e-14);
    }

    #[test]
    fn sqrt_of_coupled_matrix_squares_back() {
        // Oracle: assemble the root from the eigenpairs (1, [1,-1]/√2), (3, [1,1]/√2) by hand.
        let m = sym(&[[2.0, 1.0], [1.0, 2.0]]);
        let s = psd_sqrt(&m, 1e-8).unwrap();
        let r3 = libm::sqrt(3.0);
        let expected = sym(&[[(1.0 + r3) / 2.0, (r3 - 1.0) / 2.0], [(r3 - 1.0) / 2.0, (1.0 + r3) / 2.0]]);
        assert!(s.max_abs_diff(&expected) < 1e-14);
        let sd = s.to_dense();
        assert!((&(&sd * &sd) - &m.to_dense()).max_abs() < 1e-13);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let err = psd_sqrt(&SymMatrix::from_diag(&[1.0, -0.5]), 1e-8).unwrap_err();
        assert!(matches!(err, LinalgError::NotPsd { min_eigenvalue } if min_eigenvalue == -0.5));
    }

    #[test]
    fn sqrt_clips_roundoff_negatives() {
        let s = psd_sqrt(&SymMatrix::from_diag(&[1.0, -1e-10]), 1e-8).unwrap();
        assert_eq!(s.get(1, 1), 0.0);
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(chol(&SymMatrix::identity(2)).unwrap(), Mat::identity(2));
        assert!(chol(&SymMatrix::from_diag(&[1.0, -1.0])).is_none());
        let l = chol(&sym(&[[4.0, 2.0], [2.0, 5.0]])).unwrap();
        assert_eq!(l, Mat::from_rows(&[[2.0, 0.0], [1.0, 2.0]]).unwrap());
        assert_eq!(l.matmul_t(&l), Mat::from_rows(&[[4.0, 2.0], [2.0, 5.0]]).unwrap());
    }

    #[test]
    fn spd_inverse_matches_lu_inverse() {
        let m = sym(&[[4.0, 2.0], [2.0, 5.0]]);
        let a = spd_inverse(&m).unwrap().to_dense();
        let b = m.to_dense().inverse().unwrap();
        assert!((&a - &b).max_abs() < 1e-15);
    }
}
