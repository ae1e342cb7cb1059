use alloc::vec::Vec;

use super::{LinalgError, Mat, math};

const MAX_SWEEPS: usize = 60;

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(a: &Mat) -> Result<Vec<f64>, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let u = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
    let (m, n) = u.shape();
    // Column-major copy so that column rotations touch contiguous memory.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| u.col(j)).collect();

    // Inner products carry roughly m ulps of roundoff; a tighter threshold can cycle.
    let tol = m as f64 * f64::EPSILON;
    // Columns below this squared norm are numerically zero.
    let negligible = {
        let e = f64::EPSILON * a.norm_fro();
        e * e
    };
    let mut done = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = (0..m).fold((0.0, 0.0, 0.0), |(al, be, ga), i| {
                    let x = cols[p][i];
                    let y = cols[q][i];
                    (al + x * x, be + y * y, ga + x * y)
                });
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * math::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = {
                    let t = 1.0 / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                    if zeta < 0.0 { -t } else { t }
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let x = cols[p][i];
                    let y = cols[q][i];
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            done = true;
            break;
        }
    }
    if !done {
        return Err(LinalgError::NoConvergence { iterations: MAX_SWEEPS });
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| math::sqrt(c.iter().map(|x| x * x).sum())).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Numerical rank: singular values above `rel_tol * σ_max`.
pub fn numerical_rank(a: &Mat, rel_tol: f64) -> Result<(usize, Vec<f64>), LinalgError> {
    let sv = singular_values(a)?;
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 { 0 } else { sv.iter().filter(|&&s| s > rel_tol * top).count() };
    Ok((rank, sv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_columns_terminate() {
        let a = Mat::from_rows(&[[-1.968165, -3.925], [0.0, 0.0]]).unwrap();
        let sv = singular_values(&a).unwrap();
        assert!(sv[1] <= 1e-15 * sv[0]);
    }

    #[test]
    fn rank_deficient_pbh_block_terminates() {
        let data = [
            -0.4966041675734008, -1.3881324207923895, 0.3410436496414001, -0.8417293475529575,
            0.3147583992067513, -0.0, -0.0, -0.0, 0.24903139206642624, 0.49660416757340076,
            -0.8417293475529575, 2.0785966699832237, -0.0, 0.3147583992067513, -0.0, -0.0,
            -0.3147583992067513, 0.0, 0.0, 0.0, -0.4966041675734008, -1.3881324207923895,
            0.3410436496414001, -0.8417293475529575, 0.0, -0.3147583992067513, 0.0, 0.0,
            0.24903139206642624, 0.49660416757340076, -0.8417293475529575, 2.0785966699832237,
        ];
        let a = Mat::from_row_major(4, 8, data.to_vec()).unwrap();
        let sv = singular_values(&a).unwrap();
        assert_eq!(sv.len(), 4);
        let fro2: f64 = sv.iter().map(|s| s * s).sum();
        assert!((fro2 - a.norm_fro() * a.norm_fro()).abs() < 1e-12 * fro2);
    }

    #[test]
    fn diagonal_singular_values() {
        let a = Mat::from_diag(&[3.0, -4.0, 0.5]);
        let sv = singular_values(&a).unwrap();
        assert_eq!(sv, [4.0, 3.0, 0.5]);
    }

    #[test]
    fn wide_matrix_rank() {
        // [1 2 3; 2 4 6] has rank 1.
        let a = Mat::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
        let (rank, sv) = numerical_rank(&a, 1e-9).unwrap();
        assert_eq!(rank, 1);
        assert!((sv[0] - libm::sqrt(70.0)).abs() < 1e-13);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        assert_eq!(numerical_rank(&Mat::zeros(2, 3), 1e-9).unwrap().0, 0);
    }
}
