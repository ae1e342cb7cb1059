//! Problem data: the source system `dX = A X dt + B dW`, the sensor gain of
//! `dY = C X dt + dV`, and numeric tolerances.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::{Eigenvalue, LinalgError, Mat, eigenvalues, numerical_rank};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} contains non-finite entries")]
    NonFinite(&'static str),
    #[error(
        "(A, B) is not controllable: rank [B, AB, ...] = {rank} < {n}; PBH test fails at eigenvalue {}",
        fmt_eigs(.witnesses)
    )]
    NotControllable { rank: usize, n: usize, witnesses: Vec<Eigenvalue> },
    #[error("(A, C) is not detectable; unobservable modes {}", fmt_eigs(.modes))]
    NotDetectable { modes: Vec<Eigenvalue> },
    #[error("invalid tolerance {name} = {value}")]
    Tolerance { name: &'static str, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn fmt_eigs(e: &[Eigenvalue]) -> String {
    let parts: Vec<String> = e.iter().map(|l| format!("{:.6}{:+.6}i", l.re, l.im)).collect();
    parts.join(", ")
}

/// Numeric thresholds shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value / eigenvalue zero threshold.
    pub eig_tol: f64,
    /// Slack allowed on the minimum eigenvalue in PSD checks.
    pub psd_tol: f64,
    /// Duality-gap target for the SDP.
    pub gap_tol: f64,
    /// Riccati residual target.
    pub residual_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eig_tol: 1e-9, psd_tol: 1e-8, gap_tol: 1e-8, residual_tol: 1e-7 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("eig_tol", self.eig_tol),
            ("psd_tol", self.psd_tol),
            ("gap_tol", self.gap_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::Tolerance { name, value });
            }
        }
        Ok(())
    }
}

/// The Gauss–Markov source `dX = A X dt + B dW` with `(A, B)` controllable.
///
/// `A` is `n × n`; `B` is `n × m` (any `m ≥ 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    a: Mat,
    b: Mat,
}

impl SystemModel {
    /// Validates dimensions, finiteness and controllability.
    pub fn new(a: Mat, b: Mat, tol: &Tolerances) -> Result<Self, ModelError> {
        check_shapes(&a, &b)?;
        let report = check_controllable(&a, &b, tol.eig_tol)?;
        if !report.controllable {
            let witnesses = pbh_failures(&a, &b, tol.eig_tol, f64::NEG_INFINITY)?;
            return Err(ModelError::NotControllable { rank: report.rank, n: a.rows(), witnesses });
        }
        Ok(Self { a, b })
    }

    /// Scalar model `dx = a x dt + b dw`.
    pub fn scalar(a: f64, b: f64) -> Result<Self, ModelError> {
        Self::new(Mat::scalar(a), Mat::scalar(b), &Tolerances::default())
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Number of noise inputs (columns of `B`).
    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// `B Bᵀ`
    pub fn bbt(&self) -> Mat {
        self.b.matmul_t(&self.b)
    }
}

fn check_shapes(a: &Mat, b: &Mat) -> Result<(), ModelError> {
    if !a.is_square() || a.rows() == 0 {
        return Err(ModelError::Dimension(format!("A must be square and nonempty, got {}x{}", a.rows(), a.cols())));
    }
    if b.rows() != a.rows() || b.cols() == 0 {
        return Err(ModelError::Dimension(format!(
            "B must have {} rows and at least one column, got {}x{}",
            a.rows(),
            b.rows(),
            b.cols()
        )));
    }
    if !a.is_finite() {
        return Err(ModelError::NonFinite("A"));
    }
    if !b.is_finite() {
        return Err(ModelError::NonFinite("B"));
    }
    Ok(())
}

/// Outcome of a rank test on the controllability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllabilityReport {
    pub controllable: bool,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Rank test on `[B, AB, …, A^{n-1}B]` with relative singular-value threshold `eig_tol`.
pub fn check_controllable(a: &Mat, b: &Mat, eig_tol: f64) -> Result<ControllabilityReport, ModelError> {
    check_shapes(a, b)?;
    let n = a.rows();
    let mut block = b.clone();
    let mut krylov = b.clone();
    for _ in 1..n {
        block = a * &block;
        krylov = krylov.hstack(&block);
    }
    let (rank, singular_values) = numerical_rank(&krylov, eig_tol)?;
    Ok(ControllabilityReport { controllable: rank == n, rank, singular_values })
}

/// PBH detectability test: every eigenvalue of `A` with `Re λ ≥ -eig_tol`
/// must satisfy `rank [A − λI; C] = n`.
pub fn check_detectable(a: &Mat, c: &Mat, eig_tol: f64) -> Result<bool, ModelError> {
    Ok(unobservable_modes(a, c, eig_tol)?.is_empty())
}

/// PBH stabilizability test on `(A, B)`: the dual of [`check_detectable`].
pub fn check_stabilizable(a: &Mat, b: &Mat, eig_tol: f64) -> Result<bool, ModelError> {
    check_shapes(a, b)?;
    Ok(pbh_failures(a, b, eig_tol, -eig_tol)?.is_empty())
}

/// Eigenvalues of `A` with `Re λ ≥ -eig_tol` that `C` cannot see.
pub fn unobservable_modes(a: &Mat, c: &Mat, eig_tol: f64) -> Result<Vec<Eigenvalue>, ModelError> {
    if !a.is_square() {
        return Err(ModelError::Dimension(format!("A must be square, got {}x{}", a.rows(), a.cols())));
    }
    if c.cols() != a.rows() {
        return Err(ModelError::Dimension(format!("C must have {} columns, got {}", a.rows(), c.cols())));
    }
    if !c.is_finite() {
        return Err(ModelError::NonFinite("C"));
    }
    pbh_failures(&a.transpose(), &c.transpose(), eig_tol, -eig_tol)
}

/// Eigenvalues `λ` of `A` with `Re λ ≥ floor` where `[A − λI, B]` loses rank.
///
/// The complex rank test runs on the real embedding
/// `[[Re M, −Im M], [Im M, Re M]]`, whose rank is twice the complex rank.
fn pbh_failures(a: &Mat, b: &Mat, eig_tol: f64, floor: f64) -> Result<Vec<Eigenvalue>, ModelError> {
    let n = a.rows();
    let m = b.cols();
    let mut out: Vec<Eigenvalue> = Vec::new();
    for lambda in eigenvalues(a)? {
        if lambda.re < floor || lambda.im < 0.0 {
            continue;
        }
        // M = [A − λI, B] is n × (n + m); embed as 2n × 2(n + m).
        let w = n + m;
        let mut emb = Mat::zeros(2 * n, 2 * w);
        for i in 0..n {
            for j in 0..w {
                let (re, im) = if j < n {
                    (a[(i, j)] - if i == j { lambda.re } else { 0.0 }, if i == j { -lambda.im } else { 0.0 })
                } else {
                    (b[(i, j - n)], 0.0)
                };
                emb[(i, j)] = re;
                emb[(i, w + j)] = -im;
                emb[(n + i, j)] = im;
                emb[(n + i, w + j)] = re;
            }
        }
        let (rank, _) = numerical_rank(&emb, eig_tol)?;
        if rank < 2 * n {
            out.push(lambda);
        }
    }
    Ok(out)
}

/// Observation gain `C` (`n × n`) of the sensor `dY = C X dt + dV`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorGain {
    c: Mat,
}

impl SensorGain {
    pub fn new(c: Mat) -> Self {
        Self { c }
    }

    /// Wraps `c` after checking that `(A, C)` is detectable.
    pub fn certified(model: &SystemModel, c: Mat, tol: &Tolerances) -> Result<Self, ModelError> {
        if c.shape() != (model.n(), model.n()) {
            return Err(ModelError::Dimension(format!(
                "C must be {n}x{n}, got {}x{}",
                c.rows(),
                c.cols(),
                n = model.n()
            )));
        }
        let modes = unobservable_modes(model.a(), &c, tol.eig_tol)?;
        if !modes.is_empty() {
            return Err(ModelError::NotDetectable { modes });
        }
        Ok(Self { c })
    }

    pub fn zeros(n: usize) -> Self {
        Self { c: Mat::zeros(n, n) }
    }

    pub fn matrix(&self) -> &Mat {
        &self.c
    }

    /// `Cᵀ C`
    pub fn ctc(&self) -> Mat {
        self.c.transpose().matmul(&self.c)
    }

    pub fn is_detectable_for(&self, model: &SystemModel, tol: &Tolerances) -> Result<bool, ModelError> {
        check_detectable(model.a(), &self.c, tol.eig_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn m(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn double_integrator_is_controllable() {
        let a = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = m(&[&[0.0], &[1.0]]);
        assert!(check_controllable(&a, &b, TOL).unwrap().controllable);
        let padded = m(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(check_controllable(&a, &padded, TOL).unwrap().controllable);
    }

    #[test]
    fn decoupled_unexcited_state_is_not_controllable() {
        let r = check_controllable(&Mat::identity(2), &m(&[&[1.0, 0.0], &[0.0, 0.0]]), TOL).unwrap();
        assert!(!r.controllable);
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn full_rank_b_is_controllable() {
        let a = m(&[
            &[-1.0, 0.3, 0.0, 0.2],
            &[0.0, -2.0, 0.5, 0.0],
            &[0.1, 0.0, -0.5, 0.4],
            &[0.0, 0.0, 0.0, -3.0],
        ]);
        assert!(check_controllable(&a, &Mat::identity(4), TOL).unwrap().controllable);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert!(matches!(check_controllable(&a, &Mat::identity(2), TOL), Err(ModelError::Dimension(_))));
        assert!(matches!(
            check_controllable(&Mat::identity(2), &Mat::identity(3), TOL),
            Err(ModelError::Dimension(_))
        ));
    }

    #[test]
    fn detectability_examples() {
        assert!(!check_detectable(&Mat::scalar(1.0), &Mat::scalar(0.0), TOL).unwrap());
        assert!(check_detectable(&Mat::scalar(-1.0), &Mat::scalar(0.0), TOL).unwrap());
        assert!(check_detectable(&Mat::scalar(1.0), &Mat::scalar(1.0), TOL).unwrap());
    }

    #[test]
    fn detectability_sees_complex_modes() {
        // Undamped oscillator: eigenvalues ±i, observed through the first coordinate.
        let a = m(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(check_detectable(&a, &m(&[&[1.0, 0.0], &[0.0, 0.0]]), TOL).unwrap());
        assert!(!check_detectable(&a, &Mat::zeros(2, 2), TOL).unwrap());
    }

    #[test]
    fn uncontrollable_model_names_pbh_witness() {
        let err = SystemModel::new(Mat::identity(2), m(&[&[1.0, 0.0], &[0.0, 0.0]]), &Tolerances::default())
            .unwrap_err();
        match &err {
            ModelError::NotControllable { rank, witnesses, .. } => {
                assert_eq!(*rank, 1);
                assert!(!witnesses.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(alloc::string::ToString::to_string(&err).contains("PBH"));
    }

    #[test]
    fn certified_gain_rejects_undetectable() {
        let model = SystemModel::scalar(1.0, 1.0).unwrap();
        let tol = Tolerances::default();
        assert!(matches!(
            SensorGain::certified(&model, Mat::scalar(0.0), &tol),
            Err(ModelError::NotDetectable { .. })
        ));
        assert!(SensorGain::certified(&model, Mat::scalar(2.0), &tol).is_ok());
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(Tolerances::default().validate().is_ok());
        let bad = Tolerances { gap_tol: 0.0, ..Tolerances::default() };
        assert!(bad.validate().is_err());
    }
}
