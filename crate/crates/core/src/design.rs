//! Sensor synthesis: SDP optimum → gain reconstruction → Riccati cross-check.

use alloc::vec::Vec;

use crate::linalg::{LinalgError, Mat, SymMatrix, psd_sqrt, spd_inverse};
use crate::model::{ModelError, SensorGain, SystemModel, Tolerances, check_detectable};
use crate::riccati::{RiccatiError, are_residual, rates_from_p, solve_care};
use crate::sdp::{self, SdpError};

/// Relative agreement required between the SDP optimum and the Riccati solve.
const CROSS_CHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignError {
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("recovered gain leaves Riccati residual {residual:e} above {bound:e}")]
    Residual { residual: f64, bound: f64 },
    #[error("recovered gain does not detect the source")]
    NotDetectable,
    #[error("{what} mismatch: SDP {sdp}, Riccati {care}")]
    CrossCheck { what: &'static str, sdp: f64, care: f64 },
    #[error("distortion grid {0}")]
    Grid(&'static str),
    #[error("trade-off curve is not {kind} at grid index {index}")]
    Curve { kind: &'static str, index: usize },
}

/// Recovers `C` with `CᵀC = P⁻¹(AP + PAᵀ + BBᵀ)P⁻¹` (the symmetric PSD root)
/// and confirms it solves the algebraic Riccati equation at `P`.
pub fn recover_gain(model: &SystemModel, p: &SymMatrix, tol: &Tolerances) -> Result<SensorGain, DesignError> {
    let pinv = spd_inverse(p)?.to_dense();
    let p_dense = p.to_dense();
    let ap = model.a() * &p_dense;
    let f1 = SymMatrix::from_dense(&(&(&ap + &ap.transpose()) + &model.bbt()))?;
    // M = K Kᵀ with K = P⁻¹ F₁^{1/2} stays PSD however small P's eigenvalues are.
    let k = &pinv * &psd_sqrt(&f1, tol.psd_tol)?.to_dense();
    let m = SymMatrix::from_dense(&k.matmul_t(&k))?;
    let c = psd_sqrt(&m, tol.psd_tol)?.to_dense();
    let gain = SensorGain::new(c);

    let residual = are_residual(model, &gain, p);
    let bound = tol.residual_tol * (1.0 + model.bbt().norm_fro());
    if !(residual <= bound) {
        return Err(DesignError::Residual { residual, bound });
    }
    if !check_detectable(model.a(), gain.matrix(), tol.eig_tol)? {
        return Err(DesignError::NotDetectable);
    }
    Ok(gain)
}

/// One point of the information-rate / MMSE trade-off.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub d: f64,
    /// Minimal information rate in nats per unit time.
    pub rate: f64,
    /// `Tr(P)` at the SDP optimum.
    pub trace_p: f64,
    /// `Tr(P)` of the independent Riccati solve for the recovered gain.
    pub care_trace_p: f64,
    pub gap: f64,
    /// Riccati residual of the Newton-polished solution for the recovered gain.
    pub are_residual: f64,
    pub detectable: bool,
    pub gain: SensorGain,
    pub p: SymMatrix,
    pub q: SymMatrix,
}

/// Solves the SDP at budget `d`, reconstructs a gain and confirms it with an
/// independent Riccati solve.
pub fn design_sensor(model: &SystemModel, d: f64, tol: &Tolerances) -> Result<TradeoffPoint, DesignError> {
    let problem = sdp::build_sdp(model, d)?;
    let sol = sdp::solve(&problem, tol)?;
    let gain = recover_gain(model, &sol.p, tol)?;
    let care = solve_care(model, &gain, tol)?;
    let (rate, care_trace) = rates_from_p(&care.p, &gain);

    let sdp_trace = sol.p.trace();
    if (care_trace - sdp_trace).abs() > CROSS_CHECK_TOL * (1.0 + sdp_trace.abs()) {
        return Err(DesignError::CrossCheck { what: "Tr(P)", sdp: sdp_trace, care: care_trace });
    }
    if (rate - sol.objective).abs() > CROSS_CHECK_TOL * (1.0 + sol.objective.abs()) {
        return Err(DesignError::CrossCheck { what: "information rate", sdp: sol.objective, care: rate });
    }
    Ok(TradeoffPoint {
        d,
        rate: sol.objective,
        trace_p: sdp_trace,
        care_trace_p: care_trace,
        gap: sol.duality_gap,
        are_residual: care.residual,
        detectable: true,
        gain,
        p: sol.p,
        q: sol.q,
    })
}

/// Checks that `grid` is nonempty, positive and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<(), DesignError> {
    if grid.is_empty() {
        return Err(DesignError::Grid("is empty"));
    }
    if grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(DesignError::Grid("has a non-positive or non-finite entry"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DesignError::Grid("is not strictly increasing"));
    }
    Ok(())
}

/// Trade-off points on an increasing distortion grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    points: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    /// Accepts `points` if the rates are nonincreasing and convex in `D`
    /// up to `10·gap_tol` (relative to the rate).
    pub fn from_points(points: Vec<TradeoffPoint>, tol: &Tolerances) -> Result<Self, DesignError> {
        let ds: Vec<f64> = points.iter().map(|p| p.d).collect();
        validate_grid(&ds)?;
        let slack = |r: f64| 10.0 * tol.gap_tol * (1.0 + r.abs());
        for (i, w) in points.windows(2).enumerate() {
            if w[1].rate > w[0].rate + slack(w[0].rate) {
                return Err(DesignError::Curve { kind: "nonincreasing", index: i + 1 });
            }
        }
        for (i, w) in points.windows(3).enumerate() {
            let (d0, d1, d2) = (w[0].d, w[1].d, w[2].d);
            let chord = ((d2 - d1) * w[0].rate + (d1 - d0) * w[2].rate) / (d2 - d0);
            if w[1].rate > chord + slack(w[1].rate) {
                return Err(DesignError::Curve { kind: "convex", index: i + 1 });
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[TradeoffPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distortions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.d).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }
}

/// Runs [`design_sensor`] at every grid point.
pub fn sweep_curve(model: &SystemModel, grid: &[f64], tol: &Tolerances) -> Result<TradeoffCurve, DesignError> {
    validate_grid(grid)?;
    let points = grid.iter().map(|&d| design_sensor(model, d, tol)).collect::<Result<Vec<_>, _>>()?;
    TradeoffCurve::from_points(points, tol)
}

/// `C` with `CᵀC = M` for a symmetric PSD `M` given densely; convenience for overrides.
pub fn gain_from_ctc(ctc: &Mat, tol: &Tolerances) -> Result<SensorGain, DesignError> {
    let m = SymMatrix::from_dense(ctc)?;
    Ok(SensorGain::new(psd_sqrt(&m, tol.psd_tol)?.to_dense()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scalar_chain() {
        let model = SystemModel::scalar(-1.0, 1.0).unwrap();
        let pt = design_sensor(&model, 0.25, &tol()).unwrap();
        // CᵀC = (−2·0.25 + 1)/0.25² = 8
        assert!((pt.gain.matrix()[(0, 0)] - libm::sqrt(8.0)).abs() < 1e-5);
        assert!((pt.p.get(0, 0) - 0.25).abs() < 1e-6);
        assert!((pt.rate - 1.0).abs() < 1e-7);
        assert!(pt.detectable);
    }

    #[test]
    fn saturated_budget_needs_no_sensor() {
        let model = SystemModel::scalar(-1.0, 1.0).unwrap();
        let pt = design_sensor(&model, 5.0, &tol()).unwrap();
        assert!(pt.gain.matrix()[(0, 0)].abs() < 1e-3);
        assert!((pt.trace_p - 0.5).abs() < 1e-6);
        assert!(pt.rate.abs() < 1e-7);
    }

    #[test]
    fn decoupled_pair() {
        let model = SystemModel::new(Mat::identity(2).scale(-1.0), Mat::identity(2), &tol()).unwrap();
        let pt = design_sensor(&model, 0.5, &tol()).unwrap();
        assert!((pt.rate - 2.0).abs() < 1e-6);
        assert!(pt.p.max_abs_diff(&SymMatrix::identity(2).scale(0.25)) < 1e-6);
    }

    #[test]
    fn scalar_sweep() {
        let model = SystemModel::scalar(-1.0, 1.0).unwrap();
        let curve = sweep_curve(&model, &[0.1, 0.25, 0.5, 1.0], &tol()).unwrap();
        for (r, want) in curve.rates().iter().zip([4.0, 1.0, 0.0, 0.0]) {
            assert!((r - want).abs() < 1e-6, "{r} vs {want}");
        }
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(validate_grid(&[]), Err(DesignError::Grid(_))));
        assert!(matches!(validate_grid(&[0.5, 0.25]), Err(DesignError::Grid(_))));
        assert!(matches!(validate_grid(&[0.0, 1.0]), Err(DesignError::Grid(_))));
        let model = SystemModel::scalar(-1.0, 1.0).unwrap();
        assert!(sweep_curve(&model, &[0.5, 0.25], &tol()).is_err());
    }

    #[test]
    fn curve_rejects_nonmonotone_points() {
        let model = SystemModel::scalar(-1.0, 1.0).unwrap();
        let a = design_sensor(&model, 0.25, &tol()).unwrap();
        let mut b = design_sensor(&model, 0.5, &tol()).unwrap();
        b.rate = a.rate + 1.0;
        assert!(matches!(TradeoffCurve::from_points(alloc::vec![a, b], &tol()), Err(DesignError::Curve { .. })));
    }

    #[test]
    fn recover_examples() {
        let model = SystemModel::scalar(-1.0, 1.0).unwrap();
        let c = recover_gain(&model, &SymMatrix::scalar(0.25), &tol()).unwrap();
        assert!((c.matrix()[(0, 0)] - libm::sqrt(8.0)).abs() < 1e-12);
        let c = recover_gain(&model, &SymMatrix::scalar(0.5), &tol()).unwrap();
        assert_eq!(c.matrix()[(0, 0)], 0.0);

        let pair = SystemModel::new(Mat::identity(2).scale(-1.0), Mat::identity(2), &tol()).unwrap();
        let c = recover_gain(&pair, &SymMatrix::identity(2).scale(0.25), &tol()).unwrap();
        assert!((c.matrix() - &Mat::identity(2).scale(libm::sqrt(8.0))).max_abs() < 1e-12);
    }

    #[test]
    fn recover_rejects_infeasible_p() {
        // 2aP + b² < 0 well beyond round-off.
        let model = SystemModel::scalar(-1.0, 1.0).unwrap();
        assert!(recover_gain(&model, &SymMatrix::scalar(2.0), &tol()).is_err());
    }

    #[test]
    fn gain_from_ctc_roundtrip() {
        let ctc = Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let g = gain_from_ctc(&ctc, &tol()).unwrap();
        let back = g.ctc();
        assert!((&back - &ctc).max_abs() < 1e-12);
    }
}
