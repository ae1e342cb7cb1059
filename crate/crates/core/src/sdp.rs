//! Log-det barrier interior-point solver for
//!
//! ```text
//! minimize   Tr(A) + ½ Tr(Q)
//! subject to AP + PAᵀ + BBᵀ ⪰ 0
//!            [[Q, Bᵀ], [B, P]] ⪰ 0
//!            Tr(P) ≤ D
//! ```
//!
//! over symmetric `P` (`n × n`) and `Q` (`m × m`). The decision vector packs
//! the upper triangles of `P` then `Q`; every constraint is an affine matrix
//! function of it. Iterates stay strictly feasible and follow the central
//! path with the barrier weight multiplied by 5 per outer step.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{LinalgError, Mat, SymMatrix, chol, min_eig, spd_inverse};
use crate::model::{SystemModel, Tolerances};
use crate::riccati::are_residual;
use crate::model::SensorGain;

const MU_FACTOR: f64 = 5.0;
const NEWTON_DECREMENT_TOL: f64 = 1e-10;
/// Inside the quadratic region exact Newton shrinks `λ²` by far more than 4×
/// per step; failing to do so there means roundoff, and the point is accepted
/// with the gap bound widened for `λ`.
const STAGNATION_LAMBDA2: f64 = 1e-2;
const MAX_NEWTON_PER_CENTER: usize = 200;
const MAX_TOTAL_NEWTON: usize = 2000;
const MIN_STEP: f64 = 1e-14;
const GAMMA_CAP: f64 = 1_152_921_504_606_846_976.0; // 2^60

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdpError {
    #[error("distortion budget must be positive and finite, got {0}")]
    Budget(f64),
    #[error("no strictly feasible point with Tr(P) < {d}: smallest trace reached {best_trace:e} at gamma = {gamma:e}")]
    Infeasible { d: f64, best_trace: f64, gamma: f64 },
    #[error("barrier method did not converge after {iterations} Newton steps (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64, last_p: SymMatrix, last_q: SymMatrix },
    #[error("Newton step stalled (step length below 1e-14) at gap {gap:e}")]
    Stalled { gap: f64, last_p: SymMatrix, last_q: SymMatrix },
    #[error("optimal P is numerically singular (min eigenvalue {min_eig:e})")]
    SingularOptimum { min_eig: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Affine symmetric matrix function `F(x) = F₀ + Σ xₖ Fₖ`.
#[derive(Debug, Clone)]
pub struct AffineBlock {
    pub constant: Mat,
    /// One entry per decision variable; `None` when `Fₖ = 0`.
    pub coeffs: Vec<Option<Mat>>,
}

impl AffineBlock {
    pub fn dim(&self) -> usize {
        self.constant.rows()
    }

    pub fn eval(&self, x: &[f64]) -> Mat {
        let mut out = self.constant.clone();
        for (xk, fk) in x.iter().zip(&self.coeffs) {
            if let Some(fk) = fk {
                if *xk != 0.0 {
                    out = &out + &fk.scale(*xk);
                }
            }
        }
        out
    }
}

/// The three constraint blocks and linear cost of the trade-off program at budget `D`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    model: SystemModel,
    d: f64,
    /// Cost on the packed decision vector (`½` on the diagonal of `Q`).
    cost: Vec<f64>,
    /// `AP + PAᵀ + BBᵀ`, `[[Q, Bᵀ], [B, P]]`, `D − Tr(P)`.
    blocks: [AffineBlock; 3],
}

fn sym_basis(dim: usize, i: usize, j: usize) -> Mat {
    let mut e = Mat::zeros(dim, dim);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

/// Assembles the program for `model` at distortion budget `d > 0`.
pub fn build_sdp(model: &SystemModel, d: f64) -> Result<SdpProblem, SdpError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(SdpError::Budget(d));
    }
    let n = model.n();
    let m = model.m();
    let np = n * (n + 1) / 2;
    let nq = m * (m + 1) / 2;
    let nvar = np + nq;
    let a = model.a();
    let b = model.b();

    let mut cost = vec![0.0; nvar];
    for (k, (i, j)) in upper_pairs(m).enumerate() {
        if i == j {
            cost[np + k] = 0.5;
        }
    }

    // AP + PAᵀ + BBᵀ
    let mut c1 = Vec::with_capacity(nvar);
    for (i, j) in upper_pairs(n) {
        let e = sym_basis(n, i, j);
        let ae = a * &e;
        c1.push(Some(&ae + &ae.transpose()));
    }
    c1.resize(nvar, None);
    let block1 = AffineBlock { constant: model.bbt(), coeffs: c1 };

    // [[Q, Bᵀ], [B, P]]
    let s = m + n;
    let mut k2 = Mat::zeros(s, s);
    for i in 0..n {
        for j in 0..m {
            k2[(m + i, j)] = b[(i, j)];
            k2[(j, m + i)] = b[(i, j)];
        }
    }
    let mut c2 = Vec::with_capacity(nvar);
    for (i, j) in upper_pairs(n) {
        c2.push(Some(sym_basis(s, m + i, m + j)));
    }
    for (i, j) in upper_pairs(m) {
        c2.push(Some(sym_basis(s, i, j)));
    }
    let block2 = AffineBlock { constant: k2, coeffs: c2 };

    // D − Tr(P)
    let mut c3 = Vec::with_capacity(nvar);
    for (i, j) in upper_pairs(n) {
        c3.push(if i == j { Some(Mat::scalar(-1.0)) } else { None });
    }
    c3.resize(nvar, None);
    let block3 = AffineBlock { constant: Mat::scalar(d), coeffs: c3 };

    Ok(SdpProblem { model: model.clone(), d, cost, blocks: [block1, block2, block3] })
}

impl SdpProblem {
    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn budget(&self) -> f64 {
        self.d
    }

    pub fn blocks(&self) -> &[AffineBlock; 3] {
        &self.blocks
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Barrier parameter `θ`: total number of constraint rows.
    pub fn barrier_rows(&self) -> usize {
        self.blocks.iter().map(AffineBlock::dim).sum()
    }

    pub fn pack(&self, p: &SymMatrix, q: &SymMatrix) -> Vec<f64> {
        let mut x = p.packed().to_vec();
        x.extend_from_slice(q.packed());
        x
    }

    pub fn unpack(&self, x: &[f64]) -> (SymMatrix, SymMatrix) {
        let n = self.model.n();
        let np = n * (n + 1) / 2;
        let p = SymMatrix::from_packed(n, x[..np].to_vec()).expect("packed P length");
        let q = SymMatrix::from_packed(self.model.m(), x[np..].to_vec()).expect("packed Q length");
        (p, q)
    }

    /// The three constraint blocks evaluated at `(P, Q)`.
    pub fn blocks_at(&self, p: &SymMatrix, q: &SymMatrix) -> [Mat; 3] {
        let x = self.pack(p, q);
        [self.blocks[0].eval(&x), self.blocks[1].eval(&x), self.blocks[2].eval(&x)]
    }

    /// `Tr(A) + ½ Tr(Q)`
    pub fn objective(&self, q: &SymMatrix) -> f64 {
        self.model.a().trace() + 0.5 * q.trace()
    }

    fn strictly_feasible(&self, x: &[f64]) -> bool {
        self.blocks.iter().all(|blk| {
            let f = blk.eval(x);
            match SymMatrix::from_dense(&f) {
                Ok(s) => chol(&s).is_some(),
                Err(_) => false,
            }
        })
    }

    /// Gradient of `t·cᵀx − Σ log det Fᵢ(x)` and a factor `J` of its Hessian
    /// `H = JᵀJ`: column `k` stacks `vec(Lᵢ⁻¹ Fᵢₖ Lᵢ⁻ᵀ)` over blocks, with
    /// `Fᵢ(x) = LᵢLᵢᵀ`.
    fn barrier_derivatives(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, Mat), LinalgError> {
        let nvar = x.len();
        let rows: usize = self.blocks.iter().map(|b| b.dim() * b.dim()).sum();
        let mut grad: Vec<f64> = self.cost.iter().map(|c| t * c).collect();
        let mut jac = Mat::zeros(rows, nvar);
        let mut offset = 0;
        for blk in &self.blocks {
            let d = blk.dim();
            let f = SymMatrix::from_dense(&blk.eval(x))?;
            let linv = lower_inverse(&chol(&f).ok_or(LinalgError::NotPositiveDefinite)?);
            for (k, fk) in blk.coeffs.iter().enumerate() {
                if let Some(fk) = fk {
                    let w = (&linv * fk).matmul_t(&linv);
                    grad[k] -= w.trace();
                    for (r, v) in w.as_slice().iter().enumerate() {
                        jac[(offset + r, k)] = *v;
                    }
                }
            }
            offset += d * d;
        }
        Ok((grad, jac))
    }

    /// Dual-feasibility residual `‖Σᵢ Tr(Zᵢ Fᵢₖ) − cₖ‖∞` of the implicit
    /// multipliers `Zᵢ = μ Fᵢ(x)⁻¹`, relative to `‖c‖∞`.
    fn dual_residual(&self, x: &[f64], mu: f64) -> Result<f64, LinalgError> {
        let mut lagr = vec![0.0; x.len()];
        for blk in &self.blocks {
            let f = SymMatrix::from_dense(&blk.eval(x))?;
            let z = spd_inverse(&f)?.to_dense().scale(mu);
            for (k, fk) in blk.coeffs.iter().enumerate() {
                if let Some(fk) = fk {
                    lagr[k] += trace_product(&z, fk);
                }
            }
        }
        let residual = lagr.iter().zip(&self.cost).fold(0.0f64, |m, (l, c)| m.max((l - c).abs()));
        Ok(residual / 0.5)
    }
}

fn trace_product(a: &Mat, b: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// A strictly feasible starting point and the sensor scale that produced it.
#[derive(Debug, Clone)]
pub struct FeasibleStart {
    pub p: SymMatrix,
    pub q: SymMatrix,
    pub gamma: f64,
}

/// Phase I: with `C = γI` the stabilizing Riccati solution `P(γ)` satisfies
/// `AP + PAᵀ + BBᵀ = γ²P² ≻ 0`; `γ` doubles until `Tr P(γ) < D`.
/// `Q₀ = BᵀP₀⁻¹B + I` then makes the Schur block strictly positive.
pub fn find_feasible_start(problem: &SdpProblem) -> Result<FeasibleStart, SdpError> {
    let model = &problem.model;
    let n = model.n();
    let d = problem.d;
    let mut gamma = 1.0;
    let mut best_trace = f64::INFINITY;
    while gamma <= GAMMA_CAP {
        if let Some(p) = kleinman_scaled_identity(model, gamma) {
            best_trace = best_trace.min(p.trace());
            if p.trace() < d {
                let pinv = spd_inverse(&p)?.to_dense();
                let b = model.b();
                let btpb = &(&b.transpose() * &pinv) * b;
                let q = SymMatrix::from_dense(&btpb)?.add(&SymMatrix::identity(model.m()));
                let x = problem.pack(&p, &q);
                if problem.strictly_feasible(&x) {
                    return Ok(FeasibleStart { p, q, gamma });
                }
            }
        }
        gamma *= 2.0;
    }
    let _ = n;
    Err(SdpError::Infeasible { d, best_trace, gamma: GAMMA_CAP })
}

/// Stabilizing solution of `AP + PAᵀ − γ²P² + BBᵀ = 0` by Kleinman iteration
/// from `P₀ = αI` with `αγ²` beyond the spectral abscissa of `A`.
fn kleinman_scaled_identity(model: &SystemModel, gamma: f64) -> Option<SymMatrix> {
    let n = model.n();
    let g2 = gamma * gamma;
    let gain = SensorGain::new(Mat::identity(n).scale(gamma));
    let bbt = SymMatrix::from_dense(&model.bbt()).ok()?;
    let shift = crate::linalg::spectral_abscissa(model.a()).ok()?.max(0.0) + 1.0;
    let mut x = SymMatrix::identity(n).scale(shift / g2);
    for _ in 0..100 {
        let xd = x.to_dense();
        let f = model.a() - &xd.scale(g2);
        let w = SymMatrix::from_dense(&(&xd * &xd).scale(g2)).ok()?.add(&bbt);
        let next = crate::linalg::solve_lyapunov(&f, &w).ok()?;
        let change = next.sub(&x).norm_fro();
        x = next;
        if change <= 1e-13 * (1.0 + x.norm_fro()) {
            break;
        }
    }
    let scale = model.bbt().norm_fro().max(1.0);
    (are_residual(model, &gain, &x) <= 1e-8 * scale && chol(&x).is_some()).then_some(x)
}

/// One outer step of the central path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub mu: f64,
    pub primal: f64,
    pub dual: f64,
    pub newton_steps: usize,
}

/// Optimal `(P, Q)` of the trade-off program.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub p: SymMatrix,
    pub q: SymMatrix,
    /// `Tr(A) + ½ Tr(Q)`, nats per unit time.
    pub objective: f64,
    /// Lower bound `objective − θμ` on the optimal value.
    pub dual_bound: f64,
    /// Bound on `objective − optimum`: `θμ` with `θ` the number of constraint
    /// rows, widened for the residual Newton decrement of the last centering.
    pub duality_gap: f64,
    /// Relative max-norm violation of dual feasibility for the multipliers `μ Fᵢ⁻¹`.
    pub dual_residual: f64,
    /// Minimum eigenvalue of each constraint block at the solution.
    pub lmi_residuals: [f64; 3],
    pub iterations: usize,
    pub path: Vec<PathPoint>,
}

/// Runs the barrier method to `duality_gap ≤ tol.gap_tol`.
pub fn solve(problem: &SdpProblem, tol: &Tolerances) -> Result<SdpSolution, SdpError> {
    let start = find_feasible_start(problem)?;
    let mut x = problem.pack(&start.p, &start.q);
    let theta = problem.barrier_rows() as f64;
    let cx: f64 = problem.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
    let mut t = theta / cx.abs().max(1.0);
    let mut total = 0usize;
    let mut path = Vec::new();
    let mut gap;

    loop {
        let (steps, lambda) = center(problem, &mut x, t, theta / t, &mut total)?;
        gap = gap_bound(theta, lambda, t);
        let (_, q) = problem.unpack(&x);
        let primal = problem.objective(&q);
        path.push(PathPoint { mu: 1.0 / t, primal, dual: primal - gap, newton_steps: steps });
        if gap <= tol.gap_tol {
            break;
        }
        // The last increase lands just past the target; overshooting only adds roundoff.
        let t_final = gap_bound(theta, libm::sqrt(STAGNATION_LAMBDA2), 1.0) / tol.gap_tol;
        t = if t < t_final { (t * MU_FACTOR).min(t_final) } else { t * MU_FACTOR };
    }

    let mu = 1.0 / t;
    let (p, q) = problem.unpack(&x);
    let dual_residual = problem.dual_residual(&x, mu)?;
    let blocks = problem.blocks_at(&p, &q);
    let mut lmi_residuals = [0.0; 3];
    for (r, blk) in lmi_residuals.iter_mut().zip(&blocks) {
        *r = min_eig(&SymMatrix::from_dense(blk)?)?;
    }
    let p_min = min_eig(&p)?;
    if p_min <= tol.psd_tol {
        return Err(SdpError::SingularOptimum { min_eig: p_min });
    }
    let objective = problem.objective(&q);
    Ok(SdpSolution {
        objective,
        dual_bound: objective - gap,
        p,
        q,
        duality_gap: gap,
        dual_residual,
        lmi_residuals,
        iterations: total,
        path,
    })
}

/// Suboptimality bound `(θ + λ(λ + √θ)/(1 − λ))/t` at a point with Newton decrement `λ < 1`.
fn gap_bound(theta: f64, lambda: f64, t: f64) -> f64 {
    (theta + lambda * (lambda + libm::sqrt(theta)) / (1.0 - lambda)) / t
}

/// Damped Newton on the barrier at weight `t`; returns the number of steps and
/// the Newton decrement at the returned point.
fn center(
    problem: &SdpProblem,
    x: &mut [f64],
    t: f64,
    gap: f64,
    total: &mut usize,
) -> Result<(usize, f64), SdpError> {
    let nvar = x.len();
    let mut trial = vec![0.0; nvar];
    let mut prev_lambda2 = f64::INFINITY;
    for step in 0..MAX_NEWTON_PER_CENTER {
        if *total >= MAX_TOTAL_NEWTON {
            break;
        }
        let (grad, jac) = problem.barrier_derivatives(x, t)?;
        let (dx, lambda2) = newton_step(&jac, &grad)?;
        if !(lambda2 >= 0.0) && lambda2.abs() > 1e-12 {
            // Hessian lost definiteness to roundoff; nothing sensible left to do.
            let (p, q) = problem.unpack(x);
            return Err(SdpError::Stalled { gap, last_p: p, last_q: q });
        }
        let lambda2 = lambda2.max(0.0);
        let stagnant = lambda2 <= STAGNATION_LAMBDA2 && lambda2 > 0.25 * prev_lambda2;
        if lambda2 * 0.5 <= NEWTON_DECREMENT_TOL || stagnant {
            return Ok((step, libm::sqrt(lambda2)));
        }
        prev_lambda2 = lambda2;
        let lambda = libm::sqrt(lambda2);
        let mut alpha = if lambda > 0.25 { 1.0 / (1.0 + lambda) } else { 1.0 };
        loop {
            for i in 0..nvar {
                trial[i] = x[i] + alpha * dx[i];
            }
            if problem.strictly_feasible(&trial) {
                break;
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                let (p, q) = problem.unpack(x);
                return Err(SdpError::Stalled { gap, last_p: p, last_q: q });
            }
        }
        x.copy_from_slice(&trial);
        *total += 1;
    }
    let (p, q) = problem.unpack(x);
    Err(SdpError::NonConvergence { iterations: *total, gap, last_p: p, last_q: q })
}

fn lower_inverse(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let s: f64 = (j..i).map(|k| l[(i, k)] * inv[(k, j)]).sum();
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Newton step `dx = −(JᵀJ)⁻¹ g` and decrement `λ² = gᵀ(JᵀJ)⁻¹g`, using the
/// triangular factor of a Householder QR of `J` so the Hessian is never formed.
fn newton_step(jac: &Mat, grad: &[f64]) -> Result<(Vec<f64>, f64), LinalgError> {
    let r = householder_r(jac)?;
    let n = grad.len();
    // Rᵀ y = g
    let mut y = grad.to_vec();
    for i in 0..n {
        let acc: f64 = (0..i).map(|k| r[(k, i)] * y[k]).sum();
        y[i] = (y[i] - acc) / r[(i, i)];
    }
    let lambda2 = y.iter().map(|v| v * v).sum();
    // R dx = −y
    let mut dx: Vec<f64> = y.iter().map(|v| -v).collect();
    for i in (0..n).rev() {
        let acc: f64 = (i + 1..n).map(|k| r[(i, k)] * dx[k]).sum();
        dx[i] = (dx[i] - acc) / r[(i, i)];
    }
    Ok((dx, lambda2))
}

/// Upper-triangular `R` (`cols × cols`) of `a = QR`.
fn householder_r(a: &Mat) -> Result<Mat, LinalgError> {
    let (m, n) = a.shape();
    if m < n {
        return Err(LinalgError::Singular);
    }
    let mut w = a.clone();
    let scale = a.max_abs();
    for k in 0..n {
        let norm = libm::sqrt((k..m).map(|i| w[(i, k)] * w[(i, k)]).sum::<f64>());
        if !(norm > 1e-300) || !(norm > f64::EPSILON * 1e-4 * scale) {
            return Err(LinalgError::Singular);
        }
        let alpha = if w[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| w[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * w[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                w[(i, j)] -= f * v[i - k];
            }
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| if j >= i { w[(i, j)] } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64) -> SystemModel {
        SystemModel::scalar(a, b).unwrap()
    }

    #[test]
    fn scalar_blocks_by_substitution() {
        let prob = build_sdp(&scalar(-1.0, 1.0), 1.0).unwrap();
        let (p, q) = (0.3, 2.5);
        let [b1, b2, b3] = prob.blocks_at(&SymMatrix::scalar(p), &SymMatrix::scalar(q));
        assert_eq!(b1, Mat::scalar(-2.0 * p + 1.0));
        assert_eq!(b2, Mat::from_rows(&[[q, 1.0], [1.0, p]]).unwrap());
        assert_eq!(b3, Mat::scalar(1.0 - p));
    }

    #[test]
    fn zero_drift_block1_constant_is_bbt() {
        let model = SystemModel::new(Mat::zeros(2, 2), Mat::identity(2), &Tolerances::default()).unwrap();
        let prob = build_sdp(&model, 1.0).unwrap();
        assert_eq!(prob.blocks()[0].constant, Mat::identity(2));
        let [b1, ..] = prob.blocks_at(&SymMatrix::identity(2), &SymMatrix::identity(2));
        assert_eq!(b1, Mat::identity(2));
    }

    #[test]
    fn nonpositive_budget_rejected() {
        assert!(matches!(build_sdp(&scalar(-1.0, 1.0), 0.0), Err(SdpError::Budget(_))));
        assert!(matches!(build_sdp(&scalar(-1.0, 1.0), -2.0), Err(SdpError::Budget(_))));
    }

    #[test]
    fn phase_one_scalar_roots() {
        // 2aP − γ²P² + b² = 0 with a = −1, b = 1, γ = 1 → P = −1 + √2.
        let start = find_feasible_start(&build_sdp(&scalar(-1.0, 1.0), 1.0).unwrap()).unwrap();
        assert_eq!(start.gamma, 1.0);
        assert!((start.p.get(0, 0) - (libm::sqrt(2.0) - 1.0)).abs() < 1e-12);

        // Root (−1 + √(1 + γ²))/γ² falls below 0.1 first at γ = 16.
        let start = find_feasible_start(&build_sdp(&scalar(-1.0, 1.0), 0.1).unwrap()).unwrap();
        let g: f64 = start.gamma;
        assert_eq!(g, 16.0);
        let root = (-1.0 + libm::sqrt(1.0 + g * g)) / (g * g);
        assert!((start.p.get(0, 0) - root).abs() < 1e-12);
        assert!(start.p.trace() < 0.1);
    }

    #[test]
    fn phase_one_decoupled() {
        let tol = Tolerances::default();
        let model = SystemModel::new(Mat::identity(2).scale(-1.0), Mat::identity(2), &tol).unwrap();
        let start = find_feasible_start(&build_sdp(&model, 3.0).unwrap()).unwrap();
        let r = libm::sqrt(2.0) - 1.0;
        assert!(start.p.max_abs_diff(&SymMatrix::identity(2).scale(r)) < 1e-12);
        assert!((start.p.trace() - 0.8284271247461903).abs() < 1e-12);
    }

    #[test]
    fn scalar_examples() {
        let tol = Tolerances::default();
        let cases = [(-1.0, 1.0, 0.25, 1.0, 0.25), (-1.0, 1.0, 10.0, 0.0, 0.5), (1.0, 1.0, 0.5, 2.0, 0.5)];
        for (a, b, d, r, p) in cases {
            let sol = solve(&build_sdp(&scalar(a, b), d).unwrap(), &tol).unwrap();
            assert!((sol.objective - r).abs() < 1e-7, "a={a} d={d}: {}", sol.objective);
            assert!((sol.p.get(0, 0) - p).abs() < 1e-6, "a={a} d={d}: P={:?}", sol.p);
            assert!(sol.duality_gap <= tol.gap_tol);
            assert!(sol.dual_bound <= r + 1e-12);
        }
    }

    #[test]
    fn dual_bound_below_analytic_optimum() {
        // a = 0.5, b = 2: P* = D and R = a + b²/(2D).
        let (a, b, d) = (0.5, 2.0, 0.7);
        let exact = a + b * b / (2.0 * d);
        let sol = solve(&build_sdp(&scalar(a, b), d).unwrap(), &Tolerances::default()).unwrap();
        assert!(sol.dual_bound <= exact + 1e-12, "{} > {exact}", sol.dual_bound);
        assert!(sol.objective >= exact - 1e-12);
        assert!(sol.objective - exact <= sol.duality_gap + 1e-12);
        for w in sol.path.windows(2) {
            assert!(w[1].mu < w[0].mu && w[1].primal <= w[0].primal + 1e-12, "{w:?}");
        }
        assert!(sol.dual_residual < 1e-3, "{}", sol.dual_residual);
    }
}
