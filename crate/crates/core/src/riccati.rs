//! Riccati differential equation with `P₀ = 0` and the algebraic Riccati
//! equation for a fixed sensor gain.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Eigenvalue, LinalgError, Mat, SymMatrix, eigenvalues, solve_lyapunov};
use crate::model::{ModelError, SensorGain, SystemModel, Tolerances, unobservable_modes};

const BLOW_UP_NORM: f64 = 1e12;
const NEWTON_MAX_ITERS: usize = 50;
const MAX_T: f64 = 1e4;
const POLISH_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RiccatiError {
    #[error("invalid integration grid: dt = {dt}, t_max = {t_max}")]
    Grid { dt: f64, t_max: f64 },
    #[error("gain must be {n}x{n}, got {rows}x{cols}")]
    GainShape { n: usize, rows: usize, cols: usize },
    #[error("Riccati solution diverged at t = {t} (‖P‖_F = {norm:e}); (A, C) is likely not detectable")]
    BlowUp { t: f64, norm: f64 },
    #[error("(A, C) is not detectable ({} unobservable unstable modes)", .0.len())]
    NotDetectable(Vec<Eigenvalue>),
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("closed loop A - PCᵀC is not stable (spectral abscissa {abscissa:e})")]
    UnstableClosedLoop { abscissa: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Step size, horizon and recording policy for [`integrate_rde`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdeOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Record every `record_stride`-th step (the first and last steps are always kept).
    pub record_stride: usize,
    /// Stop as soon as the convergence test passes.
    pub stop_on_convergence: bool,
    /// Converged when `‖dP/dt‖_F ≤ tol · (1 + ‖P‖_F)`.
    pub convergence_tol: f64,
}

impl RdeOptions {
    /// Scale-aware defaults: `dt = 1e-3 / max(1, ‖A‖_F + ‖B‖_F ‖C‖_F)`, horizon `1e4`.
    pub fn for_model(model: &SystemModel, gain: &SensorGain, tol: &Tolerances) -> Self {
        Self {
            dt: 1e-3 / stiffness_scale(model, gain),
            t_max: MAX_T,
            record_stride: usize::MAX,
            stop_on_convergence: true,
            convergence_tol: tol.residual_tol,
        }
    }

    /// Fixed grid `0, dt, …, t_max` with every step recorded and no early stop.
    pub fn full_grid(dt: f64, t_max: f64, tol: &Tolerances) -> Self {
        Self { dt, t_max, record_stride: 1, stop_on_convergence: false, convergence_tol: tol.residual_tol }
    }
}

fn stiffness_scale(model: &SystemModel, gain: &SensorGain) -> f64 {
    (model.a().norm_fro() + model.b().norm_fro() * gain.matrix().norm_fro()).max(1.0)
}

/// Sampled solution of `dP/dt = AP + PAᵀ − PCᵀCP + BBᵀ`, `P₀ = 0`.
#[derive(Debug, Clone)]
pub struct RiccatiTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<SymMatrix>,
    pub converged: bool,
    /// Final iterate, set when the convergence test passed.
    pub limit: Option<SymMatrix>,
}

impl RiccatiTrajectory {
    pub fn last(&self) -> &SymMatrix {
        self.values.last().expect("trajectory always holds P₀")
    }
}

/// Allocation-free evaluation of the Riccati vector field on dense row-major buffers.
struct RiccatiField {
    n: usize,
    a: Vec<f64>,
    bbt: Vec<f64>,
    ctc: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
}

impl RiccatiField {
    fn new(model: &SystemModel, gain: &SensorGain) -> Self {
        let n = model.n();
        Self {
            n,
            a: model.a().as_slice().to_vec(),
            bbt: model.bbt().as_slice().to_vec(),
            ctc: gain.ctc().as_slice().to_vec(),
            t1: vec![0.0; n * n],
            t2: vec![0.0; n * n],
        }
    }

    /// `out = AP + PAᵀ − PCᵀCP + BBᵀ`, symmetrized.
    fn eval(&mut self, p: &[f64], out: &mut [f64]) {
        let n = self.n;
        // t1 = A P
        matmul(n, &self.a, p, &mut self.t1);
        // t2 = Cᵀ C P
        matmul(n, &self.ctc, p, &mut self.t2);
        for i in 0..n {
            for j in 0..n {
                // (PCᵀCP)_ij = Σ_k P_ik (CᵀCP)_kj
                let mut pcp = 0.0;
                for k in 0..n {
                    pcp += p[i * n + k] * self.t2[k * n + j];
                }
                out[i * n + j] = self.t1[i * n + j] + self.t1[j * n + i] - pcp + self.bbt[i * n + j];
            }
        }
        symmetrize(n, out);
    }
}

fn matmul(n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = s;
        }
    }
}

fn symmetrize(n: usize, m: &mut [f64]) {
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
}

fn fro(m: &[f64]) -> f64 {
    libm::sqrt(m.iter().map(|x| x * x).sum())
}

fn to_sym(n: usize, m: &[f64]) -> SymMatrix {
    let mut s = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            s.set(i, j, m[i * n + j]);
        }
    }
    s
}

/// Classical fourth-order Runge–Kutta integration of the Riccati ODE from `P₀ = 0`,
/// symmetrizing after every step. Grid points are `k·dt`.
pub fn integrate_rde(
    model: &SystemModel,
    gain: &SensorGain,
    opts: &RdeOptions,
) -> Result<RiccatiTrajectory, RiccatiError> {
    let n = model.n();
    let c = gain.matrix();
    if c.shape() != (n, n) {
        return Err(RiccatiError::GainShape { n, rows: c.rows(), cols: c.cols() });
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite() && opts.t_max >= opts.dt) {
        return Err(RiccatiError::Grid { dt: opts.dt, t_max: opts.t_max });
    }
    let steps = libm::round(opts.t_max / opts.dt) as usize;
    let stride = opts.record_stride.max(1);
    let dt = opts.dt;

    let mut field = RiccatiField::new(model, gain);
    let nn = n * n;
    let mut p = vec![0.0; nn];
    let mut k1 = vec![0.0; nn];
    let mut k2 = vec![0.0; nn];
    let mut k3 = vec![0.0; nn];
    let mut k4 = vec![0.0; nn];
    let mut tmp = vec![0.0; nn];

    let mut times = vec![0.0];
    let mut values = vec![SymMatrix::zeros(n)];
    let mut converged = false;
    let mut last_step = 0;

    for step in 0..steps {
        field.eval(&p, &mut k1);
        if fro(&k1) <= opts.convergence_tol * (1.0 + fro(&p)) {
            converged = true;
            if opts.stop_on_convergence {
                break;
            }
        }
        for i in 0..nn {
            tmp[i] = p[i] + 0.5 * dt * k1[i];
        }
        field.eval(&tmp, &mut k2);
        for i in 0..nn {
            tmp[i] = p[i] + 0.5 * dt * k2[i];
        }
        field.eval(&tmp, &mut k3);
        for i in 0..nn {
            tmp[i] = p[i] + dt * k3[i];
        }
        field.eval(&tmp, &mut k4);
        for i in 0..nn {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        symmetrize(n, &mut p);

        last_step = step + 1;
        let norm = fro(&p);
        if !(norm <= BLOW_UP_NORM) {
            return Err(RiccatiError::BlowUp { t: last_step as f64 * dt, norm });
        }
        if last_step % stride == 0 || last_step == steps {
            times.push(last_step as f64 * dt);
            values.push(to_sym(n, &p));
        }
    }

    if *times.last().unwrap() != last_step as f64 * dt {
        times.push(last_step as f64 * dt);
        values.push(to_sym(n, &p));
    }
    if !converged {
        field.eval(&p, &mut k1);
        converged = fro(&k1) <= opts.convergence_tol * (1.0 + fro(&p));
    }
    let limit = converged.then(|| to_sym(n, &p));
    Ok(RiccatiTrajectory { times, values, converged, limit })
}

/// `AP + PAᵀ − PCᵀCP + BBᵀ`
pub fn are_lhs(model: &SystemModel, gain: &SensorGain, p: &SymMatrix) -> Mat {
    let pd = p.to_dense();
    let ap = model.a() * &pd;
    let pcp = &(&pd * &gain.ctc()) * &pd;
    &(&(&ap + &ap.transpose()) - &pcp) + &model.bbt()
}

/// Frobenius norm of the algebraic Riccati residual.
pub fn are_residual(model: &SystemModel, gain: &SensorGain, p: &SymMatrix) -> f64 {
    are_lhs(model, gain, p).norm_fro()
}

/// Stationary error covariance: the stabilizing positive definite solution
/// of `AP + PAᵀ − PCᵀCP + BBᵀ = 0`.
#[derive(Debug, Clone)]
pub struct AreSolution {
    pub p: SymMatrix,
    /// `‖AP + PAᵀ − PCᵀCP + BBᵀ‖_F`
    pub residual: f64,
    /// Spectrum of `A − PCᵀC`.
    pub closed_loop_spectrum: Vec<Eigenvalue>,
    pub newton_iterations: usize,
}

fn closed_loop(model: &SystemModel, gain: &SensorGain, p: &SymMatrix) -> Mat {
    model.a() - &(&p.to_dense() * &gain.ctc())
}

fn abscissa(spectrum: &[Eigenvalue]) -> f64 {
    spectrum.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re))
}

/// Solves the algebraic Riccati equation for a given detectable gain.
///
/// The Riccati ODE is integrated from zero until it is close to stationary
/// and the closed loop is stable; Newton (Kleinman) steps
/// `X ← lyap(A − XCᵀC, XCᵀCX + BBᵀ)` then polish the seed.
pub fn solve_care(model: &SystemModel, gain: &SensorGain, tol: &Tolerances) -> Result<AreSolution, RiccatiError> {
    let n = model.n();
    let c = gain.matrix();
    if c.shape() != (n, n) {
        return Err(RiccatiError::GainShape { n, rows: c.rows(), cols: c.cols() });
    }
    let modes = unobservable_modes(model.a(), c, tol.eig_tol)?;
    if !modes.is_empty() {
        return Err(RiccatiError::NotDetectable(modes));
    }

    // A coarse step is enough for a seed; only stability of the closed loop matters.
    let mut opts = RdeOptions::for_model(model, gain, tol);
    opts.dt = 0.05 / stiffness_scale(model, gain);
    opts.convergence_tol = 1e-4;
    let mut seed = integrate_rde(model, gain, &opts)?.last().clone();
    if abscissa(&eigenvalues(&closed_loop(model, gain, &seed))?) >= 0.0 {
        opts.convergence_tol = tol.residual_tol;
        seed = integrate_rde(model, gain, &opts)?.last().clone();
    }
    newton_polish(model, gain, seed, tol)
}

/// Newton–Kleinman iteration from a stabilizing seed.
pub fn newton_polish(
    model: &SystemModel,
    gain: &SensorGain,
    seed: SymMatrix,
    tol: &Tolerances,
) -> Result<AreSolution, RiccatiError> {
    let ctc = gain.ctc();
    let bbt = SymMatrix::from_dense(&model.bbt())?;
    let mut x = seed;
    let mut residual = are_residual(model, gain, &x);
    let mut best = residual;
    let mut stalled = 0;
    let mut iterations = 0;
    while residual > tol.residual_tol {
        if iterations == NEWTON_MAX_ITERS || stalled >= 3 {
            return Err(RiccatiError::NonConvergence { iterations, residual });
        }
        let xd = x.to_dense();
        let f = closed_loop(model, gain, &x);
        let w = SymMatrix::from_dense(&(&(&xd * &ctc) * &xd))?.add(&bbt);
        x = solve_lyapunov(&f, &w)?;
        residual = are_residual(model, gain, &x);
        iterations += 1;
        if residual < 0.5 * best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
    }
    // Quadratic convergence makes a few more steps nearly free; keep them while they help.
    for _ in 0..POLISH_STEPS {
        let xd = x.to_dense();
        let f = closed_loop(model, gain, &x);
        let w = SymMatrix::from_dense(&(&(&xd * &ctc) * &xd))?.add(&bbt);
        let Ok(next) = solve_lyapunov(&f, &w) else { break };
        let r = are_residual(model, gain, &next);
        if !(r < 0.5 * residual) {
            break;
        }
        x = next;
        residual = r;
        iterations += 1;
    }
    let closed_loop_spectrum = eigenvalues(&closed_loop(model, gain, &x))?;
    let a = abscissa(&closed_loop_spectrum);
    if a >= tol.eig_tol {
        return Err(RiccatiError::UnstableClosedLoop { abscissa: a });
    }
    Ok(AreSolution { p: x, residual, closed_loop_spectrum, newton_iterations: iterations })
}

/// Stationary rates `(½ Tr(C P Cᵀ), Tr(P))` in nats/time and state²/time.
pub fn rates_from_p(p: &SymMatrix, gain: &SensorGain) -> (f64, f64) {
    let c = gain.matrix();
    let cpct = &(c * &p.to_dense()) * &c.transpose();
    (0.5 * cpct.trace(), p.trace())
}
