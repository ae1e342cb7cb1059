//! Monte Carlo co-simulation of source, sensor and Kalman–Bucy filter.
//!
//! Each trial draws from its own ChaCha8 stream (`seed`, stream = trial index),
//! so trials can run in any order or in parallel and still reduce to
//! bit-identical results when combined in trial order.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Mat;
use crate::model::{ModelError, SensorGain, SystemModel, Tolerances, check_detectable};
use crate::riccati::{RdeOptions, RiccatiError, integrate_rde};

const BLOW_UP: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(&'static str),
    #[error("sensor gain has shape {rows}x{cols}, expected {n}x{n}")]
    GainShape { n: usize, rows: usize, cols: usize },
    #[error("sensor does not detect the source: the filter error would diverge")]
    NotDetectable,
    #[error("simulation diverged in trial {trial} at t = {t} (state norm above 1e9)")]
    Divergence { trial: u64, t: f64 },
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub trials: u64,
    pub seed: u64,
    pub burn_in_fraction: f64,
    pub keep_paths: bool,
}

impl SimConfig {
    /// Config with burn-in 0.5 and no retained paths.
    pub fn new(dt: f64, horizon: f64, trials: u64, seed: u64) -> Self {
        Self { dt, horizon, trials, seed, burn_in_fraction: 0.5, keep_paths: false }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Config("dt must be positive"));
        }
        if !(self.horizon.is_finite() && self.horizon >= 10.0 * self.dt * (1.0 - 1e-12)) {
            return Err(SimError::Config("horizon must be at least 10 dt"));
        }
        if self.trials == 0 {
            return Err(SimError::Config("trials must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(SimError::Config("burn-in fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        libm::round(self.horizon / self.dt) as usize
    }

    fn first_averaged_step(&self) -> usize {
        libm::ceil(self.burn_in_fraction * self.steps() as f64 - 1e-9) as usize
    }
}

/// Sampled trajectories of one trial on the simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPaths {
    pub t: Vec<f64>,
    /// Row-major, `n` values per grid point.
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub y: Vec<f64>,
}

/// Per-trial statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    /// Time average of `‖X − X̂‖²` after burn-in.
    pub mmse: f64,
    /// Time average of `½‖C(X − X̂)‖²` after burn-in.
    pub info: f64,
    /// Left-point sum of `½‖C(X − X̂)‖² dt` over the whole horizon.
    pub duncan: f64,
    pub paths: Option<TrialPaths>,
}

/// Mean and standard error across trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Self { mean, stderr: libm::sqrt(var / n) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub mmse_rate: Estimate,
    pub info_rate: Estimate,
    pub trials: u64,
    pub paths: Option<Vec<TrialPaths>>,
}

impl SimResult {
    pub fn mmse_rate_hat(&self) -> f64 {
        self.mmse_rate.mean
    }

    pub fn info_rate_hat(&self) -> f64 {
        self.info_rate.mean
    }
}

/// Everything a trial needs that does not depend on the random draws:
/// the time-varying filter gains `P_k Cᵀ` and the deterministic Duncan integrand.
#[derive(Debug, Clone)]
pub struct SimPlan {
    n: usize,
    m: usize,
    a: Mat,
    b: Mat,
    c: Mat,
    gains: Vec<Mat>,
    /// `½ Tr(C P_k Cᵀ)` on the grid.
    info_integrand: Vec<f64>,
    cfg: SimConfig,
}

impl SimPlan {
    pub fn new(model: &SystemModel, gain: &SensorGain, cfg: &SimConfig, tol: &Tolerances) -> Result<Self, SimError> {
        cfg.validate()?;
        let n = model.n();
        let c = gain.matrix();
        if c.shape() != (n, n) {
            return Err(SimError::GainShape { n, rows: c.rows(), cols: c.cols() });
        }
        if !check_detectable(model.a(), c, tol.eig_tol)? {
            return Err(SimError::NotDetectable);
        }
        let steps = cfg.steps();
        let traj = integrate_rde(model, gain, &RdeOptions::full_grid(cfg.dt, steps as f64 * cfg.dt, tol))?;
        let ct = c.transpose();
        let mut gains = Vec::with_capacity(traj.values.len());
        let mut info_integrand = Vec::with_capacity(traj.values.len());
        for p in &traj.values {
            let pct = &p.to_dense() * &ct;
            info_integrand.push(0.5 * (c * &pct).trace());
            gains.push(pct);
        }
        Ok(Self {
            n,
            m: model.m(),
            a: model.a().clone(),
            b: model.b().clone(),
            c: c.clone(),
            gains,
            info_integrand,
            cfg: *cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Trapezoidal `½∫₀ᵀ Tr(C P_t Cᵀ) dt` on the grid.
    pub fn deterministic_duncan(&self) -> f64 {
        let f = &self.info_integrand;
        let inner: f64 = f.windows(2).map(|w| w[0] + w[1]).sum();
        0.5 * inner * self.cfg.dt
    }

    /// Runs trial `trial`; per-step draw order is `m` normals for the process
    /// noise followed by `n` for the sensor noise.
    pub fn run_trial(&self, trial: u64) -> Result<TrialStats, SimError> {
        let (n, m) = (self.n, self.m);
        let dt = self.cfg.dt;
        let sdt = libm::sqrt(dt);
        let steps = self.cfg.steps();
        let k0 = self.cfg.first_averaged_step();

        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(trial);

        let mut x = vec![0.0; n];
        let mut xh = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut w = vec![0.0; m];
        let mut v = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut ce = vec![0.0; n];
        let mut dy = vec![0.0; n];
        let mut innov = vec![0.0; n];
        let mut ax = vec![0.0; n];
        let mut axh = vec![0.0; n];
        let mut bw = vec![0.0; n];
        let mut kdy = vec![0.0; n];

        let mut paths = self.cfg.keep_paths.then(|| TrialPaths {
            t: Vec::with_capacity(steps + 1),
            x: Vec::with_capacity((steps + 1) * n),
            xhat: Vec::with_capacity((steps + 1) * n),
            y: Vec::with_capacity((steps + 1) * n),
        });

        let (mut mmse_sum, mut info_sum, mut duncan) = (0.0, 0.0, 0.0);
        for k in 0..=steps {
            for i in 0..n {
                e[i] = x[i] - xh[i];
            }
            self.c.matvec_into(&e, &mut ce);
            let err2: f64 = e.iter().map(|v| v * v).sum();
            let half_ce2 = 0.5 * ce.iter().map(|v| v * v).sum::<f64>();
            if k >= k0 {
                mmse_sum += err2;
                info_sum += half_ce2;
            }
            if let Some(p) = paths.as_mut() {
                p.t.push(k as f64 * dt);
                p.x.extend_from_slice(&x);
                p.xhat.extend_from_slice(&xh);
                p.y.extend_from_slice(&y);
            }
            if k == steps {
                break;
            }
            duncan += half_ce2 * dt;

            for wi in w.iter_mut() {
                *wi = StandardNormal.sample(&mut rng);
            }
            for vi in v.iter_mut() {
                *vi = StandardNormal.sample(&mut rng);
            }
            self.a.matvec_into(&x, &mut ax);
            self.a.matvec_into(&xh, &mut axh);
            self.b.matvec_into(&w, &mut bw);
            // dY = C X dt + √dt v, innovation = dY − C X̂ dt = C e dt + √dt v
            self.c.matvec_into(&x, &mut dy);
            for i in 0..n {
                dy[i] = dy[i] * dt + sdt * v[i];
                innov[i] = ce[i] * dt + sdt * v[i];
            }
            self.gains[k].matvec_into(&innov, &mut kdy);
            let mut norm2 = 0.0;
            for i in 0..n {
                x[i] += ax[i] * dt + sdt * bw[i];
                xh[i] += axh[i] * dt + kdy[i];
                y[i] += dy[i];
                norm2 += x[i] * x[i] + xh[i] * xh[i];
            }
            if !(norm2 <= BLOW_UP * BLOW_UP) {
                return Err(SimError::Divergence { trial, t: (k + 1) as f64 * dt });
            }
        }
        let count = (steps + 1 - k0) as f64;
        Ok(TrialStats { mmse: mmse_sum / count, info: info_sum / count, duncan, paths })
    }

    /// Combines per-trial statistics given in trial order.
    pub fn reduce(&self, stats: Vec<TrialStats>) -> SimResult {
        let mmse: Vec<f64> = stats.iter().map(|s| s.mmse).collect();
        let info: Vec<f64> = stats.iter().map(|s| s.info).collect();
        let paths = self.cfg.keep_paths.then(|| stats.into_iter().filter_map(|s| s.paths).collect());
        SimResult {
            mmse_rate: Estimate::from_samples(&mmse),
            info_rate: Estimate::from_samples(&info),
            trials: self.cfg.trials,
            paths,
        }
    }

    /// Compares per-trial Duncan integrals (given in trial order) with the
    /// deterministic Riccati integral.
    pub fn duncan_report(&self, stats: &[TrialStats]) -> DuncanReport {
        let samples: Vec<f64> = stats.iter().map(|s| s.duncan).collect();
        let mc = Estimate::from_samples(&samples);
        let deterministic = self.deterministic_duncan();
        let horizon = self.cfg.steps() as f64 * self.cfg.dt;
        let final_rate = self.info_integrand.last().copied().unwrap_or(0.0);
        let allowance = 10.0 * self.cfg.dt * horizon * final_rate.max(1.0);
        let difference = mc.mean - deterministic;
        DuncanReport {
            monte_carlo: mc.mean,
            stderr: mc.stderr,
            deterministic,
            difference,
            allowance,
            pass: difference.abs() <= 3.0 * mc.stderr + allowance,
        }
    }
}

/// Runs all trials sequentially and averages the stationary-rate estimators.
pub fn simulate(
    model: &SystemModel,
    gain: &SensorGain,
    cfg: &SimConfig,
    tol: &Tolerances,
) -> Result<SimResult, SimError> {
    let plan = SimPlan::new(model, gain, cfg, tol)?;
    let stats = (0..cfg.trials).map(|i| plan.run_trial(i)).collect::<Result<Vec<_>, _>>()?;
    Ok(plan.reduce(stats))
}

/// Monte Carlo versus deterministic evaluation of `½∫₀ᵀ E‖C(X − X̂)‖² dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuncanReport {
    pub monte_carlo: f64,
    pub stderr: f64,
    pub deterministic: f64,
    pub difference: f64,
    /// Discretization allowance `10·dt·T·max(1, ½Tr(C P_T Cᵀ))`.
    pub allowance: f64,
    pub pass: bool,
}

/// Runs the Duncan integral comparison; burn-in is ignored.
pub fn duncan_check(
    model: &SystemModel,
    gain: &SensorGain,
    cfg: &SimConfig,
    tol: &Tolerances,
) -> Result<DuncanReport, SimError> {
    let plan = SimPlan::new(model, gain, &SimConfig { keep_paths: false, ..*cfg }, tol)?;
    let stats = (0..cfg.trials).map(|i| plan.run_trial(i)).collect::<Result<Vec<_>, _>>()?;
    Ok(plan.duncan_report(&stats))
}
