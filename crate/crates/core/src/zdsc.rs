//! Zero-delay sample-quantize-decode experiment.
//!
//! Every `τ` the encoder sends `m_k = ⌊Δ ⊙ X_{kτ}⌋` (so `Δ_i` is a gain and
//! the quantizer cells have width `1/Δ_i`). The decoder is a Kalman
//! predictor/corrector that treats the midpoint `(m_k + ½)/Δ` as a noisy
//! measurement with variance `1/(12Δ_i²)` and propagates the mean and
//! covariance between samples with the source moment equations. Empirical
//! rate is the plug-in entropy of each `m_k` across trials.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::{DesignError, design_sensor};
use crate::linalg::{LinalgError, Mat, SymMatrix, spd_inverse};
use crate::model::{SystemModel, Tolerances};
use crate::validate::{Estimate, SimConfig, SimError};

const BLOW_UP: f64 = 1e9;

/// Label of the decoder realised by [`ZdscRun`].
pub const DECODER_KIND: &str = "kalman-midpoint";

/// Label for the `rate − R(distortion)` column; its sign is not a theorem.
pub const GAP_LABEL: &str = "unverified bound direction";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ZdscError {
    #[error("invalid ZDSC scheme: {0}")]
    Scheme(&'static str),
    #[error("quantizer gains have length {found}, state dimension is {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("ZDSC simulation diverged in trial {trial} at t = {t} (state norm above 1e9)")]
    Divergence { trial: u64, t: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZdscScheme {
    pub tau: f64,
    pub delta: Vec<f64>,
    /// Number of samples `K`.
    pub samples: usize,
    pub seed: u64,
}

impl ZdscScheme {
    pub fn new(tau: f64, delta: Vec<f64>, samples: usize, seed: u64) -> Result<Self, ZdscError> {
        let s = Self { tau, delta, samples, seed };
        s.validate()?;
        Ok(s)
    }

    /// Scheme with `K = round(horizon / τ)`, at least one sample.
    pub fn with_horizon(tau: f64, delta: Vec<f64>, horizon: f64, seed: u64) -> Result<Self, ZdscError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ZdscError::Scheme("tau must be positive"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ZdscError::Scheme("horizon must be positive"));
        }
        let k = (libm::round(horizon / tau) as usize).max(1);
        Self::new(tau, delta, k, seed)
    }

    pub fn validate(&self) -> Result<(), ZdscError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ZdscError::Scheme("tau must be positive"));
        }
        if self.delta.is_empty() || self.delta.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(ZdscError::Scheme("quantizer gains must be positive"));
        }
        if self.samples == 0 {
            return Err(ZdscError::Scheme("at least one sample is required"));
        }
        Ok(())
    }

    /// `⌊Δ_i x_i⌋` for one sample.
    pub fn quantize(&self, x: &[f64]) -> Vec<i64> {
        x.iter().zip(&self.delta).map(|(x, d)| libm::floor(d * x) as i64).collect()
    }

    /// Codewords for a path sampled at `τ, 2τ, …` (row-major, `n` values per sample).
    pub fn encode(&self, path: &[f64]) -> Vec<Vec<i64>> {
        path.chunks(self.delta.len()).map(|x| self.quantize(x)).collect()
    }

    /// Midpoint reconstruction `(m + ½)/Δ`.
    pub fn dequantize(&self, m: &[i64]) -> Vec<f64> {
        m.iter().zip(&self.delta).map(|(m, d)| (*m as f64 + 0.5) / d).collect()
    }
}

/// Plug-in entropy rate `Σ_k Ĥ(m_k) / (K τ)` in nats per unit time.
///
/// `codewords[trial][k]` is the codeword of trial `trial` at sample `k`.
/// With a single trial the estimate is degenerate and 0 is returned.
pub fn estimate_rate(codewords: &[Vec<Vec<i64>>], tau: f64) -> f64 {
    if codewords.len() < 2 {
        log::warn!("entropy estimate from {} trial(s) is degenerate; reporting 0", codewords.len());
        return 0.0;
    }
    let k = codewords[0].len();
    if k == 0 {
        return 0.0;
    }
    let total = codewords.len() as f64;
    let mut h = 0.0;
    for step in 0..k {
        let mut counts: BTreeMap<&[i64], usize> = BTreeMap::new();
        for trial in codewords {
            *counts.entry(trial[step].as_slice()).or_default() += 1;
        }
        for &c in counts.values() {
            let p = c as f64 / total;
            h -= p * libm::log(p);
        }
    }
    h / (k as f64 * tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZdscResult {
    pub rate_hat: f64,
    pub distortion_hat: f64,
    pub distortion_stderr: f64,
    pub decoder_kind: &'static str,
    pub samples: usize,
    pub trials: u64,
}

/// Codewords and time-averaged squared error of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ZdscTrial {
    pub codewords: Vec<Vec<i64>>,
    pub distortion: f64,
}

/// Data-independent part of the decoder: the fine-grid transition matrix and
/// the Kalman gains at each sample time.
#[derive(Debug, Clone)]
pub struct ZdscRun {
    scheme: ZdscScheme,
    n: usize,
    m: usize,
    a: Mat,
    b: Mat,
    h: f64,
    substeps: usize,
    phi: Mat,
    gains: Vec<Mat>,
    burn_in_fraction: f64,
    trials: u64,
}

impl ZdscRun {
    /// The fine step is `τ / round(τ / cfg.dt)`; `cfg.trials` and
    /// `cfg.burn_in_fraction` apply, and randomness comes from `scheme.seed`.
    pub fn new(model: &SystemModel, scheme: &ZdscScheme, cfg: &SimConfig) -> Result<Self, ZdscError> {
        scheme.validate()?;
        let n = model.n();
        if scheme.delta.len() != n {
            return Err(ZdscError::Dimension { expected: n, found: scheme.delta.len() });
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(SimError::Config("dt must be positive").into());
        }
        if cfg.trials == 0 {
            return Err(SimError::Config("trials must be at least 1").into());
        }
        if !(0.0..1.0).contains(&cfg.burn_in_fraction) {
            return Err(SimError::Config("burn-in fraction must lie in [0, 1)").into());
        }
        let substeps = (libm::round(scheme.tau / cfg.dt) as usize).max(1);
        let h = scheme.tau / substeps as f64;
        let a = model.a().clone();

        // One RK4 step of ẋ = A x: Φ = I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24.
        let ha = a.scale(h);
        let mut phi = Mat::identity(n);
        let mut term = Mat::identity(n);
        for j in 1..=4 {
            term = (&term * &ha).scale(1.0 / j as f64);
            phi = &phi + &term;
        }

        let bbt = model.bbt();
        let r = Mat::from_diag(&scheme.delta.iter().map(|d| 1.0 / (12.0 * d * d)).collect::<Vec<_>>());
        let mut sigma = Mat::zeros(n, n);
        let mut gains = Vec::with_capacity(scheme.samples);
        for _ in 0..scheme.samples {
            for _ in 0..substeps {
                sigma = rk4_lyapunov_step(&a, &bbt, &sigma, h);
            }
            let s = SymMatrix::from_dense(&(&sigma + &r))?;
            let k = &sigma * &spd_inverse(&s)?.to_dense();
            // Joseph form keeps Σ symmetric PSD.
            let i_k = &Mat::identity(n) - &k;
            sigma = (&(&(&i_k * &sigma) * &i_k.transpose()) + &(&(&k * &r) * &k.transpose())).symmetrized();
            gains.push(k);
        }
        Ok(Self {
            scheme: scheme.clone(),
            n,
            m: model.m(),
            a,
            b: model.b().clone(),
            h,
            substeps,
            phi,
            gains,
            burn_in_fraction: cfg.burn_in_fraction,
            trials: cfg.trials,
        })
    }

    fn first_window_sample(&self) -> usize {
        libm::ceil(self.burn_in_fraction * self.scheme.samples as f64 - 1e-9) as usize
    }

    /// Simulates trial `trial`; codewords and distortion cover only the window
    /// after burn-in.
    pub fn run_trial(&self, trial: u64) -> Result<ZdscTrial, ZdscError> {
        let (n, m, h) = (self.n, self.m, self.h);
        let sh = libm::sqrt(h);
        let mut rng = ChaCha8Rng::seed_from_u64(self.scheme.seed);
        rng.set_stream(trial);

        let k0 = self.first_window_sample();
        let start = k0 * self.substeps;
        let mut x = vec![0.0; n];
        let mut xh = vec![0.0; n];
        let mut w = vec![0.0; m];
        let mut ax = vec![0.0; n];
        let mut bw = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let mut codewords = Vec::with_capacity(self.scheme.samples - k0);
        let (mut err_sum, mut count) = (0.0, 0usize);
        if start == 0 {
            count += 1;
        }

        for k in 0..self.scheme.samples {
            for s in 0..self.substeps {
                for wi in w.iter_mut() {
                    *wi = StandardNormal.sample(&mut rng);
                }
                self.a.matvec_into(&x, &mut ax);
                self.b.matvec_into(&w, &mut bw);
                let mut norm2 = 0.0;
                for i in 0..n {
                    x[i] += ax[i] * h + sh * bw[i];
                    norm2 += x[i] * x[i];
                }
                if !(norm2 <= BLOW_UP * BLOW_UP) {
                    let t = (k * self.substeps + s + 1) as f64 * h;
                    return Err(ZdscError::Divergence { trial, t });
                }
                self.phi.matvec_into(&xh, &mut tmp);
                xh.copy_from_slice(&tmp);
                if s + 1 == self.substeps {
                    let code = self.scheme.quantize(&x);
                    let z = self.scheme.dequantize(&code);
                    for i in 0..n {
                        tmp[i] = z[i] - xh[i];
                    }
                    let corr = self.gains[k].matvec(&tmp);
                    for i in 0..n {
                        xh[i] += corr[i];
                    }
                    if k >= k0 {
                        codewords.push(code);
                    }
                }
                if k * self.substeps + s + 1 >= start {
                    err_sum += x.iter().zip(&xh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    count += 1;
                }
            }
        }
        Ok(ZdscTrial { codewords, distortion: err_sum / count as f64 })
    }

    /// Combines trials given in trial order.
    pub fn finish(&self, trials: Vec<ZdscTrial>) -> ZdscResult {
        let d: Vec<f64> = trials.iter().map(|t| t.distortion).collect();
        let est = Estimate::from_samples(&d);
        let window = self.scheme.samples - self.first_window_sample();
        let codes: Vec<Vec<Vec<i64>>> = trials.into_iter().map(|t| t.codewords).collect();
        ZdscResult {
            rate_hat: estimate_rate(&codes, self.scheme.tau),
            distortion_hat: est.mean,
            distortion_stderr: est.stderr,
            decoder_kind: DECODER_KIND,
            samples: window,
            trials: self.trials,
        }
    }
}

fn rk4_lyapunov_step(a: &Mat, bbt: &Mat, s: &Mat, h: f64) -> Mat {
    let f = |x: &Mat| {
        let ax = a * x;
        &(&ax + &ax.transpose()) + bbt
    };
    let k1 = f(s);
    let k2 = f(&(s + &k1.scale(0.5 * h)));
    let k3 = f(&(s + &k2.scale(0.5 * h)));
    let k4 = f(&(s + &k3.scale(h)));
    let incr = &(&(&k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + &k4;
    (s + &incr.scale(h / 6.0)).symmetrized()
}

/// Runs all trials sequentially.
pub fn decode_and_measure(model: &SystemModel, scheme: &ZdscScheme, cfg: &SimConfig) -> Result<ZdscResult, ZdscError> {
    let run = ZdscRun::new(model, scheme, cfg)?;
    let trials = (0..cfg.trials).map(|i| run.run_trial(i)).collect::<Result<Vec<_>, _>>()?;
    Ok(run.finish(trials))
}

/// Empirical point next to the trade-off curve at the measured distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct ZdscComparison {
    pub rate_hat: f64,
    pub distortion_hat: f64,
    pub r_of_distortion: f64,
    /// `rate_hat − R(distortion_hat)`, labelled with [`GAP_LABEL`].
    pub gap: f64,
    pub label: &'static str,
}

pub fn compare_to_tradeoff(
    model: &SystemModel,
    result: &ZdscResult,
    tol: &Tolerances,
) -> Result<ZdscComparison, ZdscError> {
    let point = design_sensor(model, result.distortion_hat, tol)?;
    Ok(ZdscComparison {
        rate_hat: result.rate_hat,
        distortion_hat: result.distortion_hat,
        r_of_distortion: point.rate,
        gap: result.rate_hat - point.rate,
        label: GAP_LABEL,
    })
}
