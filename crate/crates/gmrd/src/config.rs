//! JSON problem documents.
//!
//! ```json
//! { "A": [[-1.0]], "B": [[1.0]],
//!   "distortion": {"grid": [0.1, 0.25, 0.5, 1.0]},
//!   "sim": {"dt": 1e-3, "horizon": 20.0, "trials": 64, "seed": 7},
//!   "zdsc": {"tau": 0.05, "delta": [8.0], "horizon": 10.0, "trials": 2000} }
//! ```
//!
//! `zdsc.tau` may also be a list and `zdsc.delta` a list of per-coordinate
//! vectors; every `(tau, delta)` pair is one experiment setting.

use gmrd_core::zdsc::ZdscScheme;
use gmrd_core::{Mat, SimConfig, SystemModel, Tolerances};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Fine-grid step used by ZDSC runs when the document has no `sim` block.
pub const DEFAULT_ZDSC_DT: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    distortion: Option<RawDistortion>,
    sim: Option<RawSim>,
    zdsc: Option<RawZdsc>,
    tolerances: Option<RawTolerances>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistortion {
    grid: Option<Vec<f64>>,
    value: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: f64,
    horizon: f64,
    trials: u64,
    seed: u64,
    burn_in_fraction: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(xs) => xs,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZdsc {
    tau: OneOrMany<f64>,
    delta: OneOrMany<Vec<f64>>,
    horizon: f64,
    trials: u64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    eig_tol: Option<f64>,
    psd_tol: Option<f64>,
    gap_tol: Option<f64>,
    residual_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distortion {
    Grid(Vec<f64>),
    Value(f64),
}

impl Distortion {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Grid(g) => g.clone(),
            Self::Value(d) => vec![*d],
        }
    }
}

/// ZDSC experiment block: one run per `(tau, delta)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ZdscSettings {
    pub taus: Vec<f64>,
    pub deltas: Vec<Vec<f64>>,
    pub horizon: f64,
    pub trials: u64,
}

impl ZdscSettings {
    /// Settings in document order, `tau` outermost.
    pub fn settings(&self) -> Vec<(f64, Vec<f64>)> {
        self.taus.iter().flat_map(|&t| self.deltas.iter().map(move |d| (t, d.clone()))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub model: SystemModel,
    pub tolerances: Tolerances,
    pub distortion: Option<Distortion>,
    pub sim: Option<SimConfig>,
    pub zdsc: Option<ZdscSettings>,
    /// SHA-256 of the document bytes, lowercase hex.
    pub hash: String,
    seed_override: Option<u64>,
}

impl Problem {
    /// Replaces the seed of the simulation block and of ZDSC runs.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed_override = Some(seed);
        if let Some(sim) = self.sim.as_mut() {
            sim.seed = seed;
        }
    }

    /// Seed for ZDSC runs: the override, else the simulation seed, else 0.
    pub fn zdsc_seed(&self) -> u64 {
        self.seed_override.or(self.sim.map(|s| s.seed)).unwrap_or(0)
    }

    pub fn zdsc_dt(&self) -> f64 {
        self.sim.map_or(DEFAULT_ZDSC_DT, |s| s.dt)
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn matrix(name: &str, rows: &[Vec<f64>], errors: &mut Vec<String>) -> Option<Mat> {
    if rows.is_empty() || rows[0].is_empty() {
        errors.push(format!("{name} must be a nonempty matrix"));
        return None;
    }
    let cols = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        errors.push(format!("{name} row {i} has {} entries, expected {cols}", rows[i].len()));
        return None;
    }
    Mat::from_rows(rows).ok()
}

/// Parses and validates a problem document, reporting every violated invariant.
pub fn load_problem(bytes: &[u8]) -> Result<Problem, ConfigError> {
    let raw: RawConfig = serde_json::from_slice(bytes)?;
    let mut errors = Vec::new();

    let defaults = Tolerances::default();
    let t = raw.tolerances.unwrap_or_default();
    let tolerances = Tolerances {
        eig_tol: t.eig_tol.unwrap_or(defaults.eig_tol),
        psd_tol: t.psd_tol.unwrap_or(defaults.psd_tol),
        gap_tol: t.gap_tol.unwrap_or(defaults.gap_tol),
        residual_tol: t.residual_tol.unwrap_or(defaults.residual_tol),
    };
    if let Err(e) = tolerances.validate() {
        errors.push(e.to_string());
    }

    let a = matrix("A", &raw.a, &mut errors);
    let b = matrix("B", &raw.b, &mut errors);
    let n = a.as_ref().map(Mat::rows);
    let model = match (a, b) {
        (Some(a), Some(b)) if errors.is_empty() => {
            SystemModel::new(a, b, &tolerances).map_err(|e| errors.push(e.to_string())).ok()
        }
        (Some(a), Some(b)) => {
            if !a.is_square() {
                errors.push(format!("A must be square, got {}x{}", a.rows(), a.cols()));
            } else if b.rows() != a.rows() {
                errors.push(format!("B must have {} rows, got {}", a.rows(), b.rows()));
            }
            None
        }
        _ => None,
    };

    let distortion = match raw.distortion {
        None => None,
        Some(RawDistortion { grid: Some(_), value: Some(_) }) => {
            errors.push("distortion must contain exactly one of `grid` or `value`".into());
            None
        }
        Some(RawDistortion { grid: None, value: None }) => {
            errors.push("distortion must contain `grid` or `value`".into());
            None
        }
        Some(RawDistortion { grid: Some(g), .. }) => {
            check_grid(&g, &mut errors);
            Some(Distortion::Grid(g))
        }
        Some(RawDistortion { value: Some(d), .. }) => {
            if !(d > 0.0 && d.is_finite()) {
                errors.push(format!("distortion value must be positive, got {d}"));
            }
            Some(Distortion::Value(d))
        }
    };

    let sim = raw.sim.map(|s| {
        let mut cfg = SimConfig::new(s.dt, s.horizon, s.trials, s.seed);
        if let Some(f) = s.burn_in_fraction {
            cfg.burn_in_fraction = f;
        }
        if let Err(e) = cfg.validate() {
            errors.push(format!("sim: {e}"));
        }
        cfg
    });

    let zdsc = raw.zdsc.map(|z| {
        let settings = ZdscSettings { taus: z.tau.into_vec(), deltas: z.delta.into_vec(), horizon: z.horizon, trials: z.trials };
        if settings.taus.is_empty() || settings.deltas.is_empty() {
            errors.push("zdsc: tau and delta must be nonempty".into());
        }
        if settings.trials == 0 {
            errors.push("zdsc: trials must be positive".into());
        }
        for (tau, delta) in settings.settings() {
            if let Some(n) = n {
                if delta.len() != n {
                    errors.push(format!("zdsc: delta has {} entries, expected {n}", delta.len()));
                    continue;
                }
            }
            if let Err(e) = ZdscScheme::with_horizon(tau, delta, settings.horizon, 0) {
                errors.push(format!("zdsc: {e}"));
            }
        }
        settings
    });

    if !errors.is_empty() {
        errors.dedup();
        return Err(ConfigError::Invalid(errors));
    }
    Ok(Problem {
        model: model.expect("model is valid when no errors were recorded"),
        tolerances,
        distortion,
        sim,
        zdsc,
        hash: config_hash(bytes),
        seed_override: None,
    })
}

fn check_grid(grid: &[f64], errors: &mut Vec<String>) {
    if grid.is_empty() {
        errors.push("distortion grid is empty".into());
    }
    for &d in grid {
        if !(d > 0.0 && d.is_finite()) {
            errors.push(format!("distortion grid entry must be positive, got {d}"));
        }
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        errors.push("distortion grid must be strictly increasing".into());
    }
}
