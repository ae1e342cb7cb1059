//! Subcommand implementations. Each returns whether every check passed;
//! errors carry the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gmrd_core::riccati::{are_residual, rates_from_p};
use gmrd_core::validate::{SimPlan, TrialStats};
use gmrd_core::zdsc::{DECODER_KIND, GAP_LABEL, ZdscRun, ZdscScheme, compare_to_tradeoff};
use gmrd_core::{Mat, SensorGain, SimConfig, design_sensor, solve_care};

use crate::config::{ConfigError, Problem, load_problem};
use crate::parallel::{par_sweep_curve, par_trials, par_zdsc_trials};
use crate::report::{self, CsvTable, PlotKind, RunMeta, float};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    /// 1: solver or check failure; 2: I/O; 3: parse or validation.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Failure(_) => 1,
            Self::Io { .. } => 2,
            Self::Config(_) | Self::Usage(_) => 3,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

/// Flags shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub gain_override: Option<Vec<f64>>,
    pub distortion: Option<f64>,
    pub gnuplot_stub: bool,
    pub dump_paths: Option<PathBuf>,
}

pub fn load(path: &Path, opts: &Options) -> Result<Problem, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut problem = load_problem(&bytes)?;
    if let Some(seed) = opts.seed {
        problem.override_seed(seed);
    }
    Ok(problem)
}

fn gain_override(problem: &Problem, values: &[f64]) -> Result<SensorGain, CliError> {
    let n = problem.model.n();
    if values.len() == 1 && n > 1 {
        return Ok(SensorGain::new(Mat::identity(n).scale(values[0])));
    }
    if values.len() != n * n || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!(
            "--gain-override needs {} finite row-major entries (or one scalar multiple of I), got {}",
            n * n,
            values.len()
        )));
    }
    Ok(SensorGain::new(Mat::from_row_major(n, n, values.to_vec()).expect("length checked")))
}

fn write_output(opts: &Options, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match &opts.out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => stdout.write_all(bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn write_gnuplot(opts: &Options, kind: PlotKind, n: usize) -> Result<(), CliError> {
    if !opts.gnuplot_stub {
        return Ok(());
    }
    let out = opts.out.as_ref().ok_or_else(|| CliError::Usage("--gnuplot-stub requires --out".into()))?;
    let name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let script = out.with_extension("gp");
    fs::write(&script, report::gnuplot_stub(&name, kind, n)).map_err(|e| CliError::io(&script, e))
}

fn csv_bytes(table: &CsvTable, meta: &RunMeta, start: Instant) -> Result<Vec<u8>, CliError> {
    table.to_bytes(Some((meta, start.elapsed()))).map_err(|e| CliError::Failure(format!("CSV encoding failed: {e}")))
}

/// `rd-curve`: sweep the distortion grid and write the trade-off curve.
pub fn rd_curve(config: &Path, opts: &Options, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let start = Instant::now();
    let problem = load(config, opts)?;
    let grid = problem
        .distortion
        .as_ref()
        .map(|d| d.values())
        .ok_or_else(|| CliError::Usage("config has no distortion block".into()))?;
    let curve =
        par_sweep_curve(&problem.model, &grid, &problem.tolerances).map_err(|e| CliError::Failure(e.to_string()))?;
    let meta = RunMeta::new("rd-curve", &problem.hash).with("points", curve.len());
    write_output(opts, &csv_bytes(&report::rd_curve_table(&curve), &meta, start)?, stdout)?;
    write_gnuplot(opts, PlotKind::RdCurve, problem.model.n())?;
    Ok(true)
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

impl Check {
    fn line(&self) -> String {
        format!(
            "{} {}: value {} reference {} tolerance {}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            float(self.value),
            float(self.reference),
            float(self.tolerance),
            if self.note.is_empty() { String::new() } else { format!(" ({})", self.note) }
        )
    }

    fn failed(name: &'static str, note: impl ToString) -> Self {
        Self { name, value: f64::NAN, reference: f64::NAN, tolerance: f64::NAN, pass: false, note: note.to_string() }
    }
}

/// Checks, plus the simulation plan and per-trial statistics when the simulation ran.
pub type CheckRun = (Vec<Check>, Option<SimPlan>, Vec<TrialStats>);

/// Design (or take the override gain), then run the Duncan and stationary-rate checks.
pub fn run_checks(problem: &Problem, opts: &Options) -> Result<CheckRun, CliError> {
    let tol = &problem.tolerances;
    let model = &problem.model;
    let sim = problem.sim.ok_or_else(|| CliError::Usage("config has no sim block".into()))?;
    let mut checks = Vec::new();

    let gain = match &opts.gain_override {
        Some(values) => gain_override(problem, values)?,
        None => {
            let d = match (opts.distortion, &problem.distortion) {
                (Some(d), _) => d,
                (None, Some(crate::config::Distortion::Value(d))) => *d,
                _ => return Err(CliError::Usage("validate needs --D or a distortion value in the config".into())),
            };
            if !(d > 0.0 && d.is_finite()) {
                return Err(CliError::Usage(format!("distortion must be positive, got {d}")));
            }
            match design_sensor(model, d, tol) {
                Ok(point) => {
                    let bound = tol.residual_tol * (1.0 + model.bbt().norm_fro());
                    checks.push(Check {
                        name: "design",
                        value: point.are_residual,
                        reference: 0.0,
                        tolerance: bound,
                        pass: point.are_residual <= bound && point.detectable && point.care_trace_p <= d * (1.0 + 1e-5),
                        note: format!(
                            "D {} R {} trace_P {} C {}",
                            float(d),
                            float(point.rate),
                            float(point.care_trace_p),
                            report::row_major(point.gain.matrix())
                        ),
                    });
                    point.gain
                }
                Err(e) => {
                    checks.push(Check::failed("design", e));
                    return Ok((checks, None, Vec::new()));
                }
            }
        }
    };

    let cfg = SimConfig { keep_paths: opts.dump_paths.is_some(), ..sim };
    let plan = match SimPlan::new(model, &gain, &cfg, tol) {
        Ok(plan) => plan,
        Err(e) => {
            checks.push(Check::failed("simulation", e));
            return Ok((checks, None, Vec::new()));
        }
    };
    let stats = match par_trials(&plan) {
        Ok(s) => s,
        Err(e) => {
            checks.push(Check::failed("simulation", e));
            return Ok((checks, Some(plan), Vec::new()));
        }
    };

    let duncan = plan.duncan_report(&stats);
    checks.push(Check {
        name: "duncan",
        value: duncan.monte_carlo,
        reference: duncan.deterministic,
        tolerance: 3.0 * duncan.stderr + duncan.allowance,
        pass: duncan.pass,
        note: format!("stderr {} allowance {}", float(duncan.stderr), float(duncan.allowance)),
    });

    match solve_care(model, &gain, tol) {
        Ok(care) => {
            let (info, mmse) = rates_from_p(&care.p, &gain);
            let result = plan.reduce(stats.clone());
            for (name, est, target) in
                [("mmse_rate", result.mmse_rate, mmse), ("info_rate", result.info_rate, info)]
            {
                let tolerance = 3.0 * est.stderr;
                checks.push(Check {
                    name,
                    value: est.mean,
                    reference: target,
                    tolerance,
                    pass: (est.mean - target).abs() <= tolerance,
                    note: format!("stderr {}", float(est.stderr)),
                });
            }
            let residual = are_residual(model, &gain, &care.p);
            let bound = tol.residual_tol * (1.0 + model.bbt().norm_fro());
            checks.push(Check {
                name: "care_residual",
                value: residual,
                reference: 0.0,
                tolerance: bound,
                pass: residual <= bound,
                note: String::new(),
            });
        }
        Err(e) => checks.push(Check::failed("stationary_rates", e)),
    }
    Ok((checks, Some(plan), stats))
}

/// `validate`: print one PASS/FAIL line per check; `Ok(false)` if any failed.
pub fn validate(config: &Path, opts: &Options, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let start = Instant::now();
    let problem = load(config, opts)?;
    let (checks, plan, stats) = run_checks(&problem, opts)?;
    let io = |e| CliError::io(Path::new("<stdout>"), e);
    for c in &checks {
        writeln!(stdout, "{}", c.line()).map_err(io)?;
    }
    let pass = checks.iter().all(|c| c.pass);
    writeln!(stdout, "{}", if pass { "ALL PASS" } else { "SOME CHECKS FAILED" }).map_err(io)?;

    if let Some(out) = &opts.out {
        let mut t = CsvTable::new(["check", "value", "reference", "tolerance", "pass", "note"]);
        for c in &checks {
            t.push(vec![
                c.name.to_string(),
                float(c.value),
                float(c.reference),
                float(c.tolerance),
                c.pass.to_string(),
                c.note.clone(),
            ]);
        }
        let seed = problem.sim.map_or(0, |s| s.seed);
        let meta = RunMeta::new("validate", &problem.hash).with("seed", seed);
        let bytes = csv_bytes(&t, &meta, start)?;
        fs::write(out, bytes).map_err(|e| CliError::io(out, e))?;
    }
    if let (Some(dir), Some(_)) = (&opts.dump_paths, &plan) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (i, s) in stats.iter().enumerate() {
            if let Some(p) = &s.paths {
                let path = dir.join(format!("trial_{i:04}.csv"));
                let bytes = report::paths_table(p, problem.model.n())
                    .to_bytes(None)
                    .map_err(|e| CliError::Failure(format!("CSV encoding failed: {e}")))?;
                fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            }
        }
    }
    Ok(pass)
}

/// `zdsc`: one CSV row per `(tau, delta)` setting.
pub fn zdsc(config: &Path, opts: &Options, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let start = Instant::now();
    let problem = load(config, opts)?;
    let settings = problem.zdsc.as_ref().ok_or_else(|| CliError::Usage("config has no zdsc block".into()))?;
    let n = problem.model.n();
    let seed = problem.zdsc_seed();
    let dt = problem.zdsc_dt();
    let fail = |e: &dyn std::fmt::Display| CliError::Failure(e.to_string());

    let mut table = CsvTable::new(report::zdsc_header(n));
    for (tau, delta) in settings.settings() {
        let scheme = ZdscScheme::with_horizon(tau, delta.clone(), settings.horizon, seed).map_err(|e| fail(&e))?;
        let cfg = SimConfig::new(dt, settings.horizon, settings.trials, seed);
        let run = ZdscRun::new(&problem.model, &scheme, &cfg).map_err(|e| fail(&e))?;
        let trials = par_zdsc_trials(&run, settings.trials).map_err(|e| fail(&e))?;
        let result = run.finish(trials);
        let cmp = compare_to_tradeoff(&problem.model, &result, &problem.tolerances)
            .map_err(|e| CliError::Failure(format!("tau {tau} delta {delta:?}: {e}")))?;
        table.push(report::zdsc_row(tau, &delta, &cmp));
    }
    let meta = RunMeta::new("zdsc", &problem.hash)
        .with("seed", seed)
        .with("dt", float(dt))
        .with("decoder", DECODER_KIND)
        .with("gap", GAP_LABEL);
    write_output(opts, &csv_bytes(&table, &meta, start)?, stdout)?;
    write_gnuplot(opts, PlotKind::Zdsc, n)?;
    Ok(true)
}

/// `care`: stationary Riccati solve for the gain given by `--gain-override`.
pub fn care(config: &Path, opts: &Options, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let start = Instant::now();
    let problem = load(config, opts)?;
    let values = opts.gain_override.as_ref().ok_or_else(|| CliError::Usage("care needs --gain-override".into()))?;
    let gain = gain_override(&problem, values)?;
    let sol = solve_care(&problem.model, &gain, &problem.tolerances).map_err(|e| CliError::Failure(e.to_string()))?;
    let (info, mmse) = rates_from_p(&sol.p, &gain);
    let abscissa = sol.closed_loop_spectrum.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
    let mut t = CsvTable::new([
        "trace_P",
        "info_rate",
        "are_residual",
        "newton_iterations",
        "closed_loop_abscissa",
        "C_row_major",
        "P_row_major",
    ]);
    t.push(vec![
        float(mmse),
        float(info),
        float(sol.residual),
        sol.newton_iterations.to_string(),
        float(abscissa),
        report::row_major(gain.matrix()),
        report::sym_row_major(&sol.p),
    ]);
    let meta = RunMeta::new("care", &problem.hash);
    write_output(opts, &csv_bytes(&t, &meta, start)?, stdout)?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(doc: &str) -> Problem {
        load_problem(doc.as_bytes()).unwrap()
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Failure(String::new()).exit_code(), 1);
        assert_eq!(CliError::io(Path::new("x"), std::io::Error::other("x")).exit_code(), 2);
        assert_eq!(CliError::Usage(String::new()).exit_code(), 3);
        assert_eq!(CliError::Config(ConfigError::Invalid(vec![])).exit_code(), 3);
    }

    #[test]
    fn gain_override_shapes() {
        let p = problem(r#"{"A": [[-1, 0], [0, -1]], "B": [[1, 0], [0, 1]]}"#);
        assert_eq!(gain_override(&p, &[2.0]).unwrap().matrix(), &Mat::identity(2).scale(2.0));
        assert_eq!(gain_override(&p, &[1.0, 2.0, 3.0, 4.0]).unwrap().matrix()[(1, 0)], 3.0);
        assert_eq!(gain_override(&p, &[1.0, 2.0]).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn canonical_checks_pass() {
        let p = problem(
            r#"{"A": [[-1]], "B": [[1]], "distortion": {"value": 0.25},
                "sim": {"dt": 0.001, "horizon": 20, "trials": 64, "seed": 1}}"#,
        );
        let (checks, _, _) = run_checks(&p, &Options::default()).unwrap();
        let names: Vec<_> = checks.iter().map(|c| c.name).collect();
        assert_eq!(names, ["design", "duncan", "mmse_rate", "info_rate", "care_residual"]);
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    }

    #[test]
    fn zero_gain_on_unstable_source_fails_simulation() {
        let p = problem(r#"{"A": [[1]], "B": [[1]], "sim": {"dt": 0.001, "horizon": 1, "trials": 2, "seed": 1}}"#);
        let opts = Options { gain_override: Some(vec![0.0]), ..Options::default() };
        let (checks, _, _) = run_checks(&p, &opts).unwrap();
        assert_eq!(checks.len(), 1);
        assert!(!checks[0].pass);
        assert!(checks[0].note.contains("diverge"), "{}", checks[0].note);
    }
}
