//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gmrd::commands::{self, Options};
use gmrd::parallel::{par_sweep_curve, par_trials, par_zdsc_trials};
use gmrd::report::TIMESTAMP_PREFIX;
use gmrd_core::linalg::{SymMatrix, solve_lyapunov, spectral_abscissa};
use gmrd_core::model::check_detectable;
use gmrd_core::riccati::{RdeOptions, are_residual};
use gmrd_core::validate::SimPlan;
use gmrd_core::zdsc::{ZdscRun, ZdscScheme, compare_to_tradeoff, estimate_rate};
use gmrd_core::{Mat, SensorGain, SimConfig, SystemModel, Tolerances, design_sensor, integrate_rde, solve_care};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn listed(failures: &[String]) -> String {
    if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
}

/// Runs `f` and fails it if it exceeds `budget`.
fn timed(budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{}; {:.2}s", o.detail, elapsed.as_secs_f64());
    if let Some(b) = budget {
        if elapsed > b {
            o.pass = false;
            o.detail = format!("{} exceeds {}s", o.detail, b.as_secs());
        }
    }
    o
}

/// Scalar optimum from the one-dimensional Riccati equation: the trace budget binds
/// unless the open-loop variance `-b²/2a` of a stable source already meets it.
fn scalar_rate(a: f64, b: f64, d: f64) -> f64 {
    let p = if a < 0.0 { d.min(-b * b / (2.0 * a)) } else { d };
    a + b * b / (2.0 * p)
}

fn scalar_oracle() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for case in 0..200 {
        let a = loop {
            let a: f64 = rng.random_range(-3.0..3.0);
            if a.abs() > 1e-3 {
                break a;
            }
        };
        let b = rng.random_range(0.1..3.0);
        let d = rng.random_range(0.05..5.0);
        let model = SystemModel::scalar(a, b).unwrap();
        match design_sensor(&model, d, &tol) {
            Ok(p) => {
                let err = (p.rate - scalar_rate(a, b, d)).abs();
                worst = worst.max(err);
                if err > 1e-6 {
                    failures.push(format!("case {case} a={a} b={b} D={d} err={err:.3e}"));
                }
            }
            Err(e) => failures.push(format!("case {case} a={a} b={b} D={d}: {e}")),
        }
    }
    outcome(failures.is_empty(), format!("200 cases, max |dR| {worst:.3e} (tol 1e-6){}", listed(&failures)))
}

fn random_model(rng: &mut ChaCha8Rng, tol: &Tolerances) -> SystemModel {
    loop {
        let n = rng.random_range(1..=5usize);
        let m = rng.random_range(1..=n);
        let a = Mat::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let b = Mat::from_fn(n, m, |_, _| rng.sample(StandardNormal));
        if let Ok(model) = SystemModel::new(a, b, tol) {
            return model;
        }
    }
}

fn sdp_are_consistency() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_res, mut worst_trace) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for case in 0..100 {
        let model = random_model(&mut rng, &tol);
        let n = model.n();
        let d = n as f64 * rng.random_range(-2.0f64..1.0).exp();
        let point = match design_sensor(&model, d, &tol) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("case {case} n={n}: {e}"));
                continue;
            }
        };
        let care = match solve_care(&model, &point.gain, &tol) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("case {case} n={n}: {e}"));
                continue;
            }
        };
        let residual = are_residual(&model, &point.gain, &care.p);
        let dtrace = (care.p.trace() - point.trace_p).abs();
        let detectable = check_detectable(model.a(), point.gain.matrix(), tol.eig_tol).unwrap_or(false);
        worst_res = worst_res.max(residual);
        worst_trace = worst_trace.max(dtrace);
        if residual > 1e-7 || dtrace > 1e-5 || !detectable {
            failures.push(format!("case {case} n={n} residual {residual:.3e} dTr {dtrace:.3e} detectable {detectable}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!("100 cases, max residual {worst_res:.3e} (tol 1e-7), max |dTr| {worst_trace:.3e} (tol 1e-5){}", listed(&failures)),
    )
}

fn curve_shape() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let slack = |x: f64| 10.0 * tol.gap_tol * (1.0 + x.abs());
    for case in 0..10 {
        let model = random_model(&mut rng, &tol);
        let n = model.n() as f64;
        let grid: Vec<f64> = (0..8).map(|k| 0.1 * n * 1.6f64.powi(k)).collect();
        let curve = match par_sweep_curve(&model, &grid, &tol) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let (d, r) = (curve.distortions(), curve.rates());
        for i in 1..r.len() {
            if r[i] > r[i - 1] + slack(r[i - 1]) {
                failures.push(format!("case {case}: increase at {i}"));
            }
        }
        for i in 1..r.len() - 1 {
            let w = (d[i] - d[i - 1]) / (d[i + 1] - d[i - 1]);
            let chord = (1.0 - w) * r[i - 1] + w * r[i + 1];
            if r[i] > chord + slack(chord) {
                failures.push(format!("case {case}: nonconvex at {i}"));
            }
        }
    }
    let mut saturated = 0;
    for case in 0..10 {
        let model = loop {
            let m = random_model(&mut rng, &tol);
            if spectral_abscissa(m.a()).unwrap() < 0.0 {
                break m;
            }
        };
        let open = solve_lyapunov(model.a(), &SymMatrix::from_dense(&model.bbt()).unwrap()).unwrap();
        for factor in [1.0 + 1e-6, 1.5, 4.0] {
            match design_sensor(&model, open.trace() * factor, &tol) {
                Ok(p) if p.rate <= tol.gap_tol => saturated += 1,
                Ok(p) => failures.push(format!("Hurwitz case {case}: R = {:.3e} beyond open-loop variance", p.rate)),
                Err(e) => failures.push(format!("Hurwitz case {case}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("10 curves monotone and convex within 10*gap_tol, {saturated}/30 Hurwitz points saturated{}", listed(&failures)),
    )
}

fn duncan_case(name: &str, model: &SystemModel, gain: &SensorGain) -> (bool, String) {
    let tol = Tolerances::default();
    let cfg = SimConfig::new(1e-3, 20.0, 64, 11);
    let plan = match SimPlan::new(model, gain, &cfg, &tol) {
        Ok(p) => p,
        Err(e) => return (false, format!("{name}: {e}")),
    };
    match par_trials(&plan) {
        Ok(stats) => {
            let r = plan.duncan_report(&stats);
            (
                r.pass,
                format!(
                    "{name}: MC {:.5} vs {:.5}, |diff| {:.3e} <= 3*{:.3e} + {:.3e}",
                    r.monte_carlo,
                    r.deterministic,
                    r.difference.abs(),
                    r.stderr,
                    r.allowance
                ),
            )
        }
        Err(e) => (false, format!("{name}: {e}")),
    }
}

fn duncan() -> Outcome {
    let scalar = SystemModel::scalar(-1.0, 1.0).unwrap();
    let (p1, d1) = duncan_case("scalar", &scalar, &SensorGain::new(Mat::scalar(8.0f64.sqrt())));
    let two = SystemModel::new(Mat::identity(2).scale(-1.0), Mat::identity(2), &Tolerances::default()).unwrap();
    let (p2, d2) = duncan_case("n=2", &two, &SensorGain::new(Mat::identity(2)));
    outcome(p1 && p2, format!("{d1}; {d2}"))
}

fn stationary_rates() -> Outcome {
    let tol = Tolerances::default();
    let (a, b, d) = (-1.0, 1.0, 0.25);
    // Budget binds: P = D and the Riccati equation gives c² = (2aD + b²)/D².
    let c2 = (2.0 * a * d + b * b) / (d * d);
    let (mmse_oracle, info_oracle) = (d, 0.5 * c2 * d);
    let model = SystemModel::scalar(a, b).unwrap();
    let point = match design_sensor(&model, d, &tol) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let cfg = SimConfig::new(1e-3, 20.0, 64, 5);
    let plan = match SimPlan::new(&model, &point.gain, &cfg, &tol) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let stats = match par_trials(&plan) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let r = plan.reduce(stats);
    let mmse_ok = (r.mmse_rate.mean - mmse_oracle).abs() <= 3.0 * r.mmse_rate.stderr;
    let info_ok = (r.info_rate.mean - info_oracle).abs() <= 3.0 * r.info_rate.stderr;
    outcome(
        mmse_ok && info_ok,
        format!(
            "MMSE {:.5} +- {:.2e} vs {mmse_oracle}, info {:.5} +- {:.2e} vs {info_oracle} (3 sigma)",
            r.mmse_rate.mean, r.mmse_rate.stderr, r.info_rate.mean, r.info_rate.stderr
        ),
    )
}

fn integrator_order() -> Outcome {
    let tol = Tolerances::default();
    let model = SystemModel::scalar(-1.0, 1.0).unwrap();
    let gain = SensorGain::new(Mat::scalar(8.0f64.sqrt()));
    let limit = |dt: f64| integrate_rde(&model, &gain, &RdeOptions::full_grid(dt, 20.0, &tol)).map(|t| t.last().to_dense());
    match (limit(2e-3), limit(1e-3)) {
        (Ok(coarse), Ok(fine)) => {
            let diff = (&coarse - &fine).norm_fro();
            outcome(diff <= 1e-8, format!("||P(dt) - P(dt/2)||_F = {diff:.3e} (tol 1e-8)"))
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

fn zdsc_harness() -> Outcome {
    let mut notes = Vec::new();
    let s = ZdscScheme::new(0.1, vec![2.0, 0.5], 4, 0).unwrap();
    let floors_ok = s.quantize(&[0.7, -0.3]) == [1, -1]
        && s.quantize(&[-2.0, 3.99]) == [-4, 1]
        && s.quantize(&[0.0, -0.0]) == [0, 0]
        && s.dequantize(&[1, -1]) == [0.75, -1.0];
    notes.push(format!("floor cases {}", if floors_ok { "exact" } else { "WRONG" }));

    // Each sample index sees every one of M symbols equally often: entropy ln M per sample.
    let mut entropy_ok = true;
    for (symbols, tau) in [(2usize, 0.5), (4, 0.1), (7, 1.0)] {
        let codes: Vec<Vec<Vec<i64>>> =
            (0..symbols * 3).map(|t| (0..5).map(|k| vec![((t + k) % symbols) as i64]).collect()).collect();
        let expected = (symbols as f64).ln() / tau;
        let got = estimate_rate(&codes, tau);
        entropy_ok &= (got - expected).abs() <= 1e-12 * expected;
    }
    notes.push(format!("uniform entropy {}", if entropy_ok { "exact" } else { "WRONG" }));

    let model = SystemModel::scalar(-1.0, 1.0).unwrap();
    let tol = Tolerances::default();
    let report = ZdscScheme::with_horizon(0.05, vec![8.0], 10.0, 3)
        .map_err(|e| e.to_string())
        .and_then(|scheme| ZdscRun::new(&model, &scheme, &SimConfig::new(1e-3, 10.0, 400, 3)).map_err(|e| e.to_string()))
        .and_then(|run| {
            let trials = par_zdsc_trials(&run, 400).map_err(|e| e.to_string())?;
            compare_to_tradeoff(&model, &run.finish(trials), &tol).map_err(|e| e.to_string())
        });
    let report_ok = match &report {
        Ok(c) => {
            notes.push(format!(
                "rate {:.4} at distortion {:.4}, R(distortion) {:.4}, gap {:+.4} ({})",
                c.rate_hat, c.distortion_hat, c.r_of_distortion, c.gap, c.label
            ));
            [c.rate_hat, c.distortion_hat, c.r_of_distortion, c.gap].iter().all(|x| x.is_finite())
        }
        Err(e) => {
            notes.push(e.clone());
            false
        }
    };
    outcome(floors_ok && entropy_ok && report_ok, notes.join("; "))
}

const DOC: &str = r#"{ "A": [[-1.0, 0.4], [0.0, 0.3]], "B": [[1.0, 0.0], [0.2, 1.0]],
  "distortion": {"grid": [0.2, 0.5, 1.0, 2.0]},
  "sim": {"dt": 1e-3, "horizon": 4.0, "trials": 16, "seed": 9},
  "zdsc": {"tau": [0.05, 0.1], "delta": [[4.0, 4.0]], "horizon": 4.0, "trials": 64} }"#;

type Subcommand = fn(&Path, &Options, &mut dyn std::io::Write) -> Result<bool, commands::CliError>;

fn strip_timestamp(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).lines().filter(|l| !l.starts_with(TIMESTAMP_PREFIX)).collect::<Vec<_>>().join("\n")
}

fn run_to_bytes(
    f: Subcommand,
    cfg: &Path,
    opts: &Options,
) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    f(cfg, opts, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let cfg = dir.path().join("doc.json");
    if let Err(e) = std::fs::write(&cfg, DOC) {
        return outcome(false, e.to_string());
    }
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, f) in [
        ("rd-curve", commands::rd_curve as Subcommand),
        ("zdsc", commands::zdsc),
    ] {
        let runs: Vec<_> = (0..2).map(|_| run_to_bytes(f, &cfg, &Options::default())).collect();
        match (&runs[0], &runs[1]) {
            (Ok(a), Ok(b)) => {
                let same = strip_timestamp(a) == strip_timestamp(b);
                pass &= same;
                notes.push(format!("{name} {}", if same { "identical" } else { "DIFFERS" }));
            }
            (Err(e), _) | (_, Err(e)) => {
                pass = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    let csv = |i: usize| dir.path().join(format!("validate{i}.csv"));
    let mut outputs = Vec::new();
    for i in 0..2 {
        let opts = Options { out: Some(csv(i)), distortion: Some(1.0), ..Options::default() };
        let mut sink = Vec::new();
        match commands::validate(&cfg, &opts, &mut sink).map_err(|e| e.to_string()).and_then(|_| {
            std::fs::read(csv(i)).map_err(|e| e.to_string())
        }) {
            Ok(bytes) => outputs.push(strip_timestamp(&bytes)),
            Err(e) => {
                pass = false;
                notes.push(format!("validate: {e}"));
            }
        }
    }
    if outputs.len() == 2 {
        let same = outputs[0] == outputs[1];
        pass &= same;
        notes.push(format!("validate {}", if same { "identical" } else { "DIFFERS" }));
    }
    outcome(pass, format!("{} (timestamp line excluded)", notes.join(", ")))
}

/// Name, time budget in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 scalar oracle", Some(30), scalar_oracle),
        ("2 SDP-ARE consistency", Some(120), sdp_are_consistency),
        ("3 curve shape", None, curve_shape),
        ("4 Duncan identity", Some(60), duncan),
        ("5 stationary rates", None, stationary_rates),
        ("6 Riccati integrator", None, integrator_order),
        ("7 ZDSC harness", None, zdsc_harness),
        ("8 determinism", None, determinism),
    ];
    let mut all = true;
    for (name, budget, f) in criteria {
        let o = timed(budget.map(Duration::from_secs), f);
        all &= o.pass;
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
