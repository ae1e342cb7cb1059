//! CSV output. Every float is written with 17 significant digits; lines
//! starting with `#` are metadata, and only the one beginning with
//! [`TIMESTAMP_PREFIX`] changes between identical runs.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use gmrd_core::design::TradeoffCurve;
use gmrd_core::validate::TrialPaths;
use gmrd_core::zdsc::ZdscComparison;
use gmrd_core::{Mat, SymMatrix};

pub const TIMESTAMP_PREFIX: &str = "# timestamp";

pub const RD_CURVE_HEADER: [&str; 7] =
    ["D", "R_nats_per_time", "trace_P", "gap", "are_residual", "detectable", "C_row_major"];

/// Round-trip float formatting.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn row_major(m: &Mat) -> String {
    m.as_slice().iter().map(|&x| float(x)).collect::<Vec<_>>().join(",")
}

pub fn sym_row_major(m: &SymMatrix) -> String {
    row_major(&m.to_dense())
}

/// Identifying metadata written as `#` lines above the CSV header.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub command: String,
    pub config_hash: String,
    pub extra: Vec<(String, String)>,
}

impl RunMeta {
    pub fn new(command: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self { command: command.into(), config_hash: config_hash.into(), extra: Vec::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    fn lines(&self, elapsed: Duration) -> Vec<String> {
        let mut out = vec![
            format!("# gmrd {}", env!("CARGO_PKG_VERSION")),
            format!("# command {}", self.command),
            format!("# config_sha256 {}", self.config_hash),
        ];
        out.extend(self.extra.iter().map(|(k, v)| format!("# {k} {v}")));
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        out.push(format!("{TIMESTAMP_PREFIX} unix_ms={} wall_s={:.3}", now.as_millis(), elapsed.as_secs_f64()));
        out
    }
}

/// A CSV document: metadata, header, rows.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self, meta: Option<(&RunMeta, Duration)>) -> csv::Result<Vec<u8>> {
        let mut out = Vec::new();
        if let Some((meta, elapsed)) = meta {
            for line in meta.lines(elapsed) {
                out.extend_from_slice(line.as_bytes());
                out.push(b'\n');
            }
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

pub fn rd_curve_table(curve: &TradeoffCurve) -> CsvTable {
    let mut t = CsvTable::new(RD_CURVE_HEADER);
    for p in curve.points() {
        t.push(vec![
            float(p.d),
            float(p.rate),
            float(p.trace_p),
            float(p.gap),
            float(p.are_residual),
            p.detectable.to_string(),
            row_major(p.gain.matrix()),
        ]);
    }
    t
}

pub fn zdsc_header(n: usize) -> Vec<String> {
    let mut h = vec!["tau".to_string()];
    h.extend((1..=n).map(|i| format!("delta_{i}")));
    h.extend(["rate_nats_per_time", "distortion", "R_of_distortion", "gap"].map(String::from));
    h
}

pub fn zdsc_row(tau: f64, delta: &[f64], c: &ZdscComparison) -> Vec<String> {
    let mut r = vec![float(tau)];
    r.extend(delta.iter().map(|&d| float(d)));
    r.extend([c.rate_hat, c.distortion_hat, c.r_of_distortion, c.gap].map(float));
    r
}

/// One trial's sampled trajectories: `t, x_1..x_n, xhat_1..xhat_n, y_1..y_n`.
pub fn paths_table(paths: &TrialPaths, n: usize) -> CsvTable {
    let mut h = vec!["t".to_string()];
    for name in ["x", "xhat", "y"] {
        h.extend((1..=n).map(|i| format!("{name}_{i}")));
    }
    let mut t = CsvTable::new(h);
    for (k, &time) in paths.t.iter().enumerate() {
        let mut row = vec![float(time)];
        for series in [&paths.x, &paths.xhat, &paths.y] {
            row.extend(series[k * n..(k + 1) * n].iter().map(|&v| float(v)));
        }
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    RdCurve,
    Zdsc,
}

/// Gnuplot script that plots `csv_name` (resolved relative to the script).
pub fn gnuplot_stub(csv_name: &str, kind: PlotKind, n: usize) -> String {
    let (xlabel, ylabel, using, style) = match kind {
        PlotKind::RdCurve => ("D", "R (nats per unit time)", "1:2".to_string(), "linespoints"),
        PlotKind::Zdsc => ("distortion", "rate (nats per unit time)", format!("{}:{}", n + 3, n + 2), "points"),
    };
    format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key autotitle columnhead\n\
         set xlabel '{xlabel}'\n\
         set ylabel '{ylabel}'\n\
         plot '{csv_name}' using {using} with {style}\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.25), "2.5000000000000000e-1");
    }

    #[test]
    fn matrix_field_is_quoted() {
        let mut t = CsvTable::new(["a", "m"]);
        t.push(vec!["1".into(), row_major(&Mat::identity(2))]);
        let s = String::from_utf8(t.to_bytes(None).unwrap()).unwrap();
        assert_eq!(s.lines().nth(1).unwrap().matches('"').count(), 2);
        let mut rdr = csv::Reader::from_reader(s.as_bytes());
        let rec = rdr.records().next().unwrap().unwrap();
        assert_eq!(rec[1].split(',').count(), 4);
    }

    #[test]
    fn metadata_has_single_timestamp_line() {
        let meta = RunMeta::new("rd-curve", "abc").with("seed", 7);
        let t = CsvTable::new(["x"]);
        let s = String::from_utf8(t.to_bytes(Some((&meta, Duration::from_millis(5)))).unwrap()).unwrap();
        let comments: Vec<&str> = s.lines().filter(|l| l.starts_with('#')).collect();
        assert_eq!(comments.len(), 5);
        assert_eq!(comments.iter().filter(|l| l.starts_with(TIMESTAMP_PREFIX)).count(), 1);
        assert!(comments.contains(&"# seed 7"));
        assert_eq!(s.lines().last().unwrap(), "x");
    }

    #[test]
    fn zdsc_columns() {
        assert_eq!(
            zdsc_header(2),
            ["tau", "delta_1", "delta_2", "rate_nats_per_time", "distortion", "R_of_distortion", "gap"]
        );
    }

    #[test]
    fn path_rows() {
        let p = TrialPaths { t: vec![0.0, 0.1], x: vec![1.0, 2.0], xhat: vec![0.5, 1.5], y: vec![0.0, 0.2] };
        let t = paths_table(&p, 1);
        assert_eq!(t.header, ["t", "x_1", "xhat_1", "y_1"]);
        assert_eq!(t.rows[1], [float(0.1), float(2.0), float(1.5), float(0.2)]);
    }
}
