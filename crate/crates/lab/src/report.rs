//! Report records and their CSV / JSON writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use heatlab_core::Manifold;

use crate::error::{LabError, Result};

/// Shortest decimal text that parses back to the same `f64`. Plain notation
/// for moderate magnitudes, exponent notation otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// SHA-256 over the backend tag, node positions and quadrature weights.
pub fn manifold_hash(m: &Manifold) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{:?}:{}:{}", m.kind(), m.dimension(), m.node_count()).as_bytes());
    for node in 0..m.node_count() {
        for c in m.node_position(node) {
            hasher.update(c.to_le_bytes());
        }
    }
    for w in m.quadrature_weights() {
        hasher.update(w.to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// One pass/fail check. Every gate is normalized so that `slack <= 0` iff it passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    /// The inequality being checked, in terms of `value` and `limit`.
    pub claim: String,
    pub value: f64,
    pub limit: f64,
    pub slack: f64,
    pub pass: bool,
    /// Snapshot time of the worst case, when the gate ranges over time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

impl Gate {
    pub fn at_most(name: &str, claim: &str, value: f64, limit: f64) -> Self {
        Self::from_slack(name, claim, value, limit, value - limit)
    }

    pub fn at_least(name: &str, claim: &str, value: f64, limit: f64) -> Self {
        Self::from_slack(name, claim, value, limit, limit - value)
    }

    fn from_slack(name: &str, claim: &str, value: f64, limit: f64, slack: f64) -> Self {
        Gate {
            name: name.into(),
            claim: claim.into(),
            value,
            limit,
            slack,
            pass: slack <= 0.0,
            time: None,
        }
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub pass: bool,
    /// Largest slack over the suite's gates.
    pub worst_slack: f64,
    pub worst_gate: String,
    pub gates: Vec<Gate>,
}

impl SuiteResult {
    pub fn new(suite: &'static str, gates: Vec<Gate>) -> Self {
        let worst = gates
            .iter()
            .max_by(|a, b| a.slack.total_cmp(&b.slack))
            .expect("every suite has at least one gate");
        SuiteResult {
            suite,
            pass: gates.iter().all(|g| g.pass),
            worst_slack: worst.slack,
            worst_gate: worst.name.clone(),
            gates,
        }
    }
}

/// One row of `diagnostics.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub max_h: f64,
    pub argmax_h: usize,
    pub max_liyau: f64,
    pub f_direct: f64,
    pub f_via_h: f64,
    pub w_direct: f64,
    pub w_via_p: f64,
    pub df_fd: Option<f64>,
    pub df_formula: Option<f64>,
    pub dw_fd: Option<f64>,
    pub dw_formula: Option<f64>,
    pub residual_maxnorm: Option<f64>,
}

pub const DIAGNOSTICS_HEADER: [&str; 13] = [
    "time",
    "max_H",
    "argmax_H",
    "max_liyau",
    "F_direct",
    "F_via_H",
    "W_direct",
    "W_via_P",
    "dF_fd",
    "dF_formula",
    "dW_fd",
    "dW_formula",
    "residual_maxnorm",
];

pub const PATHWISE_HEADER: [&str; 9] = ["x1", "x2", "t1", "t2", "gamma", "lhs", "rhs", "slack", "pass"];

pub const PARAMSCAN_HEADER: [&str; 8] =
    ["alpha", "beta", "b", "lambda", "alpha_minus_beta", "b_plus_beta", "quarter_square", "survivor"];

/// Writes report files into one directory.
#[derive(Debug)]
pub struct ReportDir {
    root: PathBuf,
}

impl ReportDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|source| LabError::Write { path: root.to_path_buf(), source })?;
        Ok(ReportDir { root: root.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn open(&self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|source| LabError::Write { path: path.clone(), source })?;
        Ok((path, BufWriter::new(file)))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let (path, mut w) = self.open(name)?;
        let io = |source| LabError::Write { path: path.clone(), source };
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(io)
    }

    /// Writes a header row followed by `rows`, each already formatted.
    pub fn csv<const N: usize>(&self, name: &str, header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<()> {
        let mut out = self.csv_writer(name, header)?;
        for row in rows {
            out.row(&row)?;
        }
        out.finish()
    }

    pub fn csv_writer<const N: usize>(&self, name: &str, header: [&str; N]) -> Result<CsvOut> {
        let (path, w) = self.open(name)?;
        let mut out = CsvOut { writer: csv::Writer::from_writer(w), path };
        out.row(&header)?;
        Ok(out)
    }

    /// Comment header line then `time, node values...` per state.
    pub fn snapshots<'a>(&self, header: &str, states: impl Iterator<Item = (f64, &'a [f64])>) -> Result<()> {
        let (path, mut w) = self.open("snapshots.csv")?;
        let io = |source| LabError::Write { path: path.clone(), source };
        writeln!(w, "# {header}").map_err(io)?;
        for (t, values) in states {
            let mut line = fmt_f64(t);
            for v in values {
                line.push(',');
                line.push_str(&fmt_f64(*v));
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Streaming CSV output; call [`CsvOut::finish`] to flush.
#[derive(Debug)]
pub struct CsvOut {
    writer: csv::Writer<BufWriter<File>>,
    path: PathBuf,
}

impl CsvOut {
    pub fn row<S: AsRef<[u8]>>(&mut self, record: &[S]) -> Result<()> {
        self.writer
            .write_record(record)
            .map_err(|e| LabError::Write { path: self.path.clone(), source: e.into() })
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|source| LabError::Write { path: self.path.clone(), source })
    }
}

impl DiagnosticsRow {
    pub fn to_record(&self) -> [String; 13] {
        [
            fmt_f64(self.time),
            fmt_f64(self.max_h),
            self.argmax_h.to_string(),
            fmt_f64(self.max_liyau),
            fmt_f64(self.f_direct),
            fmt_f64(self.f_via_h),
            fmt_f64(self.w_direct),
            fmt_f64(self.w_via_p),
            fmt_opt(self.df_fd),
            fmt_opt(self.df_formula),
            fmt_opt(self.dw_fd),
            fmt_opt(self.dw_formula),
            fmt_opt(self.residual_maxnorm),
        ]
    }
}

pub fn pathwise_record(r: &heatlab_core::pathwise::PairReport) -> [String; 9] {
    [
        r.pair.x1.to_string(),
        r.pair.x2.to_string(),
        fmt_f64(r.pair.t1),
        fmt_f64(r.pair.t2),
        fmt_f64(r.gamma),
        fmt_f64(r.lhs),
        fmt_f64(r.rhs),
        fmt_f64(r.slack),
        r.pass.to_string(),
    ]
}

pub fn paramscan_record(p: &heatlab_core::paramspace::ScanPoint) -> [String; 8] {
    [
        fmt_f64(p.alpha),
        fmt_f64(p.beta),
        fmt_f64(p.b),
        fmt_opt(p.lambda),
        fmt_f64(p.alpha_minus_beta),
        fmt_f64(p.b_plus_beta),
        fmt_opt(p.quarter_square),
        p.survivor.to_string(),
    ]
}
