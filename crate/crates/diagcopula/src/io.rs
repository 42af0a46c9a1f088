//! File formats.
//!
//! | content            | format                                  |
//! | ------------------ | --------------------------------------- |
//! | tabulated diagonal | CSV `t,delta`                           |
//! | density grid       | CSV `u1,u2,c`                           |
//! | diagonal cross     | CSV `t,phi`                             |
//! | samples            | CSV `u1,...,ud`, optional JSON sidecar  |
//! | reports            | JSON; infinities are written as `null`  |
//!
//! Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use diagcopula_core::entropy::EntropyReport;
use diagcopula_core::sampler::SampleBatch;
use diagcopula_core::verify::VerifyReport;
use diagcopula_core::{CopulaModel, Diagonal, DiagonalSection};
use serde::Serialize;

#[derive(Debug)]
pub enum IoError {
    Io(io::Error),
    Csv(csv::Error),
    Format(String),
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IoError::Io(e) => write!(f, "{e}"),
            IoError::Csv(e) => write!(f, "{e}"),
            IoError::Format(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for IoError {}

impl From<io::Error> for IoError {
    fn from(e: io::Error) -> Self {
        IoError::Io(e)
    }
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::Csv(e)
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Format(e.to_string())
    }
}

pub type IoResult<T> = Result<T, IoError>;

/// Reads `(t, δ(t))` knots from a CSV with header `t,delta`. Lines
/// starting with `#` are skipped.
pub fn read_tabulated<R: Read>(reader: R) -> IoResult<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                IoError::Format(format!("missing column `{name}` (expected header t,delta)"))
            })
    };
    let (ti, di) = (col("t")?, col("delta")?);
    let mut knots = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> IoResult<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse()
                .map_err(|_| IoError::Format(format!("row {}: `{s}` is not a number", line + 1)))
        };
        knots.push((field(ti)?, field(di)?));
    }
    Ok(knots)
}

pub fn read_tabulated_file(path: &Path) -> IoResult<Vec<(f64, f64)>> {
    read_tabulated(File::open(path)?)
}

/// Nodes `i/(n − 1)`, `i = 0..n`, including both ends.
pub fn grid_nodes(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Writes `u1,u2,c` rows over the `n × n` grid, `u1` varying slowest.
pub fn write_grid<W: Write>(w: W, nodes: &[f64], values: &[f64]) -> IoResult<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["u1", "u2", "c"])?;
    let n = nodes.len();
    for (i, &x) in nodes.iter().enumerate() {
        for (j, &y) in nodes.iter().enumerate() {
            wtr.write_record([x.to_string(), y.to_string(), values[i * n + j].to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_cross<W: Write>(w: W, model: &CopulaModel, nodes: &[f64]) -> IoResult<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "phi"])?;
    for &t in nodes {
        wtr.write_record([t.to_string(), model.diagonal_cross(t).to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_samples<W: Write>(w: W, batch: &SampleBatch) -> IoResult<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record((1..=batch.dim).map(|i| format!("u{i}")))?;
    for row in batch.rows() {
        wtr.write_record(row.iter().map(f64::to_string))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a sample CSV back into rows.
pub fn read_samples<R: Read>(reader: R) -> IoResult<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| IoError::Format(format!("`{s}` is not a number")))
            })
            .collect::<IoResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Model identity stored next to sample files.
#[derive(Debug, Serialize)]
pub struct ModelInfo {
    pub family: String,
    pub parameter: Option<f64>,
    pub d: usize,
    pub fingerprint: String,
}

impl ModelInfo {
    pub fn of(delta: &DiagonalSection) -> Self {
        Self {
            family: delta.family().name().to_string(),
            parameter: delta.parameter(),
            d: delta.dim(),
            fingerprint: format!("{:016x}", delta.fingerprint()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SampleSidecar {
    pub n: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub model: ModelInfo,
}

#[derive(Debug, Serialize)]
pub struct SampleJson<'a> {
    #[serde(flatten)]
    pub meta: SampleSidecar,
    pub points: Vec<&'a [f64]>,
}

pub fn sidecar(batch: &SampleBatch, delta: &DiagonalSection) -> SampleSidecar {
    SampleSidecar {
        n: batch.len(),
        seed: batch.seed,
        model: ModelInfo::of(delta),
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
pub struct EntropyJson {
    #[serde(flatten)]
    pub model: ModelInfo,
    pub J: Option<f64>,
    pub G: Option<f64>,
    pub I_closed: Option<f64>,
    pub I_mc: Option<f64>,
    pub se: Option<f64>,
    pub n: Option<usize>,
    pub feasible: bool,
    pub reason: Option<String>,
}

impl EntropyJson {
    pub fn new(report: &EntropyReport, delta: &DiagonalSection) -> Self {
        Self {
            model: ModelInfo::of(delta),
            J: finite(report.j),
            G: finite(report.g),
            I_closed: finite(report.i_closed),
            I_mc: report.mc.map(|m| m.estimate),
            se: report.mc.map(|m| m.std_error),
            n: report.mc.map(|m| m.n),
            feasible: report.feasible,
            reason: report.reason.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckJson {
    pub name: String,
    pub sup_error: Option<f64>,
    pub tolerance: f64,
    pub grid: usize,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct VerifyJson {
    #[serde(flatten)]
    pub model: ModelInfo,
    pub passed: bool,
    pub checks: Vec<CheckJson>,
}

impl VerifyJson {
    pub fn new(report: &VerifyReport, delta: &DiagonalSection) -> Self {
        Self {
            model: ModelInfo::of(delta),
            passed: report.passed(),
            checks: report
                .entries
                .iter()
                .map(|e| CheckJson {
                    name: e.name.clone(),
                    sup_error: finite(e.sup_error),
                    tolerance: e.tolerance,
                    grid: e.grid,
                    passed: e.passed,
                    detail: e.detail.clone(),
                })
                .collect(),
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> IoResult<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Entropy report as `key,value` rows.
pub fn write_entropy_csv<W: Write>(w: W, e: &EntropyJson) -> IoResult<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    wtr.write_record(["key", "value"])?;
    for (k, v) in [
        ("family", e.model.family.clone()),
        ("d", e.model.d.to_string()),
        ("J", opt(e.J)),
        ("G", opt(e.G)),
        ("I_closed", opt(e.I_closed)),
        ("I_mc", opt(e.I_mc)),
        ("se", opt(e.se)),
        ("n", e.n.map_or(String::new(), |n| n.to_string())),
        ("feasible", e.feasible.to_string()),
    ] {
        wtr.write_record([k, v.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_verify_csv<W: Write>(w: W, v: &VerifyJson) -> IoResult<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["name", "sup_error", "tolerance", "grid", "passed"])?;
    for c in &v.checks {
        wtr.write_record([
            c.name.clone(),
            c.sup_error.map_or(String::new(), |x| x.to_string()),
            c.tolerance.to_string(),
            c.grid.to_string(),
            c.passed.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
