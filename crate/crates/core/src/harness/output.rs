//! Flat result files. Floats are rounded to 9 significant digits before
//! writing, so identical runs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::SweepRecord;
use crate::error::{Error, Result};
use crate::optimizer::OptimizerTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            _ => Err(format!("unknown format '{s}', expected csv or json-lines")),
        }
    }
}

pub const SIGNIFICANT_DIGITS: usize = 9;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn round_opt(x: Option<f64>) -> Option<f64> {
    x.map(round_sig)
}

pub fn rounded(r: &SweepRecord) -> SweepRecord {
    SweepRecord {
        rho_c: round_sig(r.rho_c),
        weighted_total_s: round_sig(r.weighted_total_s),
        stderr_s: round_sig(r.stderr_s),
        gain: round_sig(r.gain),
        t11_s: round_opt(r.t11_s),
        t12_s: round_opt(r.t12_s),
        t21_s: round_opt(r.t21_s),
        t22_s: round_opt(r.t22_s),
        up11_hz: round_opt(r.up11_hz),
        up12_hz: round_opt(r.up12_hz),
        up21_hz: round_opt(r.up21_hz),
        up22_hz: round_opt(r.up22_hz),
        dn11_hz: round_opt(r.dn11_hz),
        dn12_hz: round_opt(r.dn12_hz),
        dn21_hz: round_opt(r.dn21_hz),
        dn22_hz: round_opt(r.dn22_hz),
        step_size: round_opt(r.step_size),
        ..r.clone()
    }
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], format: Format, out: W) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()
        }
        Format::JsonLines => {
            let mut out = out;
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

pub fn write_records<W: Write>(records: &[SweepRecord], format: Format, out: W) -> std::io::Result<()> {
    let rows: Vec<SweepRecord> = records.iter().map(rounded).collect();
    write_rows(&rows, format, out)
}

fn write_file(path: &Path, body: impl FnOnce(BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    body(BufWriter::new(file)).map_err(io)
}

pub fn emit_results(records: &[SweepRecord], format: Format, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidSettings("no records to write".into()));
    }
    write_file(path, |w| write_records(records, format, w))
}

/// Reads back a json-lines results file.
pub fn read_json_lines(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Config {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// One optimizer iteration, flattened for convergence plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub saa_objective: f64,
    pub best_so_far: f64,
    pub is_best: bool,
    pub up11_hz: Option<f64>,
    pub up12_hz: Option<f64>,
    pub up21_hz: Option<f64>,
    pub up22_hz: Option<f64>,
}

pub fn trace_records(trace: &OptimizerTrace) -> Vec<TraceRecord> {
    let best = trace.best_so_far();
    trace
        .iterates
        .iter()
        .zip(&trace.saa_objective)
        .zip(best)
        .enumerate()
        .map(|(k, ((w, &obj), best))| TraceRecord {
            iteration: k,
            saa_objective: round_sig(obj),
            best_so_far: round_sig(best),
            is_best: k == trace.best_index,
            up11_hz: round_opt(w[0][0]),
            up12_hz: round_opt(w[0][1]),
            up21_hz: round_opt(w[1][0]),
            up22_hz: round_opt(w[1][1]),
        })
        .collect()
}

pub fn write_trace<W: Write>(trace: &OptimizerTrace, format: Format, out: W) -> std::io::Result<()> {
    write_rows(&trace_records(trace), format, out)
}

pub fn emit_trace(trace: &OptimizerTrace, format: Format, path: &Path) -> Result<()> {
    write_file(path, |w| write_trace(trace, format, w))
}
