//! Trace and summary CSV files.
//!
//! Floats are written in shortest round-trip exponent form, so reading a
//! trace back reproduces the records bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use zopl_core::optimizer::TraceRecord;

use crate::error::{HarnessError, Result};

pub const TRACE_HEADER: [&str; 4] = ["iter", "f_gap", "oracle_calls", "grad_norm"];
pub const SUMMARY_HEADER: [&str; 6] = ["label", "seed", "floor", "floor_std", "final_gap", "total_calls"];

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub seed: u64,
    pub floor: f64,
    pub floor_std: f64,
    pub final_gap: f64,
    pub total_calls: u64,
}

pub fn write_trace_to<W: Write>(out: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        let grad = r.grad_norm.map(|g| format!("{g:e}")).unwrap_or_default();
        w.write_record([r.iter.to_string(), format!("{:e}", r.f_gap), r.oracle_calls.to_string(), grad])?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

pub fn read_trace_from<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(HarnessError::Config(format!("unexpected trace header {header:?}")));
    }
    let bad = |field: &str, v: &str| HarnessError::Config(format!("bad {field} value `{v}` in trace"));
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let iter = row[0].parse().map_err(|_| bad("iter", &row[0]))?;
        let f_gap = row[1].parse().map_err(|_| bad("f_gap", &row[1]))?;
        let oracle_calls = row[2].parse().map_err(|_| bad("oracle_calls", &row[2]))?;
        let grad_norm = if row[3].is_empty() {
            None
        } else {
            Some(row[3].parse().map_err(|_| bad("grad_norm", &row[3]))?)
        };
        out.push(TraceRecord {
            iter,
            f_gap,
            oracle_calls,
            grad_norm,
        });
    }
    Ok(out)
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_trace_to(file, records)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_trace_from(file)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.seed.to_string(),
            format!("{:e}", r.floor),
            format!("{:e}", r.floor_std),
            format!("{:e}", r.final_gap),
            r.total_calls.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad number `{}` in summary", &row[i])))
        };
        out.push(SummaryRow {
            label: row[0].to_string(),
            seed: row[1]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad seed `{}`", &row[1])))?,
            floor: num(2)?,
            floor_std: num(3)?,
            final_gap: num(4)?,
            total_calls: row[5]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad call count `{}`", &row[5])))?,
        });
    }
    Ok(out)
}

/// File-name-safe version of a label.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
