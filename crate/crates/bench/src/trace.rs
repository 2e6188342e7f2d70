//! CSV traces: one row per iteration.

use std::io::{Read, Write};

use done_core::RunTrace;

use crate::error::BenchError;

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    h.extend((1..=dim).map(|i| format!("x{i}")));
    h.push("y".into());
    h.extend((1..=dim).map(|i| format!("xhat{i}")));
    h.extend(["ghat", "t_update_s", "t_solve_s"].map(String::from));
    h
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace<W: Write>(out: W, trace: &RunTrace, dim: usize) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| BenchError::io("writing trace", e.into());
    w.write_record(header(dim)).map_err(csv_err)?;
    for r in &trace.records {
        let mut row = Vec::with_capacity(2 * dim + 5);
        row.push(r.n.to_string());
        row.extend(r.x.iter().map(|&v| fmt(v)));
        row.push(fmt(r.y));
        row.extend(r.x_hat.iter().map(|&v| fmt(v)));
        row.push(fmt(r.g_hat));
        row.push(fmt(r.update_seconds));
        row.push(fmt(r.solve_seconds));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::io("writing trace", e))
}

/// A parsed trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_trace<R: Read>(input: R) -> Result<TraceTable, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |msg: String| BenchError::Config(format!("malformed trace: {msg}"));
    let header = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(TraceTable { header, rows })
}
