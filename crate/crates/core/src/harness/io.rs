use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::DenseMatrix;
use crate::harness::experiment::{ExperimentReport, PHASES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const CSV_HEADER: [&str; 20] = [
    "kind",
    "m",
    "n",
    "p",
    "cond",
    "seed",
    "distribution",
    "method",
    "err1",
    "err2",
    "iterations",
    "inner_iterations",
    "status",
    "factorization",
    "init",
    "residual",
    "correction",
    "gmres",
    "other",
    "error",
];

fn label<S: Serialize>(v: &S) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn csv_row(r: &ExperimentReport) -> Vec<String> {
    let (m, n, p) = r.spec.dims;
    let mut row = vec![
        label(&r.spec.kind),
        m.to_string(),
        n.to_string(),
        p.to_string(),
        format!("{:e}", r.spec.cond),
        r.spec.seed.to_string(),
        label(&r.spec.distribution),
        label(&r.method),
        format!("{:e}", r.metrics.err1),
        format!("{:e}", r.metrics.err2),
        r.iterations.to_string(),
        r.inner_iterations.to_string(),
        r.status.clone(),
    ];
    for ph in PHASES {
        row.push(format!("{:e}", r.phase_timings.get(ph).copied().unwrap_or(0.0)));
    }
    row.push(r.error.clone().unwrap_or_default());
    row
}

pub fn write_report_to<W: Write>(reports: &[ExperimentReport], format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, reports).map_err(|e| Error::Io(e.to_string()))?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in reports {
                w.write_record(csv_row(r)).map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_report(reports: &[ExperimentReport], format: ReportFormat, path: &Path) -> Result<()> {
    write_report_to(reports, format, BufWriter::new(File::create(path)?))
}

pub fn read_reports_json(path: &Path) -> Result<Vec<ExperimentReport>> {
    let f = BufReader::new(File::open(path)?);
    serde_json::from_reader(f).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
}

pub const MM_HEADER: &str = "%%MatrixMarket matrix array real general";

/// Dense array form, column-major, shortest round-trip decimals.
pub fn write_matrix_market(m: &DenseMatrix<f64>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for x in m.as_slice() {
        writeln!(w, "{x:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market(path: &Path) -> Result<DenseMatrix<f64>> {
    let f = BufReader::new(File::open(path)?);
    let mut lines = f.lines().enumerate().map(|(i, l)| (i + 1, l));
    let parse = |line: usize, message: String| Error::Parse { line, message };

    let (ln, first) = match lines.next() {
        Some((ln, l)) => (ln, l?),
        None => return Err(parse(1, "empty file".into())),
    };
    let head: Vec<String> = first.split_whitespace().map(str::to_lowercase).collect();
    if head != ["%%matrixmarket", "matrix", "array", "real", "general"] {
        return Err(parse(ln, format!("unsupported header {first:?}")));
    }

    let mut size = None;
    let mut data = Vec::new();
    let mut last = ln;
    for (ln, l) in lines {
        last = ln;
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        match size {
            None => {
                let dims: Vec<&str> = t.split_whitespace().collect();
                let [r, c] = dims[..] else {
                    return Err(parse(ln, format!("expected 'rows cols', got {t:?}")));
                };
                let r: usize = r.parse().map_err(|_| parse(ln, format!("bad row count {r:?}")))?;
                let c: usize = c.parse().map_err(|_| parse(ln, format!("bad column count {c:?}")))?;
                size = Some((r, c));
                data.reserve(r * c);
            }
            Some((r, c)) => {
                if data.len() == r * c {
                    return Err(parse(ln, "more entries than rows * cols".into()));
                }
                let v: f64 = t.parse().map_err(|_| parse(ln, format!("bad value {t:?}")))?;
                data.push(v);
            }
        }
    }
    let Some((r, c)) = size else {
        return Err(parse(last + 1, "missing size line".into()));
    };
    if data.len() != r * c {
        return Err(parse(last, format!("expected {} entries, found {}", r * c, data.len())));
    }
    DenseMatrix::from_col_major(r, c, data)
}
