//! Numeric CSV tables: long-format artifacts written with 17 significant digits
//! and read back losslessly, plus column-wise comparison.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// Shortest text that reads back to the same `f64`: 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Schema(format!("row has {} fields, table has {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// LF line endings, `.` decimal separator, no quoting.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wr.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(|&x| format_f64(x))).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let columns: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        let mut table = Table { columns, rows: Vec::new() };
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {}: `{s}` is not a number", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            table.push(row)?;
        }
        Ok(table)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::Schema(format!(
            "record {} has {len} fields, expected {expected_len}",
            pos.map(|p| p.record()).unwrap_or(0)
        )),
        other => Error::Parse(format!("{other:?}")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnDeviation {
    pub column: String,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Every entry satisfies `|x - y| <= atol + rtol |y|`.
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: usize,
    pub rtol: f64,
    pub atol: f64,
    pub columns: Vec<ColumnDeviation>,
    pub pass: bool,
}

/// Column-wise deviations of `a` from the reference `b`. Headers and row counts must agree.
pub fn compare_tables(a: &Table, b: &Table, rtol: f64, atol: f64) -> Result<CompareReport> {
    if a.columns != b.columns {
        return Err(Error::Schema(format!("columns differ: {:?} vs {:?}", a.columns, b.columns)));
    }
    if a.len() != b.len() {
        return Err(Error::Schema(format!("row counts differ: {} vs {}", a.len(), b.len())));
    }
    let columns: Vec<ColumnDeviation> = a
        .columns
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut dev = ColumnDeviation { column: name.clone(), max_abs: 0.0, max_rel: 0.0, pass: true };
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                let (x, y) = (ra[k], rb[k]);
                if x == y || (x.is_nan() && y.is_nan()) {
                    continue;
                }
                let d = (x - y).abs();
                let rel = if y != 0.0 { d / y.abs() } else if d == 0.0 { 0.0 } else { f64::INFINITY };
                dev.max_abs = dev.max_abs.max(d);
                dev.max_rel = dev.max_rel.max(rel);
                if !(d <= atol + rtol * y.abs()) {
                    dev.pass = false;
                }
            }
            dev
        })
        .collect();
    let pass = columns.iter().all(|c| c.pass);
    Ok(CompareReport { rows: a.len(), rtol, atol, columns, pass })
}

pub fn compare_csv(a: &Path, b: &Path, rtol: f64, atol: f64) -> Result<CompareReport> {
    compare_tables(&Table::read_csv(a)?, &Table::read_csv(b)?, rtol, atol)
}
