//! JSON and CSV helpers shared by the library and the command-line driver.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lti::StateSpaceModel;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;

/// Row-major matrices; empty `a` means a static gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(name: &str, r: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        return Err(Error::DimensionMismatch(format!("{name} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

impl ModelJson {
    pub fn from_model(m: &StateSpaceModel) -> Self {
        Self { a: rows(m.a()), b: rows(m.b()), c: rows(m.c()), d: rows(m.d()) }
    }

    pub fn to_model(&self) -> Result<StateSpaceModel> {
        let n = self.a.len();
        let p = self.d.len();
        let q = self.d.first().map_or(0, |r| r.len());
        StateSpaceModel::new(
            matrix("a", &self.a, n, n)?,
            matrix("b", &self.b, n, q).or_else(|e| if n == 0 { Ok(DMatrix::zeros(0, q)) } else { Err(e) })?,
            matrix("c", &self.c, p, n).or_else(|e| if n == 0 { Ok(DMatrix::zeros(p, 0)) } else { Err(e) })?,
            matrix("d", &self.d, p, q)?,
        )
    }
}

/// Hex SHA-256 of arbitrary bytes, truncated to 16 characters.
pub fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Comment header placed at the top of every CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputHeader {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub config_hash: String,
    pub multiplier: String,
}

impl OutputHeader {
    pub fn new(config_hash: impl Into<String>, multiplier: impl Into<String>) -> Self {
        Self {
            tool: "pnpcert".into(),
            version: TOOL_VERSION.into(),
            schema: SCHEMA_VERSION,
            config_hash: config_hash.into(),
            multiplier: multiplier.into(),
        }
    }

    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} schema={} config={} multiplier={}\n",
            self.tool, self.version, self.schema, self.config_hash, self.multiplier
        )
    }
}

/// Fixed-precision float formatting so outputs are byte-stable.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.10e}")
    }
}

/// Writes a CSV file preceded by the header comment.
pub fn write_csv(path: &Path, header: &OutputHeader, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = header.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Writes `{"header": .., "body": ..}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, header: &OutputHeader, body: &T) -> Result<()> {
    let v = serde_json::json!({ "header": header, "body": body });
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Reads and parses a JSON file; parse failures carry line and column.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    parse_json(&text, &path.display().to_string())
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("{origin}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Human-readable multi-line summary of a matrix (used in debug output).
pub fn matrix_summary(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let _ = write!(s, "{:>12.4e}", m[(i, j)]);
        }
        s.push('\n');
    }
    s
}
