//! Time-series text matrices: one time-point per line, one column per ROI.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// Parses a `T × r` text table into an `r × T` matrix.
pub fn parse_timeseries(text: &str, source_name: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: lineno + 1,
            message,
        };
        let row = line
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad sample `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(err(format!("{} values, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            source_name: source_name.to_string(),
            line: 0,
            message: "no samples".into(),
        });
    }
    let (t, r) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, t, |i, j| rows[j][i]))
}

pub fn load_timeseries(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_timeseries(&text, &path.display().to_string())
}

/// Inverse of [`parse_timeseries`].
pub fn timeseries_text(signals: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for t in 0..signals.ncols() {
        let line: Vec<String> = signals.column(t).iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}
