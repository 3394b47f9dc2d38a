//! Discriminative-mode reports, BrainNet-style node files and evaluation
//! summaries.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{atomic_write, fmt_f64};
use crate::atlas::RoiAtlas;
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::features::population_variance;
use crate::fkt::{DominantDimensions, FktModel};
use crate::graph::GftBasis;
use crate::spectra::Label;

pub const DEFAULT_MULTIPLIER: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeWeight {
    /// 1-based GFT mode.
    pub mode: usize,
    pub weight: f64,
    pub flagged: bool,
}

/// Absolute weights of one projection row over the GFT modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    /// Class this row is dominant for.
    pub class: Label,
    /// 1-based position in that class's dominant list.
    pub rank: usize,
    /// 0-based row of the projection matrix.
    pub dimension: usize,
    pub mean: f64,
    pub std: f64,
    pub modes: Vec<ModeWeight>,
}

impl ModeRow {
    pub fn flagged_modes(&self) -> Vec<usize> {
        self.modes.iter().filter(|w| w.flagged).map(|w| w.mode).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub multiplier: f64,
    pub rows: Vec<ModeRow>,
}

/// Flags entries further than `multiplier` population standard deviations
/// from the mean. A constant row has no flags.
pub fn flag_outliers(weights: &[f64], multiplier: f64) -> (f64, f64, Vec<bool>) {
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let constant = weights.windows(2).all(|w| w[0] == w[1]);
    let std = if constant {
        0.0
    } else {
        population_variance(weights).sqrt()
    };
    let flags = weights
        .iter()
        .map(|&w| std > 0.0 && (w - mean).abs() > multiplier * std)
        .collect();
    (mean, std, flags)
}

pub fn export_mode_report(model: &FktModel, dims: &DominantDimensions, multiplier: f64) -> Result<ModeReport> {
    let r = model.dim();
    let rows = [(Label::Asd, &dims.asd), (Label::Nt, &dims.nt)]
        .into_iter()
        .flat_map(|(class, list)| list.iter().enumerate().map(move |(i, &d)| (class, i + 1, d)))
        .map(|(class, rank, dimension)| {
            if dimension >= r {
                return Err(Error::invalid(format!(
                    "dimension {dimension} out of range for r = {r}"
                )));
            }
            let weights: Vec<f64> = model.projection.row(dimension).iter().map(|w| w.abs()).collect();
            let (mean, std, flags) = flag_outliers(&weights, multiplier);
            let modes = weights
                .into_iter()
                .zip(flags)
                .enumerate()
                .map(|(k, (weight, flagged))| ModeWeight {
                    mode: k + 1,
                    weight,
                    flagged,
                })
                .collect();
            Ok(ModeRow {
                class,
                rank,
                dimension,
                mean,
                std,
                modes,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ModeReport { multiplier, rows })
}

impl ModeReport {
    /// One line per (row, mode).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("class\trank\tdimension\tmode\tweight\tflagged\n");
        for row in &self.rows {
            for w in &row.modes {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    row.class,
                    row.rank,
                    row.dimension,
                    w.mode,
                    fmt_f64(w.weight),
                    u8::from(w.flagged)
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Modes flagged in any row dominant for `class`, ascending.
    pub fn flagged_for(&self, class: Label) -> Vec<usize> {
        let mut modes: Vec<usize> = self
            .rows
            .iter()
            .filter(|r| r.class == class)
            .flat_map(ModeRow::flagged_modes)
            .collect();
        modes.sort_unstable();
        modes.dedup();
        modes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEntry {
    pub coord: [f64; 3],
    pub intensity: f64,
    pub size: f64,
    pub label: String,
}

/// Node-file text for GFT mode `mode` (1-based): `x y z intensity size label`.
pub fn node_file_text(atlas: &RoiAtlas, basis: &GftBasis, mode: usize) -> Result<String> {
    let r = basis.dim();
    if atlas.len() != r {
        return Err(Error::dims(format!(
            "atlas has {} ROIs, basis has {r} modes",
            atlas.len()
        )));
    }
    if mode == 0 || mode > r {
        return Err(Error::invalid(format!("mode {mode} out of range 1..={r}")));
    }
    let v = basis.mode(mode - 1);
    let mut out = String::new();
    for (roi, &x) in atlas.rois().iter().zip(v.iter()) {
        let [a, b, c] = roi.coord;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            fmt_f64(a),
            fmt_f64(b),
            fmt_f64(c),
            fmt_f64(x),
            fmt_f64(x.abs()),
            roi.label()
        );
    }
    Ok(out)
}

pub fn export_node_file(atlas: &RoiAtlas, basis: &GftBasis, mode: usize, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path, node_file_text(atlas, basis, mode)?.as_bytes())
}

pub fn parse_node_file(text: &str, source_name: &str) -> Result<Vec<NodeEntry>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(parse_err(i + 1, format!("expected 6 fields, found {}", fields.len())));
            }
            let num = |k: usize| {
                fields[k]
                    .parse::<f64>()
                    .map_err(|_| parse_err(i + 1, format!("`{}` is not a number", fields[k])))
            };
            Ok(NodeEntry {
                coord: [num(0)?, num(1)?, num(2)?],
                intensity: num(3)?,
                size: num(4)?,
                label: fields[5].to_string(),
            })
        })
        .collect()
}

/// Tab-separated summary: one line per report, then one per paired test.
pub fn eval_summary_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::from("method\tm\ttrials\tmean\tstd\n");
    for r in reports {
        let m = r.m.map_or_else(|| "-".to_string(), |m| m.to_string());
        let _ = writeln!(
            out,
            "{}\t{m}\t{}\t{}\t{}",
            r.method,
            r.per_trial_accuracy.len(),
            fmt_f64(r.mean),
            fmt_f64(r.std)
        );
    }
    let tests: Vec<_> = reports
        .iter()
        .flat_map(|r| r.comparisons.iter().map(move |c| (r, c)))
        .collect();
    if !tests.is_empty() {
        out.push_str("\nmethod\tversus\tt\tp_value\n");
        for (r, c) in tests {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.method,
                c.other,
                fmt_f64(c.t),
                fmt_f64(c.p_value)
            );
        }
    }
    out
}
