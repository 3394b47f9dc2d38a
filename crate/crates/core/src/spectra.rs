//! Per-subject graph spectra and joint-expectancy matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GftBasis;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "ASD")]
    Asd,
    #[serde(rename = "NT")]
    Nt,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Asd => 0,
            Label::Nt => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Label::Asd => Label::Nt,
            Label::Nt => Label::Asd,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Asd => "ASD",
            Label::Nt => "NT",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ASD" => Ok(Label::Asd),
            "NT" => Ok(Label::Nt),
            other => Err(Error::invalid(format!("unknown label `{other}` (expected ASD or NT)"))),
        }
    }
}

/// One subject's ROI time-series, `r` rows by `T` time-points.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub label: Label,
    signals: DMatrix<f64>,
}

impl SubjectRecord {
    pub fn new(id: impl Into<String>, label: Label, signals: DMatrix<f64>) -> Result<Self> {
        let id = id.into();
        if signals.nrows() < 2 {
            return Err(Error::Subject {
                subject: id,
                message: format!("need at least 2 ROIs, got {}", signals.nrows()),
            });
        }
        if signals.ncols() < 2 {
            return Err(Error::Subject {
                subject: id,
                message: format!("need at least 2 time-points, got {}", signals.ncols()),
            });
        }
        if let Some(pos) = signals.iter().position(|v| !v.is_finite()) {
            return Err(Error::Subject {
                subject: id,
                message: format!(
                    "non-finite sample at ROI {}, time-point {}",
                    pos % signals.nrows() + 1,
                    pos / signals.nrows() + 1
                ),
            });
        }
        Ok(Self { id, label, signals })
    }

    pub fn signals(&self) -> &DMatrix<f64> {
        &self.signals
    }

    pub fn roi_count(&self) -> usize {
        self.signals.nrows()
    }

    pub fn time_points(&self) -> usize {
        self.signals.ncols()
    }
}

/// `X̂ = Vᵀ X`.
pub fn gft_coefficients(signals: &DMatrix<f64>, basis: &GftBasis) -> Result<DMatrix<f64>> {
    if signals.nrows() != basis.dim() {
        return Err(Error::dims(format!(
            "signal has {} rows but the basis has {} modes",
            signals.nrows(),
            basis.dim()
        )));
    }
    Ok(basis.eigenvectors().tr_mul(signals))
}

/// Column-centered, unit-norm spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSpectra {
    values: DMatrix<f64>,
    dropped: Vec<usize>,
}

impl NormalizedSpectra {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Input columns (0-based) removed because they were constant across
    /// modes.
    pub fn dropped_columns(&self) -> &[usize] {
        &self.dropped
    }

    pub fn modes(&self) -> usize {
        self.values.nrows()
    }

    pub fn time_points(&self) -> usize {
        self.values.ncols()
    }
}

// Relative to the raw column norm.
const DEGENERATE_COLUMN_TOL: f64 = 1e-12;

/// Subtracts each column's mean over the modes, then scales it to unit L2
/// norm. Columns that are constant across modes carry no information and
/// are dropped.
pub fn normalize_columns(coefficients: &DMatrix<f64>) -> Result<NormalizedSpectra> {
    let r = coefficients.nrows();
    if r < 2 {
        return Err(Error::invalid(format!("need at least 2 modes, got {r}")));
    }
    let mut kept = Vec::with_capacity(coefficients.ncols());
    let mut dropped = Vec::new();
    for (t, col) in coefficients.column_iter().enumerate() {
        let raw_norm = col.norm();
        let mean = col.mean();
        let centered = col.add_scalar(-mean);
        let norm = centered.norm();
        if raw_norm == 0.0 || norm <= DEGENERATE_COLUMN_TOL * raw_norm {
            dropped.push(t);
            continue;
        }
        kept.push(centered / norm);
    }
    if kept.is_empty() {
        return Err(Error::invalid("subject has no informative time-points"));
    }
    if !dropped.is_empty() {
        log::warn!(
            "dropped {} degenerate time-point(s) out of {}",
            dropped.len(),
            coefficients.ncols()
        );
    }
    Ok(NormalizedSpectra {
        values: DMatrix::from_columns(&kept),
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectancyKind {
    PerSubject,
    ClassMean(Label),
    GlobalMean,
}

/// Trace-normalized second-moment matrix `Y Yᵀ / tr(Y Yᵀ)` or a mean of
/// such matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct JointExpectancy {
    matrix: DMatrix<f64>,
    kind: ExpectancyKind,
}

impl JointExpectancy {
    /// Wraps an existing matrix. It must be square and symmetric.
    pub fn from_matrix(matrix: DMatrix<f64>, kind: ExpectancyKind) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dims("joint expectancy must be square"));
        }
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::invalid(format!(
                "joint expectancy is not symmetric (residual {asym:e})"
            )));
        }
        Ok(Self {
            matrix: linalg::symmetrized(&matrix),
            kind,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> ExpectancyKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn joint_expectancy(spectra: &NormalizedSpectra) -> Result<JointExpectancy> {
    let y = spectra.values();
    let scatter = y * y.transpose();
    let trace = scatter.trace();
    if trace <= 0.0 || !trace.is_finite() {
        return Err(Error::numerical(format!(
            "joint expectancy has non-positive trace {trace}"
        )));
    }
    Ok(JointExpectancy {
        matrix: linalg::symmetrized(&(scatter / trace)),
        kind: ExpectancyKind::PerSubject,
    })
}

/// Global and per-class mean joint expectancies of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeans {
    pub global: JointExpectancy,
    pub asd: JointExpectancy,
    pub nt: JointExpectancy,
    pub n_asd: usize,
    pub n_nt: usize,
}

impl ClassMeans {
    /// `n_A / n_T`.
    pub fn alpha_asd(&self) -> f64 {
        self.n_asd as f64 / (self.n_asd + self.n_nt) as f64
    }

    pub fn alpha_nt(&self) -> f64 {
        1.0 - self.alpha_asd()
    }
}

/// Arithmetic means over subjects, accumulated in input order.
pub fn class_means<'a, I>(subjects: I) -> Result<ClassMeans>
where
    I: IntoIterator<Item = (&'a JointExpectancy, Label)>,
{
    let mut total: Option<DMatrix<f64>> = None;
    let mut sums = [None::<DMatrix<f64>>, None];
    let mut counts = [0usize; 2];
    for (s, label) in subjects {
        if s.kind != ExpectancyKind::PerSubject {
            return Err(Error::invalid("class means take per-subject joint expectancies"));
        }
        if let Some(t) = &total {
            if t.nrows() != s.dim() {
                return Err(Error::dims(format!(
                    "joint expectancy of size {} among size {}",
                    s.dim(),
                    t.nrows()
                )));
            }
        }
        accumulate(&mut total, &s.matrix);
        accumulate(&mut sums[label.index()], &s.matrix);
        counts[label.index()] += 1;
    }
    let [asd_sum, nt_sum] = sums;
    let (Some(total), Some(asd_sum), Some(nt_sum)) = (total, asd_sum, nt_sum) else {
        return Err(Error::invalid("both classes required"));
    };
    let n = (counts[0] + counts[1]) as f64;
    Ok(ClassMeans {
        global: JointExpectancy {
            matrix: total / n,
            kind: ExpectancyKind::GlobalMean,
        },
        asd: JointExpectancy {
            matrix: asd_sum / counts[0] as f64,
            kind: ExpectancyKind::ClassMean(Label::Asd),
        },
        nt: JointExpectancy {
            matrix: nt_sum / counts[1] as f64,
            kind: ExpectancyKind::ClassMean(Label::Nt),
        },
        n_asd: counts[0],
        n_nt: counts[1],
    })
}

fn accumulate(acc: &mut Option<DMatrix<f64>>, m: &DMatrix<f64>) {
    match acc {
        Some(a) => *a += m,
        None => *acc = Some(m.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gft_basis, BrainGraph};

    fn path_basis(n: usize) -> GftBasis {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
            a[(i + 1, i)] = 1.0;
        }
        gft_basis(&BrainGraph::from_adjacency(a).unwrap()).unwrap()
    }

    #[test]
    fn constant_signal_hits_only_the_first_mode() {
        let basis = path_basis(5);
        let x = DMatrix::from_element(5, 3, 2.0);
        let xhat = gft_coefficients(&x, &basis).unwrap();
        for t in 0..3 {
            assert!((xhat[(0, t)] - 2.0 * 5f64.sqrt()).abs() < 1e-12);
            for k in 1..5 {
                assert!(xhat[(k, t)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenvector_maps_to_unit_vector() {
        let basis = path_basis(5);
        let x = DMatrix::from_column_slice(5, 1, basis.mode(3).as_slice());
        let xhat = gft_coefficients(&x, &basis).unwrap();
        for k in 0..5 {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((xhat[(k, 0)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(gft_coefficients(&DMatrix::zeros(4, 3), &path_basis(5)).is_err());
    }

    #[test]
    fn normalize_two_modes() {
        let y = normalize_columns(&DMatrix::from_column_slice(2, 1, &[1.0, 3.0])).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((y.values()[(0, 0)] + h).abs() < 1e-15);
        assert!((y.values()[(1, 0)] - h).abs() < 1e-15);
    }

    #[test]
    fn normalize_is_idempotent_on_normalized_columns() {
        let col = [0.5, -0.5, 0.5, -0.5];
        let y = normalize_columns(&DMatrix::from_column_slice(4, 1, &col)).unwrap();
        for (a, b) in y.values().iter().zip(col) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_is_dropped() {
        let x = DMatrix::from_column_slice(3, 2, &[5.0, 5.0, 5.0, 1.0, 2.0, 4.0]);
        let y = normalize_columns(&x).unwrap();
        assert_eq!(y.time_points(), 1);
        assert_eq!(y.dropped_columns(), &[0]);
        let all_constant = DMatrix::from_column_slice(3, 2, &[0.1, 0.1, 0.1, 0.0, 0.0, 0.0]);
        let err = normalize_columns(&all_constant).unwrap_err().to_string();
        assert!(err.contains("no informative time-points"));
    }

    #[test]
    fn rank_one_expectancy() {
        let y = normalize_columns(&DMatrix::from_column_slice(3, 1, &[1.0, 0.0, -2.0])).unwrap();
        let s = joint_expectancy(&y).unwrap();
        let v = y.values().column(0);
        let outer = v * v.transpose();
        assert!((s.matrix() - outer).abs().max() < 1e-15);
        assert!((s.matrix().trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_subject_means() {
        let a = JointExpectancy {
            matrix: DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]),
            kind: ExpectancyKind::PerSubject,
        };
        let b = JointExpectancy {
            matrix: DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.5]),
            kind: ExpectancyKind::PerSubject,
        };
        let means = class_means([(&a, Label::Asd), (&b, Label::Nt)]).unwrap();
        assert_eq!(means.alpha_asd(), 0.5);
        assert_eq!(means.global.matrix(), &((a.matrix() + b.matrix()) / 2.0));
        let err = class_means([(&a, Label::Asd), (&b, Label::Asd)]).unwrap_err();
        assert!(err.to_string().contains("both classes required"));
    }

    #[test]
    fn subject_validation() {
        assert!(SubjectRecord::new("s", Label::Nt, DMatrix::zeros(3, 1)).is_err());
        let mut x = DMatrix::zeros(3, 4);
        x[(1, 2)] = f64::NAN;
        let err = SubjectRecord::new("s7", Label::Nt, x).unwrap_err().to_string();
        assert!(err.contains("s7") && err.contains("ROI 2") && err.contains("time-point 3"));
    }

    #[test]
    fn label_parsing() {
        assert_eq!("asd".parse::<Label>().unwrap(), Label::Asd);
        assert_eq!(" NT ".parse::<Label>().unwrap(), Label::Nt);
        assert!("TD".parse::<Label>().is_err());
    }
}
