//! Extended Fukunaga-Koontz transform for singular pooled covariances.
//!
//! The pooled joint expectancy `S̄` always has exactly one null direction
//! (the constant vector, a consequence of column centering). Whitening maps
//! `S̄` to `diag(0, I)`, leaving the null direction untouched; the whitened
//! class means then share a zero first row/column and their lower blocks
//! are diagonalized together by one orthogonal eigendecomposition.
//!
//! Dimensions are 0-based throughout; dimension 0 is the null dimension.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BasisSource;
use crate::linalg;
use crate::spectra::{ClassMeans, ExpectancyKind, JointExpectancy};

/// Relative threshold below which an eigenvalue of `S̄` counts as zero.
pub const NULL_EIGENVALUE_REL_TOL: f64 = 1e-9;
pub const WHITENING_TOL: f64 = 1e-8;
pub const NULL_LEAK_TOL: f64 = 1e-6;
pub const OFF_DIAGONAL_TOL: f64 = 1e-6;
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;

pub const NULL_DIMENSION: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    /// Orthonormal eigenvectors of `S̄`, ascending eigenvalues.
    pub eigenvectors: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// Diagonal of Γ: 1 for the null direction, `λ^(-1/2)` otherwise.
    pub scaling: DVector<f64>,
    /// `Γᵀ Qᵀ`.
    pub whitening: DMatrix<f64>,
}

pub fn whiten(mean: &JointExpectancy) -> Result<WhiteningTransform> {
    if mean.kind() != ExpectancyKind::GlobalMean {
        return Err(Error::invalid("whitening expects the global mean joint expectancy"));
    }
    let eig = linalg::symmetric_eigen(mean.matrix())?;
    let r = eig.values.len();
    let max = eig.values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let tau = NULL_EIGENVALUE_REL_TOL * max;
    let null_count = eig.values.iter().filter(|v| v.abs() < tau).count();
    if null_count != 1 || eig.values[0].abs() >= tau {
        return Err(Error::numerical(format!(
            "rank deficiency ≠ 1: {null_count} eigenvalue(s) of the pooled joint expectancy \
             below {tau:e} (smallest {:e})",
            eig.values[0]
        )));
    }
    let scaling = DVector::from_fn(r, |i, _| if i == 0 { 1.0 } else { eig.values[i].powf(-0.5) });
    let whitening = DMatrix::from_diagonal(&scaling) * eig.vectors.transpose();

    let whitened = &whitening * mean.matrix() * whitening.transpose();
    let residual = linalg::max_abs_diff_from_identity(&with_null_one(&whitened));
    if residual >= WHITENING_TOL {
        return Err(Error::numerical(format!(
            "whitened mean deviates from diag(0, I) by {residual:e}"
        )));
    }
    Ok(WhiteningTransform {
        eigenvectors: eig.vectors,
        eigenvalues: eig.values,
        scaling,
        whitening,
    })
}

fn with_null_one(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    out[(0, 0)] += 1.0;
    out
}

/// Fitted projection. Row `k` of `projection` is the filter for dimension
/// `k`; `lambda_asd[k]` and `lambda_nt[k]` are the class variances along it.
#[derive(Debug, Clone, PartialEq)]
pub struct FktModel {
    pub projection: DMatrix<f64>,
    pub lambda_asd: DVector<f64>,
    pub lambda_nt: DVector<f64>,
    pub alpha_asd: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atlas_checksum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSource>,
}

impl FktModel {
    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn alpha_nt(&self) -> f64 {
        1.0 - self.alpha_asd
    }

    /// `α_A · λ_A[k]`; complementary to `α_N · λ_N[k]`.
    pub fn asd_share(&self, k: usize) -> f64 {
        self.alpha_asd * self.lambda_asd[k]
    }

    pub fn nt_share(&self, k: usize) -> f64 {
        self.alpha_nt() * self.lambda_nt[k]
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FktModelDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<FktModelDoc>(text)?.try_into()
    }
}

pub const MODEL_FORMAT: &str = "graph-fkt/fkt-model";
pub const MODEL_VERSION: u32 = 1;

/// Serialized form of [`FktModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FktModelDoc {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    /// Row-major.
    pub projection: Vec<f64>,
    pub lambda_asd: Vec<f64>,
    pub lambda_nt: Vec<f64>,
    pub alpha_asd: f64,
    #[serde(flatten)]
    pub provenance: Provenance,
}

impl From<&FktModel> for FktModelDoc {
    fn from(m: &FktModel) -> Self {
        let r = m.dim();
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            dim: r,
            projection: (0..r)
                .flat_map(|i| (0..r).map(move |j| (i, j)))
                .map(|(i, j)| m.projection[(i, j)])
                .collect(),
            lambda_asd: m.lambda_asd.iter().copied().collect(),
            lambda_nt: m.lambda_nt.iter().copied().collect(),
            alpha_asd: m.alpha_asd,
            provenance: m.provenance.clone(),
        }
    }
}

impl TryFrom<FktModelDoc> for FktModel {
    type Error = Error;

    fn try_from(doc: FktModelDoc) -> Result<Self> {
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        let r = doc.dim;
        if doc.projection.len() != r * r || doc.lambda_asd.len() != r || doc.lambda_nt.len() != r {
            return Err(Error::dims("model document arrays do not match its dimension"));
        }
        Ok(Self {
            projection: DMatrix::from_row_slice(r, r, &doc.projection),
            lambda_asd: DVector::from_vec(doc.lambda_asd),
            lambda_nt: DVector::from_vec(doc.lambda_nt),
            alpha_asd: doc.alpha_asd,
            provenance: doc.provenance,
        })
    }
}

/// Builds `P = T₂ᵀ Q₂` from the whitening and the two class means.
///
/// Non-null dimensions are ordered by descending `λ_A`, so dimension 1 is
/// the most ASD-dominant one.
pub fn simultaneous_diagonalize(
    whitening: &WhiteningTransform,
    asd: &JointExpectancy,
    nt: &JointExpectancy,
    alpha_asd: f64,
) -> Result<FktModel> {
    let q2 = &whitening.whitening;
    let r = q2.nrows();
    if asd.dim() != r || nt.dim() != r {
        return Err(Error::dims(format!(
            "class means of size {}/{} for a whitening of size {r}",
            asd.dim(),
            nt.dim()
        )));
    }
    if !(alpha_asd > 0.0 && alpha_asd < 1.0) {
        return Err(Error::invalid(format!("class fraction {alpha_asd} outside (0, 1)")));
    }
    let whitened_asd = whitened_class(q2, asd, "ASD")?;
    let whitened_nt = whitened_class(q2, nt, "NT")?;

    let block = whitened_asd.view((1, 1), (r - 1, r - 1)).clone_owned();
    let eig = linalg::symmetric_eigen(&block)?;
    // Descending λ_A, ties to the lower block index.
    let mut order: Vec<usize> = (0..r - 1).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]).then(a.cmp(&b)));
    let mut t2 = DMatrix::zeros(r, r);
    t2[(0, 0)] = 1.0;
    for (dst, &src) in order.iter().enumerate() {
        t2.view_mut((1, dst + 1), (r - 1, 1))
            .copy_from(&eig.vectors.column(src));
    }

    let diag_asd = t2.transpose() * &whitened_asd * &t2;
    let diag_nt = t2.transpose() * &whitened_nt * &t2;
    let off_asd = linalg::max_off_diagonal(&diag_asd);
    let off_nt = linalg::max_off_diagonal(&diag_nt);
    if off_asd >= OFF_DIAGONAL_TOL {
        return Err(Error::numerical(format!(
            "ASD mean not diagonalized: off-diagonal residual {off_asd:e}"
        )));
    }
    if off_nt >= OFF_DIAGONAL_TOL {
        return Err(Error::numerical(format!(
            "NT mean not diagonalized: off-diagonal residual {off_nt:e} \
             (class means inconsistent with the pooled mean?)"
        )));
    }
    let lambda_asd = diag_asd.diagonal();
    let lambda_nt = diag_nt.diagonal();
    for k in 1..r {
        let sum = alpha_asd * lambda_asd[k] + (1.0 - alpha_asd) * lambda_nt[k];
        if (sum - 1.0).abs() >= COMPLEMENTARITY_TOL {
            return Err(Error::numerical(format!(
                "class eigenvalues on dimension {k} are not complementary: \
                 α_A·λ_A + α_N·λ_N = {sum}"
            )));
        }
    }
    Ok(FktModel {
        projection: t2.transpose() * q2,
        lambda_asd,
        lambda_nt,
        alpha_asd,
        provenance: Provenance::default(),
    })
}

// Q₂ S Q₂ᵀ with its (numerically tiny) null row and column cleared.
fn whitened_class(q2: &DMatrix<f64>, mean: &JointExpectancy, name: &str) -> Result<DMatrix<f64>> {
    let mut w = linalg::symmetrized(&(q2 * mean.matrix() * q2.transpose()));
    let leak = w
        .row(0)
        .iter()
        .chain(w.column(0).iter())
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    if leak >= NULL_LEAK_TOL {
        return Err(Error::numerical(format!(
            "whitened {name} mean leaks into the null direction ({leak:e})"
        )));
    }
    w.row_mut(0).fill(0.0);
    w.column_mut(0).fill(0.0);
    Ok(w)
}

/// Whitening followed by simultaneous diagonalization.
pub fn fit_fkt(means: &ClassMeans) -> Result<FktModel> {
    let w = whiten(&means.global)?;
    simultaneous_diagonalize(&w, &means.asd, &means.nt, means.alpha_asd())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominantDimensions {
    pub asd: Vec<usize>,
    pub nt: Vec<usize>,
}

/// The `m` non-null dimensions with the largest `α_A λ_A` (resp. `α_N λ_N`),
/// strongest first, ties to the lower index.
pub fn dominant_dimensions(model: &FktModel, m: usize) -> Result<DominantDimensions> {
    let r = model.dim();
    if m == 0 || m > r - 1 {
        return Err(Error::invalid(format!("m = {m} out of range 1..={}", r - 1)));
    }
    let top = |score: &dyn Fn(usize) -> f64| {
        let mut dims: Vec<usize> = (1..r).collect();
        dims.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
        dims.truncate(m);
        dims
    };
    Ok(DominantDimensions {
        asd: top(&|k| model.asd_share(k)),
        nt: top(&|k| model.nt_share(k)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn global(m: DMatrix<f64>) -> JointExpectancy {
        JointExpectancy::from_matrix(m, ExpectancyKind::GlobalMean).unwrap()
    }

    #[test]
    fn isotropic_spectrum_scaling() {
        let c = 1.0 / 3.0;
        let w = whiten(&global(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, c, c, c])))).unwrap();
        assert_eq!(w.scaling[0], 1.0);
        for k in 1..4 {
            assert!((w.scaling[k] - c.powf(-0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn three_by_three_scaling() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![0.7, 0.0, 0.3]));
        let w = whiten(&global(s)).unwrap();
        assert!((w.scaling[1] - 1.825_741_858_350_553_8).abs() < 1e-12);
        assert!((w.scaling[2] - 1.195_228_609_334_393_7).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_must_be_one() {
        let full = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5]));
        assert!(whiten(&global(full))
            .unwrap_err()
            .to_string()
            .contains("rank deficiency"));
        let double = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0]));
        assert!(whiten(&global(double)).is_err());
    }

    #[test]
    fn identical_classes_do_not_discriminate() {
        let s = global(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.2, 0.3, 0.5])));
        let a = JointExpectancy::from_matrix(s.matrix().clone(), ExpectancyKind::ClassMean(crate::Label::Asd)).unwrap();
        let w = whiten(&s).unwrap();
        let model = simultaneous_diagonalize(&w, &a, &a, 0.3).unwrap();
        assert!(model.lambda_asd[0].abs() < 1e-12);
        for k in 1..4 {
            assert!((model.lambda_asd[k] - 1.0).abs() < 1e-12);
            assert!((model.lambda_nt[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_means_are_rejected() {
        let s = global(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.5, 0.5])));
        let a = JointExpectancy::from_matrix(
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.9, 0.1])),
            ExpectancyKind::ClassMean(crate::Label::Asd),
        )
        .unwrap();
        let w = whiten(&s).unwrap();
        // N = A is not consistent with 0.5·A + 0.5·N = S̄.
        assert!(simultaneous_diagonalize(&w, &a, &a, 0.5).is_err());
    }

    #[test]
    fn dominant_dimension_ordering() {
        let model = FktModel {
            projection: DMatrix::identity(4, 4),
            lambda_asd: DVector::from_vec(vec![0.0, 0.4, 1.8, 1.0]),
            lambda_nt: DVector::from_vec(vec![0.0, 1.6, 0.2, 1.0]),
            alpha_asd: 0.5,
            provenance: Provenance::default(),
        };
        let d = dominant_dimensions(&model, 1).unwrap();
        assert_eq!(d.asd, vec![2]);
        assert_eq!(d.nt, vec![1]);
        let all = dominant_dimensions(&model, 3).unwrap();
        assert_eq!(all.asd, vec![2, 3, 1]);
        assert_eq!(all.nt, vec![1, 3, 2]);
        assert!(dominant_dimensions(&model, 4).is_err());
        assert!(dominant_dimensions(&model, 0).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = FktModel {
            projection: DMatrix::from_fn(3, 3, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0)),
            lambda_asd: DVector::from_vec(vec![0.0, 1.0 / 3.0, 2.0f64.sqrt()]),
            lambda_nt: DVector::from_vec(vec![1e-300, -0.0, std::f64::consts::PI]),
            alpha_asd: 0.444_444_444_444_444_4,
            provenance: Provenance {
                atlas_checksum: Some("abc".into()),
                basis: Some(BasisSource::Identity),
            },
        };
        let back = FktModel::from_json(&model.to_json().unwrap()).unwrap();
        for (a, b) in model.projection.iter().zip(back.projection.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(model, back);
    }
}
