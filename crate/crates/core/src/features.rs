//! Projection through the FKT filters and per-subject feature extraction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fkt::{DominantDimensions, FktModel, NULL_DIMENSION};
use crate::spectra::NormalizedSpectra;

/// Floor applied before taking the log of a variance.
pub const LOG_VARIANCE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: Vec<String>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: Vec<String>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::dims(format!(
                "{} feature values for a schema of {}",
                values.len(),
                schema.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("feature `{}` is not finite", schema[i])));
        }
        Ok(Self { values, schema })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.schema.iter().position(|s| s == name).map(|i| self.values[i])
    }
}

/// `Z = P · Y`.
pub fn project(spectra: &NormalizedSpectra, model: &FktModel) -> Result<DMatrix<f64>> {
    if spectra.modes() != model.dim() {
        return Err(Error::dims(format!(
            "spectra have {} modes, projection expects {}",
            spectra.modes(),
            model.dim()
        )));
    }
    Ok(&model.projection * spectra.values())
}

/// Population variance (divide by the sample count).
pub fn population_variance<'a>(samples: impl IntoIterator<Item = &'a f64>) -> f64 {
    let samples: Vec<f64> = samples.into_iter().copied().collect();
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

pub fn fkt_feature_names(m_asd: usize, m_nt: usize) -> Vec<String> {
    (1..=m_asd)
        .map(|i| format!("ASD_dom{i}"))
        .chain((1..=m_nt).map(|i| format!("NT_dom{i}")))
        .collect()
}

/// Log-variance over time of each dominant projected row, ASD dimensions
/// first.
pub fn fkt_features(projected: &DMatrix<f64>, dims: &DominantDimensions) -> Result<FeatureVector> {
    if dims.asd.is_empty() || dims.nt.is_empty() {
        return Err(Error::invalid("dominant dimension lists must not be empty"));
    }
    let mut values = Vec::with_capacity(dims.asd.len() + dims.nt.len());
    for &k in dims.asd.iter().chain(&dims.nt) {
        if k == NULL_DIMENSION {
            return Err(Error::invalid("the null dimension carries no class information"));
        }
        if k >= projected.nrows() {
            return Err(Error::dims(format!(
                "dimension {k} out of range for {} projected rows",
                projected.nrows()
            )));
        }
        let var = population_variance(projected.row(k).iter());
        values.push(var.max(LOG_VARIANCE_FLOOR).ln());
    }
    FeatureVector::new(values, fkt_feature_names(dims.asd.len(), dims.nt.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Banding {
    /// One variance per GFT mode.
    PerMode,
    /// Pooled variance over the low, middle and high thirds of the modes.
    ThreeBands,
}

/// Contiguous thirds of `0..r`: `[0, r/3)`, `[r/3, 2r/3)`, `[2r/3, r)`.
pub fn band_ranges(r: usize) -> [std::ops::Range<usize>; 3] {
    [0..r / 3, r / 3..2 * r / 3, 2 * r / 3..r]
}

pub fn gft_baseline_features(spectra: &NormalizedSpectra, banding: Banding) -> Result<FeatureVector> {
    let y = spectra.values();
    match banding {
        Banding::PerMode => {
            let values = y.row_iter().map(|row| population_variance(row.iter())).collect();
            let schema = (1..=y.nrows()).map(|k| format!("GFT_mode_{k}")).collect();
            FeatureVector::new(values, schema)
        }
        Banding::ThreeBands => {
            let values = band_ranges(y.nrows())
                .into_iter()
                .map(|band| population_variance(y.rows_range(band).iter()))
                .collect();
            let schema = ["GFT_band_low", "GFT_band_mid", "GFT_band_high"]
                .map(String::from)
                .to_vec();
            FeatureVector::new(values, schema)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::normalize_columns;

    fn dims(asd: Vec<usize>, nt: Vec<usize>) -> DominantDimensions {
        DominantDimensions { asd, nt }
    }

    #[test]
    fn alternating_row_has_unit_variance() {
        let mut z = DMatrix::zeros(3, 4);
        z.row_mut(1).copy_from_slice(&[1.0, -1.0, 1.0, -1.0]);
        z.row_mut(2).fill(4.0);
        let f = fkt_features(&z, &dims(vec![1], vec![2])).unwrap();
        assert_eq!(f.values[0], 0.0);
        assert_eq!(f.values[1], LOG_VARIANCE_FLOOR.ln());
        assert_eq!(f.schema, vec!["ASD_dom1", "NT_dom1"]);
    }

    #[test]
    fn empty_or_null_dimensions_are_rejected() {
        let z = DMatrix::zeros(3, 4);
        assert!(fkt_features(&z, &dims(vec![], vec![1])).is_err());
        assert!(fkt_features(&z, &dims(vec![0], vec![1])).is_err());
    }

    #[test]
    fn per_mode_and_band_shapes() {
        let x = DMatrix::from_fn(90, 12, |i, j| ((i * 7 + j * 13) % 11) as f64);
        let y = normalize_columns(&x).unwrap();
        assert_eq!(gft_baseline_features(&y, Banding::PerMode).unwrap().len(), 90);
        assert_eq!(gft_baseline_features(&y, Banding::ThreeBands).unwrap().len(), 3);
        assert_eq!(band_ranges(90), [0..30, 30..60, 60..90]);
        assert_eq!(band_ranges(10), [0..3, 3..6, 6..10]);
    }

    #[test]
    fn empty_bands_have_zero_variance() {
        // Only the first two modes vary; columns are (1, -1, 0, ..., 0)-like.
        let mut x = DMatrix::zeros(6, 4);
        for t in 0..4 {
            let s = if t % 2 == 0 { 1.0 } else { -1.0 };
            x[(0, t)] = s;
            x[(1, t)] = -s;
        }
        let y = normalize_columns(&x).unwrap();
        let f = gft_baseline_features(&y, Banding::ThreeBands).unwrap();
        assert!(f.values[0] > 0.0);
        assert_eq!(f.values[1], 0.0);
        assert_eq!(f.values[2], 0.0);
    }
}
