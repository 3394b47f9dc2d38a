//! End-to-end experiments: split, fit on the training part only, score the
//! held-out part, repeat.

pub mod split;
pub mod stats;
pub mod synth;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::RoiAtlas;
use crate::error::{Error, Result};
use crate::features::{fkt_features, gft_baseline_features, project, Banding, FeatureVector};
use crate::fkt::{dominant_dimensions, fit_fkt, DominantDimensions, FktModel, FktModelDoc, Provenance};
use crate::graph::{build_graph, gft_basis, BasisSource, GftBasis, GraphKind};
use crate::spectra::{
    class_means, gft_coefficients, joint_expectancy, normalize_columns, JointExpectancy, Label, NormalizedSpectra,
    SubjectRecord,
};
use crate::tree::{fit_tree, tune_min_leaf, DecisionTree};

use split::{derive_seed, leave_one_out, split_trials, Split};
use stats::{mean, sample_std, t_test};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// FKT on graph Fourier spectra.
    Ours { graph: GraphKind },
    /// Variances of the normalized GFT coefficients, no FKT.
    Gft { graph: GraphKind, banding: Banding },
    /// FKT on the column-normalized raw time-series.
    Sfm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ours { graph } => write!(f, "ours[{graph}]"),
            Method::Gft {
                graph,
                banding: Banding::PerMode,
            } => write!(f, "gft-modes[{graph}]"),
            Method::Gft {
                graph,
                banding: Banding::ThreeBands,
            } => write!(f, "gft-bands[{graph}]"),
            Method::Sfm => f.write_str("sfm"),
        }
    }
}

impl Method {
    pub fn uses_fkt(&self) -> bool {
        !matches!(self, Method::Gft { .. })
    }

    pub fn graph(&self) -> Option<GraphKind> {
        match self {
            Method::Ours { graph } | Method::Gft { graph, .. } => Some(*graph),
            Method::Sfm => None,
        }
    }
}

/// How many dominant dimensions per class feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionCount {
    Count(usize),
    /// `⌈(r − 1) / 2⌉` per class, so that together the two lists cover
    /// every non-null dimension.
    All,
}

impl DimensionCount {
    pub fn resolve(self, r: usize) -> usize {
        match self {
            DimensionCount::Count(m) => m,
            DimensionCount::All => r / 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum Protocol {
    Split { test_fraction: f64, trials: usize },
    Loocv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub method: Method,
    pub m: DimensionCount,
    pub protocol: Protocol,
    pub seed: u64,
    pub tuning_grid: Vec<usize>,
    pub inner_folds: usize,
    pub stratify: bool,
}

impl ExperimentConfig {
    pub const DEFAULT_GRID: [usize; 5] = [2, 5, 10, 15, 20];

    pub fn new(method: Method) -> Self {
        Self {
            method,
            m: DimensionCount::Count(3),
            protocol: Protocol::Split {
                test_fraction: 0.05,
                trials: 10,
            },
            seed: 0,
            tuning_grid: Self::DEFAULT_GRID.to_vec(),
            inner_folds: 5,
            stratify: false,
        }
    }

    /// Same settings with another method, so both consume identical splits.
    pub fn with_method(&self, method: Method) -> Self {
        Self { method, ..self.clone() }
    }
}

/// Per-subject inputs shared by every trial. Each entry depends on that
/// subject alone.
pub struct PreparedCohort {
    method: Method,
    labels: Vec<Label>,
    spectra: Vec<NormalizedSpectra>,
    expectancies: Vec<JointExpectancy>,
    provenance: Provenance,
}

impl PreparedCohort {
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn spectra(&self, i: usize) -> &NormalizedSpectra {
        &self.spectra[i]
    }
}

/// Normalized spectra (and joint expectancies for FKT methods) per subject.
///
/// `basis` is required for graph methods and ignored by SFM.
pub fn prepare(method: Method, dataset: &[SubjectRecord], basis: Option<&GftBasis>) -> Result<PreparedCohort> {
    if dataset.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let r = dataset[0].roi_count();
    let basis = match method {
        Method::Sfm => None,
        _ => Some(basis.ok_or_else(|| Error::invalid(format!("{method} needs a GFT basis")))?),
    };
    if let Some(b) = basis {
        if b.dim() != r {
            return Err(Error::dims(format!(
                "basis has {} modes but subjects have {r} ROIs",
                b.dim()
            )));
        }
    }
    let spectra: Vec<NormalizedSpectra> = dataset
        .par_iter()
        .map(|s| {
            if s.roi_count() != r {
                return Err(Error::Subject {
                    subject: s.id.clone(),
                    message: format!("{} ROIs, expected {r}", s.roi_count()),
                });
            }
            let coeffs = match basis {
                Some(b) => gft_coefficients(s.signals(), b)?,
                None => s.signals().clone(),
            };
            normalize_columns(&coeffs).map_err(|e| Error::subject(&s.id, e))
        })
        .collect::<Result<_>>()?;
    let expectancies = if method.uses_fkt() {
        spectra.par_iter().map(joint_expectancy).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(PreparedCohort {
        method,
        labels: dataset.iter().map(|s| s.label).collect(),
        spectra,
        expectancies,
        provenance: Provenance {
            atlas_checksum: None,
            basis: Some(basis.map_or(BasisSource::Identity, GftBasis::source)),
        },
    })
}

/// Everything fitted on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fkt: Option<FktModelDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<DominantDimensions>,
    pub tree: DecisionTree,
}

impl FittedPipeline {
    pub fn fkt_model(&self) -> Result<Option<FktModel>> {
        self.fkt.clone().map(FktModel::try_from).transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct FeatureMap {
    fkt: Option<(FktModel, DominantDimensions)>,
    banding: Option<Banding>,
}

impl FeatureMap {
    fn features(&self, spectra: &NormalizedSpectra) -> Result<FeatureVector> {
        match (&self.fkt, self.banding) {
            (Some((model, dims)), _) => fkt_features(&project(spectra, model)?, dims),
            (None, Some(banding)) => gft_baseline_features(spectra, banding),
            (None, None) => unreachable!(),
        }
    }
}

/// Fits the whole pipeline on `train`; the returned map extracts features
/// for any subject.
fn fit_on(
    cohort: &PreparedCohort,
    train: &[usize],
    config: &ExperimentConfig,
    tuning_seed: u64,
) -> Result<(FittedPipeline, FeatureMap)> {
    let r = cohort.spectra[0].modes();
    let map = match config.method {
        Method::Gft { banding, .. } => FeatureMap {
            fkt: None,
            banding: Some(banding),
        },
        _ => {
            let means = class_means(train.iter().map(|&i| (&cohort.expectancies[i], cohort.labels[i])))?;
            let model = fit_fkt(&means)?.with_provenance(cohort.provenance.clone());
            let m = config.m.resolve(r);
            let dims = dominant_dimensions(&model, m)?;
            FeatureMap {
                fkt: Some((model, dims)),
                banding: None,
            }
        }
    };
    let train_x: Vec<FeatureVector> = train
        .iter()
        .map(|&i| map.features(&cohort.spectra[i]))
        .collect::<Result<_>>()?;
    let train_y: Vec<Label> = train.iter().map(|&i| cohort.labels[i]).collect();
    let min_leaf = tune_min_leaf(&train_x, &train_y, &config.tuning_grid, config.inner_folds, tuning_seed)?;
    let tree = fit_tree(&train_x, &train_y, min_leaf)?;
    let fitted = FittedPipeline {
        method: config.method,
        fkt: map.fkt.as_ref().map(|(m, _)| FktModelDoc::from(m)),
        dims: map.fkt.as_ref().map(|(_, d)| d.clone()),
        tree,
    };
    Ok((fitted, map))
}

/// Fits the pipeline on every subject of the cohort.
pub fn fit_pipeline(cohort: &PreparedCohort, config: &ExperimentConfig) -> Result<FittedPipeline> {
    let all: Vec<usize> = (0..cohort.len()).collect();
    Ok(fit_on(cohort, &all, config, derive_seed(config.seed, u64::MAX, 1))?.0)
}

/// Applies a fitted pipeline to one subject's prepared spectra.
pub fn predict(fitted: &FittedPipeline, spectra: &NormalizedSpectra) -> Result<Label> {
    let features = match (&fitted.fkt, &fitted.dims, fitted.method) {
        (Some(doc), Some(dims), _) => fkt_features(&project(spectra, &FktModel::try_from(doc.clone())?)?, dims)?,
        (None, _, Method::Gft { banding, .. }) => gft_baseline_features(spectra, banding)?,
        _ => return Err(Error::invalid("fitted pipeline is missing its projection")),
    };
    fitted.tree.predict(&features)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub split: Split,
    pub fitted: FittedPipeline,
    pub predictions: Vec<Label>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub other: String,
    pub other_mean: f64,
    pub t: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub protocol: Protocol,
    pub seed: u64,
    pub per_trial_accuracy: Vec<f64>,
    pub per_trial_min_leaf: Vec<usize>,
    pub mean: f64,
    /// Sample standard deviation across trials.
    pub std: f64,
    #[serde(default)]
    pub comparisons: Vec<PairedComparison>,
}

impl EvalReport {
    /// Adds a Student's t-test of this report's trial accuracies against
    /// another's.
    pub fn compare_with(&mut self, other: &EvalReport) -> Result<()> {
        let t = t_test(&self.per_trial_accuracy, &other.per_trial_accuracy)?;
        self.comparisons.push(PairedComparison {
            other: other.method.clone(),
            other_mean: other.mean,
            t: t.t,
            p_value: t.p_value,
        });
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn splits_for(config: &ExperimentConfig, labels: &[Label]) -> Result<Vec<Split>> {
    match config.protocol {
        Protocol::Split { test_fraction, trials } => {
            split_trials(labels, test_fraction, trials, config.seed, config.stratify)
        }
        Protocol::Loocv => leave_one_out(labels),
    }
}

/// Runs every trial (in parallel) and returns per-trial details in trial
/// order.
pub fn run_trials(config: &ExperimentConfig, cohort: &PreparedCohort) -> Result<Vec<TrialOutcome>> {
    if cohort.method != config.method {
        return Err(Error::invalid(format!(
            "cohort prepared for {} but config asks for {}",
            cohort.method, config.method
        )));
    }
    let r = cohort.spectra[0].modes();
    if config.method.uses_fkt() {
        let m = config.m.resolve(r);
        if m == 0 || m > r - 1 {
            return Err(Error::invalid(format!("m = {m} out of range 1..={}", r - 1)));
        }
    }
    let splits = splits_for(config, &cohort.labels)?;
    splits
        .into_par_iter()
        .enumerate()
        .map(|(trial, split)| {
            let (fitted, map) = fit_on(cohort, &split.train, config, derive_seed(config.seed, trial as u64, 1))?;
            let predictions: Vec<Label> = split
                .test
                .iter()
                .map(|&i| fitted.tree.predict(&map.features(&cohort.spectra[i])?))
                .collect::<Result<_>>()?;
            let hits = split
                .test
                .iter()
                .zip(&predictions)
                .filter(|(&i, &p)| cohort.labels[i] == p)
                .count();
            Ok(TrialOutcome {
                accuracy: hits as f64 / split.test.len() as f64,
                split,
                fitted,
                predictions,
            })
        })
        .collect()
}

pub fn summarize(config: &ExperimentConfig, r: usize, trials: &[TrialOutcome]) -> EvalReport {
    let acc: Vec<f64> = trials.iter().map(|t| t.accuracy).collect();
    EvalReport {
        method: config.method.to_string(),
        m: config.method.uses_fkt().then(|| config.m.resolve(r)),
        protocol: config.protocol,
        seed: config.seed,
        per_trial_min_leaf: trials.iter().map(|t| t.fitted.tree.min_leaf).collect(),
        mean: mean(&acc),
        std: sample_std(&acc),
        per_trial_accuracy: acc,
        comparisons: Vec::new(),
    }
}

/// Graph basis for a method, built from the atlas.
pub fn basis_for(method: Method, atlas: &RoiAtlas) -> Result<Option<GftBasis>> {
    method
        .graph()
        .map(|kind| gft_basis(&build_graph(atlas, kind)?))
        .transpose()
}

fn prepare_with_atlas(method: Method, dataset: &[SubjectRecord], atlas: &RoiAtlas) -> Result<PreparedCohort> {
    if let Some(s) = dataset.iter().find(|s| s.roi_count() != atlas.len()) {
        return Err(Error::Subject {
            subject: s.id.clone(),
            message: format!("{} ROIs but the atlas has {}", s.roi_count(), atlas.len()),
        });
    }
    let basis = basis_for(method, atlas)?;
    let mut cohort = prepare(method, dataset, basis.as_ref())?;
    cohort.provenance.atlas_checksum = Some(atlas.checksum());
    Ok(cohort)
}

/// Runs an experiment with the method's graph built from `atlas`.
pub fn run_experiment(config: &ExperimentConfig, dataset: &[SubjectRecord], atlas: &RoiAtlas) -> Result<EvalReport> {
    let cohort = prepare_with_atlas(config.method, dataset, atlas)?;
    let trials = run_trials(config, &cohort)?;
    Ok(summarize(config, atlas.len(), &trials))
}

/// Fits the pipeline on the whole dataset with the method's graph built
/// from `atlas`.
pub fn fit_experiment(
    config: &ExperimentConfig,
    dataset: &[SubjectRecord],
    atlas: &RoiAtlas,
) -> Result<FittedPipeline> {
    fit_pipeline(&prepare_with_atlas(config.method, dataset, atlas)?, config)
}

/// Same as [`run_experiment`] with a caller-supplied basis (ignored by SFM).
pub fn run_experiment_with_basis(
    config: &ExperimentConfig,
    dataset: &[SubjectRecord],
    basis: Option<&GftBasis>,
) -> Result<EvalReport> {
    let cohort = prepare(config.method, dataset, basis)?;
    let trials = run_trials(config, &cohort)?;
    Ok(summarize(config, dataset[0].roi_count(), &trials))
}

/// Leave-one-out evaluation.
pub fn loocv(config: &ExperimentConfig, dataset: &[SubjectRecord], atlas: &RoiAtlas) -> Result<EvalReport> {
    let config = ExperimentConfig {
        protocol: Protocol::Loocv,
        ..config.clone()
    };
    run_experiment(&config, dataset, atlas)
}
