//! Graph Fourier spectra of ROI time-series, Fukunaga-Koontz feature
//! extraction and a gain-ratio decision tree for two-class (ASD / NT)
//! resting-state fMRI classification.

pub mod atlas;
pub mod error;
pub mod eval;
pub mod features;
pub mod fkt;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod spectra;
pub mod tree;

pub use atlas::{Roi, RoiAtlas};
pub use error::{Error, Result};
pub use eval::{DimensionCount, EvalReport, ExperimentConfig, Method, Protocol};
pub use features::{Banding, FeatureVector};
pub use fkt::{dominant_dimensions, fit_fkt, DominantDimensions, FktModel};
pub use graph::{build_graph, gft_basis, BasisSource, BrainGraph, GftBasis, GraphKind};
pub use spectra::{Label, SubjectRecord};
pub use tree::DecisionTree;
