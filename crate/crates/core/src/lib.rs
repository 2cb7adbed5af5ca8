//! Pool-based unsupervised active learning for regression.
//!
//! The crate selects which samples of an unlabeled pool should be sent to an
//! annotator. The central selector is iterative representativeness-diversity
//! maximization ([`selectors::select_irdm`]): it starts from one
//! centroid-nearest sample per k-means cluster and then repeatedly swaps each
//! candidate for the member of its cluster that best trades off closeness to
//! its cluster mates against distance to the other candidates.
//!
//! Around it sit the comparison selectors (random, greedy input-space
//! sampling, RD, QBC, EMCM, RD-EMCM, iGS, RSAL), the two evaluation models
//! (ridge regression and RBF support vector regression) and a benchmark
//! harness that sweeps the number of labeled samples, summarizes learning
//! curves by their area, and runs Dunn's multiple-comparison test.
//!
//! Pool indices are 0-based everywhere in this crate. The command-line front
//! end converts to 1-based indices at its boundary.

pub mod benchmark;
pub mod clustering;
pub mod dataset;
mod geometry;
pub mod models;
pub mod selectors;

pub use clustering::{kmeans, ClusterModel, KMeansParams};
pub use dataset::{Dataset, SplitSpec, StandardizationParams};
pub use models::{Metrics, ModelSpec, RidgeModel, SvrModel, TrainedModel};
pub use selectors::{CandidateSet, LabelOracle, SelectorKind, SelectorSpec};
