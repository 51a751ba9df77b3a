//! Multi-stage reject classifiers.
//!
//! A test example is routed through an ordered sequence of sensing stages.
//! Each non-terminal stage either classifies the example using the features
//! acquired so far or rejects it onward, paying the next stage's acquisition
//! cost. Stage decisions are pairs of boosted stump ensembles whose sign
//! disagreement defines the reject region; they are trained jointly by cyclic
//! coordinate descent on a smooth sigmoid surrogate of the system risk.
//!
//! Module map:
//!
//! - [`model`]: staged data, stumps, additive scorers, and the cascade predictor.
//! - [`surrogate`]: sigmoid loss, soft state and cost-to-go, the global surrogate risk.
//! - [`boosting`]: weighted sigmoid-loss boosting over stumps.
//! - [`trainer`]: the stage-wise coordinate descent trainer.
//! - [`oracle`]: Bayes-optimal references (Chow rule, exact DP, Gaussian mixtures).
//! - [`baselines`]: margin-threshold and expected-utility acquisition policies.
//! - [`evaluation`]: sweeps, Monte-Carlo averaging, ROC families, three-stage maps.
//! - [`data`]: dataset generation, CSV ingestion, manifests, splits, fetchers.

pub mod baselines;
pub mod boosting;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod oracle;
pub mod seed;
pub mod surrogate;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{
    AdditiveScorer, MultiStageModel, Prediction, RejectPair, Stage, StageLayout, StagedDataset,
    Stump,
};
