//! Training backward-compatible classifier updates.
//!
//! A retrained model `h2` is *compatible* with the model `h1` users already
//! know when it stays correct wherever `h1` was correct. This crate scores
//! that property, trains `h2` under a loss that penalizes dissonance with
//! `h1`, and sweeps the penalty weight to trace the tradeoff between
//! predictive performance and compatibility.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the common `f64` case.

pub mod curve;
pub mod data;
pub mod dataset;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod model_io;
pub mod scalar;
pub mod stats;
pub mod trainer;

pub use dataset::{Dataset, Example, Standardization};
pub use error::{Error, Result};
pub use losses::{DissonanceKind, LossContext, Reference};
pub use metrics::{auc_from_scores, auc_roc};
pub use model::{
    init_classifier, Classifier, ClassifierKind, LinearClassifier, Model, NetworkClassifier, Prediction,
};
pub use scalar::Scalar;
pub use trainer::{
    compatibility_score, run_update_experiment, sweep_lambda, train, ExperimentSummary, H2Draw, SweepResult,
    TrainConfig, UpdateExperiment, UpdatePair,
};

pub type Dataset64 = Dataset<f64>;
pub type Example64 = Example<f64>;
pub type Classifier64 = Classifier<f64>;
pub type LinearClassifier64 = LinearClassifier<f64>;
pub type NetworkClassifier64 = NetworkClassifier<f64>;

pub type Dataset32 = Dataset<f32>;
pub type Classifier32 = Classifier<f32>;
