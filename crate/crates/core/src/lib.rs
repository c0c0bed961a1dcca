//! CVE-trained text classification and social-media stream monitoring for
//! IoT vulnerability intelligence.
//!
//! The pipeline: ingest NVD CVE feeds and label records by the hardware-CPE
//! rule ([`corpus`]), normalize text ([`text`]), vectorize with TF-IDF
//! ([`features`]), train one of six classifiers ([`model`]), tune with
//! 10-fold cross-validation and grid search ([`tuning`]), score with
//! macro-averaged metrics ([`metrics`]) and run a keyword-filtered stream
//! monitor ([`monitor`]).
//!
//! Data-parallel inner loops (forest trees, CV folds, grid cells, batch
//! transforms and stream classification) fan out over rayon with the default
//! `parallel` feature; built without it, everything runs sequentially with
//! identical results.

pub mod corpus;
pub mod error;
mod exec;
pub mod features;
pub mod metrics;
pub mod model;
pub mod monitor;
pub mod pipeline;
pub mod seed;
pub mod text;
pub mod tuning;

pub use corpus::{Label, LabeledDoc};
pub use error::{Error, Result};
pub use pipeline::Pipeline;
