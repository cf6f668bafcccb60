//! Building blocks for detecting LLM-rewritten news articles.
//!
//! The crate covers everything that does not need a neural network:
//!
//! * [`corpus`]: JSON-lines ingestion, Turkish-aware cleaning, deduplication
//!   and word-count statistics.
//! * [`synthesis`]: the editorial rewrite prompt, rewrite clients (HTTP and a
//!   deterministic offline mock), and the length / cosine verification gates.
//! * [`dataset`]: labeled examples, the stratified 80/10/10 split, split
//!   manifests and a WordPiece tokenizer with the fixed-length encoding
//!   contract.
//! * [`training`]: hyperparameters, the softmax classification head, the
//!   label-smoothed loss and its gradient, the warmup/decay schedule and the
//!   early-stopping rule.
//! * [`evaluation`]: confusion matrices and accuracy / precision / recall / F1.
//! * [`inference`]: per-article predictions, per-(source, year) prevalence and
//!   report rendering.
//!
//! Numeric routines are generic over [`Scalar`] (or [`num_traits::Float`]
//! where transcendental functions are needed); the aliases below pin the
//! common instantiations.

pub mod corpus;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod fingerprint;
pub mod inference;
pub mod scalar;
pub mod synthesis;
pub mod toy;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use corpus::{Article, OriginLabel};
pub use dataset::{LabeledExample, SplitBundle};
pub use evaluation::ConfusionMatrix;
pub use inference::{Prediction, PrevalenceReport, PrevalenceRow};
pub use synthesis::RewriteResult;
pub use training::TrainConfig;

/// Exact rational used by the metric oracles.
pub type Exact = num_rational::Ratio<i64>;

pub type Metrics64 = evaluation::Metrics<f64>;
pub type Metrics32 = evaluation::Metrics<f32>;
pub type MetricsExact = evaluation::Metrics<Exact>;

pub type ClassifierHead64 = training::ClassifierHead<f64>;
pub type ClassifierHead32 = training::ClassifierHead<f32>;

pub type Schedule64 = training::LinearWarmupSchedule<f64>;
pub type Schedule32 = training::LinearWarmupSchedule<f32>;

pub type CorpusStats64 = corpus::CorpusStats<f64>;
