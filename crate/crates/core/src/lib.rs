//! Human-vs-LLM text detection toolkit.
//!
//! The pipeline runs corpus cleaning, a capped bag-of-words tokenizer,
//! smoothed TF-IDF, and one of five interchangeable classifiers selected
//! by name from [`classifiers::Registry`]. Trained detectors can be
//! evaluated with [`metrics`] and explained word by word with [`explain`].

// Validations write `!(x > 0.0)` on purpose so NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod classifiers;
pub mod corpus;
pub mod datagen;
pub mod explain;
pub mod metrics;
pub mod pipeline;
pub mod text;
