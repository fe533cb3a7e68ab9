//! Cross-lingual sentiment classification under word-order transformations.
//!
//! The crate maps target-language embeddings into a source embedding space
//! with an orthogonal map, trains source-language classifiers (a
//! bag-of-embeddings SVM, a CNN and a BiLSTM), and measures how test-time
//! reordering and lexicon filtering of target sentences change macro-F1.

pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evalharness;
pub mod models;
pub mod nnkernel;
pub mod projection;
pub mod rng;
pub mod transform;

pub use error::{Error, Result};
