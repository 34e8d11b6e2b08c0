//! Linear geographic probes over language-model representations, and the
//! statistics used to measure how unevenly they recover places around the
//! world.
//!
//! The pipeline: [`geodata`] loads locations and embeddings and fixes the
//! split, [`probe`] fits ridge probes, [`metrics`] scores them and computes
//! grouped errors, Gini coefficients, correlations and error grids, and
//! [`corpuscount`] counts country names in a pretraining corpus.

pub mod corpuscount;
pub mod error;
pub mod geodata;
pub mod metrics;
pub mod probe;
pub mod rng;

pub use error::{Error, Result};
