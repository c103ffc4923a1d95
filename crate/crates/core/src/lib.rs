//! Character archetype detection and diachronic analysis.
//!
//! The crate works on per-character attribute bags produced by an upstream
//! coreference pipeline (agent verbs, patient verbs, modifiers and
//! possessive-governed nouns) together with optional dense embeddings, and
//! provides:
//!
//! - [`model`] and [`io`]: the corpus data model, the line-delimited
//!   characters file, the labels override CSV and the `CEMB` embeddings format.
//! - [`featurize`]: most-frequent-word bag-of-words vectors and mean-pooled
//!   embedding vectors.
//! - [`linear`]: logistic regression and linear SVM trained from scratch.
//! - [`eval`]: stratified k-fold and leave-one-group-out protocols, the
//!   balanced-accuracy metric suite and prediction error over time.
//! - [`distinct`]: Dirichlet-smoothed log-odds z-scores for attribute
//!   distinctiveness between two groups of characters.
//! - [`diachronic`]: prominence filtering, archetype ratio and centrality
//!   series, quadratic trend fitting.
//! - [`cluster`]: PCA projection, k-means++ clustering and per-cluster
//!   distinctive vocabulary.
//!
//! Data-parallel loops (folds, restarts, per-character featurization) run on
//! rayon when the default `parallel` feature is enabled and sequentially
//! otherwise. Results never depend on scheduling.

pub mod cluster;
pub mod diachronic;
pub mod distinct;
pub mod error;
pub mod eval;
pub mod featurize;
pub mod io;
pub mod linear;
pub mod model;
pub mod par;
pub mod synth;

pub use error::{Error, Result};
pub use model::{AttributeBag, Category, CharacterRecord, Dataset, EmbeddingMatrix, Label};
