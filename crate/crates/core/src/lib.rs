//! Fused word embeddings for bridging and a deterministic bridging anaphora
//! resolver built on them.
//!
//! - [`embedding_store`]: text-format embedding tables, cosine, neighbors
//! - [`fusion`]: concatenating a general table with a PP-context table
//! - [`np_semantics`]: content words, `_PP` suffixing, NP mean vectors
//! - [`resolver`]: candidate windows, entity expansion, antecedent selection
//! - [`relsim`]: relational similarity of word pairs and Spearman's ρ
//! - [`corpus_eval`]: corpus format, accuracy, presets and ablations

pub mod corpus_eval;
pub mod embedding_store;
pub mod fusion;
pub mod np_semantics;
pub mod relsim;
pub mod resolver;

pub use corpus_eval::{Document, ExperimentReport, GoldLink, Preset};
pub use embedding_store::{EmbeddingTable, WordVector};
pub use np_semantics::{ModifierKind, ModifierKinds, NounPhrase, SuffixPolicy};
pub use resolver::{Prediction, RepresentationMode, ResolutionConfig};
