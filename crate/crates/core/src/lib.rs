//! Knowledge-graph link prediction at desk scale.
//!
//! The crate covers the full candidate-ranking pipeline:
//!
//! * [`data`] — integer-encoded triples, candidate queries, text loaders;
//! * [`models`] — TransE, RotatE, QuatE, and NOTE score functions, including
//!   differentiable Gram-Schmidt orthogonalization;
//! * [`trainer`] — self-adversarial negative-sampling SGD, finite-difference
//!   gradient checks, and embedding persistence;
//! * [`context`] — relation-inverse post-smoothing and DeepWalk node
//!   embeddings over the relation-stripped graph;
//! * [`features`] — six-direction frequency indices and the path-probability
//!   features over them;
//! * [`ensemble`] — score normalization, weighted combination, greedy
//!   grid-search weight selection, and low-frequency candidate filtering;
//! * [`metrics`] — candidate ranks and mean reciprocal rank;
//! * [`synthetic`] — a deterministic clustered benchmark corpus.
//!
//! Everything is deterministic under a fixed seed and single-threaded
//! execution; read-only stages (scoring, feature evaluation, walk
//! generation) parallelize without affecting results.

pub mod context;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod metrics;
pub mod models;
pub mod score;
pub mod synthetic;
pub mod trainer;

pub use data::{
    load_queries, load_triplets, save_queries, save_triplets, CandidateQuery, CandidateQuerySet,
    LoadOptions, Triple, TripletStore, Vocab,
};
pub use error::{KgError, Result};
pub use metrics::{mrr, mrr_rows, rank_of_true};
pub use models::{EmbeddingTable, GeometryConfig, ModelKind, PNorm, ScoreDirection};
pub use score::ScoreMatrix;
