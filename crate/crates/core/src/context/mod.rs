//! Structure-based supplements to the triplet models: relation-inverse
//! post-smoothing of trained embeddings and DeepWalk node embeddings over
//! the relation-stripped graph.

pub mod skipgram;
pub mod smooth;
pub mod walks;

pub use skipgram::{deepwalk_score, deepwalk_score_rows, skipgram_train};
pub use smooth::{post_smooth, SmoothConfig};
pub use walks::{generate_walks, load_walks, save_walks, WalkConfig};
