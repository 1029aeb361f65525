//! The transparent feature-based baseline parser: a hashed-feature
//! multinomial logistic UPOS tagger, a windowed candidate-head arc scorer,
//! and a DEPREL labeler, plus optional repair of non-tree output.
//!
//! Everything here is pinned for cross-platform reproducibility: FNV-1a
//! feature hashing, fixed template ids, plain SGD with a fixed schedule, no
//! shuffling, and greedy tie-breaking by lowest class index. Two training
//! runs on the same input produce bit-equal weights and model files.

mod features;
mod logistic;
mod model_io;
mod parser;

pub use features::{
    extract_arc_features, extract_tag_features, hash_feature, hash_feature_dim, FeatureVector,
    BOS_MARKER, EOS_MARKER, ROOT_MARKER,
};
pub use logistic::{softmax, LinearModel};
pub use model_io::{load_model, save_model, ModelIoError, MODEL_FORMAT_VERSION};
pub use parser::{arc_probabilities, predict_sentence, repair_tree, train, ParserModel, TrainError};

/// Training hyperparameters and model shape. The defaults are the pinned
/// protocol values; `epochs` is expected from the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Candidate-head window: heads within `window` positions of the
    /// dependent (plus root) are reachable.
    pub window: usize,
    /// Feature space size; indices live in [0, hash_dim).
    pub hash_dim: u32,
    pub epochs: u32,
    pub seed: u64,
    /// Base learning rate of the schedule lr_t = lr0 / (1 + decay·t).
    pub lr0: f64,
    pub decay: f64,
    /// L2 penalty applied to the features active in each update.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: 16,
            hash_dim: 1 << 20,
            epochs: 10,
            seed: 42,
            lr0: 0.1,
            decay: 1e-4,
            l2: 1e-6,
        }
    }
}
