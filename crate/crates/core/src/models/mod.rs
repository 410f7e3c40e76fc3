//! Classifier and Siamese embedding networks.

mod check;
mod checkpoint;
mod embed;
mod spec;
mod train;

pub use check::{gradient_check_suite, GradCheckRecord, CHECK_INPUT};
pub use checkpoint::CHECKPOINT_MAGIC;
pub use embed::embed;
pub(crate) use embed::embed_padded;
pub use spec::{build_default_spec, Architecture, ModelKind, ModelSpec, Tap};
pub use train::{
    train_classifier, train_siamese, train_siamese_on_labels, EpochRecord, TrainConfig,
    TrainHistory, Trained,
};

use crate::net::NetworkParams;

/// A model description with its parameters. Classifiers carry their
/// vocabulary, in class-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: NetworkParams,
    pub vocabulary: Option<Vec<String>>,
}
