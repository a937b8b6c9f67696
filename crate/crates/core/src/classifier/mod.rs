//! The image-classification half of the pipeline: dataset ingestion, a
//! small gradient-trained softmax classifier with verifiable training
//! math, a synthetic shape dataset for desk-scale runs, and a line
//! protocol adapter for driving external classifiers.

mod dataset;
mod external;
mod model;

pub use dataset::{gen_synthetic, load_dataset, split, write_dataset, LabeledDataset, SYNTHETIC_CLASSES};
pub use external::ExternalClassifier;
pub use model::{
    accuracy, batch_gradient, mean_loss, predict, preprocess, train, Gradients, SoftmaxModel,
    TrainConfig,
};

use crate::snr::{ImageF, SnrError};
use crate::stable::StableError;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("dataset root {0} has no class subdirectories")]
    NoClasses(String),
    #[error("class \"{0}\" contains no images")]
    EmptyClass(String),
    #[error("class \"{class}\" has {count} items; need at least 2 to split")]
    ClassTooSmall { class: String, count: usize },
    #[error("test fraction must lie in (0, 1), got {0}")]
    BadTestFraction(f64),
    #[error("dataset item {item} has class index {index}, but there are {classes} classes")]
    ClassIndexOutOfRange { item: usize, index: usize, classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("synthetic dataset needs per_class >= 1 and side >= 16, got {per_class}/{side}")]
    BadSyntheticSpec { per_class: usize, side: usize },
    #[error("feature side must be >= 1")]
    ZeroFeatureSide,
    #[error("learning rate must be > 0 and l2 must be >= 0")]
    BadTrainConfig,
    #[error("training diverged (non-finite loss) at epoch {0}")]
    Diverged(usize),
    #[error("model file {path}: {detail}")]
    ModelFormat { path: String, detail: String },
    #[error("model dimensions inconsistent: K={classes}, D={features}, d={feature_side}")]
    ModelShape { classes: usize, features: usize, feature_side: usize },
    #[error("external classifier: {0}")]
    Adapter(String),
    #[error("external classifier response malformed: {0}")]
    Protocol(String),
    #[error("external classifier timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("external classifier exited with {0}")]
    ChildFailed(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pnm(#[from] crate::pnm::PnmError),
    #[error(transparent)]
    Shape(#[from] SnrError),
    #[error(transparent)]
    Stable(#[from] StableError),
}

/// Anything that can assign class indices to a batch of images: the
/// built-in softmax model or an external process behind the adapter.
pub trait Predictor {
    fn predict_batch(&self, images: &[ImageF]) -> Result<Vec<usize>, ClassifierError>;

    fn class_count(&self) -> usize;
}
