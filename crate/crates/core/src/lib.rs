//! Complete-action priors for skeleton action sequences.
//!
//! The crate learns two kinds of priors from a corpus of motion sequences:
//! representative boundary (rest) poses and a bank of one-hot temporal
//! transforms. It then applies a recover-and-resample augmentation: each
//! sample is first extended back to a boundary pose and re-timed by a learned
//! transform, then a random segment of the recovered action is cropped and
//! resized to the canonical length.
//!
//! Module map:
//!
//! - [`skeleton`]: sequence types, temporal resizing, preprocessing.
//! - [`ingest`]: NTU `.skeleton` parsing, corpus files, synthetic motions.
//! - [`kmeans`]: seeded k-means used by both prior learners.
//! - [`boundary`]: boundary pose learning and boundary-conditioned extrapolation.
//! - [`transforms`]: similarity matrices and learned linear transforms.
//! - [`pipeline`]: prior sets, resampling and batch augmentation.
//! - [`autoencoder`] and [`diversity`]: the per-frame diversity statistic.

pub mod autoencoder;
pub mod boundary;
pub mod diversity;
mod error;
pub mod ingest;
pub mod kmeans;
pub mod pipeline;
pub mod rng;
pub mod skeleton;
pub mod transforms;
pub use autoencoder::{AutoEncoder, TrainConfig};

pub use boundary::{BoundaryPoseSet, ExtrapolationParams};
pub use diversity::{DiversityCurve, FeatureSpace};
pub use error::{Error, Result};
pub use ingest::{Corpus, CorpusFormat, SyntheticSpec};
pub use kmeans::{KMeansConfig, KMeansResult};
pub use pipeline::{AugmentConfig, PriorSet};
pub use skeleton::{MotionSequence, PreprocessSpec, ResizeMode, SequenceMeta, Skeleton};
pub use transforms::{LinearTransform, PairSpec, SimilarityMatrix};
