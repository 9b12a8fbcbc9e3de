//! Segmentation-free heart-sound classification: WAV and manifest I/O,
//! denoising, envelope-peak and acoustic features, PCA, SVM and MLP
//! classifiers, and the evaluation protocols that tie them together.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below name the common instantiations.

pub mod config;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod features;
mod matrix_serde;
pub mod models;
pub mod preprocess;
pub mod reduce;
pub mod scalar;

pub use config::{load_config, RunConfig};
pub use error::{Error, Result};
pub use scalar::Real;

pub type Sample = dataio::AudioSample<f64>;
pub type SampleF32 = dataio::AudioSample<f32>;
pub type Pca = reduce::PcaModel<f64>;
pub type PcaF32 = reduce::PcaModel<f32>;
pub type Svm = models::SvmModel<f64>;
pub type SvmF32 = models::SvmModel<f32>;
pub type Mlp = models::MlpModel<f64>;
pub type MlpF32 = models::MlpModel<f32>;
pub type Features = features::FeatureTable<f64>;
