//! Feature standardization and principal component analysis.

mod pca;
mod standardize;
mod svd;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use pca::{fit_pca, PcaModel, PcaPolicy, DEFAULT_COMPONENT_COUNT};
pub use standardize::{fit_standardizer, Standardizer};

pub const REDUCER_FORMAT_VERSION: u32 = 1;

/// Standardizer and PCA fitted together, as written by `reduce --fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Reducer<T> {
    pub format_version: u32,
    pub feature_config_hash: String,
    pub standardizer: Standardizer<T>,
    pub pca: PcaModel<T>,
}

impl<T: Real> Reducer<T> {
    pub fn fit(x: &ndarray::Array2<T>, policy: PcaPolicy, feature_config_hash: impl Into<String>) -> Result<Self> {
        let standardizer = fit_standardizer(x)?;
        let z = standardizer.apply_matrix(x)?;
        let pca = fit_pca(&z, policy)?;
        Ok(Reducer {
            format_version: REDUCER_FORMAT_VERSION,
            feature_config_hash: feature_config_hash.into(),
            standardizer,
            pca,
        })
    }

    pub fn transform(&self, x: &ndarray::Array2<T>) -> Result<ndarray::Array2<T>> {
        self.pca.project_matrix(&self.standardizer.apply_matrix(x)?)
    }

    /// SHA-256 over the serialized model; embedded in downstream models.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("reducer serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        if model.format_version != REDUCER_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "reducer format version {} (expected {REDUCER_FORMAT_VERSION})",
                model.format_version
            )));
        }
        model.pca.check()?;
        if model.standardizer.means.len() != model.pca.mean.len() {
            return Err(Error::ModelFormat("standardizer and PCA dimensions differ".into()));
        }
        Ok(model)
    }
}
