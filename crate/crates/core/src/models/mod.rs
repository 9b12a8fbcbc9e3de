//! Classifiers: one-vs-one RBF SVM and a dropout MLP, plus the versioned
//! model file that wraps either.

mod mlp;
mod svm;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataio::Label;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use mlp::{
    mlp_init, mlp_train, mlp_train_observed, softmax, Dense, Gradients, MlpModel, MlpTraining, TrainConfig,
    DEFAULT_DROPOUT, DEFAULT_HIDDEN,
};
pub use svm::{
    kernel_matrix, kkt_violation, rbf, scale_gamma, signs, solve_dual, svm_train, svm_train_observed, BinarySvm,
    DualSolution, SmoStep, SvmModel, SvmParams,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", bound = "T: Real")]
pub enum Classifier<T> {
    Svm { model: SvmModel<T>, params: SvmParams },
    Dnn { model: MlpModel<T>, train: TrainConfig },
}

impl<T: Real> Classifier<T> {
    pub fn predict(&self, x: &Array2<T>) -> Result<Vec<usize>> {
        match self {
            Classifier::Svm { model, .. } => model.predict(x),
            Classifier::Dnn { model, .. } => model.predict(x),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Classifier::Svm { .. } => "svm",
            Classifier::Dnn { .. } => "dnn",
        }
    }
}

/// On-disk classifier with the class list and the hashes of the feature
/// configuration and reducer it was trained behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelFile<T> {
    pub format_version: u32,
    pub classes: Vec<Label>,
    pub feature_config_hash: String,
    pub reducer_hash: Option<String>,
    pub classifier: Classifier<T>,
}

impl<T: Real> ModelFile<T> {
    pub fn new(
        classes: Vec<Label>,
        feature_config_hash: String,
        reducer_hash: Option<String>,
        classifier: Classifier<T>,
    ) -> Self {
        ModelFile { format_version: MODEL_FORMAT_VERSION, classes, feature_config_hash, reducer_hash, classifier }
    }

    pub fn predict_labels(&self, x: &Array2<T>) -> Result<Vec<Label>> {
        Ok(self.classifier.predict(x)?.into_iter().map(|c| self.classes[c]).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Self = serde_json::from_str(&text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        let n = match &file.classifier {
            Classifier::Svm { model, .. } => model.n_classes,
            Classifier::Dnn { model, .. } => {
                model.check()?;
                model.n_classes()
            }
        };
        if n != file.classes.len() {
            return Err(Error::ModelFormat("class list does not match the classifier".into()));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data() -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Array2::from_shape_simple_fn((30, 3), || rng.random_range(-1.0..1.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| {
                if r[0] > 0.3 {
                    2
                } else if r[1] > 0.0 {
                    1
                } else {
                    0
                }
            })
            .collect();
        (x, y)
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let (x, y) = data();
        let classes = vec![Label::Normal, Label::Murmur, Label::Extrasys];
        let svm = svm_train(&x, &y, 3, &SvmParams::default()).unwrap();
        let train = TrainConfig { epochs: 3, ..Default::default() };
        let mlp = mlp_train(mlp_init(3, 3, 1).unwrap(), &x, &y, &train).unwrap().model;
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let probe = Array2::from_shape_simple_fn((100, 3), || rng.random_range(-3.0..3.0));
        for c in [Classifier::Svm { model: svm, params: SvmParams::default() }, Classifier::Dnn { model: mlp, train }] {
            let file = ModelFile::new(classes.clone(), "f".into(), Some("r".into()), c);
            let path = dir.path().join(format!("{}.json", file.classifier.kind()));
            file.save(&path).unwrap();
            let back = ModelFile::<f64>::load(&path).unwrap();
            assert_eq!(back, file);
            assert_eq!(back.predict_labels(&probe).unwrap(), file.predict_labels(&probe).unwrap());
        }
    }

    #[test]
    fn rejects_mismatched_class_list() {
        let (x, y) = data();
        let svm = svm_train(&x, &y, 3, &SvmParams::default()).unwrap();
        let file = ModelFile::new(
            vec![Label::Normal],
            "f".into(),
            None,
            Classifier::Svm { model: svm, params: SvmParams::default() },
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        file.save(&path).unwrap();
        assert!(matches!(ModelFile::<f64>::load(&path), Err(Error::ModelFormat(_))));
    }
}
