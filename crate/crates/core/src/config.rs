//! Run configuration: every tunable with its default, loadable from
//! `section.key=value` lines.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::models::{SvmParams, TrainConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
use crate::preprocess::PreprocessConfig;
use crate::reduce::{PcaPolicy, DEFAULT_COMPONENT_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaPolicyKind {
    Count,
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSettings {
    pub policy: PcaPolicyKind,
    pub components: usize,
    pub variance_target: f64,
}

impl Default for PcaSettings {
    fn default() -> Self {
        PcaSettings { policy: PcaPolicyKind::Count, components: DEFAULT_COMPONENT_COUNT, variance_target: 0.9999 }
    }
}

impl PcaSettings {
    pub fn policy(&self) -> PcaPolicy {
        match self.policy {
            PcaPolicyKind::Count => PcaPolicy::ComponentCount(self.components),
            PcaPolicyKind::Variance => PcaPolicy::VarianceTarget(self.variance_target),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSettings {
    pub hidden: Vec<usize>,
    pub dropout: Vec<f64>,
    /// Epochs for experiments 1, 2 and 3.
    pub epochs: [usize; 3],
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for MlpSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        MlpSettings {
            hidden: DEFAULT_HIDDEN.to_vec(),
            dropout: DEFAULT_DROPOUT.to_vec(),
            epochs: [500, 50, 100],
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
        }
    }
}

impl MlpSettings {
    /// Training settings for experiment `1..=3`.
    pub fn train_config(&self, experiment: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs[experiment - 1],
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            seed,
            dropout: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub folds: usize,
    pub jobs: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { seed: 0, folds: 5, jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub pca: PcaSettings,
    pub svm: SvmParams,
    pub mlp: MlpSettings,
    pub run: RunSettings,
}

/// Every accepted key, in documentation order.
pub const CONFIG_KEYS: [&str; 32] = [
    "filter.cutoff_hz",
    "filter.order",
    "dwt.wavelet",
    "dwt.levels",
    "dwt.selection",
    "dwt.threshold",
    "dwt.noise",
    "envelope.window",
    "peak.height",
    "peak.distance",
    "acoustic.frame_s",
    "acoustic.hop_s",
    "acoustic.n_mfcc",
    "acoustic.n_mels",
    "acoustic.rolloff",
    "pca.policy",
    "pca.components",
    "pca.variance_target",
    "svm.c",
    "svm.gamma",
    "svm.tol",
    "svm.max_iter",
    "mlp.hidden",
    "mlp.dropout",
    "mlp.epochs_exp1",
    "mlp.epochs_exp2",
    "mlp.epochs_exp3",
    "mlp.batch_size",
    "mlp.learning_rate",
    "mlp.adam",
    "run.seed",
    "run.folds",
];

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<V: FromStr>(key: &str, value: &str) -> Result<Vec<V>> {
    value.split(',').map(|v| parse(key, v)).collect()
}

impl RunConfig {
    /// Applies one `key=value` setting without validating the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let d = &mut self.preprocess.denoise;
        match key.trim() {
            "filter.cutoff_hz" => self.preprocess.cutoff_hz = parse(key, v)?,
            "filter.order" => self.preprocess.fir_order = parse(key, v)?,
            "dwt.wavelet" => d.wavelet = v.parse()?,
            "dwt.levels" => d.levels = parse(key, v)?,
            "dwt.selection" => d.selection = v.parse()?,
            "dwt.threshold" => d.thresholding = v.parse()?,
            "dwt.noise" => d.noise_estimate = v.parse()?,
            "envelope.window" => self.features.envelope_window = parse(key, v)?,
            "peak.height" => self.features.peaks.min_height = parse(key, v)?,
            "peak.distance" => self.features.peaks.min_distance = parse(key, v)?,
            "acoustic.frame_s" => self.features.acoustic.frame_s = parse(key, v)?,
            "acoustic.hop_s" => self.features.acoustic.hop_s = parse(key, v)?,
            "acoustic.n_mfcc" => self.features.acoustic.n_mfcc = parse(key, v)?,
            "acoustic.n_mels" => self.features.acoustic.n_mels = parse(key, v)?,
            "acoustic.rolloff" => self.features.acoustic.rolloff = parse(key, v)?,
            "pca.policy" => {
                self.pca.policy = match v {
                    "count" => PcaPolicyKind::Count,
                    "variance" => PcaPolicyKind::Variance,
                    _ => return Err(Error::Config(format!("{key}: expected count or variance, got {v:?}"))),
                }
            }
            "pca.components" => self.pca.components = parse(key, v)?,
            "pca.variance_target" => self.pca.variance_target = parse(key, v)?,
            "svm.c" => self.svm.c = parse(key, v)?,
            "svm.gamma" => self.svm.gamma = if v == "auto" { None } else { Some(parse(key, v)?) },
            "svm.tol" => self.svm.tol = parse(key, v)?,
            "svm.max_iter" => self.svm.max_iter = if v == "auto" { None } else { Some(parse(key, v)?) },
            "mlp.hidden" => self.mlp.hidden = parse_list(key, v)?,
            "mlp.dropout" => self.mlp.dropout = parse_list(key, v)?,
            "mlp.epochs_exp1" => self.mlp.epochs[0] = parse(key, v)?,
            "mlp.epochs_exp2" => self.mlp.epochs[1] = parse(key, v)?,
            "mlp.epochs_exp3" => self.mlp.epochs[2] = parse(key, v)?,
            "mlp.batch_size" => self.mlp.batch_size = parse(key, v)?,
            "mlp.learning_rate" => self.mlp.learning_rate = parse(key, v)?,
            "mlp.adam" => {
                let p: Vec<f64> = parse_list(key, v)?;
                let [b1, b2, eps] = p[..] else {
                    return Err(Error::Config(format!("{key}: expected beta1,beta2,epsilon")));
                };
                (self.mlp.beta1, self.mlp.beta2, self.mlp.epsilon) = (b1, b2, eps);
            }
            "run.seed" => self.run.seed = parse(key, v)?,
            "run.folds" => self.run.folds = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.features.validate()?;
        if self.pca.components == 0 {
            return Err(Error::Config("pca.components must be positive".into()));
        }
        if !(self.pca.variance_target > 0.0 && self.pca.variance_target <= 1.0) {
            return Err(Error::Config("pca.variance_target must lie in (0, 1]".into()));
        }
        self.svm.validate()?;
        let m = &self.mlp;
        if m.hidden.is_empty() || m.hidden.contains(&0) {
            return Err(Error::Config("mlp.hidden must list positive widths".into()));
        }
        if m.dropout.len() != m.hidden.len() || m.dropout.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(Error::Config("mlp.dropout needs one rate in [0, 1) per hidden layer".into()));
        }
        for e in 1..=3 {
            m.train_config(e, 0).validate()?;
        }
        if self.run.folds < 2 {
            return Err(Error::Config("run.folds must be at least 2".into()));
        }
        if self.run.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Defaults overlaid with `section.key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(key, value).map_err(|e| {
                Error::Config(format!(
                    "line {}: {}",
                    n + 1,
                    e.to_string().trim_start_matches("invalid configuration: ")
                ))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.preprocess.cutoff_hz, 60.0);
        assert_eq!(cfg.preprocess.denoise.levels, 6);
        assert_eq!(cfg.features.peaks.min_height, 0.08);
        assert_eq!(cfg.features.peaks.min_distance, 400);
        assert_eq!(cfg.features.envelope_window, 100);
        assert_eq!(cfg.pca.policy(), PcaPolicy::ComponentCount(460));
        assert_eq!(cfg.mlp.epochs, [500, 50, 100]);
        assert_eq!(cfg.mlp.hidden, vec![512, 512, 256, 256, 128, 128]);
    }

    #[test]
    fn single_override() {
        let cfg = RunConfig::parse("peak.height=0.1\n").unwrap();
        let mut expect = RunConfig::default();
        expect.features.peaks.min_height = 0.1;
        assert_eq!(cfg, expect);
    }

    #[test]
    fn every_key_is_accepted() {
        let mut cfg = RunConfig::default();
        let sample = |k: &str| match k {
            "dwt.wavelet" => "db2",
            "dwt.selection" => "sure",
            "dwt.threshold" => "soft",
            "dwt.noise" => "finest-level",
            "pca.policy" => "variance",
            "svm.gamma" => "auto",
            "mlp.hidden" => "8,4",
            "mlp.dropout" => "0.1,0.2",
            "mlp.adam" => "0.9,0.99,1e-7",
            k if k.ends_with("_s") || k.contains("rolloff") || k.contains("target") || k.contains("height") => "0.5",
            "mlp.learning_rate" | "svm.c" | "svm.tol" => "0.5",
            _ => "4",
        };
        for k in CONFIG_KEYS {
            cfg.set(k, sample(k)).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
        assert_eq!(cfg.mlp.hidden, vec![8, 4]);
        assert_eq!(cfg.mlp.epsilon, 1e-7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse("dwt.levels=0"), Err(Error::Config(_))));
        let err = RunConfig::parse("a=1\nbogus.key=3").unwrap_err().to_string();
        assert!(err.contains("line 1") && err.contains("unknown key"), "{err}");
        assert!(RunConfig::parse("peak.height").is_err());
        assert!(RunConfig::parse("peak.distance=-4").is_err());
        assert!(RunConfig::parse("mlp.hidden=8,4").is_err(), "dropout list length must follow");
        assert!(RunConfig::parse("mlp.hidden=8,4\nmlp.dropout=0.1,0.1").is_ok());
        assert!(RunConfig::parse("pca.variance_target=1.5").is_err());
    }
}
