//! Audio and corpus input/output, dataset label manipulation, and a
//! synthetic heart-sound generator used as a ground-truth fixture.

mod corpus;
mod manifest;
mod synth;
mod wav;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use corpus::{synth_corpus, CorpusSpec};
pub use manifest::{
    label_unlabeled_by_patient, load_manifest, relabel_extrasys_to_normal, write_manifest, DatasetManifest,
    ManifestRecord, SplitTag,
};
pub use synth::{synth_pcg, EventKind, SynthConfig, SynthEvent, SynthOutput};
pub use wav::{read_wav, write_wav};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Murmur,
    Extrasys,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Murmur => "murmur",
            Label::Extrasys => "extrasys",
            Label::Unlabeled => "",
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Unlabeled => f.write_str("unlabeled"),
            other => f.write_str(other.as_str()),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "unlabeled" | "unlabelled" => Ok(Label::Unlabeled),
            "normal" => Ok(Label::Normal),
            "murmur" => Ok(Label::Murmur),
            "extrasys" | "extrasystole" => Ok(Label::Extrasys),
            other => Err(Error::InvalidInput(format!("unknown label {other:?}"))),
        }
    }
}

/// A mono recording with its corpus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSample<T> {
    pub id: String,
    pub samples: Vec<T>,
    pub sample_rate_hz: u32,
    pub patient_id: String,
    pub label: Label,
    pub noisy: bool,
}

impl<T: Real> AudioSample<T> {
    pub fn new(id: impl Into<String>, samples: Vec<T>, sample_rate_hz: u32) -> Result<Self> {
        let sample = AudioSample {
            id: id.into(),
            samples,
            sample_rate_hz,
            patient_id: String::new(),
            label: Label::Unlabeled,
            noisy: false,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidInput(format!("{}: empty waveform", self.id)));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidInput(format!("{}: sample rate is zero", self.id)));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Same metadata, new waveform.
    pub fn with_samples(&self, samples: Vec<T>) -> Self {
        AudioSample {
            id: self.id.clone(),
            samples,
            sample_rate_hz: self.sample_rate_hz,
            patient_id: self.patient_id.clone(),
            label: self.label,
            noisy: self.noisy,
        }
    }
}
