//! Segmentation-free feature extraction: an acoustic descriptor bank plus
//! statistics of peaks in the Shannon-energy envelope.

mod acoustic;
mod envelope;
mod peak_stats;
mod table;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::AudioSample;
use crate::error::Result;
use crate::scalar::Real;

pub use acoustic::{acoustic_features, descriptor_tracks, functionals, AcousticConfig, FUNCTIONAL_NAMES};
pub use envelope::{envelope, find_peaks, local_maxima, moving_average, shannon_energy, Envelope, PeakParams, PeakSet};
pub use peak_stats::{peak_features, PeakFeatureVector, PEAK_FEATURE_NAMES};
pub use table::{FeatureRow, FeatureTable, FEATURE_TABLE_META};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub envelope_window: usize,
    pub peaks: PeakParams,
    pub acoustic: AcousticConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { envelope_window: 100, peaks: PeakParams::default(), acoustic: AcousticConfig::default() }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.envelope_window == 0 || self.peaks.min_distance == 0 {
            return Err(crate::Error::Config("envelope.window and peak.distance must be positive".into()));
        }
        if !(self.peaks.min_height.is_finite() && self.peaks.min_height >= 0.0) {
            return Err(crate::Error::Config("peak.height must be non-negative".into()));
        }
        self.acoustic.validate()
    }

    pub fn len(&self) -> usize {
        self.acoustic.len() + PEAK_FEATURE_NAMES.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Column names: the acoustic block, then the peak block.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = self.acoustic.feature_names();
        names.extend(PEAK_FEATURE_NAMES.iter().map(|s| s.to_string()));
        names
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded. Stored with every
    /// fitted model so features and models from different settings never mix.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("feature config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Full feature vector plus the intermediate envelope and peaks.
#[derive(Debug, Clone)]
pub struct Extraction<T> {
    pub values: Vec<T>,
    pub envelope: Envelope<T>,
    pub peaks: PeakSet<T>,
}

pub fn extract_with_trace<T: Real>(s: &AudioSample<T>, cfg: &FeatureConfig) -> Result<Extraction<T>> {
    cfg.validate()?;
    s.validate()?;
    let mut values = acoustic_features(&s.samples, s.sample_rate_hz, &cfg.acoustic)?;
    let env = envelope(&s.samples, cfg.envelope_window, s.sample_rate_hz)?;
    let peaks = find_peaks(&env, &cfg.peaks);
    debug_assert!(peaks.is_valid());
    values.extend_from_slice(&peak_features(&peaks, s.sample_rate_hz).0);
    Ok(Extraction { values, envelope: env, peaks })
}

/// `[acoustic ‖ peak]` feature vector of a preprocessed sample.
pub fn extract_full_vector<T: Real>(s: &AudioSample<T>, cfg: &FeatureConfig) -> Result<Vec<T>> {
    extract_with_trace(s, cfg).map(|e| e.values)
}

/// Envelope debug dump: `index,envelope,is_peak` rows.
pub fn write_envelope_dump<T: Real>(env: &Envelope<T>, peaks: &PeakSet<T>, path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "envelope", "is_peak"])?;
    let mut next = peaks.indices.iter().peekable();
    for (i, v) in env.values.iter().enumerate() {
        let is_peak = next.peek() == Some(&&i);
        if is_peak {
            next.next();
        }
        w.write_record([i.to_string(), v.to_string(), u8::from(is_peak).to_string()])?;
    }
    w.flush().map_err(|e| crate::Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_pcg, SynthConfig};

    #[test]
    fn default_layout() {
        let cfg = FeatureConfig::default();
        assert_eq!(cfg.len(), 233);
        let names = cfg.feature_names();
        assert_eq!(names.len(), 233);
        assert_eq!(names[220], "d_max1");
        assert_eq!(names[232], "peak_count");
        let unique: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(unique.len(), 233);
    }

    #[test]
    fn hash_tracks_config() {
        let a = FeatureConfig::default();
        assert_eq!(a.hash(), FeatureConfig::default().hash());
        assert_eq!(a.hash().len(), 64);
        let b = FeatureConfig { envelope_window: 101, ..Default::default() };
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn vector_is_acoustic_then_peaks() {
        let out = synth_pcg::<f64>(&SynthConfig { duration_s: 4.0, seed: 3, ..Default::default() }).unwrap();
        let cfg = FeatureConfig::default();
        let e = extract_with_trace(&out.sample, &cfg).unwrap();
        assert_eq!(e.values.len(), 233);
        let acoustic = acoustic_features(&out.sample.samples, 4000, &cfg.acoustic).unwrap();
        assert_eq!(&e.values[..220], &acoustic[..]);
        assert_eq!(&e.values[220..], &peak_features(&e.peaks, 4000).0);
        assert!(e.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn envelope_dump_marks_peaks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("env.csv");
        let env = Envelope { values: vec![0.0_f64, 1.0, 0.5], window_len: 1, sample_rate_hz: 4000 };
        let peaks = PeakSet { indices: vec![1], heights: vec![1.0], min_distance: 1, min_height: 0.08 };
        write_envelope_dump(&env, &peaks, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "index,envelope,is_peak\n0,0,0\n1,1,1\n2,0.5,0\n");
    }
}
