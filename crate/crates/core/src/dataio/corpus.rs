use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{write_manifest, DatasetManifest, ManifestRecord, SplitTag};
use super::synth::{synth_pcg, SynthConfig};
use super::wav::write_wav;
use super::Label;
use crate::error::{Error, Result};

/// Layout of a synthetic multi-patient corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub normal_patients: usize,
    pub murmur_patients: usize,
    pub extrasys_patients: usize,
    pub samples_per_patient: usize,
    pub duration_s: f64,
    pub noise_rms: f64,
    /// Heart rates are drawn per patient from this range.
    pub bpm_range: (f64, f64),
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            normal_patients: 15,
            murmur_patients: 10,
            extrasys_patients: 5,
            samples_per_patient: 3,
            duration_s: 5.0,
            noise_rms: 0.02,
            bpm_range: (60.0, 90.0),
            seed: 0,
        }
    }
}

/// Writes `<dir>/P<nn>_<k>.wav` for every patient and `<dir>/manifest.csv`.
///
/// A patient's last sample is tagged `test`, the others `train`.
pub fn synth_corpus(spec: &CorpusSpec, dir: &Path) -> Result<DatasetManifest> {
    if spec.samples_per_patient == 0 {
        return Err(Error::Config("synth: samples per patient must be positive".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels = std::iter::repeat_n(Label::Normal, spec.normal_patients)
        .chain(std::iter::repeat_n(Label::Murmur, spec.murmur_patients))
        .chain(std::iter::repeat_n(Label::Extrasys, spec.extrasys_patients));
    let mut records = Vec::new();
    for (p, label) in labels.enumerate() {
        let patient = format!("P{p:02}");
        let bpm = rng.random_range(spec.bpm_range.0..=spec.bpm_range.1);
        for k in 0..spec.samples_per_patient {
            let cfg = SynthConfig {
                bpm: bpm * rng.random_range(0.97..1.03),
                duration_s: spec.duration_s,
                murmur: label == Label::Murmur,
                extrasystole: label == Label::Extrasys,
                noise_rms: spec.noise_rms,
                seed: rng.random(),
                ..Default::default()
            };
            let out = synth_pcg::<f64>(&cfg)?;
            let name = format!("{patient}_{k}.wav");
            write_wav(&out.sample, dir.join(&name))?;
            records.push(ManifestRecord {
                path: name,
                label,
                patient_id: patient.clone(),
                split: if k + 1 == spec.samples_per_patient { SplitTag::Test } else { SplitTag::Train },
                noisy: false,
            });
        }
    }
    let mut m = DatasetManifest::new(records)?;
    write_manifest(&m, dir.join("manifest.csv"))?;
    m.base_dir = dir.to_path_buf();
    Ok(m)
}
