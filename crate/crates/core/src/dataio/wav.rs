use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioSample;
use crate::error::{Error, Result};
use crate::scalar::Real;

const FULL_SCALE_16: f64 = 32768.0;
const FULL_SCALE_8: f64 = 128.0;

/// Reads a mono 8- or 16-bit PCM WAV file.
///
/// Samples are scaled to `[-1, 1)` by dividing by the integer full scale.
/// The id is the file stem; patient, label and noise flag are left for the
/// caller to fill in.
pub fn read_wav<T: Real>(path: impl AsRef<Path>) -> Result<AudioSample<T>> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedChannels(spec.channels));
    }
    if spec.sample_format != SampleFormat::Int {
        return Err(Error::NonPcm);
    }
    let scale = match spec.bits_per_sample {
        8 => FULL_SCALE_8,
        16 => FULL_SCALE_16,
        other => return Err(Error::UnsupportedBitDepth(other)),
    };
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| T::lit(f64::from(v) / scale)).map_err(|e| map_hound(path, e)))
        .collect::<Result<Vec<T>>>()?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    AudioSample::new(id, samples, spec.sample_rate)
}

/// Writes a 16-bit mono PCM WAV file.
///
/// Quantization is `round(x * 32768)` clamped to `i16`, so a file produced
/// by [`read_wav`] is written back bit-identically.
pub fn write_wav<T: Real>(sample: &AudioSample<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    sample.validate()?;
    let frames = sample
        .samples
        .iter()
        .enumerate()
        .map(|(index, &x)| {
            let v = x.to_f64_lossy();
            if !v.is_finite() || v.abs() > 1.0 {
                return Err(Error::AmplitudeOutOfRange { index, value: v });
            }
            Ok((v * FULL_SCALE_16).round().clamp(-32768.0, 32767.0) as i16)
        })
        .collect::<Result<Vec<i16>>>()?;

    let spec = WavSpec {
        channels: 1,
        sample_rate: sample.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for f in frames {
        writer.write_sample(f).map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        hound::Error::Unsupported => Error::NonPcm,
        other => Error::Wav { path: path.to_path_buf(), message: other.to_string() },
    }
}
