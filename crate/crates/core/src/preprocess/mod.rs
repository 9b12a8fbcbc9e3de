//! Heart-sound denoising: FIR high-pass, wavelet shrinkage, and amplitude
//! normalization.

mod denoise;
mod fir;
mod wavelet;

use serde::{Deserialize, Serialize};

use crate::dataio::AudioSample;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use denoise::{
    apply_threshold, denoise, heursure_threshold, noise_sigma, select_threshold, sure_threshold, universal_threshold,
    DenoisePolicy, NoiseEstimate, ThresholdSelection, Thresholding,
};
pub use fir::{apply_fir, default_order, design_highpass, FirDesign, FirFilter, Window, REFERENCE_ORDER};
pub use wavelet::{dwt, idwt, min_length, BoundaryMode, Wavelet, WaveletDecomposition};

/// Settings for [`preprocess_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub cutoff_hz: f64,
    /// Filter order at the 4 kHz reference rate, scaled with the sample rate.
    pub fir_order: usize,
    pub denoise: DenoisePolicy,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { cutoff_hz: 60.0, fir_order: REFERENCE_ORDER, denoise: DenoisePolicy::default() }
    }
}

impl PreprocessConfig {
    pub fn order_for(&self, sample_rate_hz: u32) -> usize {
        let scaled = (self.fir_order as f64 * f64::from(sample_rate_hz) / 4000.0).round() as usize;
        (scaled + scaled % 2).max(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_hz.is_finite() && self.cutoff_hz > 0.0) {
            return Err(Error::Config("filter.cutoff_hz must be positive".into()));
        }
        if self.fir_order == 0 || !self.fir_order.is_multiple_of(2) {
            return Err(Error::Config("filter.order must be even and positive".into()));
        }
        self.denoise.validate()
    }
}

/// Centers to zero mean, then scales so the peak magnitude is 0.5.
pub fn normalize_center<T: Real>(x: &[T]) -> Result<Vec<T>> {
    if x.is_empty() {
        return Err(Error::ZeroDynamicRange);
    }
    let mean = crate::scalar::mean(x);
    let centered: Vec<T> = x.iter().map(|&v| v - mean).collect();
    let peak = centered.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let magnitude = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    // Spread at rounding level of the mean counts as constant.
    let floor = T::epsilon() * T::lit(64.0) * magnitude;
    if peak <= floor || !peak.is_finite() {
        return Err(Error::ZeroDynamicRange);
    }
    let scale = T::lit(2.0) * peak;
    let mut y: Vec<T> = centered.into_iter().map(|v| v / scale).collect();
    // Remove the rounding residue of the first centering pass.
    let residue = crate::scalar::mean(&y);
    y.iter_mut().for_each(|v| *v = (*v - residue).max(T::lit(-0.5)).min(T::lit(0.5)));
    Ok(y)
}

/// High-pass, wavelet denoising, then normalization; metadata is kept.
pub fn preprocess_pipeline<T: Real>(s: &AudioSample<T>, cfg: &PreprocessConfig) -> Result<AudioSample<T>> {
    s.validate()?;
    cfg.validate()?;
    let filter = design_highpass::<T>(cfg.cutoff_hz, s.sample_rate_hz, cfg.order_for(s.sample_rate_hz))?;
    let filtered = apply_fir(&filter, &s.samples)?;
    let denoised = denoise(&filtered, &cfg.denoise)?;
    let normalized = normalize_center(&denoised)?;
    Ok(s.with_samples(normalized))
}
