use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Filter order used at the 4 kHz reference rate; scaled with the sample rate.
pub const REFERENCE_ORDER: usize = 256;
pub const REFERENCE_RATE_HZ: u32 = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirDesign {
    pub window: Window,
    pub order: usize,
}

/// Linear-phase (type-I) FIR high-pass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter<T> {
    pub taps: Vec<T>,
    pub cutoff_hz: f64,
    pub sample_rate_hz: u32,
    pub design: FirDesign,
}

/// Even filter order matching the reference order at the given rate.
pub fn default_order(sample_rate_hz: u32) -> usize {
    let scaled = (REFERENCE_ORDER as f64 * f64::from(sample_rate_hz) / f64::from(REFERENCE_RATE_HZ)).round() as usize;
    (scaled + scaled % 2).max(2)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Windowed-sinc high-pass by spectral inversion of a unity-DC low-pass.
pub fn design_highpass<T: Real>(cutoff_hz: f64, sample_rate_hz: u32, order: usize) -> Result<FirFilter<T>> {
    let nyquist = f64::from(sample_rate_hz) / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::Config(format!("high-pass cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz")));
    }
    if order == 0 || !order.is_multiple_of(2) {
        return Err(Error::Config(format!("FIR order {order} must be even and positive")));
    }
    let fc = cutoff_hz / f64::from(sample_rate_hz);
    let m = order as f64;
    let mut lowpass: Vec<f64> = (0..=order)
        .map(|n| {
            let n = n as f64;
            let w = 0.54 - 0.46 * (2.0 * PI * n / m).cos();
            2.0 * fc * sinc(2.0 * fc * (n - m / 2.0)) * w
        })
        .collect();
    let dc: f64 = lowpass.iter().sum();
    lowpass.iter_mut().for_each(|h| *h /= dc);

    let centre = order / 2;
    let taps = lowpass.iter().enumerate().map(|(i, &h)| T::lit(if i == centre { 1.0 - h } else { -h })).collect();
    Ok(FirFilter { taps, cutoff_hz, sample_rate_hz, design: FirDesign { window: Window::Hamming, order } })
}

impl<T: Real> FirFilter<T> {
    /// Magnitude of the single-pass frequency response.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / f64::from(self.sample_rate_hz);
        let (re, im) = self.taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, h)| {
            let h = h.to_f64_lossy();
            (re + h * (w * n as f64).cos(), im - h * (w * n as f64).sin())
        });
        re.hypot(im)
    }

    fn convolve_same(&self, x: &[T]) -> Vec<T> {
        let taps = &self.taps;
        let half = taps.len() / 2;
        let n = x.len();
        (0..n)
            .map(|i| {
                // y[i] = sum_k h[k] x[i + half - k]
                let k_lo = (i + half + 1).saturating_sub(n);
                let k_hi = (i + half).min(taps.len() - 1);
                let mut acc = T::zero();
                for k in k_lo..=k_hi {
                    acc += taps[k] * x[i + half - k];
                }
                acc
            })
            .collect()
    }
}

/// Zero-phase forward-backward filtering.
///
/// Ends are extended by odd reflection over one filter length so that
/// constant offsets and slow trends do not produce edge transients.
pub fn apply_fir<T: Real>(filter: &FirFilter<T>, x: &[T]) -> Result<Vec<T>> {
    let ntaps = filter.taps.len();
    if x.len() <= ntaps {
        return Err(Error::SignalTooShort(format!("{} samples, filter has {ntaps} taps", x.len())));
    }
    let pad = (ntaps - 1).min(x.len() - 1);
    let two = T::lit(2.0);
    let (first, last) = (x[0], x[x.len() - 1]);
    let mut ext = Vec::with_capacity(x.len() + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| two * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| two * last - x[x.len() - 1 - i]));

    let mut y = filter.convolve_same(&ext);
    y.reverse();
    let mut y = filter.convolve_same(&y);
    y.reverse();
    Ok(y[pad..pad + x.len()].to_vec())
}
