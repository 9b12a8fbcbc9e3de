use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::wavelet::{dwt, idwt, Wavelet};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// MAD-to-sigma factor for Gaussian noise.
const MAD_SCALE: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdSelection {
    Heursure,
    Universal,
    Sure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Thresholding {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseEstimate {
    /// Noise scale re-estimated from every detail level.
    LevelDependent,
    /// One noise scale from the finest level, shared by all levels.
    FinestLevel,
}

macro_rules! text_enum {
    ($ty:ty, $($name:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), other
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

text_enum!(ThresholdSelection, "heursure" => ThresholdSelection::Heursure, "universal" => ThresholdSelection::Universal, "sure" => ThresholdSelection::Sure);
text_enum!(Thresholding, "hard" => Thresholding::Hard, "soft" => Thresholding::Soft);
text_enum!(NoiseEstimate, "level-dependent" => NoiseEstimate::LevelDependent, "finest-level" => NoiseEstimate::FinestLevel);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoisePolicy {
    pub wavelet: Wavelet,
    pub levels: usize,
    pub selection: ThresholdSelection,
    pub thresholding: Thresholding,
    pub noise_estimate: NoiseEstimate,
}

impl Default for DenoisePolicy {
    fn default() -> Self {
        DenoisePolicy {
            wavelet: Wavelet::DB4,
            levels: 6,
            selection: ThresholdSelection::Heursure,
            thresholding: Thresholding::Hard,
            noise_estimate: NoiseEstimate::LevelDependent,
        }
    }
}

impl DenoisePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("dwt.levels must be at least 1".into()));
        }
        Ok(())
    }
}

fn median<T: Real>(mut v: Vec<T>) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Robust noise scale: median absolute coefficient over 0.6745.
pub fn noise_sigma<T: Real>(coeffs: &[T]) -> T {
    median(coeffs.iter().map(|c| c.abs()).collect()) / T::lit(MAD_SCALE)
}

pub fn universal_threshold(n: usize) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

/// Threshold minimizing Stein's unbiased risk estimate for unit-variance
/// coefficients.
pub fn sure_threshold<T: Real>(unit: &[T]) -> f64 {
    let n = unit.len();
    if n == 0 {
        return 0.0;
    }
    let mut sq: Vec<f64> = unit.iter().map(|u| u.to_f64_lossy().powi(2)).collect();
    sq.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut cumsum = 0.0;
    let mut best = (f64::INFINITY, 0usize);
    for (i, &s) in sq.iter().enumerate() {
        cumsum += s;
        let k = (i + 1) as f64;
        let risk = (nf - 2.0 * k + cumsum + (nf - k) * s) / nf;
        if risk < best.0 {
            best = (risk, i);
        }
    }
    sq[best.1].sqrt()
}

/// Heuristic SURE: universal threshold when the coefficients look like pure
/// noise, otherwise the smaller of the SURE and universal thresholds.
pub fn heursure_threshold<T: Real>(unit: &[T]) -> f64 {
    let n = unit.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let universal = universal_threshold(n);
    let energy: f64 = unit.iter().map(|u| u.to_f64_lossy().powi(2)).sum();
    let eta = (energy - nf) / nf;
    let crit = nf.log2().powf(1.5) / nf.sqrt();
    if eta < crit {
        universal
    } else {
        sure_threshold(unit).min(universal)
    }
}

pub fn select_threshold<T: Real>(selection: ThresholdSelection, unit: &[T]) -> f64 {
    match selection {
        ThresholdSelection::Heursure => heursure_threshold(unit),
        ThresholdSelection::Universal => universal_threshold(unit.len()),
        ThresholdSelection::Sure => sure_threshold(unit),
    }
}

pub fn apply_threshold<T: Real>(c: T, t: T, mode: Thresholding) -> T {
    match mode {
        Thresholding::Hard => {
            if c.abs() > t {
                c
            } else {
                T::zero()
            }
        }
        Thresholding::Soft => {
            let shrunk = c.abs() - t;
            if shrunk > T::zero() {
                c.signum() * shrunk
            } else {
                T::zero()
            }
        }
    }
}

/// Wavelet shrinkage of the detail coefficients; the approximation is kept.
///
/// Level `j` is thresholded at `sigma_j * T(d_j / sigma_j)`. A level whose
/// noise scale is zero passes through unchanged.
pub fn denoise<T: Real>(x: &[T], policy: &DenoisePolicy) -> Result<Vec<T>> {
    policy.validate()?;
    let mut d = dwt(x, policy.wavelet, policy.levels)?;
    let shared_sigma = noise_sigma(&d.details[0]);
    for level in &mut d.details {
        let sigma = match policy.noise_estimate {
            NoiseEstimate::LevelDependent => noise_sigma(level),
            NoiseEstimate::FinestLevel => shared_sigma,
        };
        if sigma <= T::zero() {
            continue;
        }
        let unit: Vec<T> = level.iter().map(|&c| c / sigma).collect();
        let t = sigma * T::lit(select_threshold(policy.selection, &unit));
        for c in level.iter_mut() {
            *c = apply_threshold(*c, t, policy.thresholding);
        }
    }
    idwt(&d)
}
