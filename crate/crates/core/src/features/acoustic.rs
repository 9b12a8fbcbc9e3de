//! Frame-level acoustic descriptors summarized by statistical functionals.
//!
//! Each recording is cut into Hann-windowed frames; every descriptor is
//! computed per frame and then reduced to a fixed set of functionals, so
//! the output length depends only on the configuration.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, pop_std, Real};

const SPECTRAL_DESCRIPTORS: [&str; 7] = ["rms", "zcr", "centroid", "rolloff", "flux", "entropy", "flatness"];

pub const FUNCTIONAL_NAMES: [&str; 11] =
    ["mean", "std", "min", "max", "range", "median", "q1", "q3", "skewness", "kurtosis", "slope"];

const POWER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticConfig {
    pub frame_s: f64,
    pub hop_s: f64,
    pub n_mfcc: usize,
    pub n_mels: usize,
    pub rolloff: f64,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        AcousticConfig { frame_s: 0.025, hop_s: 0.010, n_mfcc: 13, n_mels: 26, rolloff: 0.85 }
    }
}

impl AcousticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_s > 0.0 && self.hop_s > 0.0) {
            return Err(Error::Config("acoustic.frame_s and acoustic.hop_s must be positive".into()));
        }
        if self.n_mfcc == 0 || self.n_mels < self.n_mfcc {
            return Err(Error::Config("acoustic.n_mels must be at least acoustic.n_mfcc ≥ 1".into()));
        }
        if !(self.rolloff > 0.0 && self.rolloff < 1.0) {
            return Err(Error::Config("acoustic.rolloff must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn descriptor_names(&self) -> Vec<String> {
        SPECTRAL_DESCRIPTORS
            .iter()
            .map(|s| if *s == "rolloff" { format!("rolloff{:.0}", self.rolloff * 100.0) } else { s.to_string() })
            .chain((0..self.n_mfcc).map(|k| format!("mfcc{k}")))
            .collect()
    }

    pub fn len(&self) -> usize {
        (SPECTRAL_DESCRIPTORS.len() + self.n_mfcc) * FUNCTIONAL_NAMES.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Column names, descriptor-major.
    pub fn feature_names(&self) -> Vec<String> {
        self.descriptor_names().iter().flat_map(|d| FUNCTIONAL_NAMES.iter().map(move |f| format!("{d}_{f}"))).collect()
    }

    pub fn frame_len(&self, fs: u32) -> usize {
        ((self.frame_s * f64::from(fs)).round() as usize).max(2)
    }

    pub fn hop_len(&self, fs: u32) -> usize {
        ((self.hop_s * f64::from(fs)).round() as usize).max(1)
    }

    pub fn fft_len(&self, fs: u32) -> usize {
        self.frame_len(fs).next_power_of_two()
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over the one-sided spectrum bins.
fn mel_filterbank(n_mels: usize, n_bins: usize, fft_len: usize, fs: f64) -> Vec<Vec<f64>> {
    let mel_max = hz_to_mel(fs / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2).map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64)).collect();
    let bin_hz = fs / fft_len as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

struct FrameAnalyzer<T: Real> {
    fs: f64,
    frame_len: usize,
    fft_len: usize,
    window: Vec<T>,
    fft: Arc<dyn Fft<T>>,
    mel: Vec<Vec<T>>,
    dct: Vec<Vec<T>>,
    rolloff: T,
}

impl<T: Real> FrameAnalyzer<T> {
    fn new(cfg: &AcousticConfig, fs: u32) -> Self {
        let frame_len = cfg.frame_len(fs);
        let fft_len = cfg.fft_len(fs);
        let n_bins = fft_len / 2 + 1;
        let window =
            (0..frame_len).map(|i| T::lit(0.5 - 0.5 * (2.0 * PI * i as f64 / (frame_len - 1) as f64).cos())).collect();
        let mel = mel_filterbank(cfg.n_mels, n_bins, fft_len, f64::from(fs))
            .into_iter()
            .map(|row| row.into_iter().map(T::lit).collect())
            .collect();
        // Orthonormal DCT-II rows.
        let m = cfg.n_mels as f64;
        let dct = (0..cfg.n_mfcc)
            .map(|k| {
                let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
                (0..cfg.n_mels).map(|n| T::lit(scale * (PI * k as f64 * (n as f64 + 0.5) / m).cos())).collect()
            })
            .collect();
        FrameAnalyzer {
            fs: f64::from(fs),
            frame_len,
            fft_len,
            window,
            fft: FftPlanner::new().plan_fft_forward(fft_len),
            mel,
            dct,
            rolloff: T::lit(cfg.rolloff),
        }
    }

    fn magnitude(&self, frame: &[T]) -> Vec<T> {
        let mut buf: Vec<Complex<T>> =
            frame.iter().zip(&self.window).map(|(&x, &w)| Complex::new(x * w, T::zero())).collect();
        buf.resize(self.fft_len, Complex::new(T::zero(), T::zero()));
        self.fft.process(&mut buf);
        buf[..self.fft_len / 2 + 1].iter().map(|c| c.norm()).collect()
    }

    /// Descriptor row for one frame; `prev` is the previous magnitude spectrum.
    fn describe(&self, frame: &[T], mag: &[T], prev: Option<&[T]>, out: &mut Vec<T>) {
        let zero = T::zero();
        let n = T::from_usize_lossy(frame.len());
        let rms = (frame.iter().map(|&x| x * x).sum::<T>() / n).sqrt();
        let crossings = frame
            .windows(2)
            .filter(|w| (w[0] >= zero) != (w[1] >= zero) && w[0] != w[1])
            .filter(|w| w[0] * w[1] < zero)
            .count();
        let zcr = T::from_usize_lossy(crossings) / T::from_usize_lossy(frame.len() - 1);

        let bin_hz = T::lit(self.fs / self.fft_len as f64);
        let power: Vec<T> = mag.iter().map(|&m| m * m).collect();
        let mag_sum: T = mag.iter().copied().sum();
        let total_power: T = power.iter().copied().sum();
        let silent = total_power <= T::lit(POWER_FLOOR) * T::lit(POWER_FLOOR);

        let centroid = if mag_sum > zero {
            mag.iter().enumerate().map(|(k, &m)| T::from_usize_lossy(k) * bin_hz * m).sum::<T>() / mag_sum
        } else {
            zero
        };

        let rolloff = if silent {
            zero
        } else {
            let target = self.rolloff * total_power;
            let mut acc = zero;
            let mut bin = power.len() - 1;
            for (k, &p) in power.iter().enumerate() {
                acc += p;
                if acc >= target {
                    bin = k;
                    break;
                }
            }
            T::from_usize_lossy(bin) * bin_hz
        };

        let flux = match prev {
            Some(p) => mag.iter().zip(p).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt(),
            None => zero,
        };

        let (entropy, flatness) = if silent {
            (zero, zero)
        } else {
            let k = T::from_usize_lossy(power.len());
            let entropy =
                -power.iter().map(|&p| p / total_power).filter(|&p| p > zero).map(|p| p * p.ln()).sum::<T>() / k.ln();
            let floor = T::lit(POWER_FLOOR);
            let log_mean = power.iter().map(|&p| (p + floor).ln()).sum::<T>() / k;
            let arith = power.iter().map(|&p| p + floor).sum::<T>() / k;
            (entropy, log_mean.exp() / arith)
        };

        out.extend_from_slice(&[rms, zcr, centroid, rolloff, flux, entropy, flatness]);

        let log_mel: Vec<T> = self
            .mel
            .iter()
            .map(|filt| {
                let e: T = filt.iter().zip(&power).map(|(&w, &p)| w * p).sum();
                (e + T::lit(POWER_FLOOR)).ln()
            })
            .collect();
        out.extend(self.dct.iter().map(|row| row.iter().zip(&log_mel).map(|(&c, &v)| c * v).sum::<T>()));
    }
}

fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// The eleven functionals of one descriptor track, in `FUNCTIONAL_NAMES` order.
pub fn functionals<T: Real>(track: &[T], hop_s: f64) -> [T; 11] {
    let zero = T::zero();
    let mut sorted = track.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = mean(track);
    let sd = pop_std(track);
    let n = T::from_usize_lossy(track.len());
    let (skew, kurt) = if sd > zero {
        let m3 = track.iter().map(|&v| ((v - m) / sd).powi(3)).sum::<T>() / n;
        let m4 = track.iter().map(|&v| ((v - m) / sd).powi(4)).sum::<T>() / n;
        (m3, m4 - T::lit(3.0))
    } else {
        (zero, zero)
    };
    let slope = if track.len() > 1 {
        let t: Vec<T> = (0..track.len()).map(|i| T::lit(i as f64 * hop_s)).collect();
        let tm = mean(&t);
        let num: T = t.iter().zip(track).map(|(&ti, &v)| (ti - tm) * (v - m)).sum();
        let den: T = t.iter().map(|&ti| (ti - tm) * (ti - tm)).sum();
        num / den
    } else {
        zero
    };
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    [
        m,
        sd,
        min,
        max,
        max - min,
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.75),
        skew,
        kurt,
        slope,
    ]
}

/// Frame-level descriptor tracks, one `Vec` per descriptor.
pub fn descriptor_tracks<T: Real>(x: &[T], fs: u32, cfg: &AcousticConfig) -> Result<Vec<Vec<T>>> {
    cfg.validate()?;
    let analyzer = FrameAnalyzer::<T>::new(cfg, fs);
    let frame_len = analyzer.frame_len;
    if x.len() < frame_len {
        return Err(Error::SignalTooShort(format!("{} samples, one analysis frame needs {frame_len}", x.len())));
    }
    let hop = cfg.hop_len(fs);
    let n_frames = 1 + (x.len() - frame_len) / hop;
    let n_desc = SPECTRAL_DESCRIPTORS.len() + cfg.n_mfcc;
    let mut tracks = vec![Vec::with_capacity(n_frames); n_desc];
    let mut prev: Option<Vec<T>> = None;
    let mut row = Vec::with_capacity(n_desc);
    for f in 0..n_frames {
        let frame = &x[f * hop..f * hop + frame_len];
        let mag = analyzer.magnitude(frame);
        row.clear();
        analyzer.describe(frame, &mag, prev.as_deref(), &mut row);
        for (track, &v) in tracks.iter_mut().zip(&row) {
            track.push(v);
        }
        prev = Some(mag);
    }
    Ok(tracks)
}

pub fn acoustic_features<T: Real>(x: &[T], fs: u32, cfg: &AcousticConfig) -> Result<Vec<T>> {
    let tracks = descriptor_tracks(x, fs, cfg)?;
    Ok(tracks.iter().flat_map(|t| functionals(t, cfg.hop_s)).collect())
}
