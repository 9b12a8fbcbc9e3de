use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

// Minimum-phase Daubechies scaling filters, normalized to sum sqrt(2).
// Tables keep the published digits.
const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2; 2];
#[allow(clippy::excessive_precision)]
const DB2: [f64; 4] = [0.48296291314453414337, 0.83651630373780790558, 0.22414386804201338103, -0.12940952255126038117];
#[allow(clippy::excessive_precision)]
const DB3: [f64; 6] = [
    0.332670552950082616,
    0.80689150931109257649,
    0.4598775021184915701,
    -0.1350110200102545887,
    -0.085441273882026661693,
    0.035226291885709536603,
];
#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.23037781330889650086,
    0.71484657055291564709,
    0.63088076792985890788,
    -0.027983769416859854211,
    -0.18703481171909308408,
    0.030841381835560763627,
    0.032883011666885199735,
    -0.010597401785069032105,
];

/// Daubechies wavelet with the given number of vanishing moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Wavelet {
    Db(u8),
}

impl Wavelet {
    pub const DB4: Wavelet = Wavelet::Db(4);

    pub fn scaling_filter(self) -> &'static [f64] {
        match self {
            Wavelet::Db(1) => &DB1,
            Wavelet::Db(2) => &DB2,
            Wavelet::Db(3) => &DB3,
            Wavelet::Db(4) => &DB4,
            Wavelet::Db(n) => unreachable!("db{n} rejected at construction"),
        }
    }

    /// Quadrature mirror of the scaling filter: g[n] = (-1)^n h[L-1-n].
    pub fn wavelet_filter(self) -> Vec<f64> {
        let h = self.scaling_filter();
        let l = h.len();
        (0..l).map(|n| if n % 2 == 0 { h[l - 1 - n] } else { -h[l - 1 - n] }).collect()
    }

    pub fn filter_len(self) -> usize {
        self.scaling_filter().len()
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wavelet::Db(n) => write!(f, "db{n}"),
        }
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "haar" | "db1" => Ok(Wavelet::Db(1)),
            "db2" => Ok(Wavelet::Db(2)),
            "db3" => Ok(Wavelet::Db(3)),
            "db4" => Ok(Wavelet::Db(4)),
            _ => Err(Error::Config(format!("unsupported wavelet {s:?} (db1..db4)"))),
        }
    }
}

impl TryFrom<String> for Wavelet {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Wavelet> for String {
    fn from(w: Wavelet) -> String {
        w.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Circular convolution over the signal zero-padded to a multiple of
    /// `2^levels`.
    Periodization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition<T> {
    pub approx: Vec<T>,
    /// `details[0]` is level 1, the finest scale.
    pub details: Vec<Vec<T>>,
    pub wavelet: Wavelet,
    pub boundary_mode: BoundaryMode,
    pub original_length: usize,
}

impl<T: Real> WaveletDecomposition<T> {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn coefficient_count(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn energy(&self) -> T {
        self.approx.iter().chain(self.details.iter().flatten()).map(|&c| c * c).sum()
    }
}

/// Shortest signal that supports `levels` decomposition steps.
pub fn min_length(wavelet: Wavelet, levels: usize) -> usize {
    wavelet.filter_len() << levels.saturating_sub(1)
}

fn analysis_step<T: Real>(x: &[T], h: &[T], g: &[T]) -> (Vec<T>, Vec<T>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![T::zero(); half];
    let mut d = vec![T::zero(); half];
    for k in 0..half {
        let (mut sa, mut sd) = (T::zero(), T::zero());
        for (i, (&hi, &gi)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + i) % n];
            sa += hi * v;
            sd += gi * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

fn synthesis_step<T: Real>(a: &[T], d: &[T], h: &[T], g: &[T]) -> Vec<T> {
    let n = 2 * a.len();
    let mut x = vec![T::zero(); n];
    for k in 0..a.len() {
        for (i, (&hi, &gi)) in h.iter().zip(g).enumerate() {
            x[(2 * k + i) % n] += hi * a[k] + gi * d[k];
        }
    }
    x
}

fn filters<T: Real>(w: Wavelet) -> (Vec<T>, Vec<T>) {
    (w.scaling_filter().iter().map(|&v| T::lit(v)).collect(), w.wavelet_filter().into_iter().map(T::lit).collect())
}

/// Multi-level orthogonal DWT (Mallat cascade, periodized).
///
/// The signal is zero-padded at the end to a multiple of `2^levels`; the
/// transform of the padded signal is orthogonal, so coefficient energy
/// equals signal energy.
pub fn dwt<T: Real>(x: &[T], wavelet: Wavelet, levels: usize) -> Result<WaveletDecomposition<T>> {
    if levels == 0 {
        return Err(Error::Config("DWT levels must be at least 1".into()));
    }
    let min = min_length(wavelet, levels);
    if x.len() < min {
        return Err(Error::SignalTooShort(format!(
            "{} samples; {wavelet} at {levels} levels needs at least {min}",
            x.len()
        )));
    }
    let block = 1usize << levels;
    let padded = x.len().div_ceil(block) * block;
    let mut approx = x.to_vec();
    approx.resize(padded, T::zero());

    let (h, g) = filters::<T>(wavelet);
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, &h, &g);
        details.push(d);
        approx = a;
    }
    Ok(WaveletDecomposition {
        approx,
        details,
        wavelet,
        boundary_mode: BoundaryMode::Periodization,
        original_length: x.len(),
    })
}

pub fn idwt<T: Real>(d: &WaveletDecomposition<T>) -> Result<Vec<T>> {
    let levels = d.details.len();
    if levels == 0 {
        return Err(Error::InvalidInput("decomposition has no detail levels".into()));
    }
    let mut expected = d.approx.len();
    for (j, det) in d.details.iter().enumerate().rev() {
        if det.len() != expected {
            return Err(Error::InvalidInput(format!(
                "detail level {} has {} coefficients, expected {expected}",
                j + 1,
                det.len()
            )));
        }
        expected *= 2;
    }
    if expected < d.original_length || expected == 0 {
        return Err(Error::InvalidInput(format!(
            "{expected} reconstructed samples cannot cover original length {}",
            d.original_length
        )));
    }

    let (h, g) = filters::<T>(d.wavelet);
    let mut x = d.approx.clone();
    for det in d.details.iter().rev() {
        x = synthesis_step(&x, det, &h, &g);
    }
    x.truncate(d.original_length);
    Ok(x)
}
