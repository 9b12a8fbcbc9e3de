use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pointwise Shannon energy `-x^2 log10(x^2)`, with `E(0) = 0`.
pub fn shannon_energy<T: Real>(x: &[T]) -> Vec<T> {
    x.iter()
        .map(|&v| {
            let sq = v * v;
            if sq == T::zero() {
                T::zero()
            } else {
                -sq * sq.log10()
            }
        })
        .collect()
}

/// Normalized Shannon energy envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<T> {
    pub values: Vec<T>,
    pub window_len: usize,
    pub sample_rate_hz: u32,
}

/// Centered moving average of `x`, shrinking the window at the edges.
pub fn moving_average<T: Real>(x: &[T], window: usize) -> Vec<T> {
    let n = x.len();
    let left = window / 2;
    let right = window - 1 - left;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n - 1);
            let sum: T = x[lo..=hi].iter().copied().sum();
            sum / T::from_usize_lossy(hi - lo + 1)
        })
        .collect()
}

/// Shannon energy, smoothed with a `window`-sample moving average and scaled
/// to a unit maximum. An all-zero input yields an all-zero envelope.
pub fn envelope<T: Real>(x: &[T], window: usize, sample_rate_hz: u32) -> Result<Envelope<T>> {
    if window == 0 {
        return Err(Error::Config("envelope window must be at least 1".into()));
    }
    if x.len() < window {
        return Err(Error::SignalTooShort(format!("{} samples, envelope window is {window}", x.len())));
    }
    let mut values = moving_average(&shannon_energy(x), window);
    let max = values.iter().fold(T::zero(), |m, &v| m.max(v));
    if max > T::zero() {
        values.iter_mut().for_each(|v| *v /= max);
    }
    Ok(Envelope { values, window_len: window, sample_rate_hz })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    pub min_height: f64,
    pub min_distance: usize,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams { min_height: 0.08, min_distance: 400 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet<T> {
    pub indices: Vec<usize>,
    pub heights: Vec<T>,
    pub min_distance: usize,
    pub min_height: f64,
}

impl<T: Real> PeakSet<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Checks ordering, spacing and height constraints.
    pub fn is_valid(&self) -> bool {
        self.indices.len() == self.heights.len()
            && self.indices.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] >= self.min_distance)
            && self.heights.iter().all(|h| h.to_f64_lossy() >= self.min_height)
    }
}

/// Local maxima of a signal: strictly above the left neighbour and above the
/// sample after a flat run. A plateau reports its leftmost index; the end
/// points are never peaks.
pub fn local_maxima<T: Real>(x: &[T]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Height-thresholded local maxima with greedy distance suppression.
///
/// Candidates are visited from tallest to shortest (ties by index); any
/// candidate closer than `min_distance` samples to an accepted peak is
/// dropped. The result is sorted by index.
pub fn find_peaks<T: Real>(env: &Envelope<T>, params: &PeakParams) -> PeakSet<T> {
    let height = T::lit(params.min_height);
    let mut candidates: Vec<usize> =
        local_maxima(&env.values).into_iter().filter(|&i| env.values[i] >= height).collect();
    candidates.sort_by(|&a, &b| {
        env.values[b].partial_cmp(&env.values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });

    let mut accepted = BTreeSet::new();
    for i in candidates {
        let lo = (i + 1).saturating_sub(params.min_distance);
        let hi = i + params.min_distance;
        if accepted.range(lo..hi).next().is_none() {
            accepted.insert(i);
        }
    }
    let indices: Vec<usize> = accepted.into_iter().collect();
    let heights = indices.iter().map(|&i| env.values[i]).collect();
    PeakSet { indices, heights, min_distance: params.min_distance, min_height: params.min_height }
}
