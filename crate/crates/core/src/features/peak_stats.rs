use super::envelope::PeakSet;
use crate::scalar::{mean, pop_std, Real};

pub const PEAK_FEATURE_NAMES: [&str; 13] = [
    "d_max1",
    "d_max2",
    "d_min1",
    "d_min2",
    "d_mean",
    "d_std",
    "t_max1",
    "t_max2",
    "t_min1",
    "t_min2",
    "t_mean",
    "t_std",
    "peak_count",
];

/// Peak-to-peak distance statistics, peak-time statistics and peak count.
///
/// Distances and times are in seconds. Each group is
/// `[max1, max2, min1, min2, mean, std]` with population std. Short inputs
/// repeat their extremes; an empty group is all zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakFeatureVector<T>(pub [T; 13]);

impl<T: Real> PeakFeatureVector<T> {
    pub fn distances(&self) -> &[T] {
        &self.0[0..6]
    }

    pub fn times(&self) -> &[T] {
        &self.0[6..12]
    }

    pub fn peak_count(&self) -> T {
        self.0[12]
    }

    pub fn d_mean(&self) -> T {
        self.0[4]
    }
}

fn group_stats<T: Real>(values: &[T]) -> [T; 6] {
    if values.is_empty() {
        return [T::zero(); 6];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    let second_smallest = sorted[1.min(n - 1)];
    let second_largest = sorted[n.saturating_sub(2)];
    [sorted[n - 1], second_largest, sorted[0], second_smallest, mean(values), pop_std(values)]
}

pub fn peak_features<T: Real>(peaks: &PeakSet<T>, sample_rate_hz: u32) -> PeakFeatureVector<T> {
    let fs = T::lit(f64::from(sample_rate_hz));
    let times: Vec<T> = peaks.indices.iter().map(|&i| T::from_usize_lossy(i) / fs).collect();
    let distances: Vec<T> = peaks.indices.windows(2).map(|w| T::from_usize_lossy(w[1] - w[0]) / fs).collect();
    let mut out = [T::zero(); 13];
    out[0..6].copy_from_slice(&group_stats(&distances));
    out[6..12].copy_from_slice(&group_stats(&times));
    out[12] = T::from_usize_lossy(peaks.indices.len());
    PeakFeatureVector(out)
}
