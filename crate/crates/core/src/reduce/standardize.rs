use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-column affine map to zero mean and unit population variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Standardizer<T> {
    pub means: Vec<T>,
    /// Population standard deviations; constant columns get 1.
    pub scales: Vec<T>,
}

pub fn fit_standardizer<T: Real>(x: &Array2<T>) -> Result<Standardizer<T>> {
    if x.nrows() < 2 {
        return Err(Error::InvalidInput(format!("standardizer needs at least 2 rows, got {}", x.nrows())));
    }
    let n = T::from_usize_lossy(x.nrows());
    let means: Array1<T> = x.sum_axis(Axis(0)) / n;
    let scales = x
        .axis_iter(Axis(1))
        .zip(&means)
        .map(|(col, &m)| {
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
            let sd = var.sqrt();
            // Spread at rounding level of the mean is treated as constant.
            let tiny = T::epsilon() * T::lit(16.0) * m.abs();
            if sd > tiny && sd.is_finite() {
                sd
            } else {
                T::one()
            }
        })
        .collect();
    Ok(Standardizer { means: means.to_vec(), scales })
}

impl<T: Real> Standardizer<T> {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(x.iter().zip(self.means.iter().zip(&self.scales)).map(|(&v, (&m, &s))| (v - m) / s).collect())
    }

    pub fn apply_matrix(&self, x: &Array2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.ncols() });
        }
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.means).zip(&self.scales) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}
