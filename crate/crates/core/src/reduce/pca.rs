use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::svd::svd;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_COMPONENT_COUNT: usize = 460;

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaPolicy {
    /// Keep `min(n, rank)` components.
    ComponentCount(usize),
    /// Keep the smallest prefix whose cumulative ratio reaches the target.
    VarianceTarget(f64),
}

impl Default for PcaPolicy {
    fn default() -> Self {
        PcaPolicy::ComponentCount(DEFAULT_COMPONENT_COUNT)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PcaModel<T> {
    pub mean: Vec<T>,
    /// `k × d`, one unit direction per row.
    #[serde(with = "crate::matrix_serde")]
    pub components: Array2<T>,
    pub explained_variance_ratio: Vec<T>,
    /// Sample variance (n − 1 denominator) along each kept component.
    pub explained_variance: Vec<T>,
    pub policy: PcaPolicy,
    /// Numerical rank of the centered training matrix.
    pub rank: usize,
}

pub fn fit_pca<T: Real>(x: &Array2<T>, policy: PcaPolicy) -> Result<PcaModel<T>> {
    let (n, d) = x.dim();
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("PCA needs a non-empty matrix".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("PCA needs at least 2 rows".into()));
    }
    match policy {
        PcaPolicy::ComponentCount(0) => return Err(Error::Config("PCA component count must be positive".into())),
        PcaPolicy::VarianceTarget(t) if !(t > 0.0 && t <= 1.0) => {
            return Err(Error::Config("PCA variance target must lie in (0, 1]".into()))
        }
        _ => {}
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = x - &mean;
    let dec = svd(&centered);
    let s = &dec.singular_values;
    let total: T = s.iter().map(|&v| v * v).sum();
    let s_max = s.first().copied().unwrap_or(T::zero());
    let tol = s_max * T::from_usize_lossy(n.max(d)) * T::epsilon();
    let rank = s.iter().filter(|&&v| v > tol).count();
    if rank == 0 {
        return Err(Error::InvalidInput("PCA input has zero variance".into()));
    }
    let ratios: Vec<T> = s.iter().map(|&v| v * v / total).collect();

    let k = match policy {
        PcaPolicy::ComponentCount(c) => c.min(rank),
        PcaPolicy::VarianceTarget(target) => {
            let target = T::lit(target);
            let mut acc = T::zero();
            let mut k = rank;
            for (i, &r) in ratios.iter().enumerate().take(rank) {
                acc += r;
                if acc >= target {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };

    let mut components = dec.vt.slice(ndarray::s![..k, ..]).to_owned();
    for mut row in components.rows_mut() {
        // Largest-magnitude entry made positive; first index wins ties.
        let pivot = row
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        if row[pivot] < T::zero() {
            row.mapv_inplace(|v| -v);
        }
    }
    let dof = T::from_usize_lossy(n - 1);
    Ok(PcaModel {
        mean: mean.to_vec(),
        components,
        explained_variance_ratio: ratios[..k].to_vec(),
        explained_variance: s.iter().take(k).map(|&v| v * v / dof).collect(),
        policy,
        rank,
    })
}

impl<T: Real> PcaModel<T> {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub(crate) fn check(&self) -> Result<()> {
        let k = self.n_components();
        if self.components.ncols() != self.dim()
            || self.explained_variance_ratio.len() != k
            || self.explained_variance.len() != k
        {
            return Err(Error::ModelFormat("inconsistent PCA dimensions".into()));
        }
        Ok(())
    }

    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let centered: Array1<T> = x.iter().zip(&self.mean).map(|(&v, &m)| v - m).collect();
        Ok(self.components.dot(&centered).to_vec())
    }

    pub fn project_matrix(&self, x: &Array2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.ncols() });
        }
        let mean = Array1::from(self.mean.clone());
        Ok((x - &mean).dot(&self.components.t()))
    }

    pub fn reconstruct(&self, z: &[T]) -> Result<Vec<T>> {
        if z.len() != self.n_components() {
            return Err(Error::DimensionMismatch { expected: self.n_components(), got: z.len() });
        }
        let back = self.components.t().dot(&Array1::from(z.to_vec()));
        Ok(back.iter().zip(&self.mean).map(|(&v, &m)| v + m).collect())
    }
}
