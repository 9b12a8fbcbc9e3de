//! One-sided Jacobi singular value decomposition.

use ndarray::{Array1, Array2, Axis};

use crate::scalar::Real;

const MAX_SWEEPS: usize = 60;

/// Singular values (descending) and matching right singular vectors as
/// rows of `vt`. Only `min(rows, cols)` pairs are returned.
pub(crate) struct Svd<T> {
    pub singular_values: Array1<T>,
    pub vt: Array2<T>,
}

/// Orthogonalizes the columns of `a` in place with Jacobi rotations; the
/// rotations are accumulated in `v` when given.
fn orthogonalize_columns<T: Real>(a: &mut Array2<T>, mut v: Option<&mut Array2<T>>) {
    let n = a.ncols();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for r in a.rows() {
                    let (x, y) = (r[p], r[q]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(a, p, q, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, p, q, c, s);
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

fn rotate<T: Real>(m: &mut Array2<T>, p: usize, q: usize, c: T, s: T) {
    for mut r in m.rows_mut() {
        let (x, y) = (r[p], r[q]);
        r[p] = c * x - s * y;
        r[q] = s * x + c * y;
    }
}

pub(crate) fn svd<T: Real>(x: &Array2<T>) -> Svd<T> {
    let (rows, cols) = x.dim();
    let k = rows.min(cols);
    // (value, direction) pairs, direction in column space of `x`.
    let mut pairs: Vec<(T, Array1<T>)> = if rows >= cols {
        let mut a = x.clone();
        let mut v = Array2::eye(cols);
        orthogonalize_columns(&mut a, Some(&mut v));
        (0..cols)
            .map(|j| {
                let norm = a.column(j).iter().map(|&e| e * e).sum::<T>().sqrt();
                (norm, v.column(j).to_owned())
            })
            .collect()
    } else {
        // Columns of xᵀ become σ·v after orthogonalization.
        let mut a = x.t().to_owned();
        orthogonalize_columns(&mut a, None);
        (0..rows)
            .map(|j| {
                let col = a.column(j);
                let norm = col.iter().map(|&e| e * e).sum::<T>().sqrt();
                let dir = if norm > T::zero() { col.mapv(|e| e / norm) } else { Array1::zeros(cols) };
                (norm, dir)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    pairs.truncate(k);
    let mut vt = Array2::zeros((k, cols));
    for (mut row, (_, dir)) in vt.axis_iter_mut(Axis(0)).zip(&pairs) {
        row.assign(dir);
    }
    Svd { singular_values: pairs.iter().map(|p| p.0).collect(), vt }
}
