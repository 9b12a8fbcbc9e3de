//! RBF-kernel support vector machine trained by sequential minimal
//! optimization, extended to several classes one-vs-one.

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// `None` selects `1 / (n_features · var(X))`.
    pub gamma: Option<f64>,
    pub tol: f64,
    /// Per pair; `None` selects `max(1_000_000, 100 n)`.
    pub max_iter: Option<usize>,
    /// Seeds the scan order used to break working-set ties.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, gamma: None, tol: 1e-3, max_iter: None, seed: 0 }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config("svm.c must be positive".into()));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Config("svm.gamma must be positive".into()));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config("svm.tol must be positive".into()));
        }
        Ok(())
    }
}

/// `1 / (n_features · var)` over all entries of `x`; 1 for constant data.
pub fn scale_gamma<T: Real>(x: &Array2<T>) -> f64 {
    let n = x.len();
    if n == 0 {
        return 1.0;
    }
    let mean = x.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v.to_f64_lossy() - mean).powi(2)).sum::<f64>() / n as f64;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

pub fn rbf<T: Real>(a: ArrayView1<T>, b: ArrayView1<T>, gamma: T) -> T {
    let d2: T = a.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).sum();
    (-gamma * d2).exp()
}

/// One binary sub-problem: `positive` vs `negative` class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BinarySvm<T> {
    pub positive: usize,
    pub negative: usize,
    #[serde(with = "crate::matrix_serde")]
    pub support_vectors: Array2<T>,
    /// `αᵢ yᵢ` per support vector.
    pub dual_coef: Vec<T>,
    pub bias: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> BinarySvm<T> {
    pub fn decision(&self, x: ArrayView1<T>, gamma: T) -> T {
        self.support_vectors.axis_iter(Axis(0)).zip(&self.dual_coef).map(|(sv, &c)| c * rbf(sv, x, gamma)).sum::<T>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SvmModel<T> {
    pub n_classes: usize,
    pub n_features: usize,
    pub gamma: T,
    pub c: T,
    pub tol: T,
    pub pairs: Vec<BinarySvm<T>>,
}

/// Snapshot handed to the training observer after every SMO update.
pub struct SmoStep<'a, T> {
    pub pair: (usize, usize),
    pub iteration: usize,
    pub alpha: &'a [T],
    pub c: T,
}

/// Raw dual solution of one binary problem, for diagnostics.
#[derive(Debug, Clone)]
pub struct DualSolution<T> {
    pub alpha: Vec<T>,
    pub y: Vec<T>,
    pub bias: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> DualSolution<T> {
    /// Dual objective `½ αᵀQα − Σα` for the given kernel matrix.
    pub fn objective(&self, k: &Array2<T>) -> T {
        let n = self.alpha.len();
        let mut quad = T::zero();
        for i in 0..n {
            if self.alpha[i] == T::zero() {
                continue;
            }
            for j in 0..n {
                quad += self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j] * k[[i, j]];
            }
        }
        T::lit(0.5) * quad - self.alpha.iter().copied().sum::<T>()
    }
}

/// Solves `min ½ αᵀQα − eᵀα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0` with second-order
/// working-set selection. `k` is the kernel matrix of the sub-problem.
pub fn solve_dual<T: Real>(
    k: &Array2<T>,
    y: &[T],
    c: T,
    tol: T,
    max_iter: usize,
    seed: u64,
    mut observe: impl FnMut(usize, &[T]),
) -> DualSolution<T> {
    let n = y.len();
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let tau = T::lit(TAU);
    let pos = |t: usize| y[t] > T::zero();
    let upper = |a: T| a >= c;
    let lower = |a: T| a <= T::zero();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i maximizes −y∇ over the "up" set.
        let mut gmax = T::neg_infinity();
        let mut i_sel = None;
        for &t in &order {
            let can = if pos(t) { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if can && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        let mut gmax2 = T::neg_infinity();
        let mut best = T::infinity();
        let mut j_sel = None;
        for &t in &order {
            let can = if pos(t) { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !can {
                continue;
            }
            let yg = y[t] * grad[t];
            if yg > gmax2 {
                gmax2 = yg;
            }
            let diff = gmax + yg;
            if diff > T::zero() {
                let mut quad = k[[i, i]] + k[[t, t]] - T::lit(2.0) * k[[i, t]];
                if quad <= T::zero() {
                    quad = tau;
                }
                let obj = -(diff * diff) / quad;
                if obj < best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel.filter(|_| gmax + gmax2 >= tol) else {
            converged = true;
            break;
        };
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let mut quad = k[[i, i]] + k[[j, j]] - T::lit(2.0) * k[[i, j]];
        if quad <= T::zero() {
            quad = tau;
        }
        let (mut ni, mut nj);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ni = ai + delta;
            nj = aj + delta;
            if diff > T::zero() {
                if nj < T::zero() {
                    nj = T::zero();
                    ni = diff;
                }
            } else if ni < T::zero() {
                ni = T::zero();
                nj = -diff;
            }
            if diff > T::zero() {
                if ni > c {
                    ni = c;
                    nj = c - diff;
                }
            } else if nj > c {
                nj = c;
                ni = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ni = ai - delta;
            nj = aj + delta;
            if sum > c {
                if ni > c {
                    ni = c;
                    nj = sum - c;
                }
            } else if nj < T::zero() {
                nj = T::zero();
                ni = sum;
            }
            if sum > c {
                if nj > c {
                    nj = c;
                    ni = sum - c;
                }
            } else if ni < T::zero() {
                ni = T::zero();
                nj = sum;
            }
        }
        alpha[i] = ni;
        alpha[j] = nj;
        let (di, dj) = (ni - ai, nj - aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[[t, i]] * di + y[j] * k[[t, j]] * dj);
        }
        observe(iterations, &alpha);
    }

    // Offset from free vectors, or the midpoint of the feasible interval.
    let (mut sum, mut free) = (T::zero(), 0usize);
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if pos(t) {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if lower(alpha[t]) {
            if pos(t) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / T::from_usize_lossy(free)
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / T::lit(2.0)
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    DualSolution { alpha, y: y.to_vec(), bias: -rho, iterations, converged }
}

fn check_inputs<T: Real>(x: &Array2<T>, y: &[usize], n_classes: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidInput(format!("class index {bad} out of range")));
    }
    Ok(())
}

pub fn svm_train<T: Real>(x: &Array2<T>, y: &[usize], n_classes: usize, params: &SvmParams) -> Result<SvmModel<T>> {
    svm_train_observed(x, y, n_classes, params, |_| {})
}

/// As [`svm_train`], calling `observe` after every SMO update.
pub fn svm_train_observed<T: Real>(
    x: &Array2<T>,
    y: &[usize],
    n_classes: usize,
    params: &SvmParams,
    mut observe: impl FnMut(&SmoStep<'_, T>),
) -> Result<SvmModel<T>> {
    params.validate()?;
    check_inputs(x, y, n_classes)?;
    let present: Vec<usize> = (0..n_classes).filter(|c| y.contains(c)).collect();
    if present.len() < 2 {
        return Err(Error::InvalidInput("SVM training needs at least two classes".into()));
    }
    let gamma = T::lit(params.gamma.unwrap_or_else(|| scale_gamma(x)));
    let c = T::lit(params.c);
    let tol = T::lit(params.tol);
    let n = x.nrows();
    let mut gram = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = rbf(x.row(i), x.row(j), gamma);
            gram[[i, j]] = v;
            gram[[j, i]] = v;
        }
    }

    let mut pairs = Vec::new();
    for (a, &p) in present.iter().enumerate() {
        for &q in &present[a + 1..] {
            let idx: Vec<usize> = (0..n).filter(|&i| y[i] == p || y[i] == q).collect();
            let sub_y: Vec<T> = idx.iter().map(|&i| if y[i] == p { T::one() } else { -T::one() }).collect();
            let sub_k = gram.select(Axis(0), &idx).select(Axis(1), &idx);
            let max_iter = params.max_iter.unwrap_or((100 * idx.len()).max(1_000_000));
            let sol = solve_dual(&sub_k, &sub_y, c, tol, max_iter, params.seed, |it, alpha| {
                observe(&SmoStep { pair: (p, q), iteration: it, alpha, c })
            });
            let sv: Vec<usize> = (0..idx.len()).filter(|&t| sol.alpha[t] > T::zero()).collect();
            let rows: Vec<usize> = sv.iter().map(|&t| idx[t]).collect();
            pairs.push(BinarySvm {
                positive: p,
                negative: q,
                support_vectors: x.select(Axis(0), &rows),
                dual_coef: sv.iter().map(|&t| sol.alpha[t] * sol.y[t]).collect(),
                bias: sol.bias,
                iterations: sol.iterations,
                converged: sol.converged,
            });
        }
    }
    Ok(SvmModel { n_classes, n_features: x.ncols(), gamma, c, tol, pairs })
}

impl<T: Real> SvmModel<T> {
    /// Per-pair decision values, in `pairs` order.
    pub fn decision_values(&self, x: ArrayView1<T>) -> Result<Vec<T>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(self.pairs.iter().map(|p| p.decision(x, self.gamma)).collect())
    }

    /// One-vs-one vote; ties go to the larger summed winning margin, then
    /// to the lower class index.
    pub fn predict_one(&self, x: ArrayView1<T>) -> Result<usize> {
        let values = self.decision_values(x)?;
        let mut votes = vec![0usize; self.n_classes];
        let mut margin = vec![T::zero(); self.n_classes];
        for (p, &v) in self.pairs.iter().zip(&values) {
            let winner = if v > T::zero() { p.positive } else { p.negative };
            votes[winner] += 1;
            margin[winner] += v.abs();
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]) {
                best = c;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, x: &Array2<T>) -> Result<Vec<usize>> {
        x.axis_iter(Axis(0)).map(|r| self.predict_one(r)).collect()
    }

    pub fn n_support(&self) -> usize {
        self.pairs.iter().map(|p| p.dual_coef.len()).sum()
    }
}

/// Largest KKT violation of a binary solution, computed from scratch:
/// `α = 0 ⇒ y f ≥ 1`, `0 < α < C ⇒ y f = 1`, `α = C ⇒ y f ≤ 1`.
pub fn kkt_violation<T: Real>(x: &Array2<T>, y: &[T], alpha: &[T], bias: T, gamma: T, c: T) -> T {
    let n = y.len();
    let mut worst = T::zero();
    for i in 0..n {
        let f: T = (0..n)
            .filter(|&j| alpha[j] > T::zero())
            .map(|j| alpha[j] * y[j] * rbf(x.row(j), x.row(i), gamma))
            .sum::<T>()
            + bias;
        let m = y[i] * f - T::one();
        let v = if alpha[i] <= T::zero() {
            (-m).max(T::zero())
        } else if alpha[i] >= c {
            m.max(T::zero())
        } else {
            m.abs()
        };
        worst = worst.max(v);
    }
    worst
}

pub fn kernel_matrix<T: Real>(x: &Array2<T>, gamma: T) -> Array2<T> {
    let n = x.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| rbf(x.row(i), x.row(j), gamma))
}

pub fn signs<T: Real>(y: &[usize], positive: usize) -> Vec<T> {
    y.iter().map(|&c| if c == positive { T::one() } else { -T::one() }).collect()
}
