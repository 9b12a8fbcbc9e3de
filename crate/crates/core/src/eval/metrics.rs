use serde::{Deserialize, Serialize};

use crate::dataio::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<Label>,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

pub fn confusion(truth: &[Label], predicted: &[Label], classes: &[Label]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: predicted.len() });
    }
    let index = |l: &Label| {
        classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::InvalidInput(format!("label {l} is not one of the evaluated classes")))
    };
    let mut counts = vec![vec![0; classes.len()]; classes.len()];
    for (t, p) in truth.iter().zip(predicted) {
        counts[index(t)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix { classes: classes.to_vec(), counts })
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total().max(1) as f64
    }

    fn predicted_as(&self, j: usize) -> usize {
        self.counts.iter().map(|row| row[j]).sum()
    }
}

/// A rate whose denominator may be zero; undefined values read as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub undefined: bool,
}

impl Rate {
    fn of(num: usize, den: usize) -> Rate {
        if den == 0 {
            Rate { value: 0.0, undefined: true }
        } else {
            Rate { value: num as f64 / den as f64, undefined: false }
        }
    }
}

/// `TP / (TP + FP)` per class, in class order.
pub fn precision_per_class(cm: &ConfusionMatrix) -> Vec<Rate> {
    (0..cm.classes.len()).map(|j| Rate::of(cm.counts[j][j], cm.predicted_as(j))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensSpec {
    pub sens: Rate,
    pub spec: Rate,
}

/// Sensitivity and specificity of detecting any non-normal class, after
/// collapsing the matrix to problem vs normal.
pub fn heart_problem_sens_spec(cm: &ConfusionMatrix) -> Result<SensSpec> {
    let normal = cm
        .classes
        .iter()
        .position(|&c| c == Label::Normal)
        .ok_or_else(|| Error::InvalidInput("confusion matrix has no normal class".into()))?;
    let (mut tp, mut fn_, mut tn, mut fp) = (0, 0, 0, 0);
    for (i, row) in cm.counts.iter().enumerate() {
        for (j, &n) in row.iter().enumerate() {
            match (i == normal, j == normal) {
                (false, false) => tp += n,
                (false, true) => fn_ += n,
                (true, true) => tn += n,
                (true, false) => fp += n,
            }
        }
    }
    Ok(SensSpec { sens: Rate::of(tp, tp + fn_), spec: Rate::of(tn, tn + fp) })
}

/// `sens + spec − 1`, rounded to 12 decimals so that decimal inputs give
/// decimal outputs (0.54 + 0.77 − 1 = 0.31, not 0.31000000000000005).
pub fn youden(sens: f64, spec: f64) -> f64 {
    round12(sens + spec - 1.0)
}

/// `(√3/π)(log10(s/(1−s)) + log10(p/(1−p)))`; `None` when either rate is 0
/// or 1, where a log-odds term diverges.
pub fn discriminant_power(sens: f64, spec: f64) -> Option<f64> {
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !(open(sens) && open(spec)) {
        return None;
    }
    let logit = |v: f64| (v / (1.0 - v)).log10();
    Some(3f64.sqrt() / std::f64::consts::PI * (logit(sens) + logit(spec)))
}

pub fn total_precision(precisions: &[f64]) -> f64 {
    round12(precisions.iter().sum())
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}
