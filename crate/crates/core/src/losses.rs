//! Objectives for the two networks, each returning its value together with
//! the exact gradient with respect to the prediction.
//!
//! * [`mse`]: pixelwise mean squared error, the structural objective.
//! * [`sm_mse`]: sorted-matching MSE. Both patches are sorted ascending and
//!   compared rank by rank, so any rearrangement of the target pixels gives
//!   the same value. The gradient flows back through the prediction's sort
//!   permutation the same way max pooling routes gradients to its argmax.
//! * [`textural_loss`]: `mse + beta * sm_mse`.
//! * [`softmax_parsing_loss`]: per-pixel softmax cross-entropy for parsing.

use crate::error::{Error, Result};
use crate::parsing::{softmax3, LabelMap};
use crate::tensor::Tensor;

/// A scalar objective and its gradient with respect to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Tensor,
}

impl LossValue {
    /// `self + weight * other`, gradients summed the same way.
    pub fn add_weighted(mut self, other: &LossValue, weight: f64) -> Result<LossValue> {
        self.value += weight * other.value;
        self.grad.add_scaled(&other.grad, weight)?;
        Ok(self)
    }
}

/// Maps sorted rank to original flat index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortPermutation {
    indices: Vec<usize>,
}

impl SortPermutation {
    /// Stable ascending argsort: equal values keep their original order.
    pub fn ascending(values: &[f64]) -> Self {
        let mut indices: Vec<usize> = (0..values.len()).collect();
        indices.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        SortPermutation { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| values[i]).collect()
    }
}

pub fn mse(pred: &Tensor, target: &Tensor) -> Result<LossValue> {
    pred.check_same_shape(target, "mse")?;
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred.zip_map(target, |p, t| 2.0 * (p - t) / n)?;
    for (p, t) in pred.data().iter().zip(target.data()) {
        value += (p - t) * (p - t);
    }
    Ok(LossValue {
        value: value / n,
        grad,
    })
}

/// Sorted-matching MSE over the whole patch.
pub fn sm_mse(pred: &Tensor, target: &Tensor) -> Result<LossValue> {
    pred.check_same_shape(target, "sm_mse")?;
    let n = pred.len() as f64;
    let perm = SortPermutation::ascending(pred.data());
    let sorted_pred = perm.apply(pred.data());
    let mut sorted_target = target.data().to_vec();
    sorted_target.sort_by(f64::total_cmp);

    let mut value = 0.0;
    let mut grad = Tensor::zeros(pred.channels(), pred.height(), pred.width());
    let g = grad.data_mut();
    for (rank, &src) in perm.indices().iter().enumerate() {
        let d = sorted_pred[rank] - sorted_target[rank];
        value += d * d;
        g[src] = 2.0 * d / n;
    }
    Ok(LossValue {
        value: value / n,
        grad,
    })
}

/// `mse(pred, target) + beta * sm_mse(pred, target)`.
pub fn textural_loss(pred: &Tensor, target: &Tensor, beta: f64) -> Result<LossValue> {
    if !(beta >= 0.0) {
        return Err(Error::invalid("textural_loss", format!("beta must be non-negative, got {beta}")));
    }
    let base = mse(pred, target)?;
    if beta == 0.0 {
        return Ok(base);
    }
    base.add_weighted(&sm_mse(pred, target)?, beta)
}

/// Mean negative log-likelihood of the true class under a per-pixel softmax
/// over the three logit channels.
pub fn softmax_parsing_loss(logits: &Tensor, labels: &LabelMap) -> Result<LossValue> {
    if logits.channels() != 3 {
        return Err(Error::invalid(
            "softmax_parsing_loss",
            format!("logits must have 3 channels, got {}", logits.shape()),
        ));
    }
    if logits.height() != labels.height() || logits.width() != labels.width() {
        return Err(Error::invalid(
            "softmax_parsing_loss",
            format!(
                "logits {} do not match {}x{} labels",
                logits.shape(),
                labels.height(),
                labels.width()
            ),
        ));
    }
    let plane = logits.height() * logits.width();
    let n = plane as f64;
    let z = logits.data();
    let mut grad = Tensor::zeros(3, logits.height(), logits.width());
    let g = grad.data_mut();
    let mut value = 0.0;
    for (p, region) in labels.labels().iter().enumerate() {
        let zs = [z[p], z[plane + p], z[2 * plane + p]];
        let m = zs[0].max(zs[1]).max(zs[2]);
        let lse = m + zs.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let true_c = region.channel();
        value += lse - zs[true_c];
        let probs = softmax3(zs);
        for c in 0..3 {
            let onehot = if c == true_c { 1.0 } else { 0.0 };
            g[c * plane + p] = (probs[c] - onehot) / n;
        }
    }
    Ok(LossValue {
        value: value / n,
        grad,
    })
}

/// The combined branch objective `L_g = L_s + alpha * L_t`.
///
/// The two terms are measured on different outputs (structural and textural
/// maps), so each keeps its own gradient; the textural gradient is already
/// scaled by `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedLoss {
    pub value: f64,
    pub structural: LossValue,
    pub textural: LossValue,
}

pub fn combined_bfcn_loss(structural: LossValue, mut textural: LossValue, alpha: f64) -> Result<CombinedLoss> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("combined_bfcn_loss", format!("alpha must be non-negative, got {alpha}")));
    }
    let value = structural.value + alpha * textural.value;
    textural.value *= alpha;
    textural.grad.scale(alpha);
    Ok(CombinedLoss {
        value,
        structural,
        textural,
    })
}
