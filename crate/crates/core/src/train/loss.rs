use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

/// Softmax with the maximum subtracted first.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of one logit vector against `label`, with its gradient
/// `softmax − onehot`.
pub fn softmax_xent<T: Scalar>(logits: &[T], label: usize) -> Result<(T, Vec<T>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
    let loss = log_sum - (logits[label] - max);
    let mut grad = softmax(logits);
    grad[label] -= T::one();
    Ok((loss, grad))
}

/// Mean cross-entropy over a batch of logits `(n, classes, 1, 1, 1)`.
///
/// Returns the per-sample losses and the gradient of their mean.
pub fn batch_xent<T: Scalar>(
    logits: &Tensor5<T>,
    labels: &[usize],
) -> Result<(Vec<T>, Tensor5<T>)> {
    let s = logits.shape();
    if s.n != labels.len() {
        return Err(Error::CountMismatch {
            what: "labels",
            expected: s.n,
            got: labels.len(),
        });
    }
    let classes = s.numel() / s.n;
    let scale = T::one() / T::of(s.n as f64);
    let mut losses = Vec::with_capacity(s.n);
    let mut grad = Vec::with_capacity(s.numel());
    for (row, &label) in logits.as_slice().chunks(classes).zip(labels) {
        let (l, g) = softmax_xent(row, label)?;
        losses.push(l);
        grad.extend(g.into_iter().map(|v| v * scale));
    }
    Ok((losses, Tensor5::from_vec(s, grad)?))
}
