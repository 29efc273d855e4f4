//! Cross-entropy loss over softmax probabilities.

use super::Batch;

/// Mean negative log-likelihood of the true classes. `probs` holds one
/// probability per class (length-1 feature maps); probabilities are floored
/// at 1e-12 before the log.
pub fn cross_entropy_mean(probs: &Batch, labels: &[usize]) -> f64 {
    assert_eq!(probs.n, labels.len(), "one label per sample");
    assert_eq!(probs.len, 1, "loss expects one probability per class");
    let mut total = 0.0;
    for (b, &y) in labels.iter().enumerate() {
        assert!(y < probs.channels, "label out of class range");
        let p = probs.data[b * probs.channels + y];
        total += -libm::log(p.max(1e-12));
    }
    total / probs.n as f64
}

/// Gradient of the mean cross-entropy with respect to the pre-softmax
/// logits: `(p - onehot(y)) / n` per sample. Pairing the softmax with the
/// loss this way avoids the ill-conditioned `-1/p` intermediate.
pub fn cross_entropy_grad_wrt_logits(probs: &Batch, labels: &[usize]) -> Batch {
    assert_eq!(probs.n, labels.len(), "one label per sample");
    let mut grad = probs.clone();
    let inv_n = 1.0 / probs.n as f64;
    for (b, &y) in labels.iter().enumerate() {
        let row = &mut grad.data[b * probs.channels..(b + 1) * probs.channels];
        for (c, g) in row.iter_mut().enumerate() {
            *g = (*g - if c == y { 1.0 } else { 0.0 }) * inv_n;
        }
    }
    grad
}

/// Same gradient taken through the explicit softmax Jacobian; used to
/// cross-check the fused form.
#[cfg(test)]
pub fn composed_grad_wrt_logits(logits: &Batch, labels: &[usize]) -> Batch {
    let mut sm = super::Softmax::default();
    let probs = sm.forward(logits);
    let mut dl_dp = Batch::zeros(probs.n, probs.channels, 1);
    let inv_n = 1.0 / probs.n as f64;
    for (b, &y) in labels.iter().enumerate() {
        let p = probs.data[b * probs.channels + y];
        dl_dp.data[b * probs.channels + y] = -inv_n / p.max(1e-12);
    }
    sm.backward(&dl_dp)
}
