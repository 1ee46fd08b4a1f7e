use super::network::sigmoid;
use super::NnError;

/// Logits are clamped to this magnitude before entering a sigmoid.
pub const LOGIT_CLAMP: f64 = 30.0;

pub fn clamp_logit(g: f64) -> f64 {
    g.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
}

/// Mean of squared differences.
pub fn mse_loss(predictions: &[f64], labels: &[f64]) -> Result<f64, NnError> {
    if predictions.len() != labels.len() {
        return Err(NnError::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(NnError::Empty("mse_loss inputs"));
    }
    let sum: f64 = predictions.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(sum / predictions.len() as f64)
}

/// Class-balanced binary cross-entropy: the mean of `-ln(1 - rho)` over the
/// training (negative) class plus the mean of `-ln rho` over the design
/// (positive) class.
pub fn bce_loss(probs_train: &[f64], probs_design: &[f64]) -> Result<f64, NnError> {
    if probs_train.is_empty() || probs_design.is_empty() {
        return Err(NnError::Empty("bce_loss class"));
    }
    for &p in probs_train.iter().chain(probs_design) {
        if !(p > 0.0 && p < 1.0) {
            return Err(NnError::ProbabilityDomain(p));
        }
    }
    let neg = probs_train.iter().map(|p| -(-p).ln_1p()).sum::<f64>() / probs_train.len() as f64;
    let pos = probs_design.iter().map(|p| -p.ln()).sum::<f64>() / probs_design.len() as f64;
    Ok(neg + pos)
}

/// `ln(1 + e^g)` without overflow.
pub(crate) fn softplus(g: f64) -> f64 {
    g.max(0.0) + (-g.abs()).exp().ln_1p()
}

/// Mean squared error on a batch and its gradient with respect to the
/// predictions.
pub(crate) fn mse_with_grad(pred: &[f64], labels: &[f64]) -> (f64, Vec<f64>) {
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(labels)
        .map(|(p, y)| {
            let d = p - y;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    (loss / n, grad)
}

/// `sum_i w_i * bce(logit_i, label_i)` on clamped logits, and its gradient
/// with respect to the raw logits (zero outside the clamp range).
pub(crate) fn weighted_bce_with_grad(logits: &[f64], labels: &[f64], weights: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = logits
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((&g, &y), &w)| {
            let c = clamp_logit(g);
            loss += w * if y > 0.5 { softplus(-c) } else { softplus(c) };
            if g.abs() < LOGIT_CLAMP {
                w * (sigmoid(c) - y)
            } else {
                0.0
            }
        })
        .collect();
    (loss, grad)
}
