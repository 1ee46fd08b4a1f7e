//! Finite-difference verification of backpropagated gradients.
//!
//! The numeric side only ever calls the forward pass, so it is independent
//! of the analytic backward code it checks.

use super::loss::{mse_with_grad, weighted_bce_with_grad};
use super::network::TrainedNetwork;
use super::{Features, NnError};
use crate::seed::rng_for;

/// Loss to differentiate. Classification targets are 0/1 and are weighted
/// per class so the loss equals the class-balanced cross-entropy exactly.
#[derive(Debug, Clone)]
pub enum GradLoss {
    Mse(Vec<f64>),
    Bce(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub n_params: usize,
}

/// Denominator floor for relative errors, so parameters whose gradient is
/// numerically zero are judged on absolute error.
pub const REL_FLOOR: f64 = 1e-5;

/// Total training-mode loss (data term plus L2) at `params`. The dropout
/// stream is re-seeded on every call so masks are identical across calls.
pub fn training_loss(
    net: &TrainedNetwork,
    params: &[f64],
    x: &Features,
    loss: &GradLoss,
    dropout_seed: u64,
) -> Result<f64, NnError> {
    Ok(loss_and_grad(net, params, x, loss, dropout_seed, false)?.0)
}

fn loss_and_grad(
    net: &TrainedNetwork,
    params: &[f64],
    x: &Features,
    loss: &GradLoss,
    dropout_seed: u64,
    with_grad: bool,
) -> Result<(f64, Vec<f64>), NnError> {
    net.check_batch(x.as_slice(), x.rows())?;
    let mut rng = rng_for(dropout_seed, "gradcheck-dropout", 0);
    let (out, tape) = net.run(x.as_slice(), x.rows(), params, Some(&mut rng));
    let (mut value, d_out) = match loss {
        GradLoss::Mse(y) => mse_with_grad(&out, y),
        GradLoss::Bce(y) => {
            let n_pos = y.iter().filter(|&&v| v > 0.5).count().max(1) as f64;
            let n_neg = y.iter().filter(|&&v| v <= 0.5).count().max(1) as f64;
            let w: Vec<f64> = y.iter().map(|&v| if v > 0.5 { 1.0 / n_pos } else { 1.0 / n_neg }).collect();
            weighted_bce_with_grad(&out, y, &w)
        }
    };
    let l2 = net.spec().l2_strength;
    let mut grads = vec![0.0; params.len()];
    if with_grad {
        net.backward(&tape.expect("training pass"), params, d_out, &mut grads);
    }
    for r in net.weight_ranges() {
        for i in r {
            value += l2 * params[i] * params[i];
            grads[i] += 2.0 * l2 * params[i];
        }
    }
    Ok((value, grads))
}

/// Backpropagated gradient of `training_loss`.
pub fn analytic_gradient(
    net: &TrainedNetwork,
    x: &Features,
    loss: &GradLoss,
    dropout_seed: u64,
) -> Result<Vec<f64>, NnError> {
    Ok(loss_and_grad(net, net.parameters(), x, loss, dropout_seed, true)?.1)
}

/// Central differences of `training_loss` with step `h`.
pub fn numeric_gradient(
    net: &TrainedNetwork,
    x: &Features,
    loss: &GradLoss,
    dropout_seed: u64,
    h: f64,
) -> Result<Vec<f64>, NnError> {
    let mut params = net.parameters().to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + h;
        let up = training_loss(net, &params, x, loss, dropout_seed)?;
        params[i] = orig - h;
        let down = training_loss(net, &params, x, loss, dropout_seed)?;
        params[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

pub fn check_gradients(
    net: &TrainedNetwork,
    x: &Features,
    loss: &GradLoss,
    dropout_seed: u64,
    h: f64,
) -> Result<GradCheck, NnError> {
    let a = analytic_gradient(net, x, loss, dropout_seed)?;
    let n = numeric_gradient(net, x, loss, dropout_seed, h)?;
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        n_params: a.len(),
    };
    for (i, (ga, gn)) in a.iter().zip(&n).enumerate() {
        let rel = (ga - gn).abs() / ga.abs().max(gn.abs()).max(REL_FLOOR);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    Ok(report)
}
