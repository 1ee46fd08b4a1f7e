use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{mse_with_grad, weighted_bce_with_grad};
use super::network::TrainedNetwork;
use super::optim::Adam;
use super::spec::NetworkSpec;
use super::{Features, NnError};
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    #[serde(default)]
    pub early_stopping_patience: usize,
    #[serde(default)]
    pub validation_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 1000,
            early_stopping_patience: 0,
            validation_fraction: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if self.early_stopping_patience > 0 && self.validation_fraction == 0.0 {
            return bad("early stopping needs validation_fraction > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Epoch whose parameters were returned (early stopping only).
    pub best_epoch: Option<usize>,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

enum Task<'a> {
    Regression { labels: &'a [f64] },
    /// Labels are 0/1; `weights` are per-sample class weights `N / N_class`.
    Classification { labels: Vec<f64>, weights: Vec<f64> },
}

/// Fits a regressor by minimising mean squared error with Adam.
pub fn train_regressor(
    spec: &NetworkSpec,
    inputs: &Features,
    labels: &[f64],
    cfg: &TrainConfig,
) -> Result<(TrainedNetwork, TrainReport), NnError> {
    cfg.validate()?;
    if inputs.rows() == 0 {
        return Err(NnError::Empty("training data"));
    }
    if inputs.rows() != labels.len() {
        return Err(NnError::LengthMismatch {
            left: inputs.rows(),
            right: labels.len(),
        });
    }
    if let Some(bad) = labels.iter().find(|y| !y.is_finite()) {
        return Err(NnError::InvalidData(format!("non-finite label {bad}")));
    }
    check_dim(spec, inputs)?;
    let mut idx: Vec<usize> = (0..inputs.rows()).collect();
    let n_val = val_count(idx.len(), cfg.validation_fraction);
    idx.shuffle(&mut rng_for(cfg.seed, "nn-split", 0));
    let (val, train) = idx.split_at(n_val);
    fit(spec, inputs, &Task::Regression { labels }, train, val, cfg)
}

/// Fits a binary classifier (negatives labelled 0, positives 1) on the
/// class-balanced cross-entropy. Validation holdout is stratified by class.
pub fn train_binary_classifier(
    spec: &NetworkSpec,
    negatives: &Features,
    positives: &Features,
    cfg: &TrainConfig,
) -> Result<(TrainedNetwork, TrainReport), NnError> {
    cfg.validate()?;
    if negatives.rows() == 0 {
        return Err(NnError::MissingClass("negative"));
    }
    if positives.rows() == 0 {
        return Err(NnError::MissingClass("positive"));
    }
    check_dim(spec, negatives)?;
    check_dim(spec, positives)?;
    let inputs = negatives.concat(positives)?;
    let n_neg = negatives.rows();
    let labels: Vec<f64> = (0..inputs.rows()).map(|i| if i < n_neg { 0.0 } else { 1.0 }).collect();

    let mut split = rng_for(cfg.seed, "nn-split", 0);
    let mut neg_idx: Vec<usize> = (0..n_neg).collect();
    let mut pos_idx: Vec<usize> = (n_neg..inputs.rows()).collect();
    neg_idx.shuffle(&mut split);
    pos_idx.shuffle(&mut split);
    let nv_neg = val_count(neg_idx.len(), cfg.validation_fraction);
    let nv_pos = val_count(pos_idx.len(), cfg.validation_fraction);
    let mut val: Vec<usize> = neg_idx[..nv_neg].to_vec();
    val.extend_from_slice(&pos_idx[..nv_pos]);
    let mut train: Vec<usize> = neg_idx[nv_neg..].to_vec();
    train.extend_from_slice(&pos_idx[nv_pos..]);

    let train_neg = n_neg - nv_neg;
    let train_pos = pos_idx.len() - nv_pos;
    let total = train.len() as f64;
    let weights = labels
        .iter()
        .map(|&y| {
            if y > 0.5 {
                total / train_pos as f64
            } else {
                total / train_neg as f64
            }
        })
        .collect();
    fit(spec, &inputs, &Task::Classification { labels, weights }, &train, &val, cfg)
}

fn check_dim(spec: &NetworkSpec, x: &Features) -> Result<(), NnError> {
    if x.dim() != spec.input_len() {
        return Err(NnError::InputShape {
            expected: spec.input_len(),
            actual: x.dim(),
        });
    }
    Ok(())
}

/// Holdout size; keeps at least one training sample.
fn val_count(n: usize, fraction: f64) -> usize {
    if fraction <= 0.0 || n < 2 {
        return 0;
    }
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

fn fit(
    spec: &NetworkSpec,
    inputs: &Features,
    task: &Task,
    train: &[usize],
    val: &[usize],
    cfg: &TrainConfig,
) -> Result<(TrainedNetwork, TrainReport), NnError> {
    if cfg.batch_size > train.len() {
        return Err(NnError::InvalidConfig(format!(
            "batch_size {} exceeds {} training samples after the validation split",
            cfg.batch_size,
            train.len()
        )));
    }
    if cfg.early_stopping_patience > 0 && val.is_empty() {
        return Err(NnError::InvalidConfig("validation split is empty".into()));
    }
    let mut net = TrainedNetwork::initialize(spec.clone(), cfg.seed)?;
    let n_params = net.parameters().len();
    let mut adam = Adam::new(n_params, cfg.learning_rate);
    let weight_ranges = net.weight_ranges();
    let l2 = spec.l2_strength;

    let mut shuffle_rng = rng_for(cfg.seed, "nn-shuffle", 0);
    let mut dropout_rng = rng_for(cfg.seed, "nn-dropout", 0);
    let mut order = train.to_vec();
    let mut grads = vec![0.0; n_params];
    let mut report = TrainReport::default();
    let mut best: Option<(f64, usize, Vec<f64>, Vec<f64>)> = None;
    let mut stale = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = inputs.gather(batch);
            let params = net.parameters().to_vec();
            let (out, tape) = net.run(xb.as_slice(), batch.len(), &params, Some(&mut dropout_rng));
            let tape = tape.expect("training pass records a tape");
            let (mut loss, d_out) = match task {
                Task::Regression { labels } => {
                    let yb: Vec<f64> = batch.iter().map(|&i| labels[i]).collect();
                    mse_with_grad(&out, &yb)
                }
                Task::Classification { labels, weights } => {
                    let yb: Vec<f64> = batch.iter().map(|&i| labels[i]).collect();
                    let scale = 1.0 / batch.len() as f64;
                    let wb: Vec<f64> = batch.iter().map(|&i| weights[i] * scale).collect();
                    weighted_bce_with_grad(&out, &yb, &wb)
                }
            };
            net.backward(&tape, &params, d_out, &mut grads);
            if l2 > 0.0 {
                for r in &weight_ranges {
                    for i in r.clone() {
                        loss += l2 * params[i] * params[i];
                        grads[i] += 2.0 * l2 * params[i];
                    }
                }
            }
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(NnError::Divergence { epoch });
            }
            adam.step(net.parameters_mut(), &grads);
            net.update_running_stats(&tape);
            epoch_loss += loss * batch.len() as f64;
        }
        epoch_loss /= order.len() as f64;
        report.train_loss.push(epoch_loss);
        report.epochs_run = epoch + 1;

        if !val.is_empty() {
            let v = evaluate(&net, inputs, task, val)?;
            if !v.is_finite() {
                return Err(NnError::Divergence { epoch });
            }
            report.val_loss.push(v);
            if cfg.early_stopping_patience > 0 {
                if best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, epoch, net.parameters().to_vec(), net.buffers().to_vec()));
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= cfg.early_stopping_patience {
                        break;
                    }
                }
            }
        }
    }
    if let Some((_, epoch, params, buffers)) = best {
        net.set_state(&params, &buffers);
        report.best_epoch = Some(epoch);
    }
    Ok((net, report))
}

/// Holdout loss in inference mode; classification uses per-class means.
fn evaluate(net: &TrainedNetwork, inputs: &Features, task: &Task, idx: &[usize]) -> Result<f64, NnError> {
    let xb = inputs.gather(idx);
    let out = net.forward_batch(xb.as_slice(), idx.len())?;
    Ok(match task {
        Task::Regression { labels } => {
            let yb: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
            mse_with_grad(&out, &yb).0
        }
        Task::Classification { labels, .. } => {
            let yb: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
            let n_pos = yb.iter().filter(|&&y| y > 0.5).count().max(1) as f64;
            let n_neg = yb.iter().filter(|&&y| y <= 0.5).count().max(1) as f64;
            let wb: Vec<f64> = yb.iter().map(|&y| if y > 0.5 { 1.0 / n_pos } else { 1.0 / n_neg }).collect();
            weighted_bce_with_grad(&out, &yb, &wb).0
        }
    })
}
