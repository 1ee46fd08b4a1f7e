//! One-dimensional Gaussian benchmark with a closed-form density ratio.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ShiftError;
use crate::nn::{clamp_logit, train_binary_classifier, Features, NetworkSpec, TrainConfig};
use crate::seed::rng_for;
use crate::stats::{median, spearman};

/// Minimum samples per class accepted by the recovery diagnostic.
pub const MIN_DIAGNOSTIC_SAMPLES: usize = 500;

/// Training (`tr`) and design (`de`) Gaussians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPair {
    pub mu_tr: f64,
    pub sigma_tr: f64,
    pub mu_de: f64,
    pub sigma_de: f64,
}

impl GaussianPair {
    pub fn new(mu_tr: f64, sigma_tr: f64, mu_de: f64, sigma_de: f64) -> Result<Self, ShiftError> {
        let p = Self {
            mu_tr,
            sigma_tr,
            mu_de,
            sigma_de,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ShiftError> {
        if !(self.mu_tr.is_finite() && self.mu_de.is_finite()) {
            return Err(ShiftError::InvalidPair("means must be finite".into()));
        }
        if !(self.sigma_tr > 0.0 && self.sigma_de > 0.0 && self.sigma_tr.is_finite() && self.sigma_de.is_finite()) {
            return Err(ShiftError::InvalidPair("standard deviations must be positive".into()));
        }
        Ok(())
    }

    /// `|mu_de - mu_tr| >= 3 sigma_tr` and `sigma_de >= 2 sigma_tr`.
    pub fn first_term_dominates(&self) -> bool {
        (self.mu_de - self.mu_tr).abs() >= 3.0 * self.sigma_tr && self.sigma_de >= 2.0 * self.sigma_tr
    }

    pub fn density_tr(&self, x: f64) -> f64 {
        normal_pdf(x, self.mu_tr, self.sigma_tr)
    }

    pub fn density_de(&self, x: f64) -> f64 {
        normal_pdf(x, self.mu_de, self.sigma_de)
    }
}

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// `log p_de(x) - log p_tr(x)`.
pub fn gaussian_log_ratio(p: &GaussianPair, x: f64) -> f64 {
    let zt = (x - p.mu_tr) / p.sigma_tr;
    let zd = (x - p.mu_de) / p.sigma_de;
    0.5 * (zt * zt - zd * zd) + (p.sigma_tr / p.sigma_de).ln()
}

pub fn analytic_gaussian_ratio(p: &GaussianPair, x: f64) -> f64 {
    gaussian_log_ratio(p, x).exp()
}

/// Derivative of the log ratio at `x`.
pub fn gaussian_log_score_gradient(p: &GaussianPair, x: f64) -> f64 {
    (x - p.mu_tr) / (p.sigma_tr * p.sigma_tr) - (x - p.mu_de) / (p.sigma_de * p.sigma_de)
}

/// Fraction of `n` draws from the design Gaussian at which the training
/// term of the gradient outweighs the design term.
pub fn dominance_frequency(p: &GaussianPair, n: usize, seed: u64) -> Result<f64, ShiftError> {
    p.validate()?;
    let mut rng = rng_for(seed, "gaussian-dominance", 0);
    let de = Normal::new(p.mu_de, p.sigma_de).map_err(|e| ShiftError::InvalidPair(e.to_string()))?;
    let wins = (0..n)
        .filter(|_| {
            let x = de.sample(&mut rng);
            ((x - p.mu_tr) / (p.sigma_tr * p.sigma_tr)).abs() > ((x - p.mu_de) / (p.sigma_de * p.sigma_de)).abs()
        })
        .count();
    Ok(wins as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecovery {
    /// Spearman correlation between estimated and true ratios, pooled sample.
    pub spearman: f64,
    /// Median `|log s_hat - log s|` where both densities exceed 1e-3.
    pub median_abs_log_error: f64,
    pub n_compared: usize,
    /// Pooled sample (negatives first) with true and estimated log ratios.
    pub xs: Vec<f64>,
    pub true_log_ratio: Vec<f64>,
    pub estimated_log_ratio: Vec<f64>,
}

/// Samples both Gaussians, fits a classifier and compares its odds with the
/// closed-form ratio.
pub fn ratio_recovery_diagnostic(
    p: &GaussianPair,
    n_per_class: usize,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<RatioRecovery, ShiftError> {
    p.validate()?;
    if n_per_class < MIN_DIAGNOSTIC_SAMPLES {
        return Err(ShiftError::TooFewSamples {
            min: MIN_DIAGNOSTIC_SAMPLES,
            got: n_per_class,
        });
    }
    let bad = |e: rand_distr::NormalError| ShiftError::InvalidPair(e.to_string());
    let tr = Normal::new(p.mu_tr, p.sigma_tr).map_err(bad)?;
    let de = Normal::new(p.mu_de, p.sigma_de).map_err(bad)?;
    let mut rng = rng_for(seed, "gaussian-samples", 0);
    let neg: Vec<f64> = (0..n_per_class).map(|_| tr.sample(&mut rng)).collect();
    let pos: Vec<f64> = (0..n_per_class).map(|_| de.sample(&mut rng)).collect();
    let (net, _) = train_binary_classifier(
        spec,
        &Features::new(neg.clone(), 1)?,
        &Features::new(pos.clone(), 1)?,
        cfg,
    )?;
    let xs: Vec<f64> = neg.into_iter().chain(pos).collect();
    let estimated: Vec<f64> = net
        .predict(&Features::new(xs.clone(), 1)?)?
        .into_iter()
        .map(clamp_logit)
        .collect();
    let truth: Vec<f64> = xs.iter().map(|&x| gaussian_log_ratio(p, x)).collect();
    let errors: Vec<f64> = xs
        .iter()
        .zip(estimated.iter().zip(&truth))
        .filter(|(&x, _)| p.density_tr(x) > 1e-3 && p.density_de(x) > 1e-3)
        .map(|(_, (e, t))| (e - t).abs())
        .collect();
    Ok(RatioRecovery {
        spearman: spearman(&estimated, &truth),
        median_abs_log_error: if errors.is_empty() { f64::NAN } else { median(&errors) },
        n_compared: errors.len(),
        xs,
        true_log_ratio: truth,
        estimated_log_ratio: estimated,
    })
}
