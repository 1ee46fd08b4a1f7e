//! One-dimensional Gaussian diagnostics: classifier ratio recovery, the
//! first-term dominance Monte Carlo and the log-score gradient identity.

use rand::Rng;

use super::{Artifacts, ExperimentConfig, HarnessError, Stage};
use crate::csvfmt::{fmt_f64, write_rows};
use crate::nn::InputShape;
use crate::seed::{derive_seed, rng_for};
use crate::shift::{
    dominance_frequency, gaussian_log_ratio, gaussian_log_score_gradient, ratio_recovery_diagnostic, GaussianPair,
};

pub const REPORT: &str = "gaussian_report.csv";

/// Finite-difference step for the gradient identity.
const FD_STEP: f64 = 1e-5;

pub(super) fn run(cfg: &ExperimentConfig, stage: Stage, art: &mut Artifacts) -> Result<(), HarnessError> {
    if stage != Stage::Evaluate {
        return Err(HarnessError::NotApplicable {
            stage: stage.name(),
            kind: cfg.kind,
        });
    }
    let g = &cfg.gaussian;
    let spec = g.classifier.architecture.build(InputShape::Vector { len: 1 });
    let mut report: Vec<(String, &str, f64)> = Vec::new();
    for (i, pc) in g.pairs.iter().enumerate() {
        let pair = GaussianPair::new(pc.mu_tr, pc.sigma_tr, pc.mu_de, pc.sigma_de)?;
        let train = g.classifier.train.with_seed(derive_seed(cfg.seed, "gaussian-classifier", i as u64));
        let rec = ratio_recovery_diagnostic(&pair, g.n_per_class, &spec, &train, derive_seed(cfg.seed, "gaussian-pair", i as u64))?;
        report.push((pc.name.clone(), "spearman", rec.spearman));
        report.push((pc.name.clone(), "median_abs_log_error", rec.median_abs_log_error));
        report.push((pc.name.clone(), "n_compared", rec.n_compared as f64));
        write_rows(
            &art.create(&format!("gaussian_recovery_{}.csv", pc.name))?,
            &["x", "true_log_ratio", "estimated_log_ratio"],
            rec.xs
                .iter()
                .zip(rec.true_log_ratio.iter().zip(&rec.estimated_log_ratio))
                .map(|(x, (t, e))| vec![fmt_f64(*x), fmt_f64(*t), fmt_f64(*e)]),
        )?;
    }

    let mut rng = rng_for(cfg.seed, "gaussian-dominance-pairs", 0);
    let mut freqs = Vec::with_capacity(g.dominance_pairs);
    for i in 0..g.dominance_pairs {
        let pair = dominant_pair(&mut rng)?;
        freqs.push(dominance_frequency(&pair, g.dominance_samples, derive_seed(cfg.seed, "gaussian-dominance", i as u64))?);
    }
    report.push(("dominance".into(), "min_frequency", freqs.iter().copied().fold(f64::INFINITY, f64::min)));
    report.push(("dominance".into(), "mean_frequency", freqs.iter().sum::<f64>() / freqs.len() as f64));

    let mut rng = rng_for(cfg.seed, "gaussian-gradient", 0);
    let mut worst = 0.0f64;
    for _ in 0..g.gradient_draws {
        let pair = GaussianPair::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(0.3..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.3..3.0),
        )?;
        let x = rng.random_range(-6.0..6.0);
        worst = worst.max(gradient_error(&pair, x));
    }
    report.push(("gradient".into(), "max_rel_error", worst));
    report.push(("gradient".into(), "draws", g.gradient_draws as f64));

    write_rows(
        &art.create(REPORT)?,
        &["pair", "metric", "value"],
        report.into_iter().map(|(p, m, v)| vec![p, m.to_string(), fmt_f64(v)]),
    )?;
    Ok(())
}

/// A random pair meeting the dominance conditions: offset of 3 to 6 training
/// standard deviations and a design spread 2 to 4 times wider.
pub(crate) fn dominant_pair<R: Rng>(rng: &mut R) -> Result<GaussianPair, HarnessError> {
    let mu_tr = rng.random_range(-2.0..2.0);
    let sigma_tr = rng.random_range(0.5..2.0);
    let offset = rng.random_range(3.0..6.0) * sigma_tr * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let sigma_de = rng.random_range(2.0..4.0) * sigma_tr;
    Ok(GaussianPair::new(mu_tr, sigma_tr, mu_tr + offset, sigma_de)?)
}

/// Relative error of the analytic gradient against a central difference of
/// the log ratio, with a unit floor on the denominator.
pub(crate) fn gradient_error(p: &GaussianPair, x: f64) -> f64 {
    let fd = (gaussian_log_ratio(p, x + FD_STEP) - gaussian_log_ratio(p, x - FD_STEP)) / (2.0 * FD_STEP);
    let an = gaussian_log_score_gradient(p, x);
    (an - fd).abs() / an.abs().max(1.0)
}
