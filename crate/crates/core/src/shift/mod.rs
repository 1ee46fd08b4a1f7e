//! Distribution-shift scores from a probabilistic train-vs-design classifier.

mod gaussian;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gaussian::{
    analytic_gaussian_ratio, dominance_frequency, gaussian_log_ratio, gaussian_log_score_gradient,
    ratio_recovery_diagnostic, GaussianPair, RatioRecovery, MIN_DIAGNOSTIC_SAMPLES,
};

use crate::csvfmt::{fmt_f64, write_rows};
use crate::landscape::{InputKind, Inputs};
use crate::nn::{self, clamp_logit, sigmoid, train_binary_classifier, NetworkSpec, NnError, TrainConfig, TrainReport, TrainedNetwork};
use crate::surrogate::{check_kind, SurrogateError};

#[derive(Debug, Error)]
pub enum ShiftError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("{0} class is empty")]
    EmptyClass(&'static str),
    #[error("training and design inputs have different kinds")]
    KindMismatch,
    #[error("invalid Gaussian pair: {0}")]
    InvalidPair(String),
    #[error("need at least {min} samples per class, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Negatives (training inputs, label 0) and positives (designs, label 1).
#[derive(Debug, Clone, PartialEq)]
pub struct OodTrainingSet {
    pub negatives: Inputs,
    pub positives: Inputs,
}

/// Pairs training inputs with designed inputs, keeping order and duplicates.
pub fn build_ood_training_set(train: &Inputs, design: &Inputs) -> Result<OodTrainingSet, ShiftError> {
    if train.is_empty() {
        return Err(ShiftError::EmptyClass("negative"));
    }
    if design.is_empty() {
        return Err(ShiftError::EmptyClass("positive"));
    }
    if train.kind() != design.kind() {
        return Err(ShiftError::KindMismatch);
    }
    Ok(OodTrainingSet {
        negatives: train.clone(),
        positives: design.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OODClassifier {
    network: TrainedNetwork,
    kind: InputKind,
    negative_fingerprint: String,
    positive_fingerprint: String,
}

/// One input's shift score. `logit` is the raw network output; `log_score`
/// is the clamped logit, so `score = exp(log_score) = rho / (1 - rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftScore {
    pub logit: f64,
    pub rho: f64,
    pub score: f64,
    pub log_score: f64,
}

impl ShiftScore {
    pub fn from_logit(logit: f64) -> Self {
        let g = clamp_logit(logit);
        Self {
            logit,
            rho: sigmoid(g),
            score: g.exp(),
            log_score: g,
        }
    }
}

/// Fits the classifier separating `set.negatives` from `set.positives`.
pub fn fit_ood_classifier(
    set: &OodTrainingSet,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<(OODClassifier, TrainReport), ShiftError> {
    let kind = set.negatives.kind().ok_or(ShiftError::EmptyClass("negative"))?;
    let (network, report) =
        train_binary_classifier(spec, &set.negatives.features(), &set.positives.features(), cfg)?;
    Ok((
        OODClassifier {
            network,
            kind,
            negative_fingerprint: set.negatives.fingerprint(),
            positive_fingerprint: set.positives.fingerprint(),
        },
        report,
    ))
}

impl OODClassifier {
    pub fn network(&self) -> &TrainedNetwork {
        &self.network
    }

    pub fn kind(&self) -> &InputKind {
        &self.kind
    }

    pub fn negative_fingerprint(&self) -> &str {
        &self.negative_fingerprint
    }

    pub fn positive_fingerprint(&self) -> &str {
        &self.positive_fingerprint
    }

    /// Raw logits `g(x)`.
    pub fn logits(&self, inputs: &Inputs) -> Result<Vec<f64>, ShiftError> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        check_kind(&self.kind, inputs)?;
        Ok(self.network.predict(&inputs.features())?)
    }

    /// `sigmoid(clamp(g(x)))`, strictly inside (0, 1).
    pub fn ood_probability(&self, inputs: &Inputs) -> Result<Vec<f64>, ShiftError> {
        Ok(self.logits(inputs)?.into_iter().map(|g| sigmoid(clamp_logit(g))).collect())
    }

    pub fn ood_score(&self, inputs: &Inputs) -> Result<Vec<ShiftScore>, ShiftError> {
        Ok(self.logits(inputs)?.into_iter().map(ShiftScore::from_logit).collect())
    }

    /// Writes the network plus a `<stem>.ood.json` sidecar; returns every path written.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, ShiftError> {
        let mut files = nn::io::save(&self.network, dir, stem)?;
        let path = dir.join(format!("{stem}.ood.json"));
        let sidecar = Sidecar {
            input_kind: self.kind.clone(),
            negative_fingerprint: self.negative_fingerprint.clone(),
            positive_fingerprint: self.positive_fingerprint.clone(),
            spec: self.network.spec().clone(),
        };
        std::fs::write(&path, serde_json::to_string_pretty(&sidecar).map_err(SurrogateError::from)?)
            .map_err(SurrogateError::from)?;
        files.push(path);
        Ok(files)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self, ShiftError> {
        let text = std::fs::read_to_string(dir.join(format!("{stem}.ood.json"))).map_err(SurrogateError::from)?;
        let sidecar: Sidecar = serde_json::from_str(&text).map_err(SurrogateError::from)?;
        let network = nn::io::load(dir, stem)?;
        if *network.spec() != sidecar.spec || sidecar.spec.input_shape != sidecar.input_kind.shape() {
            return Err(NnError::Format("sidecar does not match stored classifier".into()).into());
        }
        Ok(Self {
            network,
            kind: sidecar.input_kind,
            negative_fingerprint: sidecar.negative_fingerprint,
            positive_fingerprint: sidecar.positive_fingerprint,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    input_kind: InputKind,
    negative_fingerprint: String,
    positive_fingerprint: String,
    spec: NetworkSpec,
}

/// Writes `id,logit,rho,score,log_score`.
pub fn write_scores_csv(path: &Path, scores: &[ShiftScore]) -> Result<(), ShiftError> {
    write_rows(
        path,
        &["id", "logit", "rho", "score", "log_score"],
        scores.iter().enumerate().map(|(i, s)| {
            vec![
                i.to_string(),
                fmt_f64(s.logit),
                fmt_f64(s.rho),
                fmt_f64(s.score),
                fmt_f64(s.log_score),
            ]
        }),
    )?;
    Ok(())
}
