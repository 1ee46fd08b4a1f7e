//! Property-predicting surrogate models and deep ensembles.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{InputKind, Inputs, LabeledDataset, LandscapeError};
use crate::nn::{self, mse_loss, train_regressor, NetworkSpec, NnError, TrainConfig, TrainReport, TrainedNetwork};

/// Default ensemble size.
pub const DEFAULT_ENSEMBLE_SIZE: usize = 5;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error("input kind mismatch: model expects {expected:?}, got {actual:?}")]
    KindMismatch {
        expected: InputKind,
        actual: Option<InputKind>,
    },
    #[error("{0} must be nonempty")]
    Empty(&'static str),
    #[error("ensemble size must be at least 1")]
    EnsembleSize,
    #[error("ensemble members differ in {0}")]
    MemberMismatch(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Identity of the data a model was fitted on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub sha256: String,
    pub size: usize,
}

impl Fingerprint {
    pub fn of(data: &LabeledDataset) -> Self {
        Self {
            sha256: data.fingerprint(),
            size: data.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    network: TrainedNetwork,
    kind: InputKind,
    fingerprint: Fingerprint,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    input_kind: InputKind,
    fingerprint: Fingerprint,
    spec: NetworkSpec,
}

impl SurrogateModel {
    pub fn from_parts(network: TrainedNetwork, kind: InputKind, fingerprint: Fingerprint) -> Result<Self, SurrogateError> {
        if network.spec().input_shape != kind.shape() {
            return Err(NnError::InvalidSpec(format!(
                "network input {:?} does not fit {kind:?}",
                network.spec().input_shape
            ))
            .into());
        }
        Ok(Self {
            network,
            kind,
            fingerprint,
        })
    }

    pub fn network(&self) -> &TrainedNetwork {
        &self.network
    }

    pub fn kind(&self) -> &InputKind {
        &self.kind
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub(crate) fn check_kind(&self, inputs: &Inputs) -> Result<(), SurrogateError> {
        check_kind(&self.kind, inputs)
    }

    /// Predictions for every input; empty inputs give an empty vector.
    pub fn predict(&self, inputs: &Inputs) -> Result<Vec<f64>, SurrogateError> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        self.check_kind(inputs)?;
        Ok(self.network.predict(&inputs.features())?)
    }

    /// Writes `<stem>.sgnn`, `<stem>.spec.json` and `<stem>.surrogate.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, SurrogateError> {
        let mut files = nn::io::save(&self.network, dir, stem)?;
        let path = dir.join(format!("{stem}.surrogate.json"));
        let manifest = Manifest {
            input_kind: self.kind.clone(),
            fingerprint: self.fingerprint.clone(),
            spec: self.network.spec().clone(),
        };
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        files.push(path);
        Ok(files)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self, SurrogateError> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.surrogate.json")))?)?;
        let network = nn::io::load(dir, stem)?;
        if *network.spec() != manifest.spec {
            return Err(NnError::Format("sidecar spec differs from stored architecture".into()).into());
        }
        Self::from_parts(network, manifest.input_kind, manifest.fingerprint)
    }
}

pub(crate) fn check_kind(expected: &InputKind, inputs: &Inputs) -> Result<(), SurrogateError> {
    let actual = inputs.kind();
    if actual.as_ref() != Some(expected) {
        return Err(SurrogateError::KindMismatch {
            expected: expected.clone(),
            actual,
        });
    }
    Ok(())
}

pub(crate) fn require_kind(data: &LabeledDataset) -> Result<InputKind, SurrogateError> {
    data.kind().filter(|_| !data.is_empty()).ok_or(SurrogateError::Empty("training data"))
}

/// Trains a regressor on `data` and records its fingerprint.
pub fn fit_surrogate(
    data: &LabeledDataset,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<(SurrogateModel, TrainReport), SurrogateError> {
    let kind = require_kind(data)?;
    let (network, report) = train_regressor(spec, &data.features(), data.labels(), cfg)?;
    Ok((SurrogateModel::from_parts(network, kind, Fingerprint::of(data))?, report))
}

/// Mean squared error of the model's predictions on `holdout`.
pub fn holdout_mse(model: &SurrogateModel, holdout: &LabeledDataset) -> Result<f64, SurrogateError> {
    if holdout.is_empty() {
        return Err(SurrogateError::Empty("holdout"));
    }
    Ok(mse_loss(&model.predict(holdout.inputs())?, holdout.labels())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepEnsemble {
    members: Vec<SurrogateModel>,
}

impl DeepEnsemble {
    pub fn new(members: Vec<SurrogateModel>) -> Result<Self, SurrogateError> {
        let first = members.first().ok_or(SurrogateError::EnsembleSize)?;
        for m in &members[1..] {
            if m.network.spec() != first.network.spec() || m.kind != first.kind {
                return Err(SurrogateError::MemberMismatch("architecture"));
            }
            if m.fingerprint != first.fingerprint {
                return Err(SurrogateError::MemberMismatch("training data"));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[SurrogateModel] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `out[m][i]`: member `m`'s prediction for input `i`.
    pub fn member_predictions(&self, inputs: &Inputs) -> Result<Vec<Vec<f64>>, SurrogateError> {
        self.members.iter().map(|m| m.predict(inputs)).collect()
    }

    pub fn mean_prediction(&self, inputs: &Inputs) -> Result<Vec<f64>, SurrogateError> {
        Ok(columns(&self.member_predictions(inputs)?).map(|c| mean(&c)).collect())
    }

    /// Population standard deviation of member predictions per input.
    pub fn ensemble_uncertainty(&self, inputs: &Inputs) -> Result<Vec<f64>, SurrogateError> {
        Ok(columns(&self.member_predictions(inputs)?).map(|c| population_std(&c)).collect())
    }
}

fn columns(rows: &[Vec<f64>]) -> impl Iterator<Item = Vec<f64>> + '_ {
    let n = rows.first().map_or(0, Vec::len);
    (0..n).map(move |i| rows.iter().map(|r| r[i]).collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard deviation dividing by the number of values. Deviations are taken
/// from the first value so identical inputs give exactly zero.
pub fn population_std(v: &[f64]) -> f64 {
    let Some(&base) = v.first() else { return 0.0 };
    let d: Vec<f64> = v.iter().map(|x| x - base).collect();
    let m = mean(&d);
    (d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Trains `m` members with seeds `cfg.seed + 0 .. cfg.seed + m - 1`.
pub fn fit_ensemble(
    data: &LabeledDataset,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    m: usize,
) -> Result<DeepEnsemble, SurrogateError> {
    if m == 0 {
        return Err(SurrogateError::EnsembleSize);
    }
    let members = (0..m as u64)
        .map(|i| fit_surrogate(data, spec, &cfg.clone().with_seed(cfg.seed.wrapping_add(i))).map(|r| r.0))
        .collect::<Result<Vec<_>, _>>()?;
    DeepEnsemble::new(members)
}
