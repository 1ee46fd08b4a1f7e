//! Experiment configuration: a TOML tree with paper defaults for every field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::landscape::{Alphabet, AMINO_ACIDS};
use crate::nn::{Activation, Init, InputShape, LayerSpec, NetworkSpec, TrainConfig};
use crate::search::{Algorithm, BeamConfig, GAConfig};
use crate::select::{BootstrapConfig, Statistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Toy2d,
    SequenceMbo,
    GaussianDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Master seed; every stage seed is derived from it.
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub toy: ToyConfig,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub gaussian: GaussianConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Network architecture; the input shape comes from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
        #[serde(default)]
        dropout: f64,
        #[serde(default)]
        output_batchnorm: bool,
        #[serde(default)]
        l2: f64,
        #[serde(default)]
        init: Init,
    },
    Cnn {
        channels: Vec<usize>,
        kernel_width: usize,
        #[serde(default)]
        pooling: Vec<usize>,
        dense: Vec<usize>,
        activation: Activation,
        #[serde(default)]
        l2: f64,
        #[serde(default)]
        init: Init,
    },
}

impl Architecture {
    pub fn build(&self, shape: InputShape) -> NetworkSpec {
        match self {
            Architecture::Mlp {
                hidden,
                activation,
                dropout,
                output_batchnorm,
                l2,
                init,
            } => {
                let mut spec = NetworkSpec::mlp(shape.feature_len(), hidden, *activation, *dropout, *output_batchnorm);
                if let InputShape::OneHot { .. } = shape {
                    spec.input_shape = shape;
                    spec.layers.insert(0, LayerSpec::Flatten);
                }
                spec.with_l2(*l2).with_init(*init)
            }
            Architecture::Cnn {
                channels,
                kernel_width,
                pooling,
                dense,
                activation,
                l2,
                init,
            } => {
                let (length, alphabet) = match shape {
                    InputShape::OneHot { length, alphabet } => (length, alphabet),
                    // Rejected by validation; treat a vector as a length-n, one-channel sequence.
                    InputShape::Vector { len } => (len, 1),
                };
                NetworkSpec::cnn(length, alphabet, channels, *kernel_width, pooling, dense, *activation)
                    .with_l2(*l2)
                    .with_init(*init)
            }
        }
    }

    fn validate(&self, field: &str, sequence_input: bool) -> Result<(), HarnessError> {
        match self {
            Architecture::Mlp { hidden, dropout, l2, .. } => {
                if hidden.contains(&0) {
                    return invalid(format!("{field}.hidden"), "widths must be positive");
                }
                if !(0.0..1.0).contains(dropout) {
                    return invalid(format!("{field}.dropout"), "must lie in [0, 1)");
                }
                check_l2(field, *l2)
            }
            Architecture::Cnn {
                channels,
                kernel_width,
                dense,
                l2,
                ..
            } => {
                if !sequence_input {
                    return invalid(format!("{field}.type"), "cnn needs sequence inputs");
                }
                if channels.is_empty() || channels.contains(&0) {
                    return invalid(format!("{field}.channels"), "need at least one positive channel count");
                }
                if *kernel_width == 0 {
                    return invalid(format!("{field}.kernel_width"), "must be positive");
                }
                if dense.contains(&0) {
                    return invalid(format!("{field}.dense"), "widths must be positive");
                }
                check_l2(field, *l2)
            }
        }
    }
}

fn check_l2(field: &str, l2: f64) -> Result<(), HarnessError> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return invalid(format!("{field}.l2"), "must be finite and >= 0");
    }
    Ok(())
}

/// Optimiser settings; the seed is supplied by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// 0 disables early stopping.
    #[serde(default)]
    pub early_stopping_patience: usize,
    #[serde(default)]
    pub validation_fraction: f64,
}

impl TrainSettings {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            early_stopping_patience: self.early_stopping_patience,
            validation_fraction: self.validation_fraction,
            seed,
        }
    }

    fn validate(&self, field: &str) -> Result<(), HarnessError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return invalid(format!("{field}.learning_rate"), "must be finite and > 0");
        }
        if self.batch_size == 0 {
            return invalid(format!("{field}.batch_size"), "must be positive");
        }
        if self.max_epochs == 0 {
            return invalid(format!("{field}.max_epochs"), "must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return invalid(format!("{field}.validation_fraction"), "must lie in [0, 1)");
        }
        if self.early_stopping_patience > 0 && self.validation_fraction == 0.0 {
            return invalid(
                format!("{field}.validation_fraction"),
                "must be > 0 when early_stopping_patience is set",
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub train: TrainSettings,
}

impl ModelConfig {
    fn validate(&self, field: &str, sequence_input: bool) -> Result<(), HarnessError> {
        self.architecture.validate(&format!("{field}.architecture"), sequence_input)?;
        self.train.validate(&format!("{field}.train"))
    }

    /// 2x200 ReLU network trained for 1000 epochs without early stopping.
    pub fn toy_mlp(dropout: f64, output_batchnorm: bool, l2: f64) -> Self {
        Self {
            architecture: Architecture::Mlp {
                hidden: vec![200, 200],
                activation: Activation::Relu,
                dropout,
                output_batchnorm,
                l2,
                init: Init::FanInUniform,
            },
            train: TrainSettings {
                learning_rate: 1e-3,
                batch_size: 32,
                max_epochs: 1000,
                early_stopping_patience: 0,
                validation_fraction: 0.0,
            },
        }
    }

    /// Two conv blocks of 32 channels, one dense layer of 32, LeakyReLU,
    /// early stopping on a 10% split.
    pub fn sequence_cnn() -> Self {
        Self {
            architecture: Architecture::Cnn {
                channels: vec![32, 32],
                kernel_width: 5,
                pooling: vec![0, 0],
                dense: vec![32],
                activation: Activation::LeakyRelu,
                l2: 0.0,
                init: Init::HeUniform,
            },
            train: TrainSettings {
                learning_rate: 1e-3,
                batch_size: 64,
                max_epochs: 200,
                early_stopping_patience: 10,
                validation_fraction: 0.1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub n_train: usize,
    /// Uniform positives for the OOD classifier.
    pub n_positives: usize,
    pub grid_per_axis: usize,
    pub surrogate: ModelConfig,
    pub ood: ModelConfig,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n_train: 100,
            n_positives: 100,
            grid_per_axis: 100,
            surrogate: ModelConfig::toy_mlp(0.1, true, 0.0),
            ood: ModelConfig::toy_mlp(0.1, false, 1e-3),
        }
    }
}

impl ToyConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.n_train == 0 {
            return invalid("toy.n_train", "must be positive");
        }
        if self.n_positives == 0 {
            return invalid("toy.n_positives", "must be positive");
        }
        if self.grid_per_axis < 2 {
            return invalid("toy.grid_per_axis", "must be at least 2");
        }
        self.surrogate.validate("toy.surrogate", false)?;
        self.ood.validate("toy.ood", false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub length: usize,
    pub alphabet: String,
    /// Epistatic neighbours per site.
    pub k: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            length: 20,
            alphabet: AMINO_ACIDS.into(),
            k: 2,
        }
    }
}

/// How training labels are produced from the latent landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelSource {
    /// Noise-free NK fitness.
    Nk,
    /// Log enrichment from simulated plasmid/virus/transduction counts. Latent
    /// log-rates are `scale * (f(x) - f(wt))` for two independent NK landscapes.
    Counts {
        plasmid_depth: f64,
        packaging_scale: f64,
        transduction_scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_train: usize,
    /// Per-position resampling probability of the error-prone PCR library.
    pub epsilon: f64,
    pub labels: LabelSource,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            epsilon: 0.5,
            labels: LabelSource::Nk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignSet {
    /// Each distinct candidate once per trajectory, at its first appearance.
    FirstAppearance,
    /// Every pooled candidate at every recorded iteration, duplicates kept.
    AllPoolEntries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub algorithm: Algorithm,
    /// Trajectories start from the highest-labelled training sequences.
    pub n_starts: usize,
    /// Independent trajectories per start.
    pub restarts: usize,
    pub adalead: GAConfig,
    pub beam: BeamConfig,
    /// Only these iterations contribute designs; empty means all.
    pub snapshot_iterations: Vec<usize>,
    pub design_set: DesignSet,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Adalead,
            n_starts: 9,
            restarts: 1,
            adalead: GAConfig {
                pool_size: 50,
                ..GAConfig::default()
            },
            beam: BeamConfig::default(),
            snapshot_iterations: Vec::new(),
            design_set: DesignSet::FirstAppearance,
        }
    }
}

impl SearchSettings {
    pub fn iterations(&self) -> usize {
        match self.algorithm {
            Algorithm::Adalead => self.adalead.iterations,
            Algorithm::Beam => self.beam.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSettings {
    pub percentiles: Vec<f64>,
    pub ks: Vec<usize>,
    pub statistics: Vec<Statistic>,
    pub replicates: usize,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        Self {
            percentiles: d.percentiles,
            ks: d.ks,
            statistics: d.statistics,
            replicates: d.replicates,
        }
    }
}

impl SelectionSettings {
    pub fn with_seed(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            percentiles: self.percentiles.clone(),
            ks: self.ks.clone(),
            statistics: self.statistics.clone(),
            replicates: self.replicates,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    pub landscape: LandscapeConfig,
    pub data: DataConfig,
    pub surrogate: ModelConfig,
    pub ensemble_size: usize,
    /// Admissibility threshold on a second, packaging-like surrogate. Absent
    /// means unconstrained search.
    pub constraint_threshold: Option<f64>,
    pub ood: ModelConfig,
    pub search: SearchSettings,
    /// Oracle value below which a design counts as adversarial; absent means
    /// the median oracle value of the training library.
    pub adversarial_threshold: Option<f64>,
    pub selection: SelectionSettings,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            landscape: LandscapeConfig::default(),
            data: DataConfig::default(),
            surrogate: ModelConfig::sequence_cnn(),
            ensemble_size: 5,
            constraint_threshold: None,
            ood: ModelConfig {
                architecture: Architecture::Mlp {
                    hidden: vec![],
                    activation: Activation::LeakyRelu,
                    dropout: 0.0,
                    output_batchnorm: false,
                    l2: 1e-2,
                    init: Init::HeUniform,
                },
                train: ModelConfig::sequence_cnn().train,
            },
            search: SearchSettings::default(),
            adversarial_threshold: None,
            selection: SelectionSettings::default(),
        }
    }
}

impl SequenceConfig {
    pub fn alphabet(&self) -> Result<Alphabet, HarnessError> {
        Alphabet::new(&self.landscape.alphabet).map_err(|e| HarnessError::Invalid {
            field: "sequence.landscape.alphabet".into(),
            message: e.to_string(),
        })
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let l = &self.landscape;
        if l.length == 0 {
            return invalid("sequence.landscape.length", "must be positive");
        }
        self.alphabet()?;
        if l.k >= l.length {
            return invalid("sequence.landscape.k", "must be smaller than length");
        }
        let d = &self.data;
        if d.n_train == 0 {
            return invalid("sequence.data.n_train", "must be positive");
        }
        if !(0.0..=1.0).contains(&d.epsilon) {
            return invalid("sequence.data.epsilon", "must lie in [0, 1]");
        }
        if let LabelSource::Counts {
            plasmid_depth,
            packaging_scale,
            transduction_scale,
        } = d.labels
        {
            if !(plasmid_depth > 0.0 && plasmid_depth.is_finite()) {
                return invalid("sequence.data.labels.plasmid_depth", "must be finite and > 0");
            }
            if !(packaging_scale.is_finite() && transduction_scale.is_finite()) {
                return invalid("sequence.data.labels", "scales must be finite");
            }
        }
        self.surrogate.validate("sequence.surrogate", true)?;
        self.ood.validate("sequence.ood", true)?;
        if self.ensemble_size < 2 {
            return invalid("sequence.ensemble_size", "must be at least 2");
        }
        if let Some(t) = self.constraint_threshold {
            if !t.is_finite() {
                return invalid("sequence.constraint_threshold", "must be finite");
            }
        }
        if let Some(t) = self.adversarial_threshold {
            if !t.is_finite() {
                return invalid("sequence.adversarial_threshold", "must be finite");
            }
        }
        let s = &self.search;
        if s.n_starts == 0 {
            return invalid("sequence.search.n_starts", "must be positive");
        }
        if s.n_starts > d.n_train {
            return invalid("sequence.search.n_starts", "cannot exceed data.n_train");
        }
        if s.restarts == 0 {
            return invalid("sequence.search.restarts", "must be positive");
        }
        let search_err = |field: &str, e: crate::search::SearchError| HarnessError::Invalid {
            field: field.into(),
            message: e.to_string(),
        };
        match s.algorithm {
            Algorithm::Adalead => s.adalead.validate().map_err(|e| search_err("sequence.search.adalead", e))?,
            Algorithm::Beam => s.beam.validate().map_err(|e| search_err("sequence.search.beam", e))?,
        }
        if let Some(&i) = s.snapshot_iterations.iter().find(|&&i| i == 0 || i > s.iterations()) {
            return invalid(
                "sequence.search.snapshot_iterations",
                &format!("iteration {i} outside 1..={}", s.iterations()),
            );
        }
        let sel = &self.selection;
        if sel.replicates == 0 {
            return invalid("sequence.selection.replicates", "must be at least 1");
        }
        if sel.percentiles.is_empty() || sel.percentiles.iter().any(|p| !(*p > 0.0 && *p <= 100.0)) {
            return invalid("sequence.selection.percentiles", "must be non-empty and lie in (0, 100]");
        }
        if sel.ks.is_empty() || sel.ks.contains(&0) {
            return invalid("sequence.selection.ks", "must be non-empty and positive");
        }
        if sel.statistics.is_empty() {
            return invalid("sequence.selection.statistics", "must be non-empty");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub name: String,
    pub mu_tr: f64,
    pub sigma_tr: f64,
    pub mu_de: f64,
    pub sigma_de: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianConfig {
    pub pairs: Vec<PairConfig>,
    pub n_per_class: usize,
    pub classifier: ModelConfig,
    /// Random pairs drawn for the dominance Monte Carlo.
    pub dominance_pairs: usize,
    pub dominance_samples: usize,
    /// Random `(pair, x)` draws for the gradient identity check.
    pub gradient_draws: usize,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            pairs: vec![
                PairConfig {
                    name: "separated".into(),
                    mu_tr: 0.0,
                    sigma_tr: 1.0,
                    mu_de: 3.0,
                    sigma_de: 1.0,
                },
                PairConfig {
                    name: "identical".into(),
                    mu_tr: 0.0,
                    sigma_tr: 1.0,
                    mu_de: 0.0,
                    sigma_de: 1.0,
                },
            ],
            n_per_class: 2000,
            classifier: ModelConfig {
                architecture: Architecture::Mlp {
                    hidden: vec![32, 32],
                    activation: Activation::Relu,
                    dropout: 0.0,
                    output_batchnorm: false,
                    l2: 1e-3,
                    init: Init::HeUniform,
                },
                train: TrainSettings {
                    learning_rate: 1e-3,
                    batch_size: 128,
                    max_epochs: 100,
                    early_stopping_patience: 0,
                    validation_fraction: 0.0,
                },
            },
            dominance_pairs: 20,
            dominance_samples: 10_000,
            gradient_draws: 1000,
        }
    }
}

impl GaussianConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.pairs.is_empty() {
            return invalid("gaussian.pairs", "need at least one pair");
        }
        for (i, p) in self.pairs.iter().enumerate() {
            let name_ok = !p.name.is_empty()
                && p.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !name_ok {
                return invalid(format!("gaussian.pairs[{i}].name"), "must be non-empty [A-Za-z0-9_-]");
            }
            if self.pairs[..i].iter().any(|q| q.name == p.name) {
                return invalid(format!("gaussian.pairs[{i}].name"), "must be unique");
            }
            if !(p.sigma_tr > 0.0 && p.sigma_de > 0.0) {
                return invalid(format!("gaussian.pairs[{i}]"), "standard deviations must be > 0");
            }
            if ![p.mu_tr, p.mu_de, p.sigma_tr, p.sigma_de].iter().all(|v| v.is_finite()) {
                return invalid(format!("gaussian.pairs[{i}]"), "parameters must be finite");
            }
        }
        if self.n_per_class < crate::shift::MIN_DIAGNOSTIC_SAMPLES {
            return invalid(
                "gaussian.n_per_class",
                &format!("must be at least {}", crate::shift::MIN_DIAGNOSTIC_SAMPLES),
            );
        }
        self.classifier.validate("gaussian.classifier", false)?;
        if self.dominance_pairs == 0 || self.dominance_samples == 0 {
            return invalid("gaussian.dominance_pairs", "pairs and samples must be positive");
        }
        if self.gradient_draws == 0 {
            return invalid("gaussian.gradient_draws", "must be positive");
        }
        Ok(())
    }
}

fn invalid(field: impl Into<String>, message: &str) -> Result<(), HarnessError> {
    Err(HarnessError::Invalid {
        field: field.into(),
        message: message.into(),
    })
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            output_dir: default_output_dir(),
            toy: ToyConfig::default(),
            sequence: SequenceConfig::default(),
            gaussian: GaussianConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks the section used by `kind`; other sections are ignored.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seed > i64::MAX as u64 {
            return invalid("seed", "must fit in a signed 64-bit integer");
        }
        match self.kind {
            ExperimentKind::Toy2d => self.toy.validate(),
            ExperimentKind::SequenceMbo => self.sequence.validate(),
            ExperimentKind::GaussianDiagnostic => self.gaussian.validate(),
        }
    }
}
