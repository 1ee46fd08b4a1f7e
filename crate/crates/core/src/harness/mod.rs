//! Configuration-driven pipelines for the three experiments, split into
//! stages that communicate only through files in the output directory.

pub mod config;
mod gaussian;
mod sequence;
mod toy;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    Architecture, DataConfig, DesignSet, ExperimentConfig, ExperimentKind, GaussianConfig, LabelSource,
    LandscapeConfig, ModelConfig, PairConfig, SearchSettings, SelectionSettings, SequenceConfig, ToyConfig,
    TrainSettings,
};

use crate::landscape::LandscapeError;
use crate::nn::NnError;
use crate::search::SearchError;
use crate::select::SelectError;
use crate::shift::ShiftError;
use crate::surrogate::SurrogateError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("stage `{stage}` does not apply to {kind:?} experiments")]
    NotApplicable { stage: &'static str, kind: ExperimentKind },
    #[error("missing input {0}; run the earlier stages first")]
    MissingInput(PathBuf),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// 1 for problems with the request itself, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invalid { .. } | HarnessError::Parse(_) | HarnessError::NotApplicable { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    GenData,
    TrainSurrogate,
    TrainOod,
    Search,
    Evaluate,
    Select,
    Run,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::TrainSurrogate => "train-surrogate",
            Stage::TrainOod => "train-ood",
            Stage::Search => "search",
            Stage::Evaluate => "evaluate",
            Stage::Select => "select",
            Stage::Run => "run",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    /// See [`config_hash`].
    pub config_hash: String,
    /// Paths relative to the output directory, sorted.
    pub files: Vec<String>,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn load(out: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST_FILE))?)?)
    }
}

/// SHA-256 of the config as TOML with the output directory blanked, so the
/// same experiment hashes alike wherever it is written.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.output_dir = PathBuf::new();
    let digest = Sha256::digest(cfg.to_toml()?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Output directory plus the set of files written into it.
pub(crate) struct Artifacts {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl Artifacts {
    /// Joins `rel` onto the root, creating parent directories, and records it.
    pub(crate) fn create(&mut self, rel: &str) -> Result<PathBuf, HarnessError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.files.insert(rel.to_string());
        Ok(path)
    }

    /// Records files written by helpers that choose their own names.
    pub(crate) fn record(&mut self, paths: &[PathBuf]) {
        for p in paths {
            if let Ok(rel) = p.strip_prefix(&self.root) {
                self.files.insert(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }

    /// Existing file from an earlier stage.
    pub(crate) fn input(&self, rel: &str) -> Result<PathBuf, HarnessError> {
        let path = self.root.join(rel);
        if path.exists() {
            Ok(path)
        } else {
            Err(HarnessError::MissingInput(path))
        }
    }

    pub(crate) fn dir(&self, rel: &str) -> Result<PathBuf, HarnessError> {
        let path = self.root.join(rel);
        std::fs::create_dir_all(&path)?;
        Ok(path)
    }
}

/// Runs one stage (or the whole pipeline for `Stage::Run`) of `cfg`'s
/// experiment into `out` and returns the updated manifest.
///
/// Staged invocations accumulate into one manifest as long as the config is
/// unchanged; `Run` always starts a fresh manifest.
pub fn run_stage(cfg: &ExperimentConfig, stage: Stage, out: &Path) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let hash = config_hash(cfg)?;
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind,
        seed: cfg.seed,
        config_hash: hash.clone(),
        files: Vec::new(),
        timings: Vec::new(),
    };
    if stage != Stage::Run && out.join(MANIFEST_FILE).exists() {
        let previous = RunManifest::load(out)?;
        if previous.config_hash != hash {
            return Err(HarnessError::Invalid {
                field: "output_dir".into(),
                message: format!("{} holds artifacts from a different config; use a fresh directory", out.display()),
            });
        }
        manifest = previous;
    }
    let mut art = Artifacts {
        root: out.to_path_buf(),
        files: manifest.files.iter().cloned().collect(),
    };
    std::fs::write(art.create(CONFIG_FILE)?, cfg.to_toml()?)?;

    let stages: Vec<Stage> = match stage {
        Stage::Run => match cfg.kind {
            ExperimentKind::Toy2d => vec![Stage::GenData, Stage::TrainSurrogate, Stage::TrainOod, Stage::Evaluate],
            ExperimentKind::SequenceMbo => vec![
                Stage::GenData,
                Stage::TrainSurrogate,
                Stage::Search,
                Stage::TrainOod,
                Stage::Evaluate,
                Stage::Select,
            ],
            ExperimentKind::GaussianDiagnostic => vec![Stage::Evaluate],
        },
        s => vec![s],
    };
    for s in stages {
        let started = Instant::now();
        match cfg.kind {
            ExperimentKind::Toy2d => toy::run(cfg, s, &mut art)?,
            ExperimentKind::SequenceMbo => sequence::run(cfg, s, &mut art)?,
            ExperimentKind::GaussianDiagnostic => gaussian::run(cfg, s, &mut art)?,
        }
        manifest.timings.push(StageTiming {
            stage: s.name().to_string(),
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    art.files.insert(MANIFEST_FILE.to_string());
    manifest.files = art.files.into_iter().collect();
    std::fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

fn run_kind(cfg: &ExperimentConfig, kind: ExperimentKind, out: &Path) -> Result<RunManifest, HarnessError> {
    if cfg.kind != kind {
        return Err(HarnessError::Invalid {
            field: "kind".into(),
            message: format!("expected {kind:?}, got {:?}", cfg.kind),
        });
    }
    run_stage(cfg, Stage::Run, out)
}

pub fn run_toy2d(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest, HarnessError> {
    run_kind(cfg, ExperimentKind::Toy2d, out)
}

pub fn run_sequence_mbo(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest, HarnessError> {
    run_kind(cfg, ExperimentKind::SequenceMbo, out)
}

pub fn run_gaussian_diagnostic(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest, HarnessError> {
    run_kind(cfg, ExperimentKind::GaussianDiagnostic, out)
}

/// Reads a two-column `key,value` summary CSV written by a pipeline.
pub fn read_summary(path: &Path) -> Result<Vec<(String, f64)>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let value = crate::csvfmt::parse_f64(&rec[1]).map_err(HarnessError::Runtime)?;
        out.push((rec[0].to_string(), value));
    }
    Ok(out)
}

pub(crate) fn write_summary(path: &Path, rows: &[(&str, f64)]) -> Result<(), HarnessError> {
    crate::csvfmt::write_rows(
        path,
        &["key", "value"],
        rows.iter().map(|(k, v)| vec![k.to_string(), crate::csvfmt::fmt_f64(*v)]),
    )?;
    Ok(())
}

/// Reads the named columns of a headed CSV, in the order given.
pub(crate) fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<String>>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| HarnessError::Runtime(format!("{} lacks column {n}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(idx.iter().map(|&i| rec[i].to_string()).collect());
    }
    Ok(out)
}
