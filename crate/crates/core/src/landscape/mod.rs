//! Ground-truth oracles, training-set generators and label ingestion.

mod counts;
mod dataset;
mod nk;
mod pcr;
mod sequence;
pub mod toy;

use thiserror::Error;

pub use counts::{labels_from_counts, read_counts_csv, simulate_counts, write_counts_csv, CountTable};
pub use dataset::{DatasetMeta, InputKind, Inputs, LabeledDataset};
pub use nk::{nk_fitness, NKLandscape, NKLandscapeSpec};
pub use pcr::error_prone_pcr;
pub use sequence::{Alphabet, Sequence, AMINO_ACIDS};
pub use toy::{himmelblau, sample_toy_training_set, toy_ground_truth, ContinuousInput};

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("point ({x0}, {x1}) lies outside [-5, 5]^2")]
    OutOfBounds { x0: f64, x1: f64 },
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("mutation rate {0} outside [0, 1]")]
    InvalidRate(f64),
    #[error("zero {0} count; log rate undefined")]
    ZeroCount(&'static str),
    #[error("variant {0}: transduction count below detection (n_tsd = 0)")]
    BelowDetection(String),
    #[error("invalid landscape spec: {0}")]
    InvalidSpec(String),
    #[error("{0} must be nonempty")]
    Empty(&'static str),
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
