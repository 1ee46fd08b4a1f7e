//! Small feedforward networks (dense and 1-D convolutional), losses and an
//! Adam trainer. Everything runs in `f64` on the CPU, single-threaded and
//! deterministic for a given seed.

mod gemm;
pub mod gradcheck;
pub mod io;
pub mod loss;
mod network;
pub mod optim;
pub mod spec;
mod train;

pub use loss::{bce_loss, clamp_logit, mse_loss, LOGIT_CLAMP};
pub use network::{sigmoid, TrainedNetwork};
pub use spec::{Activation, Init, InputShape, LayerSpec, NetworkSpec};
pub use train::{train_binary_classifier, train_regressor, TrainConfig, TrainReport};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("input shape mismatch: expected {expected} features, got {actual}")]
    InputShape { expected: usize, actual: usize },
    #[error("parameter count mismatch: expected {expected}, got {actual}")]
    ParameterCount { expected: usize, actual: usize },
    #[error("network is in training mode")]
    TrainingMode,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityDomain(f64),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("invalid training data: {0}")]
    InvalidData(String),
    #[error("{0} class has no samples")]
    MissingClass(&'static str),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major feature matrix: `rows()` samples of `dim()` features each.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    data: Vec<f64>,
    dim: usize,
}

impl Features {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self, NnError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(NnError::InputShape {
                expected: dim,
                actual: data.len(),
            });
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Result<Self, NnError> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(NnError::InputShape {
                    expected: dim,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { data, dim })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn gather(&self, idx: &[usize]) -> Features {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Features { data, dim: self.dim }
    }

    pub fn concat(&self, other: &Features) -> Result<Features, NnError> {
        if self.dim != other.dim {
            return Err(NnError::InputShape {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Features { data, dim: self.dim })
    }
}

impl TrainedNetwork {
    /// Inference over every row of `x`.
    pub fn predict(&self, x: &Features) -> Result<Vec<f64>, NnError> {
        self.forward_batch(x.as_slice(), x.rows())
    }
}
