use serde::{Deserialize, Serialize};

use super::NnError;

/// Shape of a network input.
///
/// One-hot sequence inputs are laid out position-major: feature index
/// `pos * alphabet + symbol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputShape {
    Vector { len: usize },
    OneHot { length: usize, alphabet: usize },
}

impl InputShape {
    pub fn feature_len(&self) -> usize {
        match *self {
            InputShape::Vector { len } => len,
            InputShape::OneHot { length, alphabet } => length * alphabet,
        }
    }

    pub(crate) fn tensor_shape(&self) -> Shape {
        match *self {
            InputShape::Vector { len } => Shape::Flat(len),
            InputShape::OneHot { length, alphabet } => Shape::Seq {
                len: length,
                channels: alphabet,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Sigmoid,
}

pub(crate) const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        width: usize,
    },
    /// Same-padded 1-D convolution. `pooling_scale` of 0 or 1 disables
    /// pooling; larger values apply non-overlapping average pooling.
    Conv1d {
        channels: usize,
        kernel_width: usize,
        pooling_scale: usize,
    },
    Activation {
        kind: Activation,
    },
    Dropout {
        rate: f64,
    },
    BatchNorm1d,
    Flatten,
}

/// Weight initialisation for dense and convolutional layers. Both draw
/// uniformly with a bound scaled by fan-in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Weights in `±sqrt(6 / fan_in)`, zero biases.
    #[default]
    HeUniform,
    /// Weights and biases in `±sqrt(1 / fan_in)`; the He-uniform family with
    /// leaky slope `sqrt(5)`, which common frameworks use by default.
    FanInUniform,
}

/// Architecture of a scalar-output feedforward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_shape: InputShape,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub l2_strength: f64,
    #[serde(default)]
    pub init: Init,
}

/// Tensor shape of a single sample flowing between layers. `Seq` data is
/// stored position-major (`pos * channels + c`), so flattening is free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Shape {
    Flat(usize),
    Seq { len: usize, channels: usize },
}

impl Shape {
    pub(crate) fn size(&self) -> usize {
        match *self {
            Shape::Flat(n) => n,
            Shape::Seq { len, channels } => len * channels,
        }
    }
}

/// Precomputed placement of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LayerPlan {
    pub spec: LayerSpec,
    pub input: Shape,
    pub output: Shape,
    pub param_offset: usize,
    pub param_len: usize,
    pub buffer_offset: usize,
    pub buffer_len: usize,
}

impl NetworkSpec {
    pub fn new(input_shape: InputShape, layers: Vec<LayerSpec>) -> Self {
        Self {
            input_shape,
            layers,
            l2_strength: 0.0,
            init: Init::HeUniform,
        }
    }

    pub fn with_l2(mut self, l2_strength: f64) -> Self {
        self.l2_strength = l2_strength;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    /// Two hidden dense layers with dropout after each activation, ending in a
    /// single unit. `output_batchnorm` appends the 1-D batch normalisation used
    /// by the toy surrogate.
    pub fn mlp(
        input_len: usize,
        hidden: &[usize],
        activation: Activation,
        dropout: f64,
        output_batchnorm: bool,
    ) -> Self {
        let mut layers = Vec::new();
        for &width in hidden {
            layers.push(LayerSpec::Dense { width });
            layers.push(LayerSpec::Activation { kind: activation });
            if dropout > 0.0 {
                layers.push(LayerSpec::Dropout { rate: dropout });
            }
        }
        layers.push(LayerSpec::Dense { width: 1 });
        if output_batchnorm {
            layers.push(LayerSpec::BatchNorm1d);
        }
        Self::new(InputShape::Vector { len: input_len }, layers)
    }

    /// Convolutional blocks followed by dense layers, for one-hot sequences.
    pub fn cnn(
        length: usize,
        alphabet: usize,
        channels: &[usize],
        kernel_width: usize,
        pooling: &[usize],
        dense: &[usize],
        activation: Activation,
    ) -> Self {
        let mut layers = Vec::new();
        for (i, &ch) in channels.iter().enumerate() {
            layers.push(LayerSpec::Conv1d {
                channels: ch,
                kernel_width,
                pooling_scale: pooling.get(i).copied().unwrap_or(0),
            });
            layers.push(LayerSpec::Activation { kind: activation });
        }
        layers.push(LayerSpec::Flatten);
        for &width in dense {
            layers.push(LayerSpec::Dense { width });
            layers.push(LayerSpec::Activation { kind: activation });
        }
        layers.push(LayerSpec::Dense { width: 1 });
        Self::new(InputShape::OneHot { length, alphabet }, layers)
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.feature_len()
    }

    pub fn param_count(&self) -> Result<usize, NnError> {
        Ok(self.plan()?.iter().map(|p| p.param_len).sum())
    }

    pub fn has_batchnorm(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, LayerSpec::BatchNorm1d))
    }

    /// Validates the layer chain and lays out parameters.
    pub(crate) fn plan(&self) -> Result<Vec<LayerPlan>, NnError> {
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return Err(NnError::InvalidSpec(format!(
                "l2_strength must be finite and >= 0, got {}",
                self.l2_strength
            )));
        }
        let mut shape = self.input_shape.tensor_shape();
        if shape.size() == 0 {
            return Err(NnError::InvalidSpec("input shape is empty".into()));
        }
        let mut plans = Vec::with_capacity(self.layers.len());
        let mut param_offset = 0;
        let mut buffer_offset = 0;
        for (idx, layer) in self.layers.iter().enumerate() {
            let bad = |msg: String| NnError::InvalidSpec(format!("layer {idx}: {msg}"));
            let (output, param_len, buffer_len) = match *layer {
                LayerSpec::Dense { width } => {
                    let Shape::Flat(n) = shape else {
                        return Err(bad("dense layer needs flat input; add flatten".into()));
                    };
                    if width == 0 {
                        return Err(bad("dense width must be positive".into()));
                    }
                    (Shape::Flat(width), width * n + width, 0)
                }
                LayerSpec::Conv1d {
                    channels,
                    kernel_width,
                    pooling_scale,
                } => {
                    let Shape::Seq { len, channels: cin } = shape else {
                        return Err(bad("conv1d needs sequence input".into()));
                    };
                    if channels == 0 || kernel_width == 0 {
                        return Err(bad("conv1d channels and kernel width must be positive".into()));
                    }
                    let out_len = if pooling_scale > 1 {
                        if len < pooling_scale {
                            return Err(bad(format!(
                                "pooling scale {pooling_scale} exceeds length {len}"
                            )));
                        }
                        len / pooling_scale
                    } else {
                        len
                    };
                    (
                        Shape::Seq {
                            len: out_len,
                            channels,
                        },
                        channels * kernel_width * cin + channels,
                        0,
                    )
                }
                LayerSpec::Activation { .. } => (shape, 0, 0),
                LayerSpec::Dropout { rate } => {
                    if !(0.0..=1.0).contains(&rate) {
                        return Err(bad(format!("dropout rate {rate} outside [0, 1]")));
                    }
                    (shape, 0, 0)
                }
                LayerSpec::BatchNorm1d => {
                    let features = match shape {
                        Shape::Flat(n) => n,
                        Shape::Seq { channels, .. } => channels,
                    };
                    (shape, 2 * features, 2 * features)
                }
                LayerSpec::Flatten => (Shape::Flat(shape.size()), 0, 0),
            };
            plans.push(LayerPlan {
                spec: *layer,
                input: shape,
                output,
                param_offset,
                param_len,
                buffer_offset,
                buffer_len,
            });
            param_offset += param_len;
            buffer_offset += buffer_len;
            shape = output;
        }
        if shape != Shape::Flat(1) {
            return Err(NnError::InvalidSpec(format!(
                "network must end in a single output, ends in {shape:?}"
            )));
        }
        Ok(plans)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlp_param_count() {
        let spec = NetworkSpec::mlp(2, &[200, 200], Activation::Relu, 0.1, true);
        // 2*200+200 + 200*200+200 + 200+1 + 2 (batchnorm)
        assert_eq!(spec.param_count().unwrap(), 600 + 40200 + 201 + 2);
    }

    #[test]
    fn cnn_chains_to_scalar() {
        let spec = NetworkSpec::cnn(20, 20, &[32, 32], 5, &[0, 0], &[32], Activation::LeakyRelu);
        let n = spec.param_count().unwrap();
        assert_eq!(n, (32 * 5 * 20 + 32) + (32 * 5 * 32 + 32) + (32 * 640 + 32) + 33);
    }

    #[test]
    fn rejects_bad_chains() {
        let no_flatten = NetworkSpec::new(
            InputShape::OneHot { length: 4, alphabet: 2 },
            vec![LayerSpec::Dense { width: 1 }],
        );
        assert!(no_flatten.plan().is_err());
        let wide_out = NetworkSpec::new(InputShape::Vector { len: 3 }, vec![LayerSpec::Dense { width: 2 }]);
        assert!(wide_out.plan().is_err());
        let bad_dropout = NetworkSpec::new(
            InputShape::Vector { len: 3 },
            vec![LayerSpec::Dropout { rate: 1.5 }, LayerSpec::Dense { width: 1 }],
        );
        assert!(bad_dropout.plan().is_err());
        let neg_l2 = NetworkSpec::mlp(2, &[4], Activation::Relu, 0.0, false).with_l2(-1.0);
        assert!(neg_l2.plan().is_err());
    }

    #[test]
    fn pooling_shrinks_length() {
        let spec = NetworkSpec::new(
            InputShape::OneHot { length: 8, alphabet: 3 },
            vec![
                LayerSpec::Conv1d { channels: 2, kernel_width: 3, pooling_scale: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { width: 1 },
            ],
        );
        let plan = spec.plan().unwrap();
        assert_eq!(plan[0].output, Shape::Seq { len: 4, channels: 2 });
        assert_eq!(plan[1].output, Shape::Flat(8));
    }
}
