use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::gemm::gemm;
use super::spec::{Activation, Init, LayerPlan, LayerSpec, NetworkSpec, Shape, LEAKY_SLOPE};
use super::NnError;
use crate::seed::rng_for;

pub(crate) const BATCHNORM_EPS: f64 = 1e-5;
pub(crate) const BATCHNORM_MOMENTUM: f64 = 0.1;

/// Fitted parameters plus the architecture they belong to.
///
/// Parameters live in one flat vector laid out layer by layer (dense and
/// conv weights row-major by output unit, then biases; batchnorm scale then
/// shift). Batchnorm running statistics are kept apart in `buffers`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNetwork {
    spec: NetworkSpec,
    plan: Vec<LayerPlan>,
    params: Vec<f64>,
    buffers: Vec<f64>,
    training: bool,
}

/// Per-layer state captured during a training-mode forward pass.
pub(crate) enum Cache {
    Nothing,
    Input(Vec<f64>),
    Patches(Vec<f64>),
    Mask(Vec<f64>),
    BatchNorm {
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        mean: Vec<f64>,
        var_unbiased: Vec<f64>,
    },
}

/// Fills the first `n_weights` entries of a layer's parameters; under
/// `FanInUniform` the remaining bias entries are drawn too.
fn init_uniform<R: Rng>(p: &mut [f64], n_weights: usize, fan_in: usize, init: Init, rng: &mut R) {
    let (bound, biases) = match init {
        Init::HeUniform => ((6.0 / fan_in as f64).sqrt(), false),
        Init::FanInUniform => ((1.0 / fan_in as f64).sqrt(), true),
    };
    let end = if biases { p.len() } else { n_weights };
    for w in &mut p[..end] {
        *w = rng.random_range(-bound..bound);
    }
}

pub(crate) struct Tape {
    pub(crate) caches: Vec<Cache>,
    pub(crate) batch: usize,
}

impl TrainedNetwork {
    /// Weights (and biases) per `spec.init`, unit batchnorm scale.
    pub fn initialize(spec: NetworkSpec, seed: u64) -> Result<Self, NnError> {
        let init = spec.init;
        let mut net = Self::zeros(spec)?;
        let mut rng = rng_for(seed, "nn-init", 0);
        for plan in net.plan.clone() {
            let p = &mut net.params[plan.param_offset..plan.param_offset + plan.param_len];
            match plan.spec {
                LayerSpec::Dense { width } => {
                    let fan_in = plan.input.size();
                    init_uniform(p, width * fan_in, fan_in, init, &mut rng);
                }
                LayerSpec::Conv1d {
                    channels,
                    kernel_width,
                    ..
                } => {
                    let Shape::Seq { channels: cin, .. } = plan.input else {
                        unreachable!("validated by plan")
                    };
                    let fan_in = kernel_width * cin;
                    init_uniform(p, channels * fan_in, fan_in, init, &mut rng);
                }
                LayerSpec::BatchNorm1d => {
                    let f = plan.param_len / 2;
                    p[..f].fill(1.0);
                }
                _ => {}
            }
        }
        Ok(net)
    }

    /// Every parameter zero; running variances start at one.
    pub fn zeros(spec: NetworkSpec) -> Result<Self, NnError> {
        let plan = spec.plan()?;
        let n_params = plan.iter().map(|p| p.param_len).sum();
        let mut buffers = vec![0.0; plan.iter().map(|p| p.buffer_len).sum()];
        for p in &plan {
            if p.buffer_len > 0 {
                let f = p.buffer_len / 2;
                buffers[p.buffer_offset + f..p.buffer_offset + 2 * f].fill(1.0);
            }
        }
        Ok(Self {
            spec,
            plan,
            params: vec![0.0; n_params],
            buffers,
            training: false,
        })
    }

    pub fn from_parts(spec: NetworkSpec, params: Vec<f64>, buffers: Vec<f64>) -> Result<Self, NnError> {
        let mut net = Self::zeros(spec)?;
        if params.len() != net.params.len() {
            return Err(NnError::ParameterCount {
                expected: net.params.len(),
                actual: params.len(),
            });
        }
        if buffers.len() != net.buffers.len() {
            return Err(NnError::ParameterCount {
                expected: net.buffers.len(),
                actual: buffers.len(),
            });
        }
        net.params = params;
        net.buffers = buffers;
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn buffers(&self) -> &[f64] {
        &self.buffers
    }

    pub fn input_len(&self) -> usize {
        self.spec.input_len()
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    /// Euclidean norm of all parameters.
    pub fn parameter_norm(&self) -> f64 {
        self.params.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    /// Ranges of `parameters()` that hold dense/conv weights (the L2 target).
    pub fn weight_ranges(&self) -> Vec<Range<usize>> {
        self.plan
            .iter()
            .filter_map(|p| match p.spec {
                LayerSpec::Dense { width } => Some(p.param_offset..p.param_offset + width * p.input.size()),
                LayerSpec::Conv1d { channels, .. } => Some(p.param_offset..p.param_offset + p.param_len - channels),
                _ => None,
            })
            .collect()
    }

    /// Inference on one input point.
    pub fn forward(&self, x: &[f64]) -> Result<f64, NnError> {
        Ok(self.forward_batch(x, 1)?[0])
    }

    /// Inference on `n` inputs stored back to back.
    pub fn forward_batch(&self, xs: &[f64], n: usize) -> Result<Vec<f64>, NnError> {
        if self.training {
            return Err(NnError::TrainingMode);
        }
        self.check_batch(xs, n)?;
        if n == 0 {
            return Ok(Vec::new());
        }
        Ok(self.run(xs, n, &self.params, None).0)
    }

    pub(crate) fn check_batch(&self, xs: &[f64], n: usize) -> Result<(), NnError> {
        let d = self.input_len();
        if xs.len() != n * d {
            return Err(NnError::InputShape {
                expected: d,
                actual: if n == 0 { xs.len() } else { xs.len() / n.max(1) },
            });
        }
        Ok(())
    }

    /// Forward pass. With `rng` present the pass uses training semantics
    /// (dropout masks, batch statistics) and records a tape for backprop.
    pub(crate) fn run(
        &self,
        xs: &[f64],
        n: usize,
        params: &[f64],
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> (Vec<f64>, Option<Tape>) {
        let train = rng.is_some();
        let mut caches = Vec::with_capacity(if train { self.plan.len() } else { 0 });
        let mut x = xs.to_vec();
        for (idx, plan) in self.plan.iter().enumerate() {
            let p = &params[plan.param_offset..plan.param_offset + plan.param_len];
            let (y, cache) = match plan.spec {
                LayerSpec::Dense { width } => {
                    let y = dense_forward(&x, n, plan.input.size(), width, p);
                    (y, if train { Cache::Input(x) } else { Cache::Nothing })
                }
                LayerSpec::Conv1d {
                    channels,
                    kernel_width,
                    pooling_scale,
                } => {
                    let (y, patches) = conv_forward(&x, n, plan.input, channels, kernel_width, pooling_scale, p);
                    (y, if train { Cache::Patches(patches) } else { Cache::Nothing })
                }
                LayerSpec::Activation { kind } => {
                    let y = x.iter().map(|&v| activate(kind, v)).collect();
                    (y, if train { Cache::Input(x) } else { Cache::Nothing })
                }
                LayerSpec::Dropout { rate } => match rng.as_deref_mut() {
                    Some(r) if rate > 0.0 => {
                        let keep = 1.0 - rate;
                        let mask: Vec<f64> = (0..x.len())
                            .map(|_| {
                                if keep > 0.0 && r.random::<f64>() < keep {
                                    1.0 / keep
                                } else {
                                    0.0
                                }
                            })
                            .collect();
                        let y = x.iter().zip(&mask).map(|(a, m)| a * m).collect();
                        (y, Cache::Mask(mask))
                    }
                    _ => (x, Cache::Nothing),
                },
                LayerSpec::BatchNorm1d => {
                    let (rows, f) = bn_layout(plan.input, n);
                    let (gamma, beta) = p.split_at(f);
                    if train {
                        let (y, cache) = bn_train(&x, rows, f, gamma, beta);
                        (y, cache)
                    } else {
                        let b = &self.buffers[plan.buffer_offset..plan.buffer_offset + plan.buffer_len];
                        let (mean, var) = b.split_at(f);
                        (bn_infer(&x, rows, f, gamma, beta, mean, var), Cache::Nothing)
                    }
                }
                LayerSpec::Flatten => (x, Cache::Nothing),
            };
            debug_assert_eq!(y.len(), n * plan.output.size(), "layer {idx}");
            if train {
                caches.push(cache);
            }
            x = y;
        }
        (x, train.then_some(Tape { caches, batch: n }))
    }

    /// Backpropagates `d_out` (one value per sample) and writes parameter
    /// gradients into `grads`.
    pub(crate) fn backward(&self, tape: &Tape, params: &[f64], d_out: Vec<f64>, grads: &mut [f64]) {
        let n = tape.batch;
        let mut dy = d_out;
        for (idx, plan) in self.plan.iter().enumerate().rev() {
            let p = &params[plan.param_offset..plan.param_offset + plan.param_len];
            let g = &mut grads[plan.param_offset..plan.param_offset + plan.param_len];
            let need_dx = idx > 0;
            dy = match (&plan.spec, &tape.caches[idx]) {
                (LayerSpec::Dense { width }, Cache::Input(x)) => {
                    dense_backward(x, &dy, n, plan.input.size(), *width, p, g, need_dx)
                }
                (
                    LayerSpec::Conv1d {
                        channels,
                        kernel_width,
                        pooling_scale,
                    },
                    Cache::Patches(patches),
                ) => conv_backward(
                    patches,
                    &dy,
                    n,
                    plan.input,
                    *channels,
                    *kernel_width,
                    *pooling_scale,
                    p,
                    g,
                    need_dx,
                ),
                (LayerSpec::Activation { kind }, Cache::Input(x)) => {
                    x.iter().zip(&dy).map(|(&v, &d)| d * activate_grad(*kind, v)).collect()
                }
                (LayerSpec::Dropout { .. }, Cache::Mask(mask)) => {
                    dy.iter().zip(mask).map(|(d, m)| d * m).collect()
                }
                (
                    LayerSpec::BatchNorm1d,
                    Cache::BatchNorm {
                        xhat, inv_std, ..
                    },
                ) => {
                    let (rows, f) = bn_layout(plan.input, n);
                    bn_backward(&dy, xhat, inv_std, rows, f, &p[..f], g)
                }
                _ => dy,
            };
        }
    }

    /// Folds the batch statistics recorded on `tape` into the running
    /// averages used at inference.
    pub(crate) fn update_running_stats(&mut self, tape: &Tape) {
        for (plan, cache) in self.plan.iter().zip(&tape.caches) {
            if let Cache::BatchNorm {
                mean, var_unbiased, ..
            } = cache
            {
                let f = mean.len();
                let b = &mut self.buffers[plan.buffer_offset..plan.buffer_offset + plan.buffer_len];
                for j in 0..f {
                    b[j] = (1.0 - BATCHNORM_MOMENTUM) * b[j] + BATCHNORM_MOMENTUM * mean[j];
                    b[f + j] = (1.0 - BATCHNORM_MOMENTUM) * b[f + j] + BATCHNORM_MOMENTUM * var_unbiased[j];
                }
            }
        }
    }

    pub(crate) fn set_state(&mut self, params: &[f64], buffers: &[f64]) {
        self.params.copy_from_slice(params);
        self.buffers.copy_from_slice(buffers);
    }
}

pub(crate) fn activate(kind: Activation, v: f64) -> f64 {
    match kind {
        Activation::Relu => v.max(0.0),
        Activation::LeakyRelu => {
            if v > 0.0 {
                v
            } else {
                LEAKY_SLOPE * v
            }
        }
        Activation::Sigmoid => sigmoid(v),
    }
}

fn activate_grad(kind: Activation, v: f64) -> f64 {
    match kind {
        Activation::Relu => {
            if v > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::LeakyRelu => {
            if v > 0.0 {
                1.0
            } else {
                LEAKY_SLOPE
            }
        }
        Activation::Sigmoid => {
            let s = sigmoid(v);
            s * (1.0 - s)
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn dense_forward(x: &[f64], n: usize, inp: usize, out: usize, p: &[f64]) -> Vec<f64> {
    let (w, b) = p.split_at(out * inp);
    let mut y = Vec::with_capacity(n * out);
    for _ in 0..n {
        y.extend_from_slice(b);
    }
    // y (n x out) += x (n x inp) * w^T
    gemm(n, inp, out, x, (inp, 1), w, (1, inp), 1.0, &mut y);
    y
}

#[allow(clippy::too_many_arguments)]
fn dense_backward(
    x: &[f64],
    dy: &[f64],
    n: usize,
    inp: usize,
    out: usize,
    p: &[f64],
    g: &mut [f64],
    need_dx: bool,
) -> Vec<f64> {
    let (gw, gb) = g.split_at_mut(out * inp);
    // gw (out x inp) = dy^T * x
    gemm(out, n, inp, dy, (1, out), x, (inp, 1), 0.0, gw);
    gb.fill(0.0);
    for row in dy.chunks_exact(out) {
        for (b, d) in gb.iter_mut().zip(row) {
            *b += d;
        }
    }
    if !need_dx {
        return Vec::new();
    }
    let w = &p[..out * inp];
    let mut dx = vec![0.0; n * inp];
    gemm(n, out, inp, dy, (out, 1), w, (inp, 1), 0.0, &mut dx);
    dx
}

fn conv_dims(input: Shape) -> (usize, usize) {
    match input {
        Shape::Seq { len, channels } => (len, channels),
        Shape::Flat(_) => unreachable!("validated by plan"),
    }
}

fn conv_forward(
    x: &[f64],
    n: usize,
    input: Shape,
    cout: usize,
    kw: usize,
    pool: usize,
    p: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (len, cin) = conv_dims(input);
    let pad = (kw - 1) / 2;
    let cols = kw * cin;
    let mut patches = vec![0.0; n * len * cols];
    for s in 0..n {
        let xs = &x[s * len * cin..(s + 1) * len * cin];
        for pos in 0..len {
            let row = &mut patches[(s * len + pos) * cols..(s * len + pos + 1) * cols];
            for j in 0..kw {
                let src = pos as isize + j as isize - pad as isize;
                if src >= 0 && (src as usize) < len {
                    let src = src as usize;
                    row[j * cin..(j + 1) * cin].copy_from_slice(&xs[src * cin..(src + 1) * cin]);
                }
            }
        }
    }
    let (w, b) = p.split_at(cout * cols);
    let mut y = Vec::with_capacity(n * len * cout);
    for _ in 0..n * len {
        y.extend_from_slice(b);
    }
    gemm(n * len, cols, cout, &patches, (cols, 1), w, (1, cols), 1.0, &mut y);
    if pool > 1 {
        (avg_pool(&y, n, len, cout, pool), patches)
    } else {
        (y, patches)
    }
}

fn avg_pool(y: &[f64], n: usize, len: usize, ch: usize, pool: usize) -> Vec<f64> {
    let out_len = len / pool;
    let scale = 1.0 / pool as f64;
    let mut out = vec![0.0; n * out_len * ch];
    for s in 0..n {
        for q in 0..out_len {
            let dst = &mut out[(s * out_len + q) * ch..(s * out_len + q + 1) * ch];
            for j in 0..pool {
                let src = &y[(s * len + q * pool + j) * ch..(s * len + q * pool + j + 1) * ch];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += v * scale;
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    patches: &[f64],
    dy: &[f64],
    n: usize,
    input: Shape,
    cout: usize,
    kw: usize,
    pool: usize,
    p: &[f64],
    g: &mut [f64],
    need_dx: bool,
) -> Vec<f64> {
    let (len, cin) = conv_dims(input);
    let cols = kw * cin;
    let rows = n * len;
    let d_conv = if pool > 1 {
        let out_len = len / pool;
        let scale = 1.0 / pool as f64;
        let mut d = vec![0.0; rows * cout];
        for s in 0..n {
            for q in 0..out_len {
                let src = &dy[(s * out_len + q) * cout..(s * out_len + q + 1) * cout];
                for j in 0..pool {
                    let dst = &mut d[(s * len + q * pool + j) * cout..(s * len + q * pool + j + 1) * cout];
                    for (a, v) in dst.iter_mut().zip(src) {
                        *a = v * scale;
                    }
                }
            }
        }
        d
    } else {
        dy.to_vec()
    };
    let (gw, gb) = g.split_at_mut(cout * cols);
    gemm(cout, rows, cols, &d_conv, (1, cout), patches, (cols, 1), 0.0, gw);
    gb.fill(0.0);
    for row in d_conv.chunks_exact(cout) {
        for (b, d) in gb.iter_mut().zip(row) {
            *b += d;
        }
    }
    if !need_dx {
        return Vec::new();
    }
    let w = &p[..cout * cols];
    let mut d_patches = vec![0.0; rows * cols];
    gemm(rows, cout, cols, &d_conv, (cout, 1), w, (cols, 1), 0.0, &mut d_patches);
    let pad = (kw - 1) / 2;
    let mut dx = vec![0.0; n * len * cin];
    for s in 0..n {
        for pos in 0..len {
            let row = &d_patches[(s * len + pos) * cols..(s * len + pos + 1) * cols];
            for j in 0..kw {
                let src = pos as isize + j as isize - pad as isize;
                if src >= 0 && (src as usize) < len {
                    let base = (s * len + src as usize) * cin;
                    for (d, v) in dx[base..base + cin].iter_mut().zip(&row[j * cin..(j + 1) * cin]) {
                        *d += v;
                    }
                }
            }
        }
    }
    dx
}

/// Rows and features batchnorm normalises over: per unit for flat inputs,
/// per channel (pooled over positions) for sequences.
fn bn_layout(input: Shape, n: usize) -> (usize, usize) {
    match input {
        Shape::Flat(f) => (n, f),
        Shape::Seq { len, channels } => (n * len, channels),
    }
}

fn bn_train(x: &[f64], rows: usize, f: usize, gamma: &[f64], beta: &[f64]) -> (Vec<f64>, Cache) {
    let mut mean = vec![0.0; f];
    for row in x.chunks_exact(f) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let mut var = vec![0.0; f];
    for row in x.chunks_exact(f) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let var_unbiased: Vec<f64> = var
        .iter()
        .map(|s| if rows > 1 { s / (rows - 1) as f64 } else { 0.0 })
        .collect();
    let inv_std: Vec<f64> = var
        .iter()
        .map(|s| 1.0 / (s / rows as f64 + BATCHNORM_EPS).sqrt())
        .collect();
    let mut xhat = Vec::with_capacity(x.len());
    let mut y = Vec::with_capacity(x.len());
    for row in x.chunks_exact(f) {
        for j in 0..f {
            let h = (row[j] - mean[j]) * inv_std[j];
            xhat.push(h);
            y.push(gamma[j] * h + beta[j]);
        }
    }
    (
        y,
        Cache::BatchNorm {
            xhat,
            inv_std,
            mean,
            var_unbiased,
        },
    )
}

fn bn_infer(x: &[f64], _rows: usize, f: usize, gamma: &[f64], beta: &[f64], mean: &[f64], var: &[f64]) -> Vec<f64> {
    let scale: Vec<f64> = (0..f).map(|j| gamma[j] / (var[j] + BATCHNORM_EPS).sqrt()).collect();
    x.chunks_exact(f)
        .flat_map(|row| (0..f).map(|j| (row[j] - mean[j]) * scale[j] + beta[j]).collect::<Vec<_>>())
        .collect()
}

fn bn_backward(
    dy: &[f64],
    xhat: &[f64],
    inv_std: &[f64],
    rows: usize,
    f: usize,
    gamma: &[f64],
    g: &mut [f64],
) -> Vec<f64> {
    let mut sum_dy = vec![0.0; f];
    let mut sum_dy_xhat = vec![0.0; f];
    for (drow, hrow) in dy.chunks_exact(f).zip(xhat.chunks_exact(f)) {
        for j in 0..f {
            sum_dy[j] += drow[j];
            sum_dy_xhat[j] += drow[j] * hrow[j];
        }
    }
    let (gg, gb) = g.split_at_mut(f);
    gg.copy_from_slice(&sum_dy_xhat);
    gb.copy_from_slice(&sum_dy);
    let m = rows as f64;
    let mut dx = Vec::with_capacity(dy.len());
    for (drow, hrow) in dy.chunks_exact(f).zip(xhat.chunks_exact(f)) {
        for j in 0..f {
            dx.push(gamma[j] * inv_std[j] / m * (m * drow[j] - sum_dy[j] - hrow[j] * sum_dy_xhat[j]));
        }
    }
    dx
}
