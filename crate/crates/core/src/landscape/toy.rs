//! Two-dimensional toy problem: a negated, normalised Himmelblau function on
//! `[-5, 5]^2` and the training distribution concentrated near its maxima.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetMeta, Inputs, LabeledDataset};
use super::LandscapeError;
use crate::seed::rng_for;

pub const BOUND: f64 = 5.0;

/// Maximum of the Himmelblau function over `[-5, 5]^2`, attained at `(5, 5)`.
pub const HIMMELBLAU_MAX: f64 = 890.0;

/// Grid resolution used for the training distribution.
pub const GRID_STEP: f64 = 0.005;
const GRID_HALF: i64 = 1000;

/// Sharpness of the training density `exp(25 f(x))`.
pub const SAMPLING_SHARPNESS: f64 = 25.0;

/// A point of the bounded input space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousInput([f64; 2]);

impl ContinuousInput {
    pub fn new(x0: f64, x1: f64) -> Result<Self, LandscapeError> {
        let ok = |v: f64| v.is_finite() && (-BOUND..=BOUND).contains(&v);
        if !(ok(x0) && ok(x1)) {
            return Err(LandscapeError::OutOfBounds { x0, x1 });
        }
        Ok(Self([x0, x1]))
    }

    pub fn x0(&self) -> f64 {
        self.0[0]
    }

    pub fn x1(&self) -> f64 {
        self.0[1]
    }

    pub fn coords(&self) -> [f64; 2] {
        self.0
    }
}

fn himm(x0: f64, x1: f64) -> f64 {
    let a = x0 * x0 + x1 - 11.0;
    let b = x0 + x1 * x1 - 7.0;
    a * a + b * b
}

pub fn himmelblau(x: ContinuousInput) -> f64 {
    himm(x.x0(), x.x1())
}

/// `1 - himmelblau(x) / 890`, in `[0, 1]` on the input space.
pub fn toy_ground_truth(x: ContinuousInput) -> f64 {
    1.0 - himmelblau(x) / HIMMELBLAU_MAX
}

/// Coordinate of grid index `i` in `0..=2000`.
pub fn grid_coord(i: usize) -> f64 {
    (i as i64 - GRID_HALF) as f64 / (GRID_HALF as f64 / BOUND)
}

pub fn grid_points_per_axis() -> usize {
    (2 * GRID_HALF + 1) as usize
}

/// Cumulative (unnormalised) sampling mass over the grid in row-major
/// `(x0 index, x1 index)` order; zero mass where `x0 <= 0`.
fn grid_cdf() -> &'static [f64] {
    static CDF: OnceLock<Vec<f64>> = OnceLock::new();
    CDF.get_or_init(|| {
        let n = grid_points_per_axis();
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(n * n);
        for i in 0..n {
            let x0 = grid_coord(i);
            for j in 0..n {
                if x0 > 0.0 {
                    let f = 1.0 - himm(x0, grid_coord(j)) / HIMMELBLAU_MAX;
                    // shifted by the max f = 1 so the largest weight is 1
                    acc += (SAMPLING_SHARPNESS * (f - 1.0)).exp();
                }
                cdf.push(acc);
            }
        }
        cdf
    })
}

/// Normalised training-distribution probability of grid cell `(i, j)`.
pub fn grid_probability(i: usize, j: usize) -> f64 {
    let cdf = grid_cdf();
    let n = grid_points_per_axis();
    let k = i * n + j;
    let prev = if k == 0 { 0.0 } else { cdf[k - 1] };
    (cdf[k] - prev) / cdf[cdf.len() - 1]
}

/// Samples `n` grid points (with replacement) from the density proportional
/// to `exp(25 f(x))` on `x0 > 0`, labelled with the exact ground truth.
pub fn sample_toy_training_set(n: usize, seed: u64) -> Result<LabeledDataset, LandscapeError> {
    if n == 0 {
        return Err(LandscapeError::Empty("toy training set size"));
    }
    let cdf = grid_cdf();
    let total = cdf[cdf.len() - 1];
    let axis = grid_points_per_axis();
    let mut rng = rng_for(seed, "toy-train", 0);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let x = ContinuousInput::new(grid_coord(k / axis), grid_coord(k % axis))?;
        labels.push(toy_ground_truth(x));
        points.push(x);
    }
    LabeledDataset::new(
        Inputs::Continuous(points),
        labels,
        DatasetMeta {
            source: "toy2d".into(),
            seed,
        },
    )
}

/// `n` points drawn uniformly from the continuous input space.
pub fn sample_uniform_inputs(n: usize, seed: u64) -> Vec<ContinuousInput> {
    let mut rng = rng_for(seed, "toy-uniform", 0);
    (0..n)
        .map(|_| ContinuousInput(std::array::from_fn(|_| rng.random_range(-BOUND..=BOUND))))
        .collect()
}

/// `per_axis^2` evenly spaced points covering the input space, including its
/// corners, in row-major `(x0, x1)` order.
pub fn evaluation_grid(per_axis: usize) -> Vec<ContinuousInput> {
    let coord = |i: usize| {
        if per_axis == 1 {
            0.0
        } else {
            -BOUND + 2.0 * BOUND * i as f64 / (per_axis - 1) as f64
        }
    };
    (0..per_axis)
        .flat_map(|i| (0..per_axis).map(move |j| ContinuousInput([coord(i), coord(j)])))
        .collect()
}
