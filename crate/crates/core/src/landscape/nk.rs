//! NK fitness landscapes.
//!
//! Position `i` contributes a value looked up from a table indexed by its own
//! symbol and the symbols at `K` neighbour positions. Table entries are
//! uniform in `[0, 1)` and generated on demand by hashing
//! `(seed, i, symbols)`, so arbitrarily large `K` costs no memory.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::sequence::{Alphabet, Sequence};
use super::LandscapeError;
use crate::seed::{mix, rng_for, unit_from_hash};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NKLandscapeSpec {
    pub length: usize,
    pub k: usize,
    pub seed: u64,
    #[serde(default)]
    pub alphabet: Alphabet,
}

#[derive(Debug, Clone)]
pub struct NKLandscape {
    spec: NKLandscapeSpec,
    neighbors: Vec<Vec<usize>>,
}

impl NKLandscape {
    pub fn new(spec: NKLandscapeSpec) -> Result<Self, LandscapeError> {
        if spec.length == 0 {
            return Err(LandscapeError::InvalidSpec("NK length must be positive".into()));
        }
        if spec.k >= spec.length {
            return Err(LandscapeError::InvalidSpec(format!(
                "K = {} must be below L = {}",
                spec.k, spec.length
            )));
        }
        let mut rng = rng_for(spec.seed, "nk-neighbors", 0);
        let neighbors = (0..spec.length)
            .map(|i| {
                let mut picks: Vec<usize> = index::sample(&mut rng, spec.length - 1, spec.k)
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j })
                    .collect();
                picks.sort_unstable();
                picks
            })
            .collect();
        Ok(Self { spec, neighbors })
    }

    pub fn spec(&self) -> &NKLandscapeSpec {
        &self.spec
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.spec.alphabet
    }

    pub fn length(&self) -> usize {
        self.spec.length
    }

    pub fn neighbors(&self, position: usize) -> &[usize] {
        &self.neighbors[position]
    }

    fn contribution(&self, position: usize, s: &[u8]) -> f64 {
        let mut h = mix(self.spec.seed, position as u64);
        h = mix(h, s[position] as u64);
        for &j in &self.neighbors[position] {
            h = mix(h, s[j] as u64 + 1);
        }
        unit_from_hash(h)
    }

    /// Mean contribution over positions, in `[0, 1)`.
    pub fn fitness(&self, s: &Sequence) -> Result<f64, LandscapeError> {
        s.check(&self.spec.alphabet, self.spec.length)?;
        Ok(self.fitness_unchecked(s))
    }

    pub(crate) fn fitness_unchecked(&self, s: &Sequence) -> f64 {
        let idx = s.indices();
        (0..self.spec.length).map(|i| self.contribution(i, idx)).sum::<f64>() / self.spec.length as f64
    }
}

pub fn nk_fitness(landscape: &NKLandscape, s: &Sequence) -> Result<f64, LandscapeError> {
    landscape.fitness(s)
}
