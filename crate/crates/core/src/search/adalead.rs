use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_starts, merge_pool, Algorithm, Candidate, Iteration, Objective, SearchError, Trajectory};
use crate::landscape::{Alphabet, Sequence};
use crate::seed::rng_for;

/// Pooled greedy genetic algorithm settings. The budget caps distinct
/// evaluations per trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub pool_size: usize,
    pub iterations: usize,
    /// Per-position mutation probability; `None` means `1 / L`.
    pub mutation_rate: Option<f64>,
    pub recombination_rate: f64,
    /// Parents are pool members within `kappa * |best|` of the best value.
    pub kappa: f64,
    pub budget: usize,
    /// Supplied by the caller; not part of the serialized settings.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            pool_size: 37,
            iterations: 15,
            mutation_rate: None,
            recombination_rate: 0.2,
            kappa: 0.05,
            budget: 5000,
            seed: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidConfig(m.into()));
        if self.pool_size == 0 {
            return bad("pool_size must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if let Some(m) = self.mutation_rate {
            if !(m > 0.0 && m < 1.0) {
                return bad("mutation_rate must lie in (0, 1)");
            }
        }
        if !(0.0..=1.0).contains(&self.recombination_rate) {
            return bad("recombination_rate must lie in [0, 1]");
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad("kappa must lie in (0, 1]");
        }
        if self.budget < self.pool_size {
            return Err(SearchError::Budget {
                budget: self.budget,
                needed: self.pool_size,
            });
        }
        Ok(())
    }
}

/// Replaces `current` with a uniformly chosen different symbol.
pub(crate) fn mutate_symbol(current: u8, alphabet_len: usize, rng: &mut ChaCha8Rng) -> u8 {
    if alphabet_len < 2 {
        return current;
    }
    let r = rng.random_range(0..alphabet_len as u8 - 1);
    if r >= current {
        r + 1
    } else {
        r
    }
}

/// One trajectory per start; trajectory `t` draws from its own stream.
pub fn adalead_search(
    obj: &Objective,
    starts: &[Sequence],
    alphabet: &Alphabet,
    cfg: &GAConfig,
) -> Result<Vec<Trajectory>, SearchError> {
    cfg.validate()?;
    check_starts(starts)?;
    for s in starts {
        s.check(alphabet, starts[0].len())?;
    }
    starts
        .iter()
        .enumerate()
        .map(|(t, start)| run(obj, start, alphabet.len(), cfg, rng_for(cfg.seed, "adalead", t as u64)))
        .collect()
}

fn run(
    obj: &Objective,
    start: &Sequence,
    alphabet_len: usize,
    cfg: &GAConfig,
    mut rng: ChaCha8Rng,
) -> Result<Trajectory, SearchError> {
    let len = start.len();
    let mu = cfg.mutation_rate.unwrap_or(1.0 / len as f64);
    let mut session = obj.session(cfg.budget);
    let (e, _) = session.evaluate(std::slice::from_ref(start))?;
    let origin = Candidate {
        id: 0,
        sequence: start.clone(),
        eval: e[0],
    };
    let mut next_id = 1;
    let mut pool = merge_pool(&[], vec![origin.clone()], cfg.pool_size);
    let mut iterations = Vec::new();
    let mut truncated = false;

    for index in 1..=cfg.iterations {
        let source = if pool.is_empty() { std::slice::from_ref(&origin) } else { &pool[..] };
        let best = source[0].eval.target;
        let threshold = best - cfg.kappa * best.abs();
        let parents: Vec<&Sequence> = source
            .iter()
            .filter(|c| c.eval.target >= threshold)
            .map(|c| &c.sequence)
            .collect();

        let children: Vec<Sequence> = (0..cfg.pool_size)
            .map(|_| {
                let mut child = parents[rng.random_range(0..parents.len())].clone();
                if parents.len() > 1 && rng.random_bool(cfg.recombination_rate) {
                    let other = parents[rng.random_range(0..parents.len())];
                    for (c, &o) in child.indices_mut().iter_mut().zip(other.indices()) {
                        if rng.random_bool(0.5) {
                            *c = o;
                        }
                    }
                }
                for c in child.indices_mut() {
                    if rng.random_bool(mu) {
                        *c = mutate_symbol(*c, alphabet_len, &mut rng);
                    }
                }
                child
            })
            .collect();

        let (evals, cut) = session.evaluate(&children)?;
        if evals.is_empty() {
            truncated = cut;
            break;
        }
        let fresh: Vec<Candidate> = children
            .into_iter()
            .zip(evals)
            .map(|(sequence, eval)| {
                next_id += 1;
                Candidate {
                    id: next_id - 1,
                    sequence,
                    eval,
                }
            })
            .collect();
        pool = merge_pool(&pool, fresh, cfg.pool_size);
        iterations.push(Iteration {
            index,
            pool: pool.clone(),
        });
        if cut {
            truncated = true;
            break;
        }
    }
    Ok(Trajectory {
        algorithm: Algorithm::Adalead,
        seed: cfg.seed,
        start: start.clone(),
        iterations,
        truncated,
        evaluations: session.evaluations(),
    })
}
