use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adalead::mutate_symbol;
use super::{check_starts, merge_pool, Algorithm, Candidate, Iteration, Objective, SearchError, Trajectory};
use crate::landscape::{Alphabet, Sequence};
use crate::seed::rng_for;

/// Stochastic beam search: each iteration draws parents from the beam with
/// probability proportional to `exp(prediction / temperature)`, proposes a
/// single-site mutant of each, and keeps the best `beam_width` candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    pub beam_width: usize,
    pub max_iterations: usize,
    /// Distinct evaluations allowed per trajectory.
    pub budget: usize,
    /// Proposals per iteration; `None` spreads the budget evenly.
    pub proposals_per_iteration: Option<usize>,
    pub temperature: f64,
    /// Supplied by the caller; not part of the serialized settings.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam_width: 5,
            max_iterations: 15,
            budget: 5000,
            proposals_per_iteration: None,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidConfig(m.into()));
        if self.beam_width == 0 {
            return bad("beam_width must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if self.proposals_per_iteration == Some(0) {
            return bad("proposals_per_iteration must be positive");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if self.budget < self.beam_width {
            return Err(SearchError::Budget {
                budget: self.budget,
                needed: self.beam_width,
            });
        }
        Ok(())
    }

    pub fn proposals(&self) -> usize {
        self.proposals_per_iteration
            .unwrap_or_else(|| (self.budget.saturating_sub(1)).div_ceil(self.max_iterations).max(1))
    }
}

pub fn beam_search(
    obj: &Objective,
    starts: &[Sequence],
    alphabet: &Alphabet,
    cfg: &BeamConfig,
) -> Result<Vec<Trajectory>, SearchError> {
    cfg.validate()?;
    check_starts(starts)?;
    for s in starts {
        s.check(alphabet, starts[0].len())?;
    }
    starts
        .iter()
        .enumerate()
        .map(|(t, start)| run(obj, start, alphabet.len(), cfg, rng_for(cfg.seed, "beam", t as u64)))
        .collect()
}

fn run(
    obj: &Objective,
    start: &Sequence,
    alphabet_len: usize,
    cfg: &BeamConfig,
    mut rng: ChaCha8Rng,
) -> Result<Trajectory, SearchError> {
    let mut session = obj.session(cfg.budget);
    let (e, _) = session.evaluate(std::slice::from_ref(start))?;
    let origin = Candidate {
        id: 0,
        sequence: start.clone(),
        eval: e[0],
    };
    let mut next_id = 1;
    let mut beam = merge_pool(&[], vec![origin.clone()], cfg.beam_width);
    let mut iterations = Vec::new();
    let mut truncated = false;

    for index in 1..=cfg.max_iterations {
        let source = if beam.is_empty() { std::slice::from_ref(&origin) } else { &beam[..] };
        let top = source[0].eval.target;
        let weights: Vec<f64> = source
            .iter()
            .map(|c| ((c.eval.target - top) / cfg.temperature).exp())
            .collect();
        let pick = WeightedIndex::new(&weights).expect("weights are positive and finite");
        let proposals: Vec<Sequence> = (0..cfg.proposals())
            .map(|_| {
                let mut s = source[pick.sample(&mut rng)].sequence.clone();
                let pos = rng.random_range(0..s.len());
                let idx = s.indices_mut();
                idx[pos] = mutate_symbol(idx[pos], alphabet_len, &mut rng);
                s
            })
            .collect();

        let (evals, cut) = session.evaluate(&proposals)?;
        if evals.is_empty() {
            truncated = cut;
            break;
        }
        let fresh: Vec<Candidate> = proposals
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
        beam = merge_pool(&beam, fresh, cfg.beam_width);
        iterations.push(Iteration {
            index,
            pool: beam.clone(),
        });
        if cut {
            truncated = true;
            break;
        }
    }
    Ok(Trajectory {
        algorithm: Algorithm::Beam,
        seed: cfg.seed,
        start: start.clone(),
        iterations,
        truncated,
        evaluations: session.evaluations(),
    })
}
