//! Surrogate-guided sequence design: a pooled genetic algorithm, a stochastic
//! beam search, trajectory recording and per-iteration shift statistics.

mod adalead;
mod beam;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adalead::{adalead_search, GAConfig};
pub use beam::{beam_search, BeamConfig};

use crate::csvfmt::{fmt_f64, write_rows};
use crate::landscape::{Alphabet, InputKind, Inputs, LabeledDataset, LandscapeError, NKLandscape, Sequence};
use crate::surrogate::{SurrogateError, SurrogateModel};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("budget {budget} cannot cover {needed} evaluations")]
    Budget { budget: usize, needed: usize },
    #[error("no start sequences")]
    NoStarts,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("no trajectories to summarise")]
    NoTrajectories,
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Anything that maps a batch of sequences to one value each.
pub trait SequenceScorer {
    fn score(&self, seqs: &[Sequence]) -> Result<Vec<f64>, SearchError>;
}

impl SequenceScorer for SurrogateModel {
    fn score(&self, seqs: &[Sequence]) -> Result<Vec<f64>, SearchError> {
        let InputKind::Sequence { alphabet, .. } = self.kind() else {
            return Err(SurrogateError::KindMismatch {
                expected: self.kind().clone(),
                actual: None,
            }
            .into());
        };
        let inputs = Inputs::Sequence {
            alphabet: alphabet.clone(),
            seqs: seqs.to_vec(),
        };
        Ok(self.predict(&inputs)?)
    }
}

impl SequenceScorer for NKLandscape {
    fn score(&self, seqs: &[Sequence]) -> Result<Vec<f64>, SearchError> {
        seqs.iter().map(|s| self.fitness(s).map_err(Into::into)).collect()
    }
}

/// Wraps a closure as a scorer.
pub struct FnScorer<F>(pub F);

impl<F: Fn(&Sequence) -> f64> SequenceScorer for FnScorer<F> {
    fn score(&self, seqs: &[Sequence]) -> Result<Vec<f64>, SearchError> {
        Ok(seqs.iter().map(&self.0).collect())
    }
}

pub struct Constraint<'a> {
    pub scorer: &'a dyn SequenceScorer,
    /// Candidates are admissible iff the constraint value is strictly above.
    pub threshold: f64,
}

/// Target surrogate plus an optional admissibility constraint.
pub struct Objective<'a> {
    pub target: &'a dyn SequenceScorer,
    pub constraint: Option<Constraint<'a>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub target: f64,
    pub constraint: Option<f64>,
    pub admissible: bool,
}

impl<'a> Objective<'a> {
    pub fn unconstrained(target: &'a dyn SequenceScorer) -> Self {
        Self {
            target,
            constraint: None,
        }
    }

    pub fn constrained(target: &'a dyn SequenceScorer, scorer: &'a dyn SequenceScorer, threshold: f64) -> Self {
        Self {
            target,
            constraint: Some(Constraint { scorer, threshold }),
        }
    }

    /// Uncached evaluation of a batch.
    pub fn evaluate(&self, seqs: &[Sequence]) -> Result<Vec<Evaluation>, SearchError> {
        if seqs.is_empty() {
            return Ok(Vec::new());
        }
        let target = self.target.score(seqs)?;
        let con = match &self.constraint {
            Some(c) => Some((c.scorer.score(seqs)?, c.threshold)),
            None => None,
        };
        Ok(target
            .into_iter()
            .enumerate()
            .map(|(i, t)| match &con {
                Some((v, gamma)) => Evaluation {
                    target: t,
                    constraint: Some(v[i]),
                    admissible: v[i] > *gamma,
                },
                None => Evaluation {
                    target: t,
                    constraint: None,
                    admissible: true,
                },
            })
            .collect())
    }

    pub fn session(&self, budget: usize) -> EvalSession<'_, 'a> {
        EvalSession {
            objective: self,
            cache: HashMap::new(),
            evaluations: 0,
            budget,
        }
    }
}

/// `(admissible, target value)` for one sequence.
pub fn constrained_eval(obj: &Objective, x: &Sequence) -> Result<(bool, f64), SearchError> {
    let e = obj.evaluate(std::slice::from_ref(x))?[0];
    Ok((e.admissible, e.target))
}

/// Memoised evaluation with a hard cap on distinct sequences evaluated.
pub struct EvalSession<'o, 'a> {
    objective: &'o Objective<'a>,
    cache: HashMap<Sequence, Evaluation>,
    evaluations: usize,
    budget: usize,
}

impl EvalSession<'_, '_> {
    /// Distinct sequences evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.evaluations
    }

    /// Evaluates the longest prefix of `seqs` whose previously unseen
    /// sequences fit in the remaining budget. Returns evaluations for that
    /// prefix and whether the batch was cut short.
    pub fn evaluate(&mut self, seqs: &[Sequence]) -> Result<(Vec<Evaluation>, bool), SearchError> {
        let mut fresh: Vec<Sequence> = Vec::new();
        let mut prefix = seqs.len();
        {
            let mut seen = std::collections::HashSet::new();
            for (i, s) in seqs.iter().enumerate() {
                if self.cache.contains_key(s) || seen.contains(s) {
                    continue;
                }
                if fresh.len() == self.remaining() {
                    prefix = i;
                    break;
                }
                seen.insert(s);
                fresh.push(s.clone());
            }
        }
        for (s, e) in fresh.iter().zip(self.objective.evaluate(&fresh)?) {
            self.cache.insert(s.clone(), e);
        }
        self.evaluations += fresh.len();
        Ok((seqs[..prefix].iter().map(|s| self.cache[s]).collect(), prefix < seqs.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Adalead,
    Beam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Generation order within the trajectory; the start is 0.
    pub id: usize,
    pub sequence: Sequence,
    pub eval: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iteration {
    /// 1-based.
    pub index: usize,
    /// Pool (or beam) after the iteration, best first.
    pub pool: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub start: Sequence,
    pub iterations: Vec<Iteration>,
    pub truncated: bool,
    pub evaluations: usize,
}

impl Trajectory {
    pub fn best(&self) -> Option<&Candidate> {
        self.iterations.last().and_then(|it| it.pool.first())
    }
}

/// Merges `incoming` into `pool`, drops duplicates (first occurrence wins) and
/// inadmissible candidates, and keeps the `keep` best by target value. Ties
/// go to the earlier-generated candidate.
pub(crate) fn merge_pool(pool: &[Candidate], incoming: Vec<Candidate>, keep: usize) -> Vec<Candidate> {
    let mut seen = std::collections::HashSet::new();
    let mut all: Vec<Candidate> = pool
        .iter()
        .cloned()
        .chain(incoming)
        .filter(|c| c.eval.admissible && seen.insert(c.sequence.clone()))
        .collect();
    all.sort_by(|a, b| b.eval.target.total_cmp(&a.eval.target).then(a.id.cmp(&b.id)));
    all.truncate(keep);
    all
}

pub(crate) fn check_starts(starts: &[Sequence]) -> Result<(), SearchError> {
    let first = starts.first().ok_or(SearchError::NoStarts)?;
    if first.is_empty() || starts.iter().any(|s| s.len() != first.len()) {
        return Err(SearchError::InvalidConfig("start sequences must share a positive length".into()));
    }
    Ok(())
}

/// The `k` distinct sequences with the highest labels (ties: earliest row).
pub fn top_starts(data: &LabeledDataset, k: usize) -> Result<Vec<Sequence>, SearchError> {
    let Inputs::Sequence { seqs, .. } = data.inputs() else {
        return Err(SearchError::InvalidConfig("starts need a sequence dataset".into()));
    };
    let mut idx: Vec<usize> = (0..seqs.len()).collect();
    idx.sort_by(|&a, &b| data.labels()[b].total_cmp(&data.labels()[a]).then(a.cmp(&b)));
    let mut seen = std::collections::HashSet::new();
    let out: Vec<Sequence> = idx
        .into_iter()
        .filter(|&i| seen.insert(&seqs[i]))
        .take(k)
        .map(|i| seqs[i].clone())
        .collect();
    if out.len() < k {
        return Err(SearchError::InvalidConfig(format!(
            "asked for {k} starts but only {} distinct sequences exist",
            out.len()
        )));
    }
    Ok(out)
}

/// Writes one row per pooled candidate per iteration.
pub fn write_trajectories_csv(path: &Path, alphabet: &Alphabet, trajs: &[Trajectory]) -> Result<(), SearchError> {
    let rows = trajs.iter().enumerate().flat_map(|(t, traj)| {
        traj.iterations.iter().flat_map(move |it| {
            it.pool.iter().map(move |c| {
                vec![
                    t.to_string(),
                    it.index.to_string(),
                    c.id.to_string(),
                    alphabet.render(&c.sequence),
                    fmt_f64(c.eval.target),
                    c.eval.constraint.map(fmt_f64).unwrap_or_default(),
                    c.eval.admissible.to_string(),
                ]
            })
        })
    });
    write_rows(
        path,
        &[
            "trajectory_id",
            "iteration",
            "candidate_id",
            "sequence",
            "predicted_target",
            "predicted_constraint",
            "admissible",
        ],
        rows,
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_prediction: f64,
    pub mse: f64,
    pub adversarial_fraction: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    /// `per_trajectory[t][i]` for iteration `i + 1` of trajectory `t`.
    pub per_trajectory: Vec<Vec<IterationStats>>,
    /// Unweighted mean over the trajectories that reached each iteration.
    pub mean: Vec<IterationStats>,
}

/// Per-iteration mean prediction, squared error against `oracle`, and the
/// fraction of candidates whose oracle value falls below `adversarial_threshold`.
/// Empty pools yield NaN rows and are left out of the cross-trajectory means.
pub fn trajectory_stats(
    trajs: &[Trajectory],
    oracle: &dyn SequenceScorer,
    adversarial_threshold: f64,
) -> Result<TrajectoryStats, SearchError> {
    if trajs.is_empty() || trajs.iter().all(|t| t.iterations.is_empty()) {
        return Err(SearchError::NoTrajectories);
    }
    let mut per_trajectory = Vec::with_capacity(trajs.len());
    for t in trajs {
        let mut rows = Vec::with_capacity(t.iterations.len());
        for it in &t.iterations {
            let seqs: Vec<Sequence> = it.pool.iter().map(|c| c.sequence.clone()).collect();
            let truth = oracle.score(&seqs)?;
            let n = seqs.len();
            let pred: Vec<f64> = it.pool.iter().map(|c| c.eval.target).collect();
            let nf = n as f64;
            rows.push(IterationStats {
                iteration: it.index,
                mean_prediction: pred.iter().sum::<f64>() / nf,
                mse: pred.iter().zip(&truth).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / nf,
                adversarial_fraction: truth.iter().filter(|&&y| y < adversarial_threshold).count() as f64 / nf,
                n,
            });
        }
        per_trajectory.push(rows);
    }
    let depth = per_trajectory.iter().map(Vec::len).max().unwrap_or(0);
    let mean = (0..depth)
        .map(|i| {
            let rows: Vec<&IterationStats> =
                per_trajectory.iter().filter_map(|r| r.get(i)).filter(|r| r.n > 0).collect();
            let k = rows.len() as f64;
            IterationStats {
                iteration: i + 1,
                mean_prediction: rows.iter().map(|r| r.mean_prediction).sum::<f64>() / k,
                mse: rows.iter().map(|r| r.mse).sum::<f64>() / k,
                adversarial_fraction: rows.iter().map(|r| r.adversarial_fraction).sum::<f64>() / k,
                n: rows.len(),
            }
        })
        .collect();
    Ok(TrajectoryStats { per_trajectory, mean })
}
