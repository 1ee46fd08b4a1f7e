//! Shift-aware selection of designed candidates and regret evaluation.
//!
//! Selection functions only ever see a [`CandidatePool`], which carries
//! predictions and detection metrics but no ground truth; oracle values are
//! passed separately to the regret functions.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvfmt::{fmt_f64, write_rows};
use crate::seed::rng_for;
use crate::stats::{mean, percentile, percentile_sorted};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
    #[error("bins {0} and {1} overlap")]
    OverlappingBins(usize, usize),
    #[error("oracle values cover {oracle} candidates but the pool has {pool}")]
    OracleMismatch { oracle: usize, pool: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub prediction: f64,
    /// Shift-detection metric; lower means more trustworthy.
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidatePool {
    entries: Vec<PoolEntry>,
}

impl CandidatePool {
    pub fn new(predictions: &[f64], metrics: &[f64]) -> Result<Self, SelectError> {
        if predictions.len() != metrics.len() {
            return Err(SelectError::InvalidConfig(format!(
                "{} predictions but {} metric values",
                predictions.len(),
                metrics.len()
            )));
        }
        if predictions.iter().chain(metrics).any(|v| v.is_nan()) {
            return Err(SelectError::InvalidConfig("NaN prediction or metric".into()));
        }
        Ok(Self {
            entries: predictions
                .iter()
                .zip(metrics)
                .map(|(&prediction, &metric)| PoolEntry { prediction, metric })
                .collect(),
        })
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn resample(&self, idx: &[usize]) -> CandidatePool {
        CandidatePool {
            entries: idx.iter().map(|&i| self.entries[i]).collect(),
        }
    }
}

/// Indices into the pool, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub indices: Vec<usize>,
    /// Fewer candidates than requested were eligible.
    pub shortfall: bool,
}

fn check_k(pool: &CandidatePool, k: usize) -> Result<(), SelectError> {
    if pool.is_empty() {
        return Err(SelectError::EmptyPool);
    }
    if k == 0 {
        return Err(SelectError::InvalidConfig("K must be positive".into()));
    }
    Ok(())
}

/// Top `k` of `eligible` by prediction; ties keep the lower index.
fn top_by_prediction(pool: &CandidatePool, mut eligible: Vec<usize>, k: usize) -> Selection {
    let e = &pool.entries;
    eligible.sort_by(|&a, &b| e[b].prediction.total_cmp(&e[a].prediction).then(a.cmp(&b)));
    let shortfall = eligible.len() < k;
    eligible.truncate(k);
    Selection {
        indices: eligible,
        shortfall,
    }
}

pub fn greedy_select(pool: &CandidatePool, k: usize) -> Result<Selection, SelectError> {
    check_k(pool, k)?;
    Ok(top_by_prediction(pool, (0..pool.len()).collect(), k))
}

/// The `k` best-predicted candidates among those with `metric <= c`.
pub fn cutoff_select(pool: &CandidatePool, c: f64, k: usize) -> Result<Selection, SelectError> {
    check_k(pool, k)?;
    if !c.is_finite() {
        return Err(SelectError::InvalidConfig(format!("cutoff {c} is not finite")));
    }
    let eligible = (0..pool.len()).filter(|&i| pool.entries[i].metric <= c).collect();
    Ok(top_by_prediction(pool, eligible, k))
}

/// Half-open metric interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinFill {
    pub quota: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedSelection {
    pub indices: Vec<usize>,
    pub per_bin: Vec<BinFill>,
}

impl StratifiedSelection {
    pub fn underfull_bins(&self) -> Vec<usize> {
        (0..self.per_bin.len())
            .filter(|&b| self.per_bin[b].selected < self.per_bin[b].quota)
            .collect()
    }
}

/// Per bin, the top-`quota` candidates by prediction whose metric lies in it.
pub fn stratified_select(pool: &CandidatePool, bins: &[Bin], quotas: &[usize]) -> Result<StratifiedSelection, SelectError> {
    if pool.is_empty() {
        return Err(SelectError::EmptyPool);
    }
    if bins.len() != quotas.len() || bins.is_empty() {
        return Err(SelectError::InvalidConfig("need one positive quota per bin".into()));
    }
    if quotas.contains(&0) {
        return Err(SelectError::InvalidConfig("quotas must be positive".into()));
    }
    for (i, b) in bins.iter().enumerate() {
        if b.lo.is_nan() || b.hi.is_nan() || b.lo >= b.hi {
            return Err(SelectError::InvalidConfig(format!("bin {i} is empty or unordered")));
        }
        for (j, o) in bins.iter().enumerate().skip(i + 1) {
            if b.lo < o.hi && o.lo < b.hi {
                return Err(SelectError::OverlappingBins(i, j));
            }
        }
    }
    let mut indices = Vec::new();
    let mut per_bin = Vec::with_capacity(bins.len());
    for (b, &quota) in bins.iter().zip(quotas) {
        let eligible = (0..pool.len())
            .filter(|&i| (b.lo..b.hi).contains(&pool.entries[i].metric))
            .collect();
        let s = top_by_prediction(pool, eligible, quota);
        per_bin.push(BinFill {
            quota,
            selected: s.indices.len(),
        });
        indices.extend(s.indices);
    }
    Ok(StratifiedSelection { indices, per_bin })
}

/// Top `k` by `prediction - lambda * metric`; ties go to the higher
/// prediction, then the lower index.
pub fn utility_select(pool: &CandidatePool, lambda: f64, k: usize) -> Result<Selection, SelectError> {
    check_k(pool, k)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SelectError::InvalidConfig("lambda must be finite and >= 0".into()));
    }
    let e = &pool.entries;
    let u: Vec<f64> = e.iter().map(|c| c.prediction - lambda * c.metric).collect();
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.sort_by(|&a, &b| {
        u[b].total_cmp(&u[a])
            .then(e[b].prediction.total_cmp(&e[a].prediction))
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    Ok(Selection {
        indices: idx,
        shortfall: false,
    })
}

/// Batch statistic of oracle values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Max,
    P95,
    P90,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Max => "max",
            Statistic::P95 => "p95",
            Statistic::P90 => "p90",
        }
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        match self {
            Statistic::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Statistic::P95 => percentile(values, 95.0),
            Statistic::P90 => percentile(values, 90.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regret {
    pub value: f64,
    /// Nothing was selected; the selected-side statistic is the pool minimum.
    pub empty_selection: bool,
}

/// `stat(oracle over pool) - stat(oracle over selected)`.
pub fn regret(selected: &[usize], oracle: &[f64], stat: Statistic) -> Result<Regret, SelectError> {
    if oracle.is_empty() {
        return Err(SelectError::EmptyPool);
    }
    if let Some(&bad) = selected.iter().find(|&&i| i >= oracle.len()) {
        return Err(SelectError::OracleMismatch {
            oracle: oracle.len(),
            pool: bad + 1,
        });
    }
    let full = stat.apply(oracle);
    if selected.is_empty() {
        let floor = oracle.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(Regret {
            value: full - floor,
            empty_selection: true,
        });
    }
    let chosen: Vec<f64> = selected.iter().map(|&i| oracle[i]).collect();
    Ok(Regret {
        value: full - stat.apply(&chosen),
        empty_selection: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Cutoff percentiles in (0, 100].
    pub percentiles: Vec<f64>,
    pub ks: Vec<usize>,
    pub statistics: Vec<Statistic>,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            percentiles: (1..=10).map(|p| p as f64 * 10.0).collect(),
            ks: vec![10, 50, 100, 250],
            statistics: vec![Statistic::Max, Statistic::P95, Statistic::P90],
            replicates: 50,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self, pool_len: usize) -> Result<(), SelectError> {
        let bad = |m: String| Err(SelectError::InvalidConfig(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.percentiles.is_empty() || self.percentiles.iter().any(|p| !(*p > 0.0 && *p <= 100.0)) {
            return bad("percentiles must lie in (0, 100]".into());
        }
        if self.ks.is_empty() || self.statistics.is_empty() {
            return bad("need at least one K and one statistic".into());
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k == 0 || k > pool_len) {
            return bad(format!("K = {k} must lie in 1..={pool_len}"));
        }
        Ok(())
    }
}

/// Label for greedy-baseline rows.
pub const GREEDY: &str = "greedy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub metric: String,
    /// `None` for the unfiltered greedy baseline.
    pub percentile: Option<f64>,
    pub k: usize,
    pub statistic: Statistic,
    pub replicate: usize,
    pub regret: f64,
    pub empty_selection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub metric: String,
    pub percentile: Option<f64>,
    pub k: usize,
    pub statistic: Statistic,
    pub mean: f64,
    /// Standard deviation across replicates (divisor `B - 1`; 0 when `B = 1`).
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub rows: Vec<RegretRow>,
    pub replicates: usize,
}

impl RegretReport {
    pub fn summary(&self) -> Vec<RegretSummary> {
        let mut keys: Vec<(String, Option<f64>, usize, Statistic)> = Vec::new();
        for r in &self.rows {
            let key = (r.metric.clone(), r.percentile, r.k, r.statistic);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(metric, percentile, k, statistic)| {
                let v: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.metric == metric && r.percentile == percentile && r.k == k && r.statistic == statistic)
                    .map(|r| r.regret)
                    .collect();
                let m = mean(&v);
                let std = if v.len() > 1 {
                    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
                } else {
                    0.0
                };
                RegretSummary {
                    metric,
                    percentile,
                    k,
                    statistic,
                    mean: m,
                    std,
                }
            })
            .collect()
    }

    /// Summary entry for one curve point.
    pub fn point(&self, metric: &str, percentile: Option<f64>, k: usize, statistic: Statistic) -> Option<RegretSummary> {
        self.summary()
            .into_iter()
            .find(|s| s.metric == metric && s.percentile == percentile && s.k == k && s.statistic == statistic)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SelectError> {
        write_rows(
            path,
            &["metric", "percentile", "K", "statistic", "replicate", "regret"],
            self.rows.iter().map(|r| {
                vec![
                    r.metric.clone(),
                    r.percentile.map(fmt_f64).unwrap_or_default(),
                    r.k.to_string(),
                    r.statistic.name().to_string(),
                    r.replicate.to_string(),
                    fmt_f64(r.regret),
                ]
            }),
        )?;
        Ok(())
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<(), SelectError> {
        write_rows(
            path,
            &["metric", "percentile", "K", "statistic", "mean", "std"],
            self.summary().into_iter().map(|s| {
                vec![
                    s.metric,
                    s.percentile.map(fmt_f64).unwrap_or_default(),
                    s.k.to_string(),
                    s.statistic.name().to_string(),
                    fmt_f64(s.mean),
                    fmt_f64(s.std),
                ]
            }),
        )?;
        Ok(())
    }
}

/// Bootstrap regret of percentile-cutoff selection for each named metric,
/// plus the unfiltered greedy baseline.
///
/// Replicate `r` resamples the whole pool with replacement from a stream
/// derived from `(cfg.seed, r)`, so every metric sees the same resamples.
/// Within a replicate the cutoff for percentile `p` is the `p`-th percentile
/// of that metric over the resample.
pub fn bootstrap_regret(
    predictions: &[f64],
    oracle: &[f64],
    metrics: &[(&str, &[f64])],
    cfg: &BootstrapConfig,
) -> Result<RegretReport, SelectError> {
    let n = predictions.len();
    if n == 0 {
        return Err(SelectError::EmptyPool);
    }
    if oracle.len() != n {
        return Err(SelectError::OracleMismatch {
            oracle: oracle.len(),
            pool: n,
        });
    }
    cfg.validate(n)?;
    let pools = metrics
        .iter()
        .map(|(name, m)| Ok((*name, CandidatePool::new(predictions, m)?)))
        .collect::<Result<Vec<_>, SelectError>>()?;
    let mut rows = Vec::new();
    for r in 0..cfg.replicates {
        let mut rng = rng_for(cfg.seed, "bootstrap", r as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let truth: Vec<f64> = idx.iter().map(|&i| oracle[i]).collect();
        let base = CandidatePool::new(predictions, predictions)?.resample(&idx);
        for &k in &cfg.ks {
            let greedy = greedy_select(&base, k)?;
            for &statistic in &cfg.statistics {
                let g = regret(&greedy.indices, &truth, statistic)?;
                rows.push(RegretRow {
                    metric: GREEDY.into(),
                    percentile: None,
                    k,
                    statistic,
                    replicate: r,
                    regret: g.value,
                    empty_selection: g.empty_selection,
                });
            }
        }
        for (name, pool) in &pools {
            let sample = pool.resample(&idx);
            let mut sorted: Vec<f64> = sample.entries.iter().map(|e| e.metric).collect();
            sorted.sort_by(f64::total_cmp);
            for &p in &cfg.percentiles {
                let c = percentile_sorted(&sorted, p);
                for &k in &cfg.ks {
                    let sel = cutoff_select(&sample, c, k)?;
                    for &statistic in &cfg.statistics {
                        let reg = regret(&sel.indices, &truth, statistic)?;
                        rows.push(RegretRow {
                            metric: name.to_string(),
                            percentile: Some(p),
                            k,
                            statistic,
                            replicate: r,
                            regret: reg.value,
                            empty_selection: reg.empty_selection,
                        });
                    }
                }
            }
        }
    }
    Ok(RegretReport {
        rows,
        replicates: cfg.replicates,
    })
}

/// Single-metric, single-(K, statistic) curve over `percentiles`.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_regret_curve(
    pool: &CandidatePool,
    oracle: &[f64],
    metric_name: &str,
    percentiles: &[f64],
    k: usize,
    statistic: Statistic,
    replicates: usize,
    seed: u64,
) -> Result<RegretReport, SelectError> {
    let predictions: Vec<f64> = pool.entries.iter().map(|e| e.prediction).collect();
    let metric: Vec<f64> = pool.entries.iter().map(|e| e.metric).collect();
    let cfg = BootstrapConfig {
        percentiles: percentiles.to_vec(),
        ks: vec![k],
        statistics: vec![statistic],
        replicates,
        seed,
    };
    bootstrap_regret(&predictions, oracle, &[(metric_name, &metric)], &cfg)
}
