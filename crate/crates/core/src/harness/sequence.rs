//! Offline model-based optimisation on a synthetic NK landscape: PCR library,
//! surrogates, search, shift detection and regret of filtered selection.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::Rng;

use super::{read_columns, write_summary, Artifacts, DesignSet, ExperimentConfig, HarnessError, LabelSource, Stage};
use crate::csvfmt::{fmt_f64, parse_f64, write_rows};
use crate::landscape::{
    error_prone_pcr, labels_from_counts, simulate_counts, write_counts_csv, Alphabet, DatasetMeta, InputKind, Inputs,
    LabeledDataset, NKLandscape, NKLandscapeSpec, Sequence,
};
use crate::search::{
    adalead_search, beam_search, top_starts, trajectory_stats, write_trajectories_csv, Algorithm, Candidate,
    Evaluation, Iteration, Objective, SearchError, SequenceScorer, Trajectory,
};
use crate::seed::{derive_seed, rng_for};
use crate::select::{bootstrap_regret, SelectError};
use crate::shift::{build_ood_training_set, fit_ood_classifier, OODClassifier};
use crate::stats::{median, spearman};
use crate::surrogate::{fit_surrogate, DeepEnsemble, SurrogateModel};

const TRAIN: &str = "training_data.csv";
const CONSTRAINT_DATA: &str = "constraint_data.csv";
const COUNTS: &str = "counts.csv";
const MODELS: &str = "models";
const TRAINING_REPORT: &str = "training_report.csv";
const TRAJECTORIES: &str = "trajectories.csv";
const TRAJECTORY_META: &str = "trajectory_meta.csv";
const DESIGNS: &str = "designs.csv";
const DESIGN_METRICS: &str = "design_metrics.csv";
const TRAJECTORY_STATS: &str = "trajectory_stats.csv";
const SUMMARY: &str = "summary.csv";
const REGRET: &str = "regret.csv";
const REGRET_SUMMARY: &str = "regret_summary.csv";

/// Metric names used in the regret tables.
pub const OOD_METRIC: &str = "ood";
pub const ENSEMBLE_METRIC: &str = "ensemble";

/// Ground truth shared by every stage, rebuilt from the master seed.
struct World {
    alphabet: Alphabet,
    wild_type: Sequence,
    target: NKLandscape,
    packaging: NKLandscape,
}

/// Latent target value: raw NK fitness, or the scaled log-rate behind
/// simulated counts.
struct Oracle<'a> {
    landscape: &'a NKLandscape,
    scale: f64,
    offset: f64,
}

impl SequenceScorer for Oracle<'_> {
    fn score(&self, seqs: &[Sequence]) -> Result<Vec<f64>, SearchError> {
        seqs.iter()
            .map(|s| Ok(self.scale * (self.landscape.fitness(s)? - self.offset)))
            .collect()
    }
}

impl World {
    fn new(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let sc = &cfg.sequence;
        let alphabet = sc.alphabet()?;
        let length = sc.landscape.length;
        let mut rng = rng_for(cfg.seed, "wild-type", 0);
        let wt: Vec<u8> = (0..length).map(|_| rng.random_range(0..alphabet.len() as u8)).collect();
        let wild_type = Sequence::from_indices(wt, &alphabet)?;
        let landscape = |role: &str| {
            NKLandscape::new(NKLandscapeSpec {
                length,
                k: sc.landscape.k,
                seed: derive_seed(cfg.seed, role, 0),
                alphabet: alphabet.clone(),
            })
        };
        Ok(Self {
            target: landscape("nk-target")?,
            packaging: landscape("nk-packaging")?,
            alphabet,
            wild_type,
        })
    }

    fn oracle<'a>(&self, labels: &LabelSource, landscape: &'a NKLandscape, packaging: bool) -> Result<Oracle<'a>, HarnessError> {
        Ok(match *labels {
            LabelSource::Nk => Oracle {
                landscape,
                scale: 1.0,
                offset: 0.0,
            },
            LabelSource::Counts {
                packaging_scale,
                transduction_scale,
                ..
            } => Oracle {
                landscape,
                scale: if packaging { packaging_scale } else { transduction_scale },
                offset: landscape.fitness(&self.wild_type)?,
            },
        })
    }

    fn target_oracle(&self, cfg: &ExperimentConfig) -> Result<Oracle<'_>, HarnessError> {
        self.oracle(&cfg.sequence.data.labels, &self.target, false)
    }

    fn packaging_oracle(&self, cfg: &ExperimentConfig) -> Result<Oracle<'_>, HarnessError> {
        self.oracle(&cfg.sequence.data.labels, &self.packaging, true)
    }

    fn meta(&self, cfg: &ExperimentConfig, source: &str) -> DatasetMeta {
        DatasetMeta {
            source: source.into(),
            seed: derive_seed(cfg.seed, "pcr", 0),
        }
    }

    fn inputs(&self, seqs: Vec<Sequence>) -> Inputs {
        Inputs::Sequence {
            alphabet: self.alphabet.clone(),
            seqs,
        }
    }
}

pub(super) fn run(cfg: &ExperimentConfig, stage: Stage, art: &mut Artifacts) -> Result<(), HarnessError> {
    let world = World::new(cfg)?;
    match stage {
        Stage::GenData => gen_data(cfg, &world, art),
        Stage::TrainSurrogate => train_surrogates(cfg, &world, art),
        Stage::Search => search(cfg, &world, art),
        Stage::TrainOod => train_ood(cfg, &world, art),
        Stage::Evaluate => evaluate(cfg, &world, art),
        Stage::Select => select(cfg, art),
        Stage::Run => unreachable!("expanded by run_stage"),
    }
}

fn gen_data(cfg: &ExperimentConfig, world: &World, art: &mut Artifacts) -> Result<(), HarnessError> {
    let sc = &cfg.sequence;
    let library = error_prone_pcr(
        &world.wild_type,
        &world.alphabet,
        sc.data.epsilon,
        sc.data.n_train,
        derive_seed(cfg.seed, "pcr", 0),
    )?;
    let (seqs, target, packaging) = match sc.data.labels {
        LabelSource::Nk => {
            let t = world.target_oracle(cfg)?.score(&library)?;
            let p = world.packaging_oracle(cfg)?.score(&library)?;
            (library, t, p)
        }
        LabelSource::Counts { plasmid_depth, .. } => {
            let tsd = world.target_oracle(cfg)?.score(&library)?;
            let pkg = world.packaging_oracle(cfg)?.score(&library)?;
            let mut rng = rng_for(cfg.seed, "counts", 0);
            let tables: Vec<_> = library
                .iter()
                .zip(pkg.iter().zip(&tsd))
                .map(|(s, (&p, &t))| simulate_counts(world.alphabet.render(s), p, t, plasmid_depth, &mut rng))
                .collect();
            write_counts_csv(&art.create(COUNTS)?, &tables)?;
            // Variants that drop out at any stage carry no label.
            let mut kept = (Vec::new(), Vec::new(), Vec::new());
            for (s, t) in library.into_iter().zip(&tables) {
                if let Ok((p, y)) = labels_from_counts(t) {
                    kept.0.push(s);
                    kept.1.push(y);
                    kept.2.push(p);
                }
            }
            kept
        }
    };
    if seqs.len() < sc.search.n_starts {
        return Err(HarnessError::Runtime(format!(
            "only {} variants are labelled, fewer than the {} search starts",
            seqs.len(),
            sc.search.n_starts
        )));
    }
    let data = LabeledDataset::new(world.inputs(seqs.clone()), target, world.meta(cfg, "target"))?;
    data.write_csv(&art.create(TRAIN)?)?;
    if sc.constraint_threshold.is_some() {
        let c = LabeledDataset::new(world.inputs(seqs), packaging, world.meta(cfg, "constraint"))?;
        c.write_csv(&art.create(CONSTRAINT_DATA)?)?;
    }
    Ok(())
}

fn read_data(cfg: &ExperimentConfig, world: &World, art: &Artifacts, file: &str) -> Result<LabeledDataset, HarnessError> {
    let source = if file == TRAIN { "target" } else { "constraint" };
    Ok(LabeledDataset::read_sequence_csv(&art.input(file)?, &world.alphabet, world.meta(cfg, source))?)
}

fn kind(cfg: &ExperimentConfig, world: &World) -> InputKind {
    InputKind::Sequence {
        length: cfg.sequence.landscape.length,
        alphabet: world.alphabet.clone(),
    }
}

fn ensemble_stem(i: usize) -> String {
    format!("ensemble_{i}")
}

/// Fits the search target, the optional constraint model and the ensemble.
/// The target is trained separately from the ensemble members so their
/// disagreement is not inflated by the model the search exploits.
fn train_surrogates(cfg: &ExperimentConfig, world: &World, art: &mut Artifacts) -> Result<(), HarnessError> {
    let sc = &cfg.sequence;
    let data = read_data(cfg, world, art, TRAIN)?;
    let spec = sc.surrogate.architecture.build(kind(cfg, world).shape());
    let dir = art.dir(MODELS)?;
    let mut report = Vec::new();
    let mut fit = |name: String, data: &LabeledDataset, seed: u64, art: &mut Artifacts| -> Result<(), HarnessError> {
        let (model, r) = fit_surrogate(data, &spec, &sc.surrogate.train.with_seed(seed))?;
        art.record(&model.save(&dir, &name)?);
        report.push(vec![
            name,
            r.epochs_run.to_string(),
            r.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
            r.train_loss.last().copied().map(fmt_f64).unwrap_or_default(),
            r.val_loss.last().copied().map(fmt_f64).unwrap_or_default(),
        ]);
        Ok(())
    };
    fit("target".into(), &data, derive_seed(cfg.seed, "surrogate-target", 0), art)?;
    if sc.constraint_threshold.is_some() {
        let c = read_data(cfg, world, art, CONSTRAINT_DATA)?;
        fit("constraint".into(), &c, derive_seed(cfg.seed, "surrogate-constraint", 0), art)?;
    }
    for i in 0..sc.ensemble_size {
        fit(ensemble_stem(i), &data, derive_seed(cfg.seed, "ensemble", i as u64), art)?;
    }
    write_rows(
        &art.create(TRAINING_REPORT)?,
        &["model", "epochs_run", "best_epoch", "final_train_loss", "final_val_loss"],
        report,
    )?;
    Ok(())
}

fn search(cfg: &ExperimentConfig, world: &World, art: &mut Artifacts) -> Result<(), HarnessError> {
    let sc = &cfg.sequence;
    let s = &sc.search;
    let data = read_data(cfg, world, art, TRAIN)?;
    let models = art.input(MODELS)?;
    let target = SurrogateModel::load(&models, "target")?;
    let constraint = match sc.constraint_threshold {
        Some(_) => Some(SurrogateModel::load(&models, "constraint")?),
        None => None,
    };
    let objective = match (&constraint, sc.constraint_threshold) {
        (Some(c), Some(t)) => Objective::constrained(&target, c, t),
        _ => Objective::unconstrained(&target),
    };
    let distinct = top_starts(&data, s.n_starts)?;
    let starts: Vec<Sequence> = (0..s.restarts).flat_map(|_| distinct.iter().cloned()).collect();
    let seed = derive_seed(cfg.seed, "search", 0);
    let trajs = match s.algorithm {
        Algorithm::Adalead => {
            let ga = crate::search::GAConfig { seed, ..s.adalead.clone() };
            adalead_search(&objective, &starts, &world.alphabet, &ga)?
        }
        Algorithm::Beam => {
            let beam = crate::search::BeamConfig { seed, ..s.beam.clone() };
            beam_search(&objective, &starts, &world.alphabet, &beam)?
        }
    };
    write_trajectories_csv(&art.create(TRAJECTORIES)?, &world.alphabet, &trajs)?;
    write_rows(
        &art.create(TRAJECTORY_META)?,
        &["trajectory_id", "algorithm", "seed", "start", "iterations", "evaluations", "truncated"],
        trajs.iter().enumerate().map(|(t, tr)| {
            vec![
                t.to_string(),
                algorithm_name(tr.algorithm).to_string(),
                tr.seed.to_string(),
                world.alphabet.render(&tr.start),
                tr.iterations.len().to_string(),
                tr.evaluations.to_string(),
                tr.truncated.to_string(),
            ]
        }),
    )?;
    let designs = design_set(&trajs, &s.snapshot_iterations, s.design_set);
    if designs.is_empty() {
        return Err(HarnessError::Runtime("search produced no designs".into()));
    }
    write_rows(
        &art.create(DESIGNS)?,
        &["design_id", "trajectory_id", "iteration", "candidate_id", "sequence", "predicted_target"],
        designs.iter().enumerate().map(|(i, d)| {
            vec![
                i.to_string(),
                d.trajectory.to_string(),
                d.iteration.to_string(),
                d.candidate.to_string(),
                world.alphabet.render(&d.sequence),
                fmt_f64(d.predicted),
            ]
        }),
    )?;
    Ok(())
}

fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Adalead => "adalead",
        Algorithm::Beam => "beam",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Design {
    pub trajectory: usize,
    pub iteration: usize,
    pub candidate: usize,
    pub sequence: Sequence,
    pub predicted: f64,
}

/// Designed sequences from the recorded pools. Start sequences (candidate 0)
/// come from the training library and are never designs.
pub(crate) fn design_set(trajs: &[Trajectory], snapshots: &[usize], mode: DesignSet) -> Vec<Design> {
    let mut out = Vec::new();
    for (t, traj) in trajs.iter().enumerate() {
        let mut seen = HashSet::new();
        for it in &traj.iterations {
            if !snapshots.is_empty() && !snapshots.contains(&it.index) {
                continue;
            }
            for c in &it.pool {
                if c.id == 0 {
                    continue;
                }
                if mode == DesignSet::FirstAppearance && !seen.insert(c.sequence.clone()) {
                    continue;
                }
                out.push(Design {
                    trajectory: t,
                    iteration: it.index,
                    candidate: c.id,
                    sequence: c.sequence.clone(),
                    predicted: c.eval.target,
                });
            }
        }
    }
    out
}

fn read_designs(world: &World, art: &Artifacts) -> Result<Vec<Design>, HarnessError> {
    let rows = read_columns(
        &art.input(DESIGNS)?,
        &["trajectory_id", "iteration", "candidate_id", "sequence", "predicted_target"],
    )?;
    rows.into_iter()
        .map(|r| {
            Ok(Design {
                trajectory: parse_usize(&r[0])?,
                iteration: parse_usize(&r[1])?,
                candidate: parse_usize(&r[2])?,
                sequence: world.alphabet.parse(&r[3])?,
                predicted: parse_f64(&r[4]).map_err(HarnessError::Runtime)?,
            })
        })
        .collect()
}

fn parse_usize(s: &str) -> Result<usize, HarnessError> {
    s.parse().map_err(|e| HarnessError::Runtime(format!("bad integer {s:?}: {e}")))
}

/// Rebuilds trajectories from the search stage's CSVs.
fn read_trajectories(world: &World, art: &Artifacts) -> Result<Vec<Trajectory>, HarnessError> {
    let meta = read_columns(
        &art.input(TRAJECTORY_META)?,
        &["algorithm", "seed", "start", "iterations", "evaluations", "truncated"],
    )?;
    let mut trajs = meta
        .into_iter()
        .map(|r| {
            let algorithm = match r[0].as_str() {
                "adalead" => Algorithm::Adalead,
                "beam" => Algorithm::Beam,
                other => return Err(HarnessError::Runtime(format!("unknown algorithm {other:?}"))),
            };
            let n_iter = parse_usize(&r[3])?;
            Ok(Trajectory {
                algorithm,
                seed: r[1].parse().map_err(|e| HarnessError::Runtime(format!("bad seed: {e}")))?,
                start: world.alphabet.parse(&r[2])?,
                iterations: (1..=n_iter).map(|index| Iteration { index, pool: Vec::new() }).collect(),
                evaluations: parse_usize(&r[4])?,
                truncated: r[5] == "true",
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let rows = read_columns(
        &art.input(TRAJECTORIES)?,
        &[
            "trajectory_id",
            "iteration",
            "candidate_id",
            "sequence",
            "predicted_target",
            "predicted_constraint",
            "admissible",
        ],
    )?;
    for r in rows {
        let (t, i) = (parse_usize(&r[0])?, parse_usize(&r[1])?);
        let it = trajs
            .get_mut(t)
            .and_then(|tr| tr.iterations.get_mut(i.wrapping_sub(1)))
            .ok_or_else(|| HarnessError::Runtime(format!("row for unknown trajectory {t} iteration {i}")))?;
        let constraint = if r[5].is_empty() {
            None
        } else {
            Some(parse_f64(&r[5]).map_err(HarnessError::Runtime)?)
        };
        it.pool.push(Candidate {
            id: parse_usize(&r[2])?,
            sequence: world.alphabet.parse(&r[3])?,
            eval: Evaluation {
                target: parse_f64(&r[4]).map_err(HarnessError::Runtime)?,
                constraint,
                admissible: r[6] == "true",
            },
        });
    }
    Ok(trajs)
}

fn train_ood(cfg: &ExperimentConfig, world: &World, art: &mut Artifacts) -> Result<(), HarnessError> {
    let sc = &cfg.sequence;
    let data = read_data(cfg, world, art, TRAIN)?;
    let designs = read_designs(world, art)?;
    let positives = world.inputs(designs.into_iter().map(|d| d.sequence).collect());
    let set = build_ood_training_set(data.inputs(), &positives)?;
    let spec = sc.ood.architecture.build(kind(cfg, world).shape());
    let (clf, _) = fit_ood_classifier(&set, &spec, &sc.ood.train.with_seed(derive_seed(cfg.seed, "ood", 0)))?;
    let files = clf.save(&art.dir(MODELS)?, "ood")?;
    art.record(&files);
    Ok(())
}

fn load_ensemble(cfg: &ExperimentConfig, models: &Path) -> Result<DeepEnsemble, HarnessError> {
    let members = (0..cfg.sequence.ensemble_size)
        .map(|i| SurrogateModel::load(models, &ensemble_stem(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DeepEnsemble::new(members)?)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Spearman correlation of `values` with the iteration index, skipping
/// iterations no trajectory reached.
fn trend(iterations: &[usize], values: &[f64]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = iterations
        .iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .map(|(&i, &v)| (i as f64, v))
        .unzip();
    spearman(&x, &y)
}

fn evaluate(cfg: &ExperimentConfig, world: &World, art: &mut Artifacts) -> Result<(), HarnessError> {
    let sc = &cfg.sequence;
    let data = read_data(cfg, world, art, TRAIN)?;
    let models = art.input(MODELS)?;
    let clf = OODClassifier::load(&models, "ood")?;
    let ensemble = load_ensemble(cfg, &models)?;
    let oracle = world.target_oracle(cfg)?;
    let threshold = match sc.adversarial_threshold {
        Some(t) => t,
        None => {
            let Inputs::Sequence { seqs, .. } = data.inputs() else {
                unreachable!("sequence pipeline")
            };
            median(&oracle.score(seqs)?)
        }
    };

    let designs = read_designs(world, art)?;
    let design_inputs = world.inputs(designs.iter().map(|d| d.sequence.clone()).collect());
    let truth = oracle.score(&designs.iter().map(|d| d.sequence.clone()).collect::<Vec<_>>())?;
    let scores = clf.ood_score(&design_inputs)?;
    let ens_mean = ensemble.mean_prediction(&design_inputs)?;
    let ens_std = ensemble.ensemble_uncertainty(&design_inputs)?;
    write_rows(
        &art.create(DESIGN_METRICS)?,
        &[
            "design_id",
            "trajectory_id",
            "iteration",
            "predicted_target",
            "oracle",
            "logit",
            "rho",
            "score",
            "log_score",
            "ensemble_mean",
            "ensemble_std",
        ],
        designs.iter().enumerate().map(|(i, d)| {
            let s = scores[i];
            vec![
                i.to_string(),
                d.trajectory.to_string(),
                d.iteration.to_string(),
                fmt_f64(d.predicted),
                fmt_f64(truth[i]),
                fmt_f64(s.logit),
                fmt_f64(s.rho),
                fmt_f64(s.score),
                fmt_f64(s.log_score),
                fmt_f64(ens_mean[i]),
                fmt_f64(ens_std[i]),
            ]
        }),
    )?;

    let trajs = read_trajectories(world, art)?;
    let stats = trajectory_stats(&trajs, &oracle, threshold)?;
    // Shift metrics of every pooled candidate, per trajectory and iteration.
    let mut shift: Vec<Vec<(f64, f64)>> = Vec::with_capacity(trajs.len());
    for t in &trajs {
        let mut rows = Vec::with_capacity(t.iterations.len());
        for it in &t.iterations {
            if it.pool.is_empty() {
                rows.push((f64::NAN, f64::NAN));
                continue;
            }
            let inputs = world.inputs(it.pool.iter().map(|c| c.sequence.clone()).collect());
            let log: Vec<f64> = clf.ood_score(&inputs)?.iter().map(|s| s.log_score).collect();
            rows.push((mean(&log), mean(&ensemble.ensemble_uncertainty(&inputs)?)));
        }
        shift.push(rows);
    }
    let depth = stats.mean.len();
    let mean_shift: Vec<(f64, f64)> = (0..depth)
        .map(|i| {
            let v: Vec<(f64, f64)> = shift.iter().filter_map(|r| r.get(i)).filter(|r| r.0.is_finite()).copied().collect();
            (mean(&v.iter().map(|r| r.0).collect::<Vec<_>>()), mean(&v.iter().map(|r| r.1).collect::<Vec<_>>()))
        })
        .collect();

    let mut rows = Vec::new();
    let push = |rows: &mut Vec<Vec<String>>, id: String, s: &crate::search::IterationStats, sh: (f64, f64)| {
        rows.push(vec![
            id,
            s.iteration.to_string(),
            s.n.to_string(),
            fmt_f64(s.mean_prediction),
            fmt_f64(s.mse),
            fmt_f64(s.adversarial_fraction),
            fmt_f64(sh.0),
            fmt_f64(sh.1),
        ])
    };
    for (t, per) in stats.per_trajectory.iter().enumerate() {
        for (i, s) in per.iter().enumerate() {
            push(&mut rows, t.to_string(), s, shift[t][i]);
        }
    }
    for (i, s) in stats.mean.iter().enumerate() {
        push(&mut rows, "mean".into(), s, mean_shift[i]);
    }
    write_rows(
        &art.create(TRAJECTORY_STATS)?,
        &[
            "trajectory_id",
            "iteration",
            "n",
            "mean_prediction",
            "mse",
            "adversarial_fraction",
            "mean_log_score",
            "mean_ensemble_std",
        ],
        rows,
    )?;

    let iters: Vec<usize> = stats.mean.iter().map(|s| s.iteration).collect();
    let mean_pred: Vec<f64> = stats.mean.iter().map(|s| s.mean_prediction).collect();
    let mse: Vec<f64> = stats.mean.iter().map(|s| s.mse).collect();
    let log: Vec<f64> = mean_shift.iter().map(|s| s.0).collect();
    let std: Vec<f64> = mean_shift.iter().map(|s| s.1).collect();
    write_summary(
        &art.create(SUMMARY)?,
        &[
            ("spearman_iteration_mean_prediction", trend(&iters, &mean_pred)),
            ("spearman_iteration_mse", trend(&iters, &mse)),
            ("spearman_iteration_mean_log_score", trend(&iters, &log)),
            ("spearman_iteration_mean_ensemble_std", trend(&iters, &std)),
            ("mean_log_score_first", log.first().copied().unwrap_or(f64::NAN)),
            ("mean_log_score_last", log.last().copied().unwrap_or(f64::NAN)),
            ("adversarial_threshold", threshold),
            ("training_size", data.len() as f64),
            ("designs", designs.len() as f64),
            ("trajectories", trajs.len() as f64),
        ],
    )?;
    Ok(())
}

fn select(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<(), HarnessError> {
    let rows = read_columns(&art.input(DESIGN_METRICS)?, &["predicted_target", "oracle", "log_score", "ensemble_std"])?;
    let mut cols: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        for (c, v) in r.iter().enumerate() {
            cols.entry(c).or_default().push(parse_f64(v).map_err(HarnessError::Runtime)?);
        }
    }
    let col = |c: usize| cols.get(&c).cloned().unwrap_or_default();
    let (pred, truth, log, std) = (col(0), col(1), col(2), col(3));
    let boot = cfg.sequence.selection.with_seed(derive_seed(cfg.seed, "bootstrap", 0));
    let report = bootstrap_regret(&pred, &truth, &[(OOD_METRIC, &log), (ENSEMBLE_METRIC, &std)], &boot).map_err(|e| match e {
        SelectError::InvalidConfig(message) => HarnessError::Invalid {
            field: "sequence.selection".into(),
            message,
        },
        e => e.into(),
    })?;
    report.write_csv(&art.create(REGRET)?)?;
    report.write_summary_csv(&art.create(REGRET_SUMMARY)?)?;
    Ok(())
}
