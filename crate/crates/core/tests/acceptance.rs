//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line and
//! fails when its criterion is not met. Run with
//! `cargo test -p shiftguard --test acceptance -- --nocapture --test-threads=1`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftguard::harness::{run_gaussian_diagnostic, run_sequence_mbo, run_toy2d, ExperimentConfig, ExperimentKind};
use shiftguard::landscape::toy::{grid_coord, grid_points_per_axis, sample_uniform_inputs, HIMMELBLAU_MAX};
use shiftguard::landscape::{
    himmelblau, sample_toy_training_set, toy_ground_truth, Alphabet, ContinuousInput, Inputs, Sequence,
};
use shiftguard::nn::gradcheck::{check_gradients, GradLoss};
use shiftguard::nn::{bce_loss, Activation, Features, InputShape, LayerSpec, NetworkSpec, TrainConfig, TrainedNetwork};
use shiftguard::search::{adalead_search, beam_search, BeamConfig, FnScorer, GAConfig, Objective, Trajectory};
use shiftguard::shift::{
    analytic_gaussian_ratio, build_ood_training_set, dominance_frequency, fit_ood_classifier,
    gaussian_log_score_gradient, GaussianPair,
};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn report(n: usize, name: &str, pass: bool, detail: String) {
    println!("criterion {n} [{name}]: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} not met: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

// ---------------------------------------------------------------- oracles

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn himmelblau_oracle(x0: f64, x1: f64) -> f64 {
    (x0 * x0 + x1 - 11.0).powi(2) + (x0 + x1 * x1 - 7.0).powi(2)
}

// ---------------------------------------------------------------- CSV helpers

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let headers = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (headers, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (headers, rows) = read_table(path);
    let i = headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("{} lacks {name}", path.display()));
    rows.into_iter().map(|mut r| r.swap_remove(i)).collect()
}

fn float_column(path: &Path, name: &str) -> Vec<f64> {
    column(path, name).iter().map(|s| s.parse().unwrap()).collect()
}

fn csv_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_1_toy_log_score_tracks_surrogate_error() {
    let started = Instant::now();
    let mut values = Vec::new();
    for seed in SEEDS {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(ExperimentKind::Toy2d, seed);
        run_toy2d(&cfg, dir.path()).unwrap();
        let grid = dir.path().join("grid_surrogate.csv");
        let (x0, x1) = (float_column(&grid, "x0"), float_column(&grid, "x1"));
        let pred = float_column(&grid, "value");
        assert_eq!(pred.len(), 100 * 100);
        let truth: Vec<f64> = x0.iter().zip(&x1).map(|(a, b)| 1.0 - himmelblau_oracle(*a, *b) / 890.0).collect();
        let abs_error: Vec<f64> = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).collect();
        let log_score = float_column(&dir.path().join("grid_log_score.csv"), "value");
        values.push(spearman_oracle(&log_score, &abs_error));
    }
    let elapsed = started.elapsed();
    let passing = values.iter().filter(|&&r| r >= 0.5).count();
    report(
        1,
        "toy-2d log OOD score vs |surrogate error|",
        passing >= 4 && elapsed <= Duration::from_secs(300),
        format!("spearman per seed {values:.3?}; {passing}/5 >= 0.5; {}", secs(elapsed)),
    );
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_2_density_ratio_recovery() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::GaussianDiagnostic, 0);
    cfg.gaussian.pairs.retain(|p| p.name == "separated");
    cfg.gaussian.dominance_pairs = 1;
    cfg.gaussian.dominance_samples = 100;
    cfg.gaussian.gradient_draws = 1;
    let pair = &cfg.gaussian.pairs[0];
    assert_eq!((pair.mu_tr, pair.sigma_tr, pair.mu_de, pair.sigma_de), (0.0, 1.0, 3.0, 1.0));
    assert_eq!(cfg.gaussian.n_per_class, 2000);
    run_gaussian_diagnostic(&cfg, dir.path()).unwrap();
    let elapsed = started.elapsed();

    let path = dir.path().join("gaussian_recovery_separated.csv");
    let xs = float_column(&path, "x");
    let estimated = float_column(&path, "estimated_log_ratio");
    let (mut est, mut truth) = (Vec::new(), Vec::new());
    for (x, e) in xs.iter().zip(&estimated) {
        let (p_tr, p_de) = (normal_pdf(*x, 0.0, 1.0), normal_pdf(*x, 3.0, 1.0));
        if p_tr > 1e-3 && p_de > 1e-3 {
            truth.push((p_de / p_tr).ln());
            est.push(*e);
        }
    }
    assert!(est.len() >= 100, "too few comparable points: {}", est.len());
    let rho = spearman_oracle(&est, &truth);
    let med = median(est.iter().zip(&truth).map(|(e, t)| (e - t).abs()).collect());
    report(
        2,
        "density-ratio recovery on the 1-D Gaussian pair",
        rho >= 0.95 && med <= 0.5 && elapsed <= Duration::from_secs(120),
        format!("spearman {rho:.4}; median |log error| {med:.3}; {} points; {}", est.len(), secs(elapsed)),
    );
}

// ---------------------------------------------------------------- 3 and 4

struct SequenceRun {
    iteration: Vec<f64>,
    mean_prediction: Vec<f64>,
    mse: Vec<f64>,
    mean_log_score: Vec<f64>,
    /// (metric, percentile) -> mean regret at K = 100, max statistic.
    regret: BTreeMap<(String, String), f64>,
}

struct SequenceRuns {
    runs: Vec<SequenceRun>,
    elapsed: Duration,
}

fn sequence_runs() -> &'static SequenceRuns {
    static RUNS: OnceLock<SequenceRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let started = Instant::now();
        let runs = SEEDS
            .iter()
            .map(|&seed| {
                let dir = tempfile::tempdir().unwrap();
                let cfg = ExperimentConfig::new(ExperimentKind::SequenceMbo, seed);
                let s = &cfg.sequence;
                assert_eq!((s.landscape.length, s.search.n_starts, s.search.iterations()), (20, 9, 15));
                assert_eq!(s.selection.replicates, 50);
                run_sequence_mbo(&cfg, dir.path()).unwrap();

                let stats = dir.path().join("trajectory_stats.csv");
                let (headers, rows) = read_table(&stats);
                let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
                let mean_rows: Vec<&Vec<String>> = rows.iter().filter(|r| r[col("trajectory_id")] == "mean").collect();
                let pick = |name: &str| -> Vec<f64> { mean_rows.iter().map(|r| r[col(name)].parse().unwrap()).collect() };

                let summary = dir.path().join("regret_summary.csv");
                let (headers, rows) = read_table(&summary);
                let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
                let regret = rows
                    .iter()
                    .filter(|r| r[col("K")] == "100" && r[col("statistic")] == "max")
                    .map(|r| {
                        let pct = if r[col("percentile")].is_empty() {
                            String::new()
                        } else {
                            format!("{}", r[col("percentile")].parse::<f64>().unwrap())
                        };
                        ((r[col("metric")].clone(), pct), r[col("mean")].parse().unwrap())
                    })
                    .collect();
                SequenceRun {
                    iteration: pick("iteration"),
                    mean_prediction: pick("mean_prediction"),
                    mse: pick("mse"),
                    mean_log_score: pick("mean_log_score"),
                    regret,
                }
            })
            .collect();
        SequenceRuns {
            runs,
            elapsed: started.elapsed(),
        }
    })
}

#[test]
fn criterion_3_shift_grows_along_trajectories() {
    let all = sequence_runs();
    let mut lines = Vec::new();
    let mut passing = [0usize; 3];
    for run in &all.runs {
        assert_eq!(run.iteration.len(), 15);
        let r = [
            spearman_oracle(&run.iteration, &run.mean_prediction),
            spearman_oracle(&run.iteration, &run.mse),
            spearman_oracle(&run.iteration, &run.mean_log_score),
        ];
        for (k, (value, threshold)) in r.iter().zip([0.9, 0.7, 0.9]).enumerate() {
            passing[k] += usize::from(*value >= threshold);
        }
        lines.push(format!("({:.3}, {:.3}, {:.3})", r[0], r[1], r[2]));
    }
    report(
        3,
        "prediction, MSE and log OOD score rise with iteration",
        passing.iter().all(|&p| p >= 4) && all.elapsed <= Duration::from_secs(900),
        format!(
            "per seed (prediction, mse, log score) {}; seeds passing {passing:?}/5; {}",
            lines.join(" "),
            secs(all.elapsed)
        ),
    )
}

#[test]
fn criterion_4_ood_filtering_lowers_regret() {
    let all = sequence_runs();
    let mut lines = Vec::new();
    let mut passing = 0;
    for run in &all.runs {
        let greedy = run.regret[&("greedy".to_string(), String::new())];
        let mut below_greedy = 0;
        let mut below_ensemble = 0;
        let mut grid = 0;
        for p in (1..=10).map(|k| format!("{}", 10 * k)) {
            let ood = run.regret[&("ood".to_string(), p.clone())];
            let ens = run.regret[&("ensemble".to_string(), p)];
            below_greedy += usize::from(ood <= greedy);
            below_ensemble += usize::from(ood <= ens);
            grid += 1;
        }
        let ok = below_greedy >= 1 && below_ensemble * 10 >= grid * 6;
        passing += usize::from(ok);
        lines.push(format!("{below_greedy}/{below_ensemble}"));
    }
    report(
        4,
        "OOD-score cutoffs vs greedy and ensemble uncertainty (K=100, max, B=50)",
        passing >= 4,
        format!(
            "per seed (cutoffs <= greedy / <= ensemble of 10) {}; seeds passing {passing}/5",
            lines.join(" ")
        ),
    );
}

// ---------------------------------------------------------------- 5

fn log_ratio_oracle(p: &GaussianPair, x: f64) -> f64 {
    let z_de = (x - p.mu_de) / p.sigma_de;
    let z_tr = (x - p.mu_tr) / p.sigma_tr;
    -0.5 * z_de * z_de + 0.5 * z_tr * z_tr - (p.sigma_de / p.sigma_tr).ln()
}

#[test]
fn criterion_5_log_score_gradient_and_first_term_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = GaussianPair::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(0.3..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.3..3.0),
        )
        .unwrap();
        let x = rng.random_range(-6.0..6.0);
        let fd = (log_ratio_oracle(&p, x + h) - log_ratio_oracle(&p, x - h)) / (2.0 * h);
        let an = gaussian_log_score_gradient(&p, x);
        worst = worst.max((an - fd).abs() / an.abs().max(1.0));
        // The library ratio and the oracle agree too.
        let lib = analytic_gaussian_ratio(&p, x).ln();
        assert!((lib - log_ratio_oracle(&p, x)).abs() <= 1e-9 * (1.0 + lib.abs()));
    }
    let mut min_freq = f64::INFINITY;
    for i in 0..20u64 {
        let mu_tr = rng.random_range(-2.0..2.0);
        let sigma_tr = rng.random_range(0.5..2.0);
        let offset = rng.random_range(3.0..6.0) * sigma_tr * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let sigma_de = rng.random_range(2.0..4.0) * sigma_tr;
        let p = GaussianPair::new(mu_tr, sigma_tr, mu_tr + offset, sigma_de).unwrap();
        assert!((p.mu_de - p.mu_tr).abs() >= 3.0 * p.sigma_tr && p.sigma_de >= 2.0 * p.sigma_tr);
        min_freq = min_freq.min(dominance_frequency(&p, 10_000, i).unwrap());
    }
    report(
        5,
        "log-score gradient identity and first-term dominance",
        worst <= 1e-6 && min_freq >= 0.9,
        format!("max relative gradient error {worst:.2e} over 1000 draws; min dominance frequency {min_freq:.3} over 20 pairs"),
    );
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_6_exact_algebra() {
    let x = ContinuousInput::new(3.0, 2.0).unwrap();
    let himm = himmelblau(x);
    let truth = toy_ground_truth(x);

    // Maximum of the oracle over the sampling grid, found by brute force.
    let n = grid_points_per_axis();
    let (mut best, mut at) = (f64::MIN, (0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (grid_coord(i), grid_coord(j));
            let v = himmelblau_oracle(a, b);
            if v > best {
                best = v;
                at = (a, b);
            }
        }
    }

    let bce = bce_loss(&[0.5; 7], &[0.5; 5]).unwrap();
    let ln4 = 2.0 * std::f64::consts::LN_2;

    // log score equals the logit for a fitted classifier on random inputs.
    let data = sample_toy_training_set(60, 5).unwrap();
    let positives = Inputs::Continuous(sample_uniform_inputs(60, 6));
    let set = build_ood_training_set(data.inputs(), &positives).unwrap();
    let spec = NetworkSpec::mlp(2, &[16, 16], Activation::Relu, 0.0, false).with_l2(1e-3);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 32,
        max_epochs: 30,
        early_stopping_patience: 0,
        validation_fraction: 0.0,
        seed: 7,
    };
    let (clf, _) = fit_ood_classifier(&set, &spec, &cfg).unwrap();
    let probe = Inputs::Continuous(sample_uniform_inputs(1000, 8));
    let mut worst = 0.0f64;
    for s in clf.ood_score(&probe).unwrap() {
        assert!(s.logit.abs() < 30.0);
        worst = worst.max((s.score.ln() - s.logit).abs());
        // rho / (1 - rho) cancels badly near 1, so rho is checked directly.
        assert!((s.rho - 1.0 / (1.0 + (-s.logit).exp())).abs() <= 1e-12);
    }

    let ok = himm.abs() <= 1e-12
        && (truth - 1.0).abs() <= 1e-12
        && best == 890.0
        && HIMMELBLAU_MAX == best
        && at == (5.0, 5.0)
        && (bce - ln4).abs() <= 1e-12
        && worst <= 1e-9;
    report(
        6,
        "exact algebraic checks",
        ok,
        format!(
            "himm(3,2) {himm:e}; f(3,2) {truth}; grid max {best} at {at:?}; bce(0.5) - 2ln2 {:e}; max |log s - g| {worst:.1e}",
            bce - ln4
        ),
    );
}

// ---------------------------------------------------------------- 7

fn gradient_specs() -> Vec<NetworkSpec> {
    use LayerSpec::*;
    vec![
        NetworkSpec::new(
            InputShape::Vector { len: 3 },
            vec![
                Dense { width: 4 },
                Activation { kind: self::Activation::Relu },
                Dropout { rate: 0.3 },
                Dense { width: 3 },
                Activation { kind: self::Activation::Sigmoid },
                Dense { width: 1 },
                BatchNorm1d,
            ],
        ),
        NetworkSpec::new(
            InputShape::Vector { len: 2 },
            vec![
                Dense { width: 5 },
                BatchNorm1d,
                Activation { kind: self::Activation::LeakyRelu },
                Dense { width: 3 },
                Activation { kind: self::Activation::Relu },
                Dense { width: 1 },
            ],
        )
        .with_l2(0.05),
        NetworkSpec::new(
            InputShape::OneHot { length: 4, alphabet: 2 },
            vec![
                Conv1d { channels: 2, kernel_width: 3, pooling_scale: 0 },
                Activation { kind: self::Activation::LeakyRelu },
                Conv1d { channels: 2, kernel_width: 2, pooling_scale: 2 },
                BatchNorm1d,
                Activation { kind: self::Activation::Sigmoid },
                Flatten,
                Dense { width: 1 },
            ],
        )
        .with_l2(0.01),
    ]
}

#[test]
fn criterion_7_gradients_match_finite_differences() {
    let mut worst = 0.0f64;
    let mut checks = 0;
    let mut kinds = std::collections::HashSet::new();
    for (k, spec) in gradient_specs().into_iter().enumerate() {
        assert!(spec.param_count().unwrap() <= 50);
        for layer in &spec.layers {
            kinds.insert(std::mem::discriminant(layer));
        }
        for trial in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * k as u64 + trial);
            let mut net = TrainedNetwork::initialize(spec.clone(), trial).unwrap();
            for p in net.parameters_mut() {
                *p += rng.random_range(-0.3..0.3);
            }
            let d = spec.input_len();
            let data: Vec<f64> = match spec.input_shape {
                InputShape::Vector { .. } => (0..6 * d).map(|_| rng.random_range(-2.0..2.0)).collect(),
                InputShape::OneHot { length, alphabet } => {
                    let mut v = vec![0.0; 6 * d];
                    for s in 0..6 {
                        for p in 0..length {
                            v[s * d + p * alphabet + rng.random_range(0..alphabet)] = 1.0;
                        }
                    }
                    v
                }
            };
            let x = Features::new(data, d).unwrap();
            let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let classes: Vec<f64> = (0..6).map(|i| (i % 2) as f64).collect();
            for loss in [GradLoss::Mse(y.clone()), GradLoss::Bce(classes.clone())] {
                worst = worst.max(check_gradients(&net, &x, &loss, trial, 1e-6).unwrap().max_rel_error);
                checks += 1;
            }
        }
    }
    report(
        7,
        "analytic gradients vs finite differences",
        worst <= 1e-4 && kinds.len() == 6,
        format!("max relative error {worst:.2e} over {checks} checks; {} layer kinds", kinds.len()),
    );
}

// ---------------------------------------------------------------- 8

fn binary_sequences(len: usize, alphabet: &Alphabet) -> Vec<Sequence> {
    (0..1u32 << len)
        .map(|m| Sequence::from_indices((0..len).map(|i| ((m >> i) & 1) as u8).collect(), alphabet).unwrap())
        .collect()
}

fn best_in(trajs: &[Trajectory]) -> f64 {
    trajs
        .iter()
        .flat_map(|t| t.iterations.iter().flat_map(|i| i.pool.iter().map(|c| c.eval.target)))
        .fold(f64::MIN, f64::max)
}

#[test]
fn criterion_8_search_recovers_the_exhaustive_optimum() {
    const L: usize = 6;
    let alphabet = Alphabet::new("AB").unwrap();
    let all = binary_sequences(L, &alphabet);
    let mut hits = [0usize; 2];
    let mut budget_ok = true;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Additive weights for each (position, letter).
        let w: Vec<[f64; 2]> = (0..L).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let f = |s: &Sequence| s.indices().iter().enumerate().map(|(i, &v)| w[i][v as usize]).sum::<f64>();
        let optimum = all.iter().map(f).fold(f64::MIN, f64::max);
        let start = Sequence::from_indices(
            (0..L).map(|i| if w[i][0] < w[i][1] { 0 } else { 1 }).collect(),
            &alphabet,
        )
        .unwrap();
        let scorer = FnScorer(f);
        let obj = Objective::unconstrained(&scorer);
        let ga = GAConfig {
            seed,
            ..GAConfig::default()
        };
        let beam = BeamConfig {
            seed,
            ..BeamConfig::default()
        };
        let g = adalead_search(&obj, std::slice::from_ref(&start), &alphabet, &ga).unwrap();
        let b = beam_search(&obj, std::slice::from_ref(&start), &alphabet, &beam).unwrap();
        budget_ok &= g.iter().all(|t| t.evaluations <= ga.budget) && b.iter().all(|t| t.evaluations <= beam.budget);
        // Evaluations count distinct sequences, so they cannot exceed the space.
        budget_ok &= g.iter().chain(&b).all(|t| t.evaluations <= all.len());
        hits[0] += usize::from((best_in(&g) - optimum).abs() <= 1e-12);
        hits[1] += usize::from((best_in(&b) - optimum).abs() <= 1e-12);
    }
    report(
        8,
        "search recovers the additive binary optimum (L=6)",
        hits.iter().all(|&h| h >= 19) && budget_ok,
        format!("optimum found by adalead {}/20, beam {}/20; budgets respected: {budget_ok}", hits[0], hits[1]),
    );
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_9_full_runs_are_byte_identical() {
    let started = Instant::now();
    let mut compared = 0;
    let mut identical = true;
    for config in ["aav_replica.cfg", "toy2d.cfg", "gaussian.cfg"] {
        let work = tempfile::tempdir().unwrap();
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let out = work.path().join(format!("run{attempt}"));
            let status = Command::new(env!("CARGO_BIN_EXE_shiftguard"))
                .args(["run", "--config"])
                .arg(configs_dir().join(config))
                .args(["--seed", "17", "--out"])
                .arg(&out)
                .output()
                .unwrap();
            assert!(status.status.success(), "{config}: {}", String::from_utf8_lossy(&status.stderr));
            outputs.push(csv_bytes(&out));
        }
        assert!(!outputs[0].is_empty());
        compared += outputs[0].len();
        identical &= outputs[0] == outputs[1];
    }
    report(
        9,
        "repeated `run` invocations are byte-identical",
        identical,
        format!("{compared} CSV files compared across 3 configs; {}", secs(started.elapsed())),
    );
}
