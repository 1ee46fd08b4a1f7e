use proptest::prelude::*;
use shiftguard::landscape::{Alphabet, NKLandscape, NKLandscapeSpec, Sequence};
use shiftguard::search::{
    adalead_search, beam_search, trajectory_stats, write_trajectories_csv, BeamConfig, FnScorer, GAConfig, Objective,
    SearchError, SequenceScorer, Trajectory,
};

fn binary() -> Alphabet {
    Alphabet::new("AB").unwrap()
}

fn count_b(s: &Sequence) -> f64 {
    s.indices().iter().filter(|&&i| i == 1).count() as f64
}

/// Exhaustive optimum over all binary sequences of length `len`.
fn exhaustive_best(len: usize, f: impl Fn(&Sequence) -> f64) -> (f64, Sequence) {
    let a = binary();
    (0..1u32 << len)
        .map(|m| Sequence::from_indices((0..len).map(|i| ((m >> i) & 1) as u8).collect(), &a).unwrap())
        .map(|s| (f(&s), s))
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap()
}

fn best_found(trajs: &[Trajectory]) -> f64 {
    trajs
        .iter()
        .flat_map(|t| t.iterations.iter().flat_map(|i| i.pool.iter().map(|c| c.eval.target)))
        .fold(f64::MIN, f64::max)
}

#[test]
fn single_letter_alphabet_has_one_sequence() {
    let a = Alphabet::new("A").unwrap();
    let start = a.parse("AAAAA").unwrap();
    let f = FnScorer(|_: &Sequence| 1.0);
    let obj = Objective::unconstrained(&f);
    let cfg = GAConfig {
        pool_size: 4,
        iterations: 5,
        ..GAConfig::default()
    };
    let t = adalead_search(&obj, std::slice::from_ref(&start), &a, &cfg).unwrap();
    assert_eq!(t[0].iterations.len(), 5);
    for it in &t[0].iterations {
        assert_eq!(it.pool.len(), 1);
        assert_eq!(it.pool[0].sequence, start);
    }
    assert_eq!(t[0].evaluations, 1);
}

#[test]
fn adalead_finds_all_b() {
    let a = binary();
    let f = FnScorer(count_b);
    let obj = Objective::unconstrained(&f);
    let cfg = GAConfig {
        pool_size: 10,
        budget: 200,
        seed: 3,
        ..GAConfig::default()
    };
    let t = adalead_search(&obj, &[a.parse("AAAA").unwrap()], &a, &cfg).unwrap();
    assert_eq!(t[0].best().unwrap().sequence, a.parse("BBBB").unwrap());
    assert_eq!(exhaustive_best(4, count_b).1, a.parse("BBBB").unwrap());
    assert!(t[0].evaluations <= 200);
}

#[test]
fn beam_finds_all_b() {
    let a = binary();
    let f = FnScorer(count_b);
    let obj = Objective::unconstrained(&f);
    let t = beam_search(&obj, &[a.parse("AAAA").unwrap()], &a, &BeamConfig::default()).unwrap();
    assert_eq!(t[0].best().unwrap().sequence, a.parse("BBBB").unwrap());
}

/// Additive landscape with position-specific weights.
fn weighted(seed: u64) -> impl Fn(&Sequence) -> f64 {
    move |s: &Sequence| {
        s.indices()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let w = ((seed.wrapping_mul(31).wrapping_add(i as u64 * 17)) % 7) as f64 - 3.0;
                if v == 1 {
                    w
                } else {
                    -w * 0.5
                }
            })
            .sum()
    }
}

#[test]
fn both_algorithms_reach_the_exhaustive_optimum() {
    let a = binary();
    let mut hits = [0; 2];
    for seed in 0..20u64 {
        let f = weighted(seed);
        let (opt, _) = exhaustive_best(6, &f);
        let scorer = FnScorer(&f);
        let obj = Objective::unconstrained(&scorer);
        let start = a.parse("AAAAAA").unwrap();
        let ga = GAConfig {
            seed,
            ..GAConfig::default()
        };
        let bm = BeamConfig {
            seed,
            ..BeamConfig::default()
        };
        let g = adalead_search(&obj, std::slice::from_ref(&start), &a, &ga).unwrap();
        let b = beam_search(&obj, &[start], &a, &bm).unwrap();
        assert!(g[0].evaluations <= ga.budget && b[0].evaluations <= bm.budget);
        hits[0] += usize::from((best_found(&g) - opt).abs() < 1e-12);
        hits[1] += usize::from((best_found(&b) - opt).abs() < 1e-12);
    }
    assert!(hits[0] >= 19 && hits[1] >= 19, "{hits:?}");
}

#[test]
fn runs_are_deterministic() {
    let a = Alphabet::amino_acids();
    let nk = NKLandscape::new(NKLandscapeSpec {
        length: 12,
        k: 2,
        seed: 4,
        alphabet: a.clone(),
    })
    .unwrap();
    let obj = Objective::unconstrained(&nk);
    let starts = vec![a.parse("ACDEFGHIKLMN").unwrap(), a.parse("MMMMMMMMMMMM").unwrap()];
    let ga = GAConfig {
        pool_size: 20,
        seed: 9,
        ..GAConfig::default()
    };
    assert_eq!(adalead_search(&obj, &starts, &a, &ga).unwrap(), adalead_search(&obj, &starts, &a, &ga).unwrap());
    let bm = BeamConfig {
        budget: 600,
        seed: 9,
        ..BeamConfig::default()
    };
    assert_eq!(beam_search(&obj, &starts, &a, &bm).unwrap(), beam_search(&obj, &starts, &a, &bm).unwrap());
}

#[test]
fn exhausted_budget_truncates_beam() {
    let a = binary();
    let f = FnScorer(count_b);
    let obj = Objective::unconstrained(&f);
    let cfg = BeamConfig {
        beam_width: 5,
        budget: 5,
        proposals_per_iteration: Some(5),
        ..BeamConfig::default()
    };
    let t = beam_search(&obj, &[a.parse("AAAAAAAA").unwrap()], &a, &cfg).unwrap();
    assert!(t[0].truncated);
    assert!(t[0].iterations.len() < cfg.max_iterations);
    assert_eq!(t[0].evaluations, 5);
}

#[test]
fn budget_errors() {
    let a = binary();
    let f = FnScorer(count_b);
    let obj = Objective::unconstrained(&f);
    let start = [a.parse("AAAA").unwrap()];
    let ga = GAConfig {
        pool_size: 50,
        budget: 10,
        ..GAConfig::default()
    };
    assert!(matches!(adalead_search(&obj, &start, &a, &ga), Err(SearchError::Budget { .. })));
    let bm = BeamConfig {
        beam_width: 6,
        budget: 5,
        ..BeamConfig::default()
    };
    assert!(matches!(beam_search(&obj, &start, &a, &bm), Err(SearchError::Budget { .. })));
    assert!(matches!(adalead_search(&obj, &[], &a, &GAConfig::default()), Err(SearchError::NoStarts)));
}

#[test]
fn inadmissible_candidates_stay_out_of_pools() {
    let a = binary();
    let f = FnScorer(count_b);
    // admissible iff the first position is A
    let con = FnScorer(|s: &Sequence| if s.indices()[0] == 0 { 1.0 } else { 0.0 });
    let obj = Objective::constrained(&f, &con, 0.5);
    let start = [a.parse("AAAAAA").unwrap()];
    let g = adalead_search(&obj, &start, &a, &GAConfig { pool_size: 8, ..GAConfig::default() }).unwrap();
    let b = beam_search(&obj, &start, &a, &BeamConfig::default()).unwrap();
    for t in g.iter().chain(&b) {
        for it in &t.iterations {
            assert!(it.pool.iter().all(|c| c.eval.admissible && c.sequence.indices()[0] == 0));
        }
        assert_eq!(t.best().unwrap().eval.target, 5.0);
    }
}

#[test]
fn stats_examples() {
    let a = binary();
    let f = FnScorer(count_b);
    let obj = Objective::unconstrained(&f);
    let t = adalead_search(&obj, &[a.parse("AAAA").unwrap()], &a, &GAConfig { pool_size: 4, ..GAConfig::default() })
        .unwrap();
    let exact = trajectory_stats(&t, &f, -1.0).unwrap();
    assert!(exact.mean.iter().all(|r| r.mse == 0.0 && r.adversarial_fraction == 0.0));

    // one iteration, predictions {1, 3}, oracle {1, 1}
    let mut one = t[0].clone();
    one.iterations.truncate(1);
    let it = &mut one.iterations[0];
    it.pool.truncate(2);
    it.pool[0].eval.target = 1.0;
    it.pool[1].eval.target = 3.0;
    let ones = FnScorer(|_: &Sequence| 1.0);
    let s = trajectory_stats(&[one], &ones, 2.0).unwrap();
    assert_eq!(s.mean[0].mean_prediction, 2.0);
    assert_eq!(s.mean[0].mse, 2.0);
    assert_eq!(s.mean[0].adversarial_fraction, 1.0);
    assert!(matches!(trajectory_stats(&[], &ones, 0.0), Err(SearchError::NoTrajectories)));
}

#[test]
fn trajectory_csv_has_one_row_per_pooled_candidate() {
    let a = binary();
    let f = FnScorer(count_b);
    let con = FnScorer(|_: &Sequence| 2.0);
    let obj = Objective::constrained(&f, &con, 0.0);
    let t = adalead_search(&obj, &[a.parse("AAAAA").unwrap(), a.parse("ABABA").unwrap()], &a, &GAConfig::default())
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    write_trajectories_csv(&path, &a, &t).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let expected: usize = t.iter().flat_map(|t| &t.iterations).map(|i| i.pool.len()).sum();
    assert_eq!(text.lines().count(), expected + 1);
    assert!(text.starts_with(
        "trajectory_id,iteration,candidate_id,sequence,predicted_target,predicted_constraint,admissible\n"
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn budget_and_elitism_hold(seed in any::<u64>(), k in 0usize..3, pool in 2usize..12, budget in 12usize..200) {
        let a = Alphabet::new("ACDE").unwrap();
        let nk = NKLandscape::new(NKLandscapeSpec { length: 8, k, seed, alphabet: a.clone() }).unwrap();
        let obj = Objective::unconstrained(&nk);
        let start = [a.parse("AAAAAAAA").unwrap()];
        let g = adalead_search(&obj, &start, &a, &GAConfig { pool_size: pool, budget, seed, ..GAConfig::default() }).unwrap();
        let b = beam_search(&obj, &start, &a, &BeamConfig { budget, seed, ..BeamConfig::default() }).unwrap();
        for t in g.iter().chain(&b) {
            prop_assert!(t.evaluations <= budget);
            let bests: Vec<f64> = t.iterations.iter().map(|i| i.pool[0].eval.target).collect();
            prop_assert!(bests.windows(2).all(|w| w[1] >= w[0]));
            for it in &t.iterations {
                let seqs: Vec<Sequence> = it.pool.iter().map(|c| c.sequence.clone()).collect();
                let again = nk.score(&seqs).unwrap();
                for (c, v) in it.pool.iter().zip(again) {
                    prop_assert_eq!(c.eval.target.to_bits(), v.to_bits());
                }
            }
        }
    }
}
