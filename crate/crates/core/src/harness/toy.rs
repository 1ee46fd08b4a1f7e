//! Two-dimensional toy problem: Himmelblau-derived ground truth, surrogate
//! and OOD classifier evaluated over a dense grid.

use super::{write_summary, Artifacts, ExperimentConfig, HarnessError, Stage};
use crate::csvfmt::{fmt_f64, parse_f64, write_rows};
use crate::landscape::{
    sample_toy_training_set, toy::evaluation_grid, toy::sample_uniform_inputs, toy_ground_truth, ContinuousInput,
    DatasetMeta, InputKind, Inputs, LabeledDataset,
};
use crate::seed::derive_seed;
use crate::shift::{build_ood_training_set, fit_ood_classifier, OODClassifier};
use crate::stats::spearman;
use crate::surrogate::{fit_surrogate, SurrogateModel};

const TRAIN: &str = "train.csv";
const POSITIVES: &str = "positives.csv";
const MODELS: &str = "models";
const SUMMARY: &str = "summary.csv";

pub(super) fn run(cfg: &ExperimentConfig, stage: Stage, art: &mut Artifacts) -> Result<(), HarnessError> {
    let toy = &cfg.toy;
    let seed = cfg.seed;
    match stage {
        Stage::GenData => {
            let data = sample_toy_training_set(toy.n_train, derive_seed(seed, "toy-train", 0))?;
            data.write_csv(&art.create(TRAIN)?)?;
            let positives = sample_uniform_inputs(toy.n_positives, derive_seed(seed, "toy-positives", 0));
            write_points(&art.create(POSITIVES)?, &positives)?;
        }
        Stage::TrainSurrogate => {
            let data = read_train(cfg, art)?;
            let spec = toy.surrogate.architecture.build(InputKind::Continuous.shape());
            let train = toy.surrogate.train.with_seed(derive_seed(seed, "toy-surrogate", 0));
            let (model, _) = fit_surrogate(&data, &spec, &train)?;
            let files = model.save(&art.dir(MODELS)?, "surrogate")?;
            art.record(&files);
        }
        Stage::TrainOod => {
            let data = read_train(cfg, art)?;
            let positives = Inputs::Continuous(read_points(&art.input(POSITIVES)?)?);
            let set = build_ood_training_set(data.inputs(), &positives)?;
            let spec = toy.ood.architecture.build(InputKind::Continuous.shape());
            let train = toy.ood.train.with_seed(derive_seed(seed, "toy-ood", 0));
            let (clf, _) = fit_ood_classifier(&set, &spec, &train)?;
            let files = clf.save(&art.dir(MODELS)?, "ood")?;
            art.record(&files);
        }
        Stage::Evaluate => {
            let models = art.input(MODELS)?;
            let surrogate = SurrogateModel::load(&models, "surrogate")?;
            let clf = OODClassifier::load(&models, "ood")?;
            let grid = evaluation_grid(toy.grid_per_axis);
            let truth: Vec<f64> = grid.iter().map(|&x| toy_ground_truth(x)).collect();
            let inputs = Inputs::Continuous(grid.clone());
            let pred = surrogate.predict(&inputs)?;
            let abs_error: Vec<f64> = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).collect();
            let log_score: Vec<f64> = clf.ood_score(&inputs)?.iter().map(|s| s.log_score).collect();
            for (name, values) in [
                ("grid_ground_truth.csv", &truth),
                ("grid_surrogate.csv", &pred),
                ("grid_abs_error.csv", &abs_error),
                ("grid_log_score.csv", &log_score),
            ] {
                write_grid(&art.create(name)?, &grid, values)?;
            }
            write_summary(
                &art.create(SUMMARY)?,
                &[
                    ("spearman_log_score_abs_error", spearman(&log_score, &abs_error)),
                    ("mean_abs_error", abs_error.iter().sum::<f64>() / abs_error.len() as f64),
                    ("grid_points", grid.len() as f64),
                ],
            )?;
        }
        Stage::Search | Stage::Select => {
            return Err(HarnessError::NotApplicable {
                stage: stage.name(),
                kind: cfg.kind,
            })
        }
        Stage::Run => unreachable!("expanded by run_stage"),
    }
    Ok(())
}

fn read_train(cfg: &ExperimentConfig, art: &Artifacts) -> Result<LabeledDataset, HarnessError> {
    let meta = DatasetMeta {
        source: "toy2d".into(),
        seed: derive_seed(cfg.seed, "toy-train", 0),
    };
    Ok(LabeledDataset::read_continuous_csv(&art.input(TRAIN)?, meta)?)
}

fn write_points(path: &std::path::Path, points: &[ContinuousInput]) -> Result<(), HarnessError> {
    write_rows(path, &["x0", "x1"], points.iter().map(|p| vec![fmt_f64(p.x0()), fmt_f64(p.x1())]))?;
    Ok(())
}

fn read_points(path: &std::path::Path) -> Result<Vec<ContinuousInput>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let x0 = parse_f64(&rec[0]).map_err(HarnessError::Runtime)?;
        let x1 = parse_f64(&rec[1]).map_err(HarnessError::Runtime)?;
        out.push(ContinuousInput::new(x0, x1)?);
    }
    Ok(out)
}

fn write_grid(path: &std::path::Path, grid: &[ContinuousInput], values: &[f64]) -> Result<(), HarnessError> {
    write_rows(
        path,
        &["x0", "x1", "value"],
        grid.iter()
            .zip(values)
            .map(|(p, v)| vec![fmt_f64(p.x0()), fmt_f64(p.x1()), fmt_f64(*v)]),
    )?;
    Ok(())
}
