use shiftguard::landscape::toy::sample_uniform_inputs;
use shiftguard::landscape::{
    sample_toy_training_set, Alphabet, ContinuousInput, DatasetMeta, InputKind, Inputs, LabeledDataset,
};
use shiftguard::nn::{Activation, NetworkSpec, TrainConfig, TrainedNetwork};
use shiftguard::surrogate::{
    fit_ensemble, fit_surrogate, holdout_mse, population_std, DeepEnsemble, Fingerprint, SurrogateError,
    SurrogateModel,
};

fn toy_spec() -> NetworkSpec {
    NetworkSpec::mlp(2, &[200, 200], Activation::Relu, 0.1, true)
}

fn meta() -> DatasetMeta {
    DatasetMeta {
        source: "test".into(),
        seed: 0,
    }
}

fn constant_dataset(n: usize, value: f64) -> LabeledDataset {
    LabeledDataset::new(Inputs::Continuous(sample_uniform_inputs(n, 42)), vec![value; n], meta()).unwrap()
}

fn small_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        batch_size: 50,
        max_epochs: 300,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn toy_surrogate_fits_held_out_points() {
    let data = sample_toy_training_set(125, 3).unwrap();
    let (train, holdout) = data.split(0.2, 3);
    let cfg = TrainConfig::default().with_seed(3);
    let (model, _) = fit_surrogate(&train, &toy_spec(), &cfg).unwrap();
    let mse = holdout_mse(&model, &holdout).unwrap();
    assert!(mse < 0.01, "{mse}");
    assert_eq!(model.fingerprint(), &Fingerprint::of(&train));
}

#[test]
fn constant_labels_give_constant_predictor() {
    let data = constant_dataset(100, 0.3);
    let spec = NetworkSpec::mlp(2, &[32, 32], Activation::Relu, 0.0, false);
    let (model, _) = fit_surrogate(&data, &spec, &small_cfg(1)).unwrap();
    for p in model.predict(data.inputs()).unwrap() {
        assert!((p - 0.3).abs() <= 0.05, "{p}");
    }
    assert!(holdout_mse(&model, &data).unwrap() < 0.0025);
    let grid = Inputs::Continuous(sample_uniform_inputs(20, 9));
    assert_eq!(model.predict(&grid).unwrap(), model.predict(&grid).unwrap());
}

#[test]
fn empty_training_data_is_rejected() {
    let empty = LabeledDataset::new(Inputs::Continuous(vec![]), vec![], meta()).unwrap();
    assert!(matches!(
        fit_surrogate(&empty, &toy_spec(), &TrainConfig::default()),
        Err(SurrogateError::Empty(_))
    ));
}

#[test]
fn zero_network_predicts_zero() {
    let spec = NetworkSpec::mlp(2, &[8], Activation::Relu, 0.0, false);
    let fp = Fingerprint {
        sha256: String::new(),
        size: 0,
    };
    let m = SurrogateModel::from_parts(TrainedNetwork::zeros(spec).unwrap(), InputKind::Continuous, fp).unwrap();
    let x = Inputs::Continuous(vec![ContinuousInput::new(1.0, -2.0).unwrap()]);
    assert_eq!(m.predict(&x).unwrap(), vec![0.0]);
}

#[test]
fn kind_mismatch_is_reported() {
    let data = constant_dataset(50, 0.0);
    let spec = NetworkSpec::mlp(2, &[4], Activation::Relu, 0.0, false);
    let (model, _) = fit_surrogate(&data, &spec, &small_cfg(0)).unwrap();
    let a = Alphabet::new("AB").unwrap();
    let seqs = Inputs::Sequence {
        seqs: vec![a.parse("AB").unwrap()],
        alphabet: a,
    };
    assert!(matches!(model.predict(&seqs), Err(SurrogateError::KindMismatch { .. })));
}

#[test]
fn holdout_mse_arithmetic() {
    let spec = NetworkSpec::mlp(2, &[4], Activation::Relu, 0.0, false);
    let fp = Fingerprint {
        sha256: String::new(),
        size: 0,
    };
    let zero = SurrogateModel::from_parts(TrainedNetwork::zeros(spec).unwrap(), InputKind::Continuous, fp).unwrap();
    let one = |y: f64| {
        LabeledDataset::new(Inputs::Continuous(vec![ContinuousInput::new(0.0, 0.0).unwrap()]), vec![y], meta()).unwrap()
    };
    assert_eq!(holdout_mse(&zero, &one(0.0)).unwrap(), 0.0);
    assert_eq!(holdout_mse(&zero, &one(2.0)).unwrap(), 4.0);
    let empty = LabeledDataset::new(Inputs::Continuous(vec![]), vec![], meta()).unwrap();
    assert!(holdout_mse(&zero, &empty).is_err());
}

#[test]
fn ensembles_are_deterministic_and_consistent() {
    let data = sample_toy_training_set(100, 5).unwrap();
    let spec = NetworkSpec::mlp(2, &[16, 16], Activation::Relu, 0.1, false);
    let cfg = TrainConfig {
        max_epochs: 20,
        seed: 10,
        ..TrainConfig::default()
    };
    assert!(matches!(fit_ensemble(&data, &spec, &cfg, 0), Err(SurrogateError::EnsembleSize)));
    let a = fit_ensemble(&data, &spec, &cfg, 5).unwrap();
    let b = fit_ensemble(&data, &spec, &cfg, 5).unwrap();
    assert_eq!(a, b);
    for (i, m) in a.members().iter().enumerate() {
        let (solo, _) = fit_surrogate(&data, &spec, &cfg.clone().with_seed(10 + i as u64)).unwrap();
        assert_eq!(&solo, m);
    }

    let grid = Inputs::Continuous(sample_uniform_inputs(200, 1));
    let members = a.member_predictions(&grid).unwrap();
    let mean = a.mean_prediction(&grid).unwrap();
    let unc = a.ensemble_uncertainty(&grid).unwrap();
    let reversed = DeepEnsemble::new(a.members().iter().rev().cloned().collect()).unwrap();
    let unc_rev = reversed.ensemble_uncertainty(&grid).unwrap();
    for i in 0..200 {
        let col: Vec<f64> = members.iter().map(|m| m[i]).collect();
        assert!((mean[i] - col.iter().sum::<f64>() / 5.0).abs() < 1e-12);
        assert!((unc[i] - population_std(&col)).abs() < 1e-12);
        assert!((unc[i] - unc_rev[i]).abs() < 1e-12);
        assert!(unc[i] > 0.0);
    }

    let single = fit_ensemble(&data, &spec, &cfg, 1).unwrap();
    assert_eq!(single.len(), 1);
    assert!(single.ensemble_uncertainty(&grid).unwrap().iter().all(|&u| u == 0.0));
    let same = DeepEnsemble::new(vec![a.members()[0].clone(); 3]).unwrap();
    assert!(same.ensemble_uncertainty(&grid).unwrap().iter().all(|&u| u == 0.0));
}

#[test]
fn surrogate_round_trips_through_disk() {
    let data = constant_dataset(50, 0.5);
    let spec = NetworkSpec::mlp(2, &[4], Activation::Relu, 0.0, true);
    let (model, _) = fit_surrogate(&data, &spec, &small_cfg(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = model.save(dir.path(), "m").unwrap();
    assert_eq!(files.len(), 3);
    assert_eq!(SurrogateModel::load(dir.path(), "m").unwrap(), model);
}
