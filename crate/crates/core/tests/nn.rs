use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftguard::nn::gradcheck::{check_gradients, GradLoss};
use shiftguard::nn::{
    train_binary_classifier, train_regressor, Activation, Features, InputShape, LayerSpec, NetworkSpec,
    TrainConfig, TrainedNetwork,
};

/// Small architectures that together exercise every layer kind.
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
        NetworkSpec::new(
            InputShape::OneHot { length: 5, alphabet: 2 },
            vec![
                Conv1d { channels: 1, kernel_width: 3, pooling_scale: 2 },
                Activation { kind: self::Activation::Relu },
                Dropout { rate: 0.25 },
                Flatten,
                Dense { width: 3 },
                Activation { kind: self::Activation::LeakyRelu },
                Dense { width: 1 },
            ],
        ),
    ]
}

fn random_inputs(spec: &NetworkSpec, n: usize, rng: &mut ChaCha8Rng) -> Features {
    let d = spec.input_len();
    let data = match spec.input_shape {
        InputShape::Vector { .. } => (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect(),
        InputShape::OneHot { length, alphabet } => {
            let mut v = vec![0.0; n * d];
            for s in 0..n {
                for p in 0..length {
                    v[s * d + p * alphabet + rng.random_range(0..alphabet)] = 1.0;
                }
            }
            v
        }
    };
    Features::new(data, d).unwrap()
}

/// Nudges batchnorm/bias parameters off their init so every gradient is
/// generic.
fn perturbed(spec: NetworkSpec, seed: u64) -> TrainedNetwork {
    let mut net = TrainedNetwork::initialize(spec, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    for p in net.parameters_mut() {
        *p += rng.random_range(-0.3..0.3);
    }
    net
}

#[test]
fn gradients_match_finite_differences_for_every_layer_kind() {
    for (k, spec) in gradient_specs().into_iter().enumerate() {
        assert!(spec.param_count().unwrap() <= 50, "spec {k} too large");
        for trial in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 * k as u64 + trial);
            let net = perturbed(spec.clone(), 31 * k as u64 + trial);
            let x = random_inputs(&spec, 6, &mut rng);
            let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let classes: Vec<f64> = (0..6).map(|i| (i % 2) as f64).collect();
            for loss in [GradLoss::Mse(y), GradLoss::Bce(classes)] {
                let r = check_gradients(&net, &x, &loss, trial, 1e-6).unwrap();
                assert!(r.max_rel_error < 1e-4, "spec {k} trial {trial} {loss:?}: {r:?}");
            }
        }
    }
}

fn cfg(seed: u64, batch: usize, epochs: usize, lr: f64) -> TrainConfig {
    TrainConfig {
        learning_rate: lr,
        batch_size: batch,
        max_epochs: epochs,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn constant_labels_are_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..400).map(|_| rng.random_range(-5.0..5.0)).collect();
    let x = Features::new(xs, 2).unwrap();
    let y = vec![0.7; 200];
    let spec = NetworkSpec::mlp(2, &[32, 32], Activation::Relu, 0.0, false);
    let (net, _) = train_regressor(&spec, &x, &y, &cfg(1, 200, 1000, 1e-2)).unwrap();
    for p in net.predict(&x).unwrap() {
        assert!((p - 0.7).abs() <= 0.05, "{p}");
    }
}

#[test]
fn conflicting_labels_meet_in_the_middle() {
    let x = Features::new(vec![0.3, -0.2, 0.3, -0.2], 2).unwrap();
    let spec = NetworkSpec::mlp(2, &[8], Activation::Relu, 0.0, false);
    let (net, _) = train_regressor(&spec, &x, &[0.0, 1.0], &cfg(2, 2, 500, 1e-2)).unwrap();
    let p = net.forward(&[0.3, -0.2]).unwrap();
    assert!((0.25..=0.75).contains(&p), "{p}");
}

#[test]
fn training_is_bitwise_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let xs: Vec<f64> = (0..120).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = xs.chunks(2).map(|r| r[0] * r[1]).collect();
    let x = Features::new(xs, 2).unwrap();
    let spec = NetworkSpec::mlp(2, &[16, 16], Activation::Relu, 0.1, true);
    let c = TrainConfig {
        validation_fraction: 0.1,
        early_stopping_patience: 3,
        ..cfg(77, 8, 30, 1e-3)
    };
    let (a, ra) = train_regressor(&spec, &x, &ys, &c).unwrap();
    let (b, rb) = train_regressor(&spec, &x, &ys, &c).unwrap();
    let bits = |n: &TrainedNetwork| n.parameters().iter().chain(n.buffers()).map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(ra, rb);
}

#[test]
fn l2_alone_shrinks_parameters() {
    let spec = NetworkSpec::mlp(3, &[6, 6], Activation::Relu, 0.0, false).with_l2(0.1);
    let x = Features::new(vec![0.0; 3 * 16], 3).unwrap();
    let y = vec![0.0; 16];
    let mut last = f64::INFINITY;
    for epochs in 1..=30 {
        let (net, _) = train_regressor(&spec, &x, &y, &cfg(3, 4, epochs, 1e-3)).unwrap();
        let norm = net.parameter_norm();
        assert!(norm <= last, "epoch {epochs}: {norm} > {last}");
        last = norm;
    }
}

#[test]
fn separable_classes_are_separated() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let neg: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..1.0)).collect();
    let pos: Vec<f64> = (0..100).map(|_| rng.random_range(10.0..11.0)).collect();
    let (neg, pos) = (Features::new(neg, 1).unwrap(), Features::new(pos, 1).unwrap());
    let spec = NetworkSpec::mlp(1, &[16], Activation::Relu, 0.0, false);
    let (net, _) = train_binary_classifier(&spec, &neg, &pos, &cfg(4, 32, 100, 1e-2)).unwrap();
    let correct = net.predict(&neg).unwrap().iter().filter(|&&g| g < 0.0).count()
        + net.predict(&pos).unwrap().iter().filter(|&&g| g > 0.0).count();
    assert!(correct as f64 / 200.0 >= 0.99, "{correct}");
}

#[test]
fn identical_classes_give_even_odds() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let xs: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Features::new(xs, 2).unwrap();
    let spec = NetworkSpec::mlp(2, &[16], Activation::Relu, 0.0, false);
    let (net, _) = train_binary_classifier(&spec, &x, &x, &cfg(5, 32, 100, 1e-3)).unwrap();
    let logits = net.predict(&x).unwrap();
    let mean_rho = logits.iter().map(|&g| shiftguard::nn::sigmoid(g)).sum::<f64>() / logits.len() as f64;
    assert!((0.4..=0.6).contains(&mean_rho), "{mean_rho}");
}
