use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::nn::{Arch, LayerSpec, Network, Shape};

/// Two Gaussian blobs around (-1, -1) and (1, 1), keeping only points at least
/// 0.2 from the separating line x + y = 0.
fn blobs(n: usize, seed: u64) -> InMemory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inputs, mut labels) = (Vec::new(), Vec::new());
    while inputs.len() < n {
        let label = inputs.len() % 2;
        let c = if label == 1 { 1.0 } else { -1.0 };
        let x = c + 0.5 * (rng.random::<f64>() * 2.0 - 1.0) * 1.5;
        let y = c + 0.5 * (rng.random::<f64>() * 2.0 - 1.0) * 1.5;
        if (x + y) * c / core::f64::consts::SQRT_2 >= 0.2 {
            inputs.push(vec![x, y]);
            labels.push(label);
        }
    }
    InMemory { inputs, labels }
}

fn logistic_cfg(seed: u64) -> ClimberConfig {
    ClimberConfig {
        learning_rate: 0.05,
        batch_size: 32,
        max_epochs: 30,
        seed,
        ..ClimberConfig::default()
    }
}

fn pool(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[test]
fn presets_follow_the_training_table() {
    let cfg = ClimberConfig::from_preset(Preset::from_name("googlenet-like").unwrap());
    assert_eq!(
        (cfg.learning_rate, cfg.max_epochs, cfg.iters_per_epoch),
        (1e-3, 60, Some(6))
    );
    let cfg = ClimberConfig::from_preset(Preset::from_name("nasnet-like").unwrap());
    assert_eq!(
        (cfg.learning_rate, cfg.max_epochs, cfg.iters_per_epoch),
        (1e-3, 20, Some(22))
    );
    assert_eq!(Preset::InceptionResNetV2.settings(), (7e-4, 100, 6));
    assert_eq!(Preset::Vgg19.settings(), (1e-4, 30, 6));
    assert_eq!(Preset::DenseNet201.settings(), (1e-3, 30, 6));
    assert!(Preset::from_name("resnet-like").is_err());
}

#[test]
fn config_validation() {
    assert!(ClimberConfig::default().validate().is_ok());
    for bad in [
        ClimberConfig {
            population: 0,
            ..ClimberConfig::default()
        },
        ClimberConfig {
            epsilon: 0.0,
            ..ClimberConfig::default()
        },
        ClimberConfig {
            batch_size: 0,
            ..ClimberConfig::default()
        },
        ClimberConfig {
            max_epochs: 0,
            ..ClimberConfig::default()
        },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn separable_blobs_reach_high_accuracy() {
    let data = blobs(200, 7);
    let test = blobs(200, 8);
    let mut good = 0;
    for seed in 0..10 {
        let net = Network::init(Arch::logistic(2, 2), seed).unwrap();
        let cfg = ClimberConfig {
            population: 1,
            ..logistic_cfg(seed)
        };
        let trained = train(&net, &data, &pool(200), &cfg).unwrap();
        assert!(trained.history.len() <= 30);
        let (acc, _) = accuracy_and_loss(&trained.net, &test, &pool(200)).unwrap();
        if trained.history.last().unwrap().best_accuracy >= 0.95 && acc >= 0.95 {
            good += 1;
        }
    }
    assert!(good >= 9, "{good}/10");
}

#[test]
fn population_of_one_is_plain_sgdm() {
    let data = blobs(100, 1);
    let net = Network::init(Arch::logistic(2, 2), 0).unwrap();
    let cfg = ClimberConfig {
        population: 1,
        max_epochs: 4,
        patience: None,
        ..logistic_cfg(3)
    };
    let trained = train(&net, &data, &pool(100), &cfg).unwrap();
    assert_eq!(trained.history.len(), 4);
    for e in &trained.history {
        assert_eq!(e.climbers.len(), 1);
        assert_eq!((e.survivor, e.survivor_mode), (0, Mode::Sgdm));
    }
}

#[test]
fn one_sgdm_per_epoch_and_survivor_is_argmax() {
    let data = blobs(120, 2);
    let net = Network::init(Arch::logistic(2, 2), 1).unwrap();
    let cfg = ClimberConfig {
        max_epochs: 8,
        patience: None,
        ..logistic_cfg(4)
    };
    let trained = train(&net, &data, &pool(120), &cfg).unwrap();
    let mut prev_best = f64::NEG_INFINITY;
    for e in &trained.history {
        assert_eq!(e.climbers.len(), 5);
        assert_eq!(e.climbers[0].mode, Mode::Sgdm);
        assert_eq!(e.climbers.iter().filter(|c| c.mode == Mode::Sgdm).count(), 1);
        let max = e
            .climbers
            .iter()
            .map(|c| c.val_accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(e.climbers[e.survivor].val_accuracy, max);
        assert_eq!(e.survivor, select_survivor(&e.climbers));
        assert!(e.best_accuracy >= prev_best);
        prev_best = e.best_accuracy;
    }
}

#[test]
fn survivor_ties_break_on_loss_then_index() {
    let r = |id, val_accuracy, val_loss| ClimberReport {
        id,
        mode: Mode::RandomMovement,
        val_accuracy,
        val_loss,
        skipped_steps: 0,
    };
    assert_eq!(select_survivor(&[r(0, 0.5, 0.1), r(1, 0.9, 0.7), r(2, 0.9, 0.3)]), 2);
    assert_eq!(select_survivor(&[r(0, 0.9, 0.3), r(1, 0.9, 0.3)]), 0);
    assert_eq!(select_survivor(&[r(0, 0.9, f64::NAN), r(1, 0.9, 5.0)]), 1);
}

#[test]
fn planted_perfect_climber_survives() {
    let data = blobs(100, 3);
    let mut net = Network::init(Arch::logistic(2, 2), 0).unwrap();
    net.set_free_params(&[0.0; 6]).unwrap();
    let cfg = ClimberConfig {
        learning_rate: 1e-4,
        ..logistic_cfg(0)
    };
    let perfect = vec![-5.0, -5.0, 5.0, 5.0, 0.0, 0.0];
    let mut pop: Vec<Climber> = (0..4)
        .map(|i| {
            let mode = [
                Mode::Sgdm,
                Mode::RandomMovement,
                Mode::RandomDetection,
                Mode::RandomMovement,
            ][i];
            let params = if i == 2 { perfect.clone() } else { vec![0.0; 6] };
            Climber::new(mode, params, &cfg, ChaCha8Rng::seed_from_u64(i as u64))
        })
        .collect();
    let batches = vec![(0..32).collect::<Vec<_>>()];
    let val: Vec<usize> = (32..100).collect();
    let (win, reports) = run_epoch(&mut pop, &net, &data, &batches, &val, &cfg).unwrap();
    assert_eq!(win, 2);
    assert_eq!(reports[2].val_accuracy, 1.0);
}

#[test]
fn training_is_deterministic() {
    let data = blobs(100, 4);
    let net = Network::init(Arch::logistic(2, 2), 5).unwrap();
    let cfg = ClimberConfig {
        max_epochs: 5,
        ..logistic_cfg(11)
    };
    let a = train(&net, &data, &pool(100), &cfg).unwrap();
    let b = train(&net, &data, &pool(100), &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.net, b.net);
    let c = train(&net, &data, &pool(100), &ClimberConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.net.free_params(), c.net.free_params());
}

#[test]
fn unlimited_patience_runs_every_epoch() {
    let data = blobs(60, 5);
    let net = Network::init(Arch::logistic(2, 2), 0).unwrap();
    let cfg = ClimberConfig {
        max_epochs: 6,
        patience: None,
        ..logistic_cfg(1)
    };
    let h = train(&net, &data, &pool(60), &cfg).unwrap().history;
    assert_eq!(h.len(), 6);
    assert!(h[..5].iter().all(|e| e.stopped.is_none()));
    assert_eq!(h[5].stopped, Some(StopReason::MaxEpochs));
}

#[test]
fn plateau_stops_early() {
    let data = blobs(60, 6);
    let mut net = Network::init(Arch::logistic(2, 2), 0).unwrap();
    net.set_free_params(&[-5.0, -5.0, 5.0, 5.0, 0.0, 0.0]).unwrap();
    let cfg = ClimberConfig {
        patience: Some(1),
        ..logistic_cfg(1)
    };
    let h = train(&net, &data, &pool(60), &cfg).unwrap().history;
    assert_eq!(h.len(), 2);
    assert_eq!(h[1].stopped, Some(StopReason::ValidationPlateau));
    assert_eq!(StopReason::ValidationPlateau.name(), "validation_plateau");
}

#[test]
fn rejects_single_class_and_bad_config() {
    let data = InMemory {
        inputs: vec![vec![0.0, 1.0]; 10],
        labels: vec![1; 10],
    };
    let net = Network::init(Arch::logistic(2, 2), 0).unwrap();
    assert!(matches!(
        train(&net, &data, &pool(10), &ClimberConfig::default()),
        Err(Error::SingleClass)
    ));
    let data = blobs(10, 0);
    let cfg = ClimberConfig {
        max_epochs: 0,
        ..ClimberConfig::default()
    };
    assert!(train(&net, &data, &pool(10), &cfg).is_err());
}

fn conv_net() -> Network {
    let arch = Arch {
        input: Shape::Image {
            channels: 1,
            height: 4,
            width: 4,
        },
        layers: vec![
            LayerSpec::Conv2d {
                kernel: 3,
                in_ch: 1,
                out_ch: 2,
            },
            LayerSpec::Relu,
            LayerSpec::MaxPool2x2,
            LayerSpec::Flatten,
            LayerSpec::Dense { inputs: 8, outputs: 2 },
            LayerSpec::Softmax,
        ],
    };
    Network::init(arch, 9).unwrap()
}

fn stripes(n: usize) -> InMemory {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut inputs, mut labels) = (Vec::new(), Vec::new());
    for i in 0..n {
        let label = i % 2;
        let x: Vec<f64> = (0..16)
            .map(|p| {
                let lit = if label == 1 { p % 4 < 2 } else { p / 4 < 2 };
                f64::from(u8::from(lit)) + 0.1 * rng.random::<f64>()
            })
            .collect();
        inputs.push(x);
        labels.push(label);
    }
    InMemory { inputs, labels }
}

#[test]
fn frozen_layers_survive_every_mode() {
    let data = stripes(80);
    let mut net = conv_net();
    net.freeze_first(1).unwrap();
    let frozen_before = net.layer_params()[0].clone();
    let dense_before = net.layer_params()[4].clone();
    let cfg = ClimberConfig {
        batch_size: 16,
        max_epochs: 4,
        patience: None,
        learning_rate: 0.05,
        ..ClimberConfig::default()
    };
    for mode in [Mode::Sgdm, Mode::RandomMovement, Mode::RandomDetection] {
        let mut pop = vec![Climber::new(
            mode,
            net.free_params(),
            &cfg,
            ChaCha8Rng::seed_from_u64(1),
        )];
        let batches: Vec<Vec<usize>> = (0..100).map(|b| (0..16).map(|j| (b * 16 + j) % 64).collect()).collect();
        let val: Vec<usize> = (64..80).collect();
        run_epoch(&mut pop, &net, &data, &batches, &val, &cfg).unwrap();
        let mut after = net.clone();
        after.set_free_params(&pop[0].params).unwrap();
        assert_eq!(after.layer_params()[0], frozen_before);
        assert_ne!(after.layer_params()[4], dense_before, "{mode:?} never moved");
    }
    let trained = train(&net, &data, &pool(80), &cfg).unwrap();
    assert_eq!(trained.net.layer_params()[0], frozen_before);
}
