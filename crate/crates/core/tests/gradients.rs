//! Backpropagation checked against central finite differences of the loss.

use onhkit_core::nn::{Arch, LayerSpec, Network, Shape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-5;
/// Relative error is measured against max(|analytic|, |numeric|, FLOOR); below
/// the floor the comparison is effectively absolute.
const FLOOR: f64 = 1e-4;

struct Report {
    max_rel: f64,
    checked: usize,
}

/// Compares analytic and numeric gradients on up to `max_coords` free parameters.
/// Coordinates whose perturbation changes the ReLU / max-pool pattern sit on a kink
/// where the gradient is undefined, and are skipped.
fn check(net: &mut Network, batch: &Tensor, labels: &[usize], max_coords: usize, rng: &mut ChaCha8Rng) -> Report {
    let (_, grad) = net.loss_and_grad(batch, labels).unwrap();
    let base = net.free_params();
    assert_eq!(grad.len(), base.len());
    let pattern = net.activation_pattern(batch).unwrap();
    let coords: Vec<usize> = if base.len() <= max_coords {
        (0..base.len()).collect()
    } else {
        (0..max_coords).map(|_| rng.random_range(0..base.len())).collect()
    };
    let mut report = Report {
        max_rel: 0.0,
        checked: 0,
    };
    for i in coords {
        let mut v = base.clone();
        v[i] = base[i] + H;
        net.set_free_params(&v).unwrap();
        let plus = net.loss(batch, labels).unwrap();
        let p_plus = net.activation_pattern(batch).unwrap();
        v[i] = base[i] - H;
        net.set_free_params(&v).unwrap();
        let minus = net.loss(batch, labels).unwrap();
        let p_minus = net.activation_pattern(batch).unwrap();
        net.set_free_params(&base).unwrap();
        if p_plus != pattern || p_minus != pattern {
            continue;
        }
        let numeric = (plus - minus) / (2.0 * H);
        let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(FLOOR);
        report.max_rel = report.max_rel.max(rel);
        report.checked += 1;
    }
    report
}

fn random_batch(shape: Shape, n: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let mut dims = vec![n];
    dims.extend(shape.dims());
    let len = n * shape.len();
    Tensor::new(dims, (0..len).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn run_arch(arch: Arch, instances: usize, max_coords: usize, batch: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for inst in 0..instances {
        let mut net = Network::init(arch.clone(), seed * 1000 + inst as u64).unwrap();
        // Non-zero biases so every bias path is exercised.
        let v: Vec<f64> = net
            .free_params()
            .iter()
            .map(|w| w + 0.05 * (rng.random::<f64>() - 0.5))
            .collect();
        net.set_free_params(&v).unwrap();
        let x = random_batch(arch.input, batch, &mut rng);
        let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..2)).collect();
        let r = check(&mut net, &x, &labels, max_coords, &mut rng);
        worst = worst.max(r.max_rel);
        checked += r.checked;
    }
    assert!(checked > 0);
    worst
}

fn img(c: usize, h: usize, w: usize) -> Shape {
    Shape::Image {
        channels: c,
        height: h,
        width: w,
    }
}

#[test]
fn dense_layer() {
    let arch = Arch::logistic(5, 2);
    let worst = run_arch(arch, 100, 64, 4, 1);
    assert!(worst <= TOL, "dense max rel error {worst}");
}

#[test]
fn dense_relu_dense() {
    let arch = Arch {
        input: Shape::Flat(4),
        layers: vec![
            LayerSpec::Dense { inputs: 4, outputs: 6 },
            LayerSpec::Relu,
            LayerSpec::Dense { inputs: 6, outputs: 2 },
            LayerSpec::Softmax,
        ],
    };
    let worst = run_arch(arch, 100, 64, 4, 2);
    assert!(worst <= TOL, "relu max rel error {worst}");
}

#[test]
fn conv_layer() {
    let arch = Arch {
        input: img(2, 3, 4),
        layers: vec![
            LayerSpec::Conv2d {
                kernel: 3,
                in_ch: 2,
                out_ch: 2,
            },
            LayerSpec::Flatten,
            LayerSpec::Dense { inputs: 24, outputs: 2 },
            LayerSpec::Softmax,
        ],
    };
    let worst = run_arch(arch, 100, 80, 3, 3);
    assert!(worst <= TOL, "conv max rel error {worst}");
}

#[test]
fn conv_only() {
    // A lone convolution feeding softmax: 1x1x2 output logits.
    let arch = Arch {
        input: img(1, 1, 2),
        layers: vec![
            LayerSpec::Conv2d {
                kernel: 3,
                in_ch: 1,
                out_ch: 1,
            },
            LayerSpec::Flatten,
            LayerSpec::Softmax,
        ],
    };
    let worst = run_arch(arch, 100, 64, 3, 4);
    assert!(worst <= TOL, "conv-only max rel error {worst}");
}

#[test]
fn maxpool_layer() {
    let arch = Arch {
        input: img(2, 4, 6),
        layers: vec![
            LayerSpec::Conv2d {
                kernel: 3,
                in_ch: 2,
                out_ch: 3,
            },
            LayerSpec::MaxPool2x2,
            LayerSpec::Flatten,
            LayerSpec::Dense { inputs: 18, outputs: 2 },
            LayerSpec::Softmax,
        ],
    };
    let worst = run_arch(arch, 100, 80, 3, 5);
    assert!(worst <= TOL, "maxpool max rel error {worst}");
}

#[test]
fn tiny_cnn() {
    let worst = run_arch(Arch::tiny_cnn(32), 100, 40, 2, 6);
    assert!(worst <= TOL, "tiny-cnn max rel error {worst}");
}

#[test]
fn tiny_cnn_with_frozen_prefix() {
    let arch = Arch::tiny_cnn(16);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..=3 {
        let mut net = Network::init(arch.clone(), k as u64).unwrap();
        net.freeze_first(k).unwrap();
        let x = random_batch(arch.input, 2, &mut rng);
        let r = check(&mut net, &x, &[0, 1], 60, &mut rng);
        assert!(r.max_rel <= TOL, "freeze {k}: {}", r.max_rel);
    }
}
