use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::error::Error;

fn dense_net(weights: [f64; 4], bias: [f64; 2]) -> Network {
    let mut net = Network::init(Arch::logistic(2, 2), 0).unwrap();
    let mut v = weights.to_vec();
    v.extend_from_slice(&bias);
    net.set_free_params(&v).unwrap();
    net
}

#[test]
fn init_is_deterministic_with_zero_bias() {
    let a = Network::init(Arch::logistic(2, 2), 9).unwrap();
    let b = Network::init(Arch::logistic(2, 2), 9).unwrap();
    assert_eq!(a, b);
    let net = Network::init(Arch::tiny_cnn(16), 3).unwrap();
    for p in net.layer_params().iter().flatten() {
        assert!(p.bias.data().iter().all(|&b| b == 0.0));
    }
}

#[test]
fn glorot_bound() {
    let net = Network::init(Arch::tiny_cnn(16), 5).unwrap();
    let fans = [(27usize, 72usize), (72, 144), (256, 32), (32, 2)];
    for (p, (fi, fo)) in net.layer_params().iter().flatten().zip(fans) {
        let limit = libm::sqrt(6.0 / (fi + fo) as f64);
        assert!(p.weight.data().iter().all(|w| w.abs() <= limit));
        let max = p.weight.data().iter().fold(0.0f64, |m, w| m.max(w.abs()));
        assert!(max > 0.5 * limit);
    }
}

#[test]
fn zero_weights_give_uniform_output() {
    let net = dense_net([0.0; 4], [0.0; 2]);
    let batch = Tensor::new(vec![3, 2], vec![1.0, 2.0, -4.0, 0.5, 0.0, 9.0]).unwrap();
    let out = net.forward(&batch).unwrap();
    assert_eq!(out.shape(), &[3, 2]);
    assert!(out.data().iter().all(|&p| p == 0.5));
}

#[test]
fn hand_computed_softmax() {
    let net = dense_net([1.0, 2.0, 3.0, 4.0], [0.5, -0.5]);
    let out = net.forward(&Tensor::new(vec![1, 2], vec![1.0, -1.0]).unwrap()).unwrap();
    // Logits (-0.5, -1.5): p0 = 1 / (1 + e^-1).
    assert!((out.data()[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
    assert!((out.data()[1] - 0.268_941_421_369_995_1).abs() < 1e-12);
}

#[test]
fn loss_goldens() {
    let uniform = dense_net([0.0; 4], [0.0; 2]);
    let batch = Tensor::new(vec![2, 2], vec![1.0, 1.0, 2.0, 3.0]).unwrap();
    let loss = uniform.loss(&batch, &[0, 1]).unwrap();
    assert!((loss - core::f64::consts::LN_2).abs() < 1e-9);

    let confident = dense_net([0.0; 4], [40.0, -40.0]);
    assert!(confident.loss(&batch, &[0, 0]).unwrap() < 1e-6);
    let empty = Tensor::new(vec![0, 2], vec![]).unwrap();
    assert_eq!(uniform.loss_and_grad(&empty, &[]).unwrap_err(), Error::EmptyBatch);
}

#[test]
fn shape_mismatch_rejected() {
    let net = dense_net([0.0; 4], [0.0; 2]);
    let batch = Tensor::new(vec![1, 3], vec![1.0; 3]).unwrap();
    assert!(matches!(net.forward(&batch), Err(Error::ShapeMismatch(_))));
}

#[test]
fn param_round_trip_and_freezing() {
    let mut net = Network::init(Arch::tiny_cnn(8), 1).unwrap();
    let v = net.free_params();
    net.set_free_params(&v).unwrap();
    assert_eq!(net.free_params(), v);
    assert!(matches!(net.set_free_params(&v[1..]), Err(Error::ParamLength { .. })));

    net.freeze_first(4).unwrap();
    assert_eq!(net.n_free(), 0);
    assert!(net.free_params().is_empty());
    net.freeze_first(0).unwrap();
    assert_eq!(net.n_free(), v.len());
    assert!(matches!(net.freeze_first(5), Err(Error::FreezeOutOfRange { .. })));

    net.freeze_first(1).unwrap();
    let conv = net.layer_params()[0].clone();
    let free: Vec<f64> = net.free_params().iter().map(|x| x + 1.0).collect();
    net.set_free_params(&free).unwrap();
    assert_eq!(net.layer_params()[0], conv);
}

#[test]
fn perturbation_changes_output() {
    let mut net = Network::init(Arch::logistic(2, 2), 4).unwrap();
    let batch = Tensor::new(vec![1, 2], vec![0.3, -0.7]).unwrap();
    let before = net.forward(&batch).unwrap();
    let v = net.free_params();
    net.set_free_params(&v).unwrap();
    assert_eq!(net.forward(&batch).unwrap(), before);
    let mut moved = v.clone();
    moved[0] += 0.5;
    net.set_free_params(&moved).unwrap();
    assert_ne!(net.forward(&batch).unwrap(), before);
}

#[test]
fn frozen_layers_produce_no_gradient() {
    let mut net = Network::init(Arch::tiny_cnn(8), 2).unwrap();
    net.freeze_first(2).unwrap();
    let batch = Tensor::new(vec![2, 3, 8, 8], (0..384).map(|i| (i % 17) as f64 / 17.0).collect()).unwrap();
    let (_, grad) = net.loss_and_grad(&batch, &[0, 1]).unwrap();
    assert_eq!(grad.len(), net.n_free());
}

#[test]
fn checkpoint_round_trip() {
    let mut net = Network::init(Arch::tiny_cnn(8), 11).unwrap();
    net.freeze_first(1).unwrap();
    let bytes = encode_checkpoint(&net);
    assert_eq!(&bytes[..4], b"ONHK");
    assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
    assert_eq!(decode_checkpoint(&bytes).unwrap(), net);
    assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode_checkpoint(&bad).is_err());
}
