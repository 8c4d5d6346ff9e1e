use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use super::arch::{Arch, LayerSpec, Shape};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Weights and bias of one conv or dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `[out, in, k, k]` for conv, `[out, in]` for dense.
    pub weight: Tensor,
    pub bias: Tensor,
    pub frozen: bool,
}

/// Feed-forward classifier ending in softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Arch,
    shapes: Vec<Shape>,
    params: Vec<Option<LayerParams>>,
}

struct Cache {
    /// `acts[0]` is the input; `acts[i + 1]` is the output of layer `i`.
    acts: Vec<Vec<f64>>,
    /// Argmax input offsets for each max-pool layer, indexed by layer.
    pool_idx: Vec<Vec<u32>>,
}

impl Network {
    /// Glorot-uniform weights, zero biases, nothing frozen.
    pub fn init(arch: Arch, seed: u64) -> Result<Self> {
        let shapes = arch.shapes()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(arch.layers.len());
        for layer in &arch.layers {
            let p = match *layer {
                LayerSpec::Conv2d { kernel, in_ch, out_ch } => {
                    let area = kernel * kernel;
                    Some(glorot(
                        &mut rng,
                        vec![out_ch, in_ch, kernel, kernel],
                        in_ch * area,
                        out_ch * area,
                        out_ch,
                    ))
                }
                LayerSpec::Dense { inputs, outputs } => {
                    Some(glorot(&mut rng, vec![outputs, inputs], inputs, outputs, outputs))
                }
                _ => None,
            };
            params.push(p);
        }
        Ok(Self { arch, shapes, params })
    }

    /// Rebuilds a network from explicit parameters (checkpoint loading).
    pub fn from_parts(arch: Arch, params: Vec<Option<LayerParams>>) -> Result<Self> {
        let shapes = arch.shapes()?;
        let template = Self::init(arch.clone(), 0)?;
        if params.len() != template.params.len() {
            return Err(Error::ShapeMismatch("parameter list does not match layers".into()));
        }
        for (a, b) in params.iter().zip(&template.params) {
            let ok = match (a, b) {
                (Some(a), Some(b)) => a.weight.shape() == b.weight.shape() && a.bias.shape() == b.bias.shape(),
                (None, None) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::ShapeMismatch("parameter shapes do not match layers".into()));
            }
        }
        Ok(Self { arch, shapes, params })
    }

    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn layer_params(&self) -> &[Option<LayerParams>] {
        &self.params
    }

    pub fn num_classes(&self) -> usize {
        self.shapes.last().map(Shape::len).unwrap_or(0)
    }

    pub fn parameterized_layers(&self) -> usize {
        self.params.iter().filter(|p| p.is_some()).count()
    }

    /// Per-layer frozen flags (always false for layers without parameters).
    pub fn frozen_mask(&self) -> Vec<bool> {
        self.params
            .iter()
            .map(|p| p.as_ref().is_some_and(|p| p.frozen))
            .collect()
    }

    /// Freezes the first `k` parameterized layers and unfreezes the rest.
    pub fn freeze_first(&mut self, k: usize) -> Result<()> {
        let available = self.parameterized_layers();
        if k > available {
            return Err(Error::FreezeOutOfRange {
                requested: k,
                available,
            });
        }
        for (i, p) in self.params.iter_mut().flatten().enumerate() {
            p.frozen = i < k;
        }
        Ok(())
    }

    pub fn n_free(&self) -> usize {
        self.params
            .iter()
            .flatten()
            .filter(|p| !p.frozen)
            .map(|p| p.weight.len() + p.bias.len())
            .sum()
    }

    /// Free parameters in layer order, weights before bias, row-major.
    pub fn free_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_free());
        for p in self.params.iter().flatten().filter(|p| !p.frozen) {
            out.extend_from_slice(p.weight.data());
            out.extend_from_slice(p.bias.data());
        }
        out
    }

    pub fn set_free_params(&mut self, v: &[f64]) -> Result<()> {
        let expected = self.n_free();
        if v.len() != expected {
            return Err(Error::ParamLength {
                expected,
                found: v.len(),
            });
        }
        let mut off = 0;
        for p in self.params.iter_mut().flatten().filter(|p| !p.frozen) {
            let nw = p.weight.len();
            p.weight.data_mut().copy_from_slice(&v[off..off + nw]);
            off += nw;
            let nb = p.bias.len();
            p.bias.data_mut().copy_from_slice(&v[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let n = batch.batch_size();
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let mut expected = vec![n];
        expected.extend(self.arch.input.dims());
        if batch.shape() != expected.as_slice() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "batch shape {:?}, network expects {:?}",
                batch.shape(),
                expected
            )));
        }
        Ok(n)
    }

    fn run(&self, batch: &Tensor) -> Result<Cache> {
        let n = self.check_batch(batch)?;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.arch.layers.len() + 1);
        let mut pool_idx = vec![Vec::new(); self.arch.layers.len()];
        acts.push(batch.data().to_vec());
        let mut in_shape = self.arch.input;
        for (li, layer) in self.arch.layers.iter().enumerate() {
            let input = &acts[li];
            let out = match *layer {
                LayerSpec::Conv2d { kernel, out_ch, .. } => {
                    let p = self.params[li].as_ref().expect("conv has params");
                    conv_forward(input, n, in_shape, p, kernel, out_ch)
                }
                LayerSpec::Relu => input.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
                LayerSpec::MaxPool2x2 => {
                    let (out, idx) = pool_forward(input, n, in_shape);
                    pool_idx[li] = idx;
                    out
                }
                LayerSpec::Flatten => input.clone(),
                LayerSpec::Dense { inputs, outputs } => {
                    let p = self.params[li].as_ref().expect("dense has params");
                    dense_forward(input, n, inputs, outputs, p)
                }
                LayerSpec::Softmax => softmax_rows(input, in_shape.len()),
            };
            acts.push(out);
            in_shape = self.shapes[li];
        }
        Ok(Cache { acts, pool_idx })
    }

    /// Class probabilities, shape `(batch, classes)`.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let cache = self.run(batch)?;
        let probs = cache.acts.into_iter().last().expect("at least one layer");
        Ok(Tensor::new_unchecked(
            vec![batch.batch_size(), self.num_classes()],
            probs,
        ))
    }

    fn check_labels(&self, n: usize, labels: &[usize]) -> Result<()> {
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: n,
            });
        }
        let k = self.num_classes();
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::ShapeMismatch(alloc::format!(
                "label {bad} out of range for {k} classes"
            )));
        }
        Ok(())
    }

    fn mean_cross_entropy(&self, cache: &Cache, labels: &[usize]) -> f64 {
        let k = self.num_classes();
        let logits = &cache.acts[cache.acts.len() - 2];
        let n = labels.len();
        let mut total = 0.0;
        for (s, &label) in labels.iter().enumerate() {
            let row = &logits[s * k..(s + 1) * k];
            total += log_sum_exp(row) - row[label];
        }
        total / n as f64
    }

    /// Mean softmax cross-entropy without gradients.
    pub fn loss(&self, batch: &Tensor, labels: &[usize]) -> Result<f64> {
        let cache = self.run(batch)?;
        self.check_labels(batch.batch_size(), labels)?;
        Ok(self.mean_cross_entropy(&cache, labels))
    }

    /// Mean softmax cross-entropy and its gradient over the free parameters.
    pub fn loss_and_grad(&self, batch: &Tensor, labels: &[usize]) -> Result<(f64, Vec<f64>)> {
        let cache = self.run(batch)?;
        let n = batch.batch_size();
        self.check_labels(n, labels)?;
        let loss = self.mean_cross_entropy(&cache, labels);

        let layers = &self.arch.layers;
        let last = layers.len() - 1;
        let k = self.num_classes();
        // Combined softmax + cross-entropy gradient with respect to the logits.
        let mut grad: Vec<f64> = cache.acts[last + 1].clone();
        for (s, &label) in labels.iter().enumerate() {
            grad[s * k + label] -= 1.0;
        }
        let inv_n = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv_n);

        let first_free = self.params.iter().position(|p| p.as_ref().is_some_and(|p| !p.frozen));
        let mut layer_grads: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; layers.len()];
        if let Some(first_free) = first_free {
            for li in (first_free..last).rev() {
                let input = &cache.acts[li];
                let in_shape = if li == 0 { self.arch.input } else { self.shapes[li - 1] };
                let need_input_grad = li > first_free;
                grad = match layers[li] {
                    LayerSpec::Conv2d { kernel, out_ch, .. } => {
                        let p = self.params[li].as_ref().expect("conv has params");
                        let (gin, gw, gb) =
                            conv_backward(input, &grad, n, in_shape, p, kernel, out_ch, !p.frozen, need_input_grad);
                        if !p.frozen {
                            layer_grads[li] = Some((gw, gb));
                        }
                        gin
                    }
                    LayerSpec::Dense { inputs, outputs } => {
                        let p = self.params[li].as_ref().expect("dense has params");
                        let (gin, gw, gb) =
                            dense_backward(input, &grad, n, inputs, outputs, p, !p.frozen, need_input_grad);
                        if !p.frozen {
                            layer_grads[li] = Some((gw, gb));
                        }
                        gin
                    }
                    LayerSpec::Relu => {
                        if need_input_grad {
                            grad.iter()
                                .zip(input)
                                .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
                                .collect()
                        } else {
                            Vec::new()
                        }
                    }
                    LayerSpec::MaxPool2x2 => {
                        if need_input_grad {
                            let mut gin = vec![0.0; input.len()];
                            for (&g, &idx) in grad.iter().zip(&cache.pool_idx[li]) {
                                gin[idx as usize] += g;
                            }
                            gin
                        } else {
                            Vec::new()
                        }
                    }
                    LayerSpec::Flatten => grad,
                    LayerSpec::Softmax => unreachable!("softmax is the last layer"),
                };
            }
        }

        let mut flat = Vec::with_capacity(self.n_free());
        for (p, g) in self.params.iter().zip(layer_grads) {
            if let Some(p) = p {
                if !p.frozen {
                    let (gw, gb) = g.expect("free layer has gradients");
                    flat.extend_from_slice(&gw);
                    flat.extend_from_slice(&gb);
                }
            }
        }
        Ok((loss, flat))
    }

    /// Identifies which linear piece of the network the batch falls on: the ReLU
    /// on/off pattern and max-pool winners. Gradients are only defined where a
    /// small perturbation leaves this pattern unchanged.
    pub fn activation_pattern(&self, batch: &Tensor) -> Result<Vec<u32>> {
        let cache = self.run(batch)?;
        let mut out = Vec::new();
        for (li, layer) in self.arch.layers.iter().enumerate() {
            match layer {
                LayerSpec::Relu => out.extend(cache.acts[li].iter().map(|&v| (v > 0.0) as u32)),
                LayerSpec::MaxPool2x2 => out.extend_from_slice(&cache.pool_idx[li]),
                _ => {}
            }
        }
        Ok(out)
    }
}

fn glorot<R: Rng>(rng: &mut R, shape: Vec<usize>, fan_in: usize, fan_out: usize, bias_len: usize) -> LayerParams {
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(-limit..limit)).collect();
    LayerParams {
        weight: Tensor::new_unchecked(shape, data),
        bias: Tensor::zeros(vec![bias_len]),
        frozen: false,
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(row.iter().map(|&v| libm::exp(v - max)).sum::<f64>())
}

fn softmax_rows(input: &[f64], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(input.len());
    for row in input.chunks_exact(k) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        let mut sum = 0.0;
        for &v in row {
            let e = libm::exp(v - max);
            sum += e;
            out.push(e);
        }
        out[start..].iter_mut().for_each(|e| *e /= sum);
    }
    out
}

fn image_dims(s: Shape) -> (usize, usize, usize) {
    match s {
        Shape::Image {
            channels,
            height,
            width,
        } => (channels, height, width),
        Shape::Flat(_) => unreachable!("validated by Arch::shapes"),
    }
}

/// Row/column range of output pixels whose tap at offset `d` stays inside `0..len`.
#[inline]
fn valid_range(len: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (len as isize - d).min(len as isize).max(0) as usize;
    (lo, hi.max(lo))
}

/// Unrolls one `(c, h, w)` plane stack into `(c * k * k, h * w)` columns with
/// zero padding.
fn im2col(inp: &[f64], c: usize, h: usize, w: usize, k: usize, col: &mut [f64]) {
    let plane = h * w;
    let pad = (k / 2) as isize;
    col.fill(0.0);
    for i in 0..c {
        let in_i = &inp[i * plane..(i + 1) * plane];
        for ky in 0..k {
            let dy = ky as isize - pad;
            let (y_lo, y_hi) = valid_range(h, dy);
            for kx in 0..k {
                let dx = kx as isize - pad;
                let (x_lo, x_hi) = valid_range(w, dx);
                let row = &mut col[((i * k + ky) * k + kx) * plane..][..plane];
                for y in y_lo..y_hi {
                    let start = ((y as isize + dy) as usize * w) as isize + x_lo as isize + dx;
                    let len = x_hi - x_lo;
                    row[y * w + x_lo..y * w + x_hi].copy_from_slice(&in_i[start as usize..start as usize + len]);
                }
            }
        }
    }
}

/// Inverse scatter of [`im2col`]: accumulates column gradients into `gin`.
fn col2im(col: &[f64], c: usize, h: usize, w: usize, k: usize, gin: &mut [f64]) {
    let plane = h * w;
    let pad = (k / 2) as isize;
    for i in 0..c {
        let g_i = &mut gin[i * plane..(i + 1) * plane];
        for ky in 0..k {
            let dy = ky as isize - pad;
            let (y_lo, y_hi) = valid_range(h, dy);
            for kx in 0..k {
                let dx = kx as isize - pad;
                let (x_lo, x_hi) = valid_range(w, dx);
                let row = &col[((i * k + ky) * k + kx) * plane..][..plane];
                for y in y_lo..y_hi {
                    let start = (((y as isize + dy) as usize * w) as isize + x_lo as isize + dx) as usize;
                    let len = x_hi - x_lo;
                    for (g, &v) in g_i[start..start + len].iter_mut().zip(&row[y * w + x_lo..y * w + x_hi]) {
                        *g += v;
                    }
                }
            }
        }
    }
}

/// `c = alpha * a * b + beta * c` on row-major slices; `ta`/`tb` read the
/// operand transposed.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, kk: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, beta: f64, c: &mut [f64]) {
    let (rsa, csa) = if ta { (1, m as isize) } else { (kk as isize, 1) };
    let (rsb, csb) = if tb { (1, kk as isize) } else { (n as isize, 1) };
    debug_assert!(a.len() >= m * kk && b.len() >= kk * n && c.len() >= m * n);
    // SAFETY: the strides describe m x kk, kk x n and m x n matrices that fit in
    // the asserted slice lengths, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            kk,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn conv_forward(input: &[f64], n: usize, in_shape: Shape, p: &LayerParams, k: usize, oc: usize) -> Vec<f64> {
    let (c, h, w) = image_dims(in_shape);
    let plane = h * w;
    let ckk = c * k * k;
    let weight = p.weight.data();
    let bias = p.bias.data();
    let mut col = vec![0.0; ckk * plane];
    let mut out = vec![0.0; n * oc * plane];
    for s in 0..n {
        im2col(&input[s * c * plane..(s + 1) * c * plane], c, h, w, k, &mut col);
        let outp = &mut out[s * oc * plane..(s + 1) * oc * plane];
        for (o, &b) in bias.iter().enumerate() {
            outp[o * plane..(o + 1) * plane].fill(b);
        }
        gemm(oc, ckk, plane, weight, false, &col, false, 1.0, outp);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    gout: &[f64],
    n: usize,
    in_shape: Shape,
    p: &LayerParams,
    k: usize,
    oc: usize,
    want_params: bool,
    want_input: bool,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (c, h, w) = image_dims(in_shape);
    let plane = h * w;
    let ckk = c * k * k;
    let weight = p.weight.data();
    let mut gin = if want_input { vec![0.0; input.len()] } else { Vec::new() };
    let mut gw = if want_params {
        vec![0.0; weight.len()]
    } else {
        Vec::new()
    };
    let mut gb = if want_params { vec![0.0; oc] } else { Vec::new() };
    let mut col = vec![0.0; ckk * plane];
    for s in 0..n {
        let g = &gout[s * oc * plane..(s + 1) * oc * plane];
        if want_params {
            for (o, b) in gb.iter_mut().enumerate() {
                *b += g[o * plane..(o + 1) * plane].iter().sum::<f64>();
            }
            im2col(&input[s * c * plane..(s + 1) * c * plane], c, h, w, k, &mut col);
            gemm(oc, plane, ckk, g, false, &col, true, 1.0, &mut gw);
        }
        if want_input {
            gemm(ckk, oc, plane, weight, true, g, false, 0.0, &mut col);
            col2im(&col, c, h, w, k, &mut gin[s * c * plane..(s + 1) * c * plane]);
        }
    }
    (gin, gw, gb)
}

fn pool_forward(input: &[f64], n: usize, in_shape: Shape) -> (Vec<f64>, Vec<u32>) {
    let (c, h, w) = image_dims(in_shape);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut idx = Vec::with_capacity(n * c * oh * ow);
    for s in 0..n {
        for ch in 0..c {
            let base = (s * c + ch) * h * w;
            for y in 0..oh {
                for x in 0..ow {
                    let mut best = base + (2 * y) * w + 2 * x;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let j = base + (2 * y + dy) * w + 2 * x + dx;
                        if input[j] > input[best] {
                            best = j;
                        }
                    }
                    out.push(input[best]);
                    idx.push(best as u32);
                }
            }
        }
    }
    (out, idx)
}

fn dense_forward(input: &[f64], n: usize, inputs: usize, outputs: usize, p: &LayerParams) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n).flat_map(|_| p.bias.data().iter().copied()).collect();
    gemm(n, inputs, outputs, input, false, p.weight.data(), true, 1.0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn dense_backward(
    input: &[f64],
    gout: &[f64],
    n: usize,
    inputs: usize,
    outputs: usize,
    p: &LayerParams,
    want_params: bool,
    want_input: bool,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let weight = p.weight.data();
    let mut gin = if want_input { vec![0.0; n * inputs] } else { Vec::new() };
    let mut gw = if want_params {
        vec![0.0; weight.len()]
    } else {
        Vec::new()
    };
    let mut gb = if want_params { vec![0.0; outputs] } else { Vec::new() };
    if want_params {
        for row in gout.chunks_exact(outputs) {
            gb.iter_mut().zip(row).for_each(|(b, &g)| *b += g);
        }
        gemm(outputs, n, inputs, gout, true, input, false, 0.0, &mut gw);
    }
    if want_input {
        gemm(n, outputs, inputs, gout, false, weight, false, 0.0, &mut gin);
    }
    (gin, gw, gb)
}
