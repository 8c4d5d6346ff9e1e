use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::climber::{Climber, Mode};
use super::config::ClimberConfig;
use crate::error::{Error, Result};
use crate::eval::epoch_split;
use crate::nn::{Network, Tensor};

/// Indexed labelled samples that can be materialized as network inputs.
pub trait SampleSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, i: usize) -> usize;

    /// Writes sample `i` into `out`, which has the network's per-sample input
    /// length. Training loads pass an rng for augmentation; validation and
    /// scoring pass `None` and must be deterministic.
    fn load(&self, i: usize, rng: Option<&mut ChaCha8Rng>, out: &mut [f64]) -> Result<()>;
}

/// Pre-computed feature vectors, loaded verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct InMemory {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl SampleSource for InMemory {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    fn load(&self, i: usize, _rng: Option<&mut ChaCha8Rng>, out: &mut [f64]) -> Result<()> {
        let x = &self.inputs[i];
        if x.len() != out.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: out.len(),
            });
        }
        out.copy_from_slice(x);
        Ok(())
    }
}

/// Stacks samples `idx` into a batch tensor.
pub fn load_batch<S: SampleSource + ?Sized>(
    net: &Network,
    data: &S,
    idx: &[usize],
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Tensor, Vec<usize>)> {
    let input = net.arch().input;
    let per = input.len();
    let mut values = vec![0.0; per * idx.len()];
    for (j, &i) in idx.iter().enumerate() {
        data.load(i, rng.as_deref_mut(), &mut values[j * per..(j + 1) * per])?;
    }
    let mut shape = vec![idx.len()];
    shape.extend(input.dims());
    let labels = idx.iter().map(|&i| data.label(i)).collect();
    Ok((Tensor::new(shape, values)?, labels))
}

/// Glaucoma-class probability (the last class) for each of `idx`, in chunks.
pub fn predict<S: SampleSource + ?Sized>(net: &Network, data: &S, idx: &[usize]) -> Result<Vec<f64>> {
    let k = net.num_classes();
    let mut out = Vec::with_capacity(idx.len());
    for chunk in idx.chunks(128) {
        let (batch, _) = load_batch(net, data, chunk, None)?;
        let probs = net.forward(&batch)?;
        out.extend((0..chunk.len()).map(|s| probs.data()[s * k + k - 1]));
    }
    Ok(out)
}

/// Accuracy (argmax, first maximum wins) and mean cross-entropy over `idx`.
pub fn accuracy_and_loss<S: SampleSource + ?Sized>(net: &Network, data: &S, idx: &[usize]) -> Result<(f64, f64)> {
    if idx.is_empty() {
        return Err(Error::Dataset("empty validation split".into()));
    }
    let k = net.num_classes();
    let (mut correct, mut total_loss) = (0usize, 0.0);
    for chunk in idx.chunks(128) {
        let (batch, labels) = load_batch(net, data, chunk, None)?;
        let probs = net.forward(&batch)?;
        for (s, &label) in labels.iter().enumerate() {
            let row = &probs.data()[s * k..(s + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            correct += usize::from(best == label);
        }
        total_loss += net.loss(&batch, &labels)? * chunk.len() as f64;
    }
    let n = idx.len() as f64;
    Ok((correct as f64 / n, total_loss / n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimberReport {
    pub id: usize,
    pub mode: Mode,
    pub val_accuracy: f64,
    pub val_loss: f64,
    /// SGDM steps dropped for a non-finite gradient.
    pub skipped_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ValidationPlateau,
    MaxEpochs,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::ValidationPlateau => "validation_plateau",
            StopReason::MaxEpochs => "max_epochs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub iterations: usize,
    pub climbers: Vec<ClimberReport>,
    pub survivor: usize,
    pub survivor_mode: Mode,
    /// Best survivor accuracy over this and all earlier epochs.
    pub best_accuracy: f64,
    /// Set on the last epoch of a run.
    pub stopped: Option<StopReason>,
}

/// Index of the best climber: highest accuracy, then lowest loss, then lowest index.
pub fn select_survivor(reports: &[ClimberReport]) -> usize {
    let key = |r: &ClimberReport| {
        (
            r.val_accuracy,
            if r.val_loss.is_nan() { f64::INFINITY } else { r.val_loss },
        )
    };
    let mut best = 0;
    for (i, r) in reports.iter().enumerate().skip(1) {
        let (a, l) = key(r);
        let (ba, bl) = key(&reports[best]);
        if a > ba || (a == ba && l < bl) {
            best = i;
        }
    }
    best
}

fn climber_rng(seed: u64, epoch: usize, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Stream 0 drives splits and mode draws; every climber of every epoch gets its own.
    rng.set_stream(((epoch as u64) << 32) | (id as u64 + 1));
    rng
}

fn climb<S: SampleSource + ?Sized>(
    climber: &mut Climber,
    template: &Network,
    data: &S,
    batches: &[Vec<usize>],
    cfg: &ClimberConfig,
) -> Result<usize> {
    let mut net = template.clone();
    let mut skipped = 0;
    for idx in batches {
        let (batch, labels) = load_batch(&net, data, idx, Some(&mut climber.rng))?;
        match climber.mode {
            Mode::Sgdm => {
                net.set_free_params(&climber.params)?;
                let (loss, grad) = net.loss_and_grad(&batch, &labels)?;
                climber.last_loss = loss;
                if climber.sgdm_step(&grad, cfg.learning_rate, cfg.momentum).skipped {
                    skipped += 1;
                }
            }
            mode => {
                let mut loss = |p: &[f64]| {
                    net.set_free_params(p)
                        .and_then(|()| net.loss(&batch, &labels))
                        .unwrap_or(f64::NAN)
                };
                if mode == Mode::RandomMovement {
                    climber.random_movement_step(cfg, &mut loss);
                } else {
                    climber.random_detection_step(cfg, &mut loss);
                }
            }
        }
    }
    Ok(skipped)
}

/// Runs every climber over the same `batches`, scores each on `val` and returns
/// the survivor index with per-climber reports.
///
/// Climbers are independent; with the `rayon` feature they run in parallel and
/// the result is identical.
pub fn run_epoch<S: SampleSource + ?Sized>(
    pop: &mut [Climber],
    template: &Network,
    data: &S,
    batches: &[Vec<usize>],
    val: &[usize],
    cfg: &ClimberConfig,
) -> Result<(usize, Vec<ClimberReport>)> {
    if pop.is_empty() {
        return Err(Error::InvalidConfig("empty population".into()));
    }
    if batches.is_empty() || batches.iter().any(|b| b.is_empty()) {
        return Err(Error::Dataset("empty training split".into()));
    }
    if val.is_empty() {
        return Err(Error::Dataset("empty validation split".into()));
    }
    let work = |(id, c): (usize, &mut Climber)| -> Result<ClimberReport> {
        let skipped_steps = climb(c, template, data, batches, cfg)?;
        let mut net = template.clone();
        net.set_free_params(&c.params)?;
        let (val_accuracy, val_loss) = accuracy_and_loss(&net, data, val)?;
        Ok(ClimberReport {
            id,
            mode: c.mode,
            val_accuracy,
            val_loss,
            skipped_steps,
        })
    };
    #[cfg(feature = "rayon")]
    let reports: Result<Vec<ClimberReport>> = {
        use rayon::prelude::*;
        pop.par_iter_mut().enumerate().map(work).collect()
    };
    #[cfg(not(feature = "rayon"))]
    let reports: Result<Vec<ClimberReport>> = pop.iter_mut().enumerate().map(work).collect();
    let reports = reports?;
    Ok((select_survivor(&reports), reports))
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct Trained {
    /// Network holding the best survivor's parameters.
    pub net: Network,
    pub history: Vec<EpochReport>,
}

/// Consecutive mini-batches over `order`, wrapping around when `iters` batches
/// need more samples than there are.
fn batches_for(order: &[usize], batch_size: usize, iters: usize) -> Vec<Vec<usize>> {
    let n = order.len();
    let b = batch_size.min(n);
    (0..iters)
        .map(|it| (0..b).map(|j| order[(it * b + j) % n]).collect())
        .collect()
}

fn spawn(survivor: &Climber, cfg: &ClimberConfig, epoch: usize, master: &mut ChaCha8Rng) -> Vec<Climber> {
    (0..cfg.population)
        .map(|id| {
            let mode = match id {
                0 => Mode::Sgdm,
                _ if master.random::<bool>() => Mode::RandomMovement,
                _ => Mode::RandomDetection,
            };
            let mut c = Climber::new(mode, survivor.params.clone(), cfg, climber_rng(cfg.seed, epoch, id));
            if mode == Mode::Sgdm && survivor.mode == Mode::Sgdm {
                c.velocity.clone_from(&survivor.velocity);
            }
            c
        })
        .collect()
}

/// Hybrid training over the samples `pool` of `data`.
///
/// Each epoch re-splits `pool` into climbing and validation parts, spawns the
/// population from the previous survivor (climber 0 is SGDM, the rest pick a
/// random mode), runs it and keeps the best climber. Training stops after
/// `patience` epochs without a new best validation accuracy, or at
/// `max_epochs`. The returned network holds the best survivor seen, ranked by
/// validation accuracy and then validation loss.
pub fn train<S: SampleSource + ?Sized>(
    net: &Network,
    data: &S,
    pool: &[usize],
    cfg: &ClimberConfig,
) -> Result<Trained> {
    cfg.validate()?;
    let classes = net.num_classes();
    let mut seen = vec![false; classes];
    for &i in pool {
        let l = data.label(i);
        if l >= classes {
            return Err(Error::Dataset(alloc::format!("label {l} out of range")));
        }
        seen[l] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::SingleClass);
    }

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut survivor = Climber::new(Mode::Sgdm, net.free_params(), cfg, climber_rng(cfg.seed, 0, 0));
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut best_accuracy = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut history = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let (train_idx, val_idx) = epoch_split(pool, cfg.train_fraction, &mut master)?;
        let iters = cfg
            .iters_per_epoch
            .unwrap_or_else(|| train_idx.len().div_ceil(cfg.batch_size));
        let batches = batches_for(&train_idx, cfg.batch_size, iters);
        let mut pop = spawn(&survivor, cfg, epoch, &mut master);
        let (win, reports) = run_epoch(&mut pop, net, data, &batches, &val_idx, cfg)?;
        let (acc, loss) = (reports[win].val_accuracy, reports[win].val_loss);
        survivor = pop.swap_remove(win);

        if acc > best_accuracy {
            best_accuracy = acc;
            stale = 0;
        } else {
            stale += 1;
        }
        let better = match &best {
            None => true,
            Some((ba, bl, _)) => acc > *ba || (acc == *ba && loss < *bl),
        };
        if better {
            best = Some((acc, loss, survivor.params.clone()));
        }

        let stopped = if cfg.patience.is_some_and(|p| stale >= p) {
            Some(StopReason::ValidationPlateau)
        } else if epoch + 1 == cfg.max_epochs {
            Some(StopReason::MaxEpochs)
        } else {
            None
        };
        history.push(EpochReport {
            epoch,
            iterations: iters,
            survivor: win,
            survivor_mode: reports[win].mode,
            climbers: reports,
            best_accuracy,
            stopped,
        });
        if stopped.is_some() {
            break;
        }
    }

    let mut out = net.clone();
    let (_, _, params) = best.expect("max_epochs >= 1");
    out.set_free_params(&params)?;
    Ok(Trained { net: out, history })
}
