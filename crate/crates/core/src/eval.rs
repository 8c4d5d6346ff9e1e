//! Fold protocol and performance metrics.
//!
//! The positive class is glaucoma (label 1). Scores are predicted glaucoma
//! probabilities and `score >= threshold` classifies as positive.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

pub const NORMAL: usize = 0;
pub const GLAUCOMA: usize = 1;

/// Per-sample fold assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// Indices held out in fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == f)
            .collect()
    }

    /// Indices used for training when fold `f` is held out, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != f)
            .collect()
    }
}

/// Venetian-blind stratified folds: each class is shuffled on its own and its
/// members are dealt round-robin, shuffled position `j` going to fold `j mod k`.
pub fn venetian_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig("k must be at least 2".into()));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; labels.len()];
    for class in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                size: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            assignments[i] = j % k;
        }
    }
    Ok(FoldPlan { k, assignments })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fn_: usize, tn: usize, fp: usize) -> Self {
        Self { tp, fn_, tn, fp }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn add(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(
            self.tp + other.tp,
            self.fn_ + other.fn_,
            self.tn + other.tn,
            self.fp + other.fp,
        )
    }
}

pub fn confusion(preds: &[usize], truth: &[usize]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: truth.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truth) {
        match (p == GLAUCOMA, t == GLAUCOMA) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::UndefinedMetric("accuracy"));
    }
    if cm.tp + cm.fn_ == 0 {
        return Err(Error::UndefinedMetric("sensitivity"));
    }
    if cm.tn + cm.fp == 0 {
        return Err(Error::UndefinedMetric("specificity"));
    }
    Ok(Metrics {
        accuracy: (cm.tp + cm.tn) as f64 / cm.total() as f64,
        sensitivity: cm.tp as f64 / (cm.tp + cm.fn_) as f64,
        specificity: cm.tn as f64 / (cm.tn + cm.fp) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// From the `+inf` sentinel at (0, 0) down to the lowest score at (1, 1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC sweep over every distinct score with trapezoidal AUC.
///
/// The area is accumulated in integer counts, so it equals the Mann-Whitney
/// statistic with ties counted at half weight.
pub fn roc_auc(scores: &[f64], truth: &[usize]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!("non-finite score {bad}")));
    }
    let pos = truth.iter().filter(|&&t| t == GLAUCOMA).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        let (prev_tp, prev_fp) = (tp, fp);
        while i < order.len() && scores[order[i]] == t {
            if truth[order[i]] == GLAUCOMA {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += ((fp - prev_fp) as u128) * ((tp + prev_tp) as u128);
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    let auc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve { points, auc })
}

pub fn classify_at(scores: &[f64], threshold: f64) -> Vec<usize> {
    scores
        .iter()
        .map(|&s| if s >= threshold { GLAUCOMA } else { NORMAL })
        .collect()
}

/// Mean and sample (n - 1) standard deviation.
pub fn fold_stats(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            found: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, libm::sqrt(var)))
}

/// Random train/validation split of `pool`; the training side gets
/// `round(frac * N)` members. Both sides keep the shuffled order.
pub fn epoch_split<R: Rng + ?Sized>(pool: &[usize], frac: f64, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidConfig(
            "split fraction must lie strictly inside (0, 1)".into(),
        ));
    }
    let n_train = crate::math::round(frac * pool.len() as f64) as usize;
    if pool.len() < 2 || n_train == 0 || n_train >= pool.len() {
        return Err(Error::Dataset(alloc::format!(
            "cannot split {} samples at fraction {frac}",
            pool.len()
        )));
    }
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(rng);
    let val = shuffled.split_off(n_train);
    Ok((shuffled, val))
}
