//! Crop, train and cross-validate over manifest-backed image sets.

use onhkit_core::augment::{apply_affine, center_patch, random_patch, sample_augment, AugmentSpec};
use onhkit_core::eval::{classify_at, confusion, metrics, roc_auc, venetian_kfold};
use onhkit_core::nn::Network;
use onhkit_core::optimizer::{predict, train, EpochReport, SampleSource, Trained};
use onhkit_core::roi::{extract_onh, CropResult, RoiConfig};
use onhkit_core::Raster;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::read_pnm;
use crate::manifest::Manifest;
use crate::report::FoldRow;

/// Reads and crops every manifest image; per-image failures are returned in place.
pub fn crop_manifest(manifest: &Manifest, roi: &RoiConfig) -> Vec<Result<CropResult>> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let path = manifest.path_of(e);
            let img = read_pnm(&path)?;
            extract_onh(&img, roi).map_err(|err| CliError::core(path.display().to_string(), err))
        })
        .collect()
}

/// Cropped ONH images served as `side x side` RGB patches scaled to [0, 1].
///
/// Training loads draw a fresh affine augmentation and a random patch; other
/// loads take the central patch.
pub struct PatchSource {
    crops: Vec<Raster>,
    labels: Vec<usize>,
    side: usize,
    augment: AugmentSpec,
    centered: Vec<Vec<f64>>,
}

fn to_chw(patch: &Raster, out: &mut [f64]) {
    let (w, h, c) = (patch.width(), patch.height(), patch.channels());
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                out[(ch * h + y) * w + x] = f64::from(patch.get(x, y, ch)) / 255.0;
            }
        }
    }
}

impl PatchSource {
    pub fn new(crops: Vec<Raster>, labels: Vec<usize>, side: usize, augment: AugmentSpec) -> Result<Self> {
        if crops.len() != labels.len() {
            return Err(CliError::Data(format!(
                "{} crops but {} labels",
                crops.len(),
                labels.len()
            )));
        }
        let centered = crops
            .iter()
            .map(|r| {
                if r.channels() != 3 {
                    return Err(CliError::Data("crops must be RGB".into()));
                }
                let patch = center_patch(r, side, augment.patch_margin_frac).map_err(|e| CliError::core("patch", e))?;
                let mut v = vec![0.0; 3 * side * side];
                to_chw(&patch, &mut v);
                Ok(v)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            crops,
            labels,
            side,
            augment,
            centered,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

impl SampleSource for PatchSource {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    fn load(&self, i: usize, rng: Option<&mut ChaCha8Rng>, out: &mut [f64]) -> onhkit_core::Result<()> {
        match rng {
            None => out.copy_from_slice(&self.centered[i]),
            Some(rng) => {
                let p = sample_augment(&self.augment, rng);
                let moved = apply_affine(&self.crops[i], &p);
                let patch = random_patch(&moved, self.side, self.augment.patch_margin_frac, rng)?;
                to_chw(&patch, out);
            }
        }
        Ok(())
    }
}

pub fn initial_network(cfg: &RunConfig, seed_offset: u64) -> Result<Network> {
    let mut net = Network::init(cfg.model.arch()?, cfg.model.init_seed.wrapping_add(seed_offset))
        .map_err(|e| CliError::core("model", e))?;
    net.freeze_first(cfg.model.freeze)
        .map_err(|e| CliError::core("model.freeze", e))?;
    Ok(net)
}

/// Trains on all samples of `data`.
pub fn train_all<S: SampleSource>(data: &S, cfg: &RunConfig) -> Result<Trained> {
    let net = initial_network(cfg, 0)?;
    let ccfg = cfg.optimizer.climber_config()?;
    let pool: Vec<usize> = (0..data.len()).collect();
    train(&net, data, &pool, &ccfg).map_err(|e| CliError::core("train", e))
}

#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub folds: Vec<FoldRow>,
    /// Held-out glaucoma probability of every sample.
    pub scores: Vec<f64>,
    pub histories: Vec<Vec<EpochReport>>,
}

/// Venetian-blind k-fold: each fold trains a fresh network on the other folds
/// and scores its held-out samples.
pub fn cross_validate<S: SampleSource>(data: &S, labels: &[usize], cfg: &RunConfig) -> Result<CrossValidation> {
    let plan = venetian_kfold(labels, cfg.eval.k, cfg.eval.seed).map_err(|e| CliError::core("eval", e))?;
    let base = cfg.optimizer.climber_config()?;
    let results = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let net = initial_network(cfg, f as u64)?;
            let mut ccfg = base.clone();
            ccfg.seed = base.seed.wrapping_add(f as u64);
            let trained =
                train(&net, data, &plan.train_indices(f), &ccfg).map_err(|e| CliError::core(format!("fold {f}"), e))?;
            let test = plan.test_indices(f);
            let scores = predict(&trained.net, data, &test).map_err(|e| CliError::core(format!("fold {f}"), e))?;
            Ok((test, scores, trained.history))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut all_scores = vec![f64::NAN; labels.len()];
    let mut folds = Vec::new();
    let mut histories = Vec::new();
    for (f, (test, scores, history)) in results.into_iter().enumerate() {
        let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        let cm = confusion(&classify_at(&scores, cfg.eval.threshold), &truth).map_err(|e| CliError::core("eval", e))?;
        let m = metrics(&cm).map_err(|e| CliError::core(format!("fold {f}"), e))?;
        let auc = roc_auc(&scores, &truth)
            .map_err(|e| CliError::core(format!("fold {f}"), e))?
            .auc;
        folds.push(FoldRow {
            fold: f,
            metrics: m,
            auc,
        });
        for (&i, &s) in test.iter().zip(&scores) {
            all_scores[i] = s;
        }
        histories.push(history);
    }
    Ok(CrossValidation {
        folds,
        scores: all_scores,
        histories,
    })
}
