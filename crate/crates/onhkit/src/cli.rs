//! Subcommand implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use onhkit_core::eval::{classify_at, confusion, metrics, roc_auc};
use onhkit_core::optimizer::predict;
use onhkit_core::synth::generate;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{create_dir, read_checkpoint, write_bytes, write_checkpoint, write_pnm};
use crate::manifest::{Entry, Geometry, Manifest};
use crate::pipeline::{crop_manifest, cross_validate, train_all, PatchSource};
use crate::report::{
    confusion_csv, crop_report_csv, folds_csv, history_csv, parse_scores, roc_csv, roc_svg, scores_csv, CropRow,
};

#[derive(Debug, Parser)]
#[command(
    name = "onhkit",
    version,
    about = "Optic-nerve-head cropping, hybrid training and fold evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crop the optic-nerve-head region of every manifest image.
    Crop(Common),
    /// Generate synthetic fundus images and their manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Number of images.
        #[arg(long)]
        n: usize,
    },
    /// Train a classifier on all manifest images.
    Train(Common),
    /// Cross-validate, or score the manifest with an existing checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// ROC table and plot from a `score,label` CSV.
    Roc {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, Option<Manifest>)> {
        let cfg = RunConfig::load(&self.config)?.with_seed(self.seed);
        let manifest = self.manifest.as_deref().map(Manifest::read).transpose()?;
        Ok((cfg, manifest))
    }

    fn require_manifest(manifest: Option<Manifest>) -> Result<Manifest> {
        let m = manifest.ok_or_else(|| CliError::Usage("--manifest is required".into()))?;
        if m.entries.is_empty() {
            return Err(CliError::Data("manifest has no images".into()));
        }
        Ok(m)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Crop(c) => {
            let (cfg, m) = c.load()?;
            cmd_crop(&cfg, &Common::require_manifest(m)?, &c.out)
        }
        Command::Synth { common, n } => {
            let (cfg, _) = common.load()?;
            cmd_synth(&cfg, n, &common.out)
        }
        Command::Train(c) => {
            let (cfg, m) = c.load()?;
            cmd_train(&cfg, &Common::require_manifest(m)?, &c.out)
        }
        Command::Eval { common, checkpoint } => {
            let (cfg, m) = common.load()?;
            cmd_eval(&cfg, &Common::require_manifest(m)?, checkpoint.as_deref(), &common.out)
        }
        Command::Roc { input, out, config } => {
            if let Some(path) = config {
                RunConfig::load(&path)?;
            }
            cmd_roc(&input, &out)
        }
    }
}

pub fn cmd_crop(cfg: &RunConfig, manifest: &Manifest, out: &Path) -> Result<()> {
    let results = crop_manifest(manifest, &cfg.roi);
    create_dir(out)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(crop) => {
                let dest = out.join(&e.filename).with_extension("ppm");
                if let Some(parent) = dest.parent() {
                    create_dir(parent)?;
                }
                write_pnm(&dest, &crop.raster)?;
                rows.push(CropRow {
                    file: e.filename.clone(),
                    cx: crop.center.0,
                    cy: crop.center.1,
                    fallback_used: crop.fallback_used,
                });
            }
            Err(err) => failures.push(format!("{}: {err}", e.filename)),
        }
    }
    write_bytes(&out.join("crop_report.csv"), &crop_report_csv(&rows))?;
    if failures.is_empty() {
        println!("cropped {} images", rows.len());
        Ok(())
    } else {
        for f in &failures {
            eprintln!("{f}");
        }
        Err(CliError::Data(format!(
            "{} of {} images failed",
            failures.len(),
            manifest.entries.len()
        )))
    }
}

pub fn cmd_synth(cfg: &RunConfig, n: usize, out: &Path) -> Result<()> {
    let batch = generate(&cfg.synth, n).map_err(|e| CliError::core("synth", e))?;
    create_dir(out)?;
    let mut entries = Vec::with_capacity(n);
    for (i, (img, truth)) in batch.iter().enumerate() {
        let filename = format!("synth_{i:04}.ppm");
        write_pnm(&out.join(&filename), img)?;
        entries.push(Entry {
            filename,
            label: truth.label,
            geometry: Some(Geometry {
                cx: truth.disc_center.0,
                cy: truth.disc_center.1,
                disc_r: truth.disc_radius,
                cup_r: truth.cup_radius,
            }),
        });
    }
    Manifest {
        dir: out.to_path_buf(),
        entries,
    }
    .write(&out.join("manifest.csv"))?;
    println!("wrote {n} images");
    Ok(())
}

/// Crops the manifest and wraps the crops as network inputs; any failed crop aborts.
fn patch_source(cfg: &RunConfig, manifest: &Manifest) -> Result<PatchSource> {
    let mut crops = Vec::with_capacity(manifest.entries.len());
    let mut failures = Vec::new();
    for (e, r) in manifest.entries.iter().zip(crop_manifest(manifest, &cfg.roi)) {
        match r {
            Ok(c) => crops.push(c.raster),
            Err(err) => failures.push(format!("{}: {err}", e.filename)),
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("{f}");
        }
        return Err(CliError::Data(format!(
            "{} images could not be cropped",
            failures.len()
        )));
    }
    PatchSource::new(crops, manifest.labels(), cfg.model.input_side, cfg.augment.clone())
}

pub fn cmd_train(cfg: &RunConfig, manifest: &Manifest, out: &Path) -> Result<()> {
    let data = patch_source(cfg, manifest)?;
    let trained = train_all(&data, cfg)?;
    create_dir(out)?;
    write_checkpoint(&out.join("model.onhk"), &trained.net)?;
    write_bytes(&out.join("history.csv"), &history_csv(&trained.history))?;
    let last = trained.history.last().expect("at least one epoch");
    println!(
        "epochs {}, best validation accuracy {:.4}, stop {}",
        trained.history.len(),
        last.best_accuracy,
        last.stopped.map_or("none", |s| s.name())
    );
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig, manifest: &Manifest, checkpoint: Option<&Path>, out: &Path) -> Result<()> {
    let data = patch_source(cfg, manifest)?;
    let labels = manifest.labels();
    create_dir(out)?;
    let scores = match checkpoint {
        Some(path) => {
            let net = read_checkpoint(path)?;
            let all: Vec<usize> = (0..labels.len()).collect();
            predict(&net, &data, &all).map_err(|e| CliError::core(path.display().to_string(), e))?
        }
        None => {
            let cv = cross_validate(&data, &labels, cfg)?;
            write_bytes(&out.join("folds.csv"), &folds_csv(&cv.folds)?)?;
            for (f, h) in cv.histories.iter().enumerate() {
                write_bytes(&out.join(format!("history_fold{f}.csv")), &history_csv(h))?;
            }
            cv.scores
        }
    };
    write_bytes(&out.join("scores.csv"), &scores_csv(&scores, &labels))?;
    let mut thresholds = vec![0.5, cfg.eval.threshold];
    thresholds.dedup();
    let mut rows = Vec::new();
    for t in thresholds {
        let cm = confusion(&classify_at(&scores, t), &labels).map_err(|e| CliError::core("eval", e))?;
        let m = metrics(&cm).map_err(|e| CliError::core("eval", e))?;
        rows.push((t, cm, m));
    }
    write_bytes(&out.join("confusion.csv"), &confusion_csv(&rows))?;
    let roc = roc_auc(&scores, &labels).map_err(|e| CliError::core("eval", e))?;
    write_bytes(&out.join("roc.csv"), &roc_csv(&roc))?;
    write_bytes(&out.join("roc.svg"), roc_svg(&roc).as_bytes())?;
    let (_, cm, m) = rows.last().expect("one threshold");
    println!(
        "auc {:.3}; at threshold {}: accuracy {:.3}, sensitivity {:.3}, specificity {:.3} (tp {}, fn {}, tn {}, fp {})",
        roc.auc, cfg.eval.threshold, m.accuracy, m.sensitivity, m.specificity, cm.tp, cm.fn_, cm.tn, cm.fp
    );
    Ok(())
}

pub fn cmd_roc(input: &Path, out: &Path) -> Result<()> {
    let bytes = std::fs::read(input).map_err(|e| CliError::io(input, e))?;
    let (scores, labels) = parse_scores(&bytes, input)?;
    let roc = roc_auc(&scores, &labels).map_err(|e| CliError::core(input.display().to_string(), e))?;
    create_dir(out)?;
    write_bytes(&out.join("roc.csv"), &roc_csv(&roc))?;
    write_bytes(&out.join("roc.svg"), roc_svg(&roc).as_bytes())?;
    println!("auc {:.3}", roc.auc);
    Ok(())
}
