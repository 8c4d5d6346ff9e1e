//! JSON run configuration.
//!
//! Every section is optional and unknown keys are rejected, with the offending
//! JSON path in the error message.

use std::path::Path;

use onhkit_core::augment::AugmentSpec;
use onhkit_core::nn::Arch;
use onhkit_core::optimizer::{Acceptance, ClimberConfig, Preset};
use onhkit_core::roi::RoiConfig;
use onhkit_core::synth::SynthSpec;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub roi: RoiConfig,
    pub augment: AugmentSpec,
    pub model: ModelConfig,
    pub optimizer: OptimizerSection,
    pub eval: EvalConfig,
    pub synth: SynthSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `"tiny-cnn"` or a layer-spec text whose input matches `input_side`.
    pub arch: String,
    /// Side of the square patch fed to the network.
    pub input_side: usize,
    /// Number of leading conv/dense layers to freeze.
    pub freeze: usize,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: "tiny-cnn".into(),
            input_side: 32,
            freeze: 0,
            init_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn arch(&self) -> Result<Arch> {
        if self.arch == "tiny-cnn" {
            return Ok(Arch::tiny_cnn(self.input_side));
        }
        let (arch, _) = Arch::parse(&self.arch).map_err(|e| config_error("model.arch", e.to_string()))?;
        Ok(arch)
    }
}

/// Optimizer settings: a named preset (or the defaults) overlaid with any
/// explicitly given field.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub preset: Option<String>,
    pub population: Option<usize>,
    pub epsilon: Option<f64>,
    pub step_sigma: Option<f64>,
    pub num_detectors: Option<usize>,
    pub probe_step: Option<f64>,
    pub momentum: Option<f64>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub iters_per_epoch: Option<usize>,
    pub max_epochs: Option<usize>,
    /// `0` disables early stopping.
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub train_fraction: Option<f64>,
    pub acceptance: Option<Acceptance>,
    pub rms_floor: Option<f64>,
}

impl OptimizerSection {
    pub fn climber_config(&self) -> Result<ClimberConfig> {
        let mut cfg = match &self.preset {
            Some(name) => ClimberConfig::from_preset(
                Preset::from_name(name).map_err(|e| config_error("optimizer.preset", e.to_string()))?,
            ),
            None => ClimberConfig::default(),
        };
        macro_rules! overlay {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        overlay!(
            population,
            epsilon,
            step_sigma,
            num_detectors,
            probe_step,
            momentum,
            learning_rate,
            batch_size,
            max_epochs,
            seed,
            train_fraction,
            acceptance,
            rms_floor
        );
        if let Some(n) = self.iters_per_epoch {
            cfg.iters_per_epoch = Some(n);
        }
        if let Some(p) = self.patience {
            cfg.patience = (p > 0).then_some(p);
        }
        cfg.validate().map_err(|e| config_error("optimizer", e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    pub seed: u64,
    /// Glaucoma probability at or above which an image is called glaucomatous.
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            threshold: 0.5,
        }
    }
}

fn config_error(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.roi.validate().map_err(|e| config_error("roi", e.to_string()))?;
        self.augment
            .validate()
            .map_err(|e| config_error("augment", e.to_string()))?;
        self.synth
            .validate()
            .map_err(|e| config_error("synth", e.to_string()))?;
        self.optimizer.climber_config()?;
        let arch = self.model.arch()?;
        let side = self.model.input_side;
        if side == 0 || side > self.roi.crop_side {
            return Err(config_error("model.input_side", "must lie in 1..=roi.crop_side"));
        }
        if arch.input.dims() != [3, side, side] {
            return Err(config_error("model.arch", format!("input must be 3 {side} {side}")));
        }
        if !(2..=1000).contains(&self.eval.k) {
            return Err(config_error("eval.k", "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.eval.threshold) {
            return Err(config_error("eval.threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Applies a command-line seed to every seeded section.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.optimizer.seed = Some(s);
            self.eval.seed = s;
            self.synth.seed = s;
            self.model.init_seed = s;
        }
        self
    }
}
