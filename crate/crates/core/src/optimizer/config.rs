use alloc::string::String;

use crate::error::{Error, Result};

/// How random-movement proposals are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Acceptance {
    /// Keep a proposal only if the mini-batch loss does not increase.
    #[default]
    Greedy,
    /// Keep every finite proposal (a pure random walk).
    Always,
}

/// Hyper-parameters for the hybrid trainer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct ClimberConfig {
    pub population: usize,
    /// Minimum mini-batch loss improvement that counts as progress.
    pub epsilon: f64,
    /// Random-movement proposal sigma, as a fraction of the parameter RMS.
    pub step_sigma: f64,
    pub num_detectors: usize,
    /// Detector probe length, as a fraction of the parameter RMS.
    pub probe_step: f64,
    pub momentum: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Mini-batch steps per epoch; `None` covers the training split once.
    pub iters_per_epoch: Option<usize>,
    pub max_epochs: usize,
    /// Epochs without a new best validation accuracy before stopping;
    /// `None` disables early stopping.
    pub patience: Option<usize>,
    pub seed: u64,
    /// Share of the training pool used for climbing each epoch; the rest validates.
    pub train_fraction: f64,
    pub acceptance: Acceptance,
    /// Lower bound on the parameter RMS used to scale random steps.
    pub rms_floor: f64,
}

impl Default for ClimberConfig {
    fn default() -> Self {
        Self {
            population: 5,
            epsilon: 1e-4,
            step_sigma: 0.02,
            num_detectors: 8,
            probe_step: 0.01,
            momentum: 0.9,
            learning_rate: 1e-3,
            batch_size: 64,
            iters_per_epoch: None,
            max_epochs: 30,
            patience: Some(3),
            seed: 0,
            train_fraction: 0.8,
            acceptance: Acceptance::Greedy,
            rms_floor: 1e-3,
        }
    }
}

impl ClimberConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(String::from(msg)));
        if self.population == 0 {
            return bad("optimizer.population must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("optimizer.epsilon must be positive");
        }
        if self.batch_size == 0 {
            return bad("optimizer.batch_size must be at least 1");
        }
        if self.iters_per_epoch == Some(0) {
            return bad("optimizer.iters_per_epoch must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("optimizer.max_epochs must be at least 1");
        }
        if self.patience == Some(0) {
            return bad("optimizer.patience must be at least 1");
        }
        for (name, v) in [
            ("step_sigma", self.step_sigma),
            ("probe_step", self.probe_step),
            ("learning_rate", self.learning_rate),
            ("rms_floor", self.rms_floor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "optimizer.{name} must be positive"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("optimizer.momentum must lie in [0, 1)");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("optimizer.train_fraction must lie strictly inside (0, 1)");
        }
        Ok(())
    }

    /// Defaults with the learning rate, epoch cap and iterations of `preset`.
    pub fn from_preset(preset: Preset) -> Self {
        let mut cfg = Self::default();
        preset.apply(&mut cfg);
        cfg
    }
}

/// Training settings named after the backbone they were used with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    GoogLeNet,
    InceptionResNetV2,
    Vgg19,
    DenseNet201,
    NasNet,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::GoogLeNet,
        Preset::InceptionResNetV2,
        Preset::Vgg19,
        Preset::DenseNet201,
        Preset::NasNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::GoogLeNet => "googlenet-like",
            Preset::InceptionResNetV2 => "inception-resnet-v2-like",
            Preset::Vgg19 => "vgg19-like",
            Preset::DenseNet201 => "densenet201-like",
            Preset::NasNet => "nasnet-like",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown optimizer preset {name:?}")))
    }

    /// `(learning_rate, max_epochs, iters_per_epoch)`.
    pub fn settings(self) -> (f64, usize, usize) {
        match self {
            Preset::GoogLeNet => (1e-3, 60, 6),
            Preset::InceptionResNetV2 => (7e-4, 100, 6),
            Preset::Vgg19 => (1e-4, 30, 6),
            Preset::DenseNet201 => (1e-3, 30, 6),
            Preset::NasNet => (1e-3, 20, 22),
        }
    }

    pub fn apply(self, cfg: &mut ClimberConfig) {
        let (lr, epochs, iters) = self.settings();
        cfg.learning_rate = lr;
        cfg.max_epochs = epochs;
        cfg.iters_per_epoch = Some(iters);
    }
}
