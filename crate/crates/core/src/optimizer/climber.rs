use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{Acceptance, ClimberConfig};
use crate::math::rms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Sgdm,
    RandomMovement,
    RandomDetection,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sgdm => "sgdm",
            Mode::RandomMovement => "random_movement",
            Mode::RandomDetection => "random_detection",
        }
    }
}

/// What one step did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    /// Mini-batch loss at the starting parameters (NaN for SGDM, which only
    /// sees the gradient).
    pub loss_before: f64,
    /// Mini-batch loss at the parameters the step ends on.
    pub loss_after: f64,
    /// Whether the parameters changed.
    pub moved: bool,
    pub detector_evals: usize,
    /// A random-detection climber re-applied its last move successfully.
    pub repeated: bool,
    /// The step was dropped because of a non-finite gradient.
    pub skipped: bool,
}

/// One member of the population, owning a copy of the free parameters.
#[derive(Debug, Clone)]
pub struct Climber {
    pub mode: Mode,
    pub params: Vec<f64>,
    /// Momentum buffer, SGDM only.
    pub velocity: Option<Vec<f64>>,
    /// Random detection only.
    pub last_move: Option<Vec<f64>>,
    /// Unit directions in parameter space, random detection only.
    pub detectors: Vec<Vec<f64>>,
    /// Current probe length fraction; halves whenever every detector fails.
    pub probe_step: f64,
    pub rng: ChaCha8Rng,
    pub last_loss: f64,
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if n == 0 {
            return v;
        }
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn added(params: &[f64], delta: &[f64]) -> Vec<f64> {
    params.iter().zip(delta).map(|(p, d)| p + d).collect()
}

impl Climber {
    /// A climber starting at `params`; detectors are drawn for random detection
    /// and a zero velocity is created for SGDM.
    pub fn new(mode: Mode, params: Vec<f64>, cfg: &ClimberConfig, mut rng: ChaCha8Rng) -> Self {
        let n = params.len();
        let detectors = if mode == Mode::RandomDetection {
            (0..cfg.num_detectors).map(|_| unit_direction(&mut rng, n)).collect()
        } else {
            Vec::new()
        };
        Self {
            mode,
            velocity: (mode == Mode::Sgdm).then(|| alloc::vec![0.0; n]),
            params,
            last_move: None,
            detectors,
            probe_step: cfg.probe_step,
            rng,
            last_loss: f64::NAN,
        }
    }

    fn scale(&self, cfg: &ClimberConfig) -> f64 {
        rms(&self.params).max(cfg.rms_floor)
    }

    /// `v <- mu v - lr grad; params <- params + v`. A non-finite gradient leaves
    /// the climber untouched.
    pub fn sgdm_step(&mut self, grad: &[f64], lr: f64, mu: f64) -> StepOutcome {
        debug_assert_eq!(self.mode, Mode::Sgdm);
        debug_assert_eq!(grad.len(), self.params.len());
        if grad.iter().any(|g| !g.is_finite()) {
            return StepOutcome {
                loss_before: f64::NAN,
                loss_after: f64::NAN,
                skipped: true,
                ..StepOutcome::default()
            };
        }
        let n = self.params.len();
        let v = self.velocity.get_or_insert_with(|| alloc::vec![0.0; n]);
        for ((p, vi), g) in self.params.iter_mut().zip(v.iter_mut()).zip(grad) {
            *vi = mu * *vi - lr * g;
            *p += *vi;
        }
        StepOutcome {
            loss_before: f64::NAN,
            loss_after: f64::NAN,
            moved: true,
            ..StepOutcome::default()
        }
    }

    /// One Gaussian proposal scaled by the parameter RMS.
    pub fn random_movement_step<F>(&mut self, cfg: &ClimberConfig, mut loss: F) -> StepOutcome
    where
        F: FnMut(&[f64]) -> f64,
    {
        let base = loss(&self.params);
        self.propose(cfg, base, &mut loss, 0)
    }

    fn propose<F>(&mut self, cfg: &ClimberConfig, base: f64, loss: &mut F, detector_evals: usize) -> StepOutcome
    where
        F: FnMut(&[f64]) -> f64,
    {
        let sigma = cfg.step_sigma * self.scale(cfg);
        let candidate: Vec<f64> = self
            .params
            .iter()
            .map(|p| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                p + sigma * z
            })
            .collect();
        let l = loss(&candidate);
        let accept = l.is_finite()
            && match cfg.acceptance {
                Acceptance::Greedy => !base.is_finite() || l <= base,
                Acceptance::Always => true,
            };
        let after = if accept {
            self.params = candidate;
            l
        } else {
            base
        };
        self.last_loss = after;
        StepOutcome {
            loss_before: base,
            loss_after: after,
            moved: accept,
            detector_evals,
            ..StepOutcome::default()
        }
    }

    /// Repeat the last move if it still gains more than `epsilon`; otherwise
    /// probe detectors in random order and take the first that does. If none
    /// does, halve the probe length and make one random-movement proposal.
    pub fn random_detection_step<F>(&mut self, cfg: &ClimberConfig, mut loss: F) -> StepOutcome
    where
        F: FnMut(&[f64]) -> f64,
    {
        let base = loss(&self.params);
        if let Some(mv) = &self.last_move {
            let candidate = added(&self.params, mv);
            let l = loss(&candidate);
            if l.is_finite() && base - l > cfg.epsilon {
                self.params = candidate;
                self.last_loss = l;
                return StepOutcome {
                    loss_before: base,
                    loss_after: l,
                    moved: true,
                    repeated: true,
                    ..StepOutcome::default()
                };
            }
            self.last_move = None;
        }

        let probe = self.probe_step * self.scale(cfg);
        let mut order: Vec<usize> = (0..self.detectors.len()).collect();
        order.shuffle(&mut self.rng);
        let mut evals = 0;
        for d in order {
            let mv: Vec<f64> = self.detectors[d].iter().map(|x| probe * x).collect();
            let candidate = added(&self.params, &mv);
            let l = loss(&candidate);
            evals += 1;
            if l.is_finite() && base - l > cfg.epsilon {
                self.params = candidate;
                self.last_move = Some(mv);
                self.last_loss = l;
                return StepOutcome {
                    loss_before: base,
                    loss_after: l,
                    moved: true,
                    detector_evals: evals,
                    ..StepOutcome::default()
                };
            }
        }
        self.probe_step *= 0.5;
        self.propose(cfg, base, &mut loss, evals)
    }
}
