//! Hybrid population trainer.
//!
//! A population of hill climbers shares one set of mini-batches per epoch.
//! Climber 0 follows SGD with momentum; the others either make random moves
//! that are kept when they do not hurt the mini-batch loss, or search a few
//! random unit directions ("detectors") for a slope and keep walking along it.
//! At the end of each epoch the climber with the best validation accuracy is
//! cloned into the next population.

mod climber;
mod config;
mod trainer;

pub use climber::{Climber, Mode, StepOutcome};
pub use config::{Acceptance, ClimberConfig, Preset};
pub use trainer::{
    accuracy_and_loss, load_batch, predict, run_epoch, select_survivor, train, ClimberReport, EpochReport, InMemory,
    SampleSource, StopReason, Trained,
};

#[cfg(test)]
mod tests;
