//! Minimal differentiable classifier: conv / dense layers, ReLU, 2x2 max-pool,
//! softmax cross-entropy and backpropagation, with per-layer freezing.
//!
//! Optimizers see only the flat vector of free (unfrozen) parameters, so frozen
//! layers cannot change.

mod arch;
mod checkpoint;
mod network;
mod tensor;

pub use arch::{Arch, LayerSpec, Shape};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, MAGIC, VERSION};
pub use network::{LayerParams, Network};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
