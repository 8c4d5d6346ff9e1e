//! Core algorithms for optic-nerve-head screening experiments.
//!
//! - [`raster`] and [`pnm`]: byte images and binary PGM/PPM codecs.
//! - [`roi`]: superpixel-based optic-nerve-head cropping.
//! - [`augment`]: random affine augmentation and patch sampling.
//! - [`nn`]: a small CNN with backpropagation and per-layer freezing.
//! - [`optimizer`]: the hybrid SGDM / random-movement / random-detection trainer.
//! - [`eval`]: Venetian-blind folds, confusion metrics and ROC/AUC.
//! - [`synth`]: synthetic fundus images with known geometry.
//!
//! The crate is `no_std` + `alloc`. The `rayon` feature runs climbers of one
//! epoch in parallel; results do not depend on it.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod augment;
pub mod error;
pub mod eval;
pub mod math;
pub mod nn;
pub mod optimizer;
pub mod pnm;
pub mod raster;
pub mod roi;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{PixelBox, Raster};
