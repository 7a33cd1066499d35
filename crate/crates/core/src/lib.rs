//! Neural latent-factor recommenders for implicit feedback.
//!
//! The crate is `no_std` with `alloc`. Everything here is pure computation over
//! in-memory data: interaction matrices and splits, a small dense MLP with exact
//! backpropagation and Adam, the U-/I-NeuRec models with pointwise and pairwise
//! training, the mostPOP / BPR-MF / SLIM baselines, and top-n ranking metrics.
//! File formats, configuration and the CLI live in the `neurec` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod eval;
mod error;
mod linalg;
mod math;
pub mod models;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
