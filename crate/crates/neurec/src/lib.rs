//! Dataset IO, experiment configuration and the evaluation harness around
//! [`neurec_core`]'s recommenders.
//!
//! The binary `neurec` exposes the same functionality on the command line.

pub mod config;
pub mod experiment;
pub mod io;

pub use neurec_core;
