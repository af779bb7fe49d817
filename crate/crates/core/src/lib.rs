//! Deterministic simulator of a three-layer memristive spiking network
//! (input, excitatory, inhibitory) with stuck-at fault injection.
//!
//! The pipeline for one trial is: load and normalize a dataset, build a
//! network, inject faults, train with non-linear memristive STDP, assign
//! class markers to excitatory neurons and classify the held-out split.

pub mod datasets;
pub mod decoder;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod faults;
pub mod network;
pub mod plasticity;
pub mod rng;

pub use error::{Error, Result};
