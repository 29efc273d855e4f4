//! Core algorithms for a neonatal EEG seizure detection pipeline.
//!
//! This crate is the pure, `no_std`-compatible half of the project (an
//! allocator is required). It contains everything that does not touch the
//! filesystem:
//!
//! - [`synth`]: a seeded synthetic multi-channel EEG generator with injected
//!   rhythmic seizure events,
//! - [`dsp`]: the preprocessing front end (FIR band-pass, decimation,
//!   sliding-window extraction),
//! - [`nn`]: a minimal 1-D CNN engine (forward/backward for every layer the
//!   architectures use, softmax + cross-entropy, SGD with momentum),
//! - [`arch`]: declarative network specs, the 11-layer and 6-layer builders,
//!   and shape / parameter-count / receptive-field calculators,
//! - [`shallow`]: a hand-crafted-feature logistic baseline,
//! - [`post`]: probability post-processing (moving average, background
//!   adaptation, collar, channel fusion),
//! - [`metrics`]: ROC, AUC, AUC90, FD/h, and mean ± 95% CI aggregation,
//! - [`fusion`]: weighted arithmetic / geometric probability blending and the
//!   alpha sweep,
//! - [`train`]: the mini-batch training loop with per-epoch validation
//!   snapshot selection,
//! - [`loo`]: the leave-one-subject-out harness.
//!
//! File formats, CSV export, and the command-line driver live in the
//! companion `seizdet-cli` crate.
//!
//! All training math is `f64`; recordings are stored as `f32` samples so the
//! on-disk encoding is exact.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arch;
pub mod dsp;
pub mod error;
pub mod fusion;
pub mod loo;
pub mod metrics;
pub mod nn;
pub mod post;
pub mod record;
pub mod rng;
pub mod shallow;
pub mod synth;
pub mod train;

mod fft;

pub use error::{Error, Result};
pub use record::{EegRecording, LabelTrack};
