//! Recording and annotation types.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A multi-channel EEG recording.
///
/// Samples are `f32` (microvolt scale) so the in-memory value is exactly the
/// on-disk little-endian encoding; all signal processing promotes to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    pub channels: Vec<String>,
    /// One sample sequence per channel, all of equal length.
    pub samples: Vec<Vec<f32>>,
}

impl EegRecording {
    /// Validates the invariants: at least one channel, a positive sample
    /// rate, one name per channel, and equal-length channel sequences.
    pub fn new(
        subject_id: String,
        sample_rate_hz: f64,
        channels: Vec<String>,
        samples: Vec<Vec<f32>>,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "sample_rate_hz must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::EmptyInput("recording channels"));
        }
        if channels.len() != samples.len() {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                actual: channels.len(),
            });
        }
        let n = samples[0].len();
        for ch in &samples[1..] {
            if ch.len() != n {
                return Err(Error::LengthMismatch { expected: n, actual: ch.len() });
            }
        }
        Ok(EegRecording { subject_id, sample_rate_hz, channels, samples })
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    /// Samples per channel.
    pub fn n_samples(&self) -> usize {
        self.samples[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    /// Channel promoted to `f64` for processing.
    pub fn channel_f64(&self, index: usize) -> Vec<f64> {
        self.samples[index].iter().map(|&v| f64::from(v)).collect()
    }
}

/// Per-second seizure annotation aligned to a recording. `true` marks a
/// seizure second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTrack {
    pub subject_id: String,
    pub labels: Vec<bool>,
}

impl LabelTrack {
    pub fn new(subject_id: String, labels: Vec<bool>) -> Self {
        LabelTrack { subject_id, labels }
    }

    pub fn len_s(&self) -> usize {
        self.labels.len()
    }

    pub fn seizure_seconds(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Checks the alignment invariant: one label per whole second of the
    /// recording.
    pub fn validate_against(&self, rec: &EegRecording) -> Result<()> {
        let expected = libm::floor(rec.duration_s()) as usize;
        if self.labels.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: self.labels.len() });
        }
        Ok(())
    }
}
