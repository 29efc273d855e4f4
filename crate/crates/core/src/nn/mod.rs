//! Minimal 1-D convolutional network engine.
//!
//! Implements exactly the layer set the detection networks need (valid
//! cross-correlation convolutions, ReLU, batch normalization, average
//! pooling, global average pooling, softmax), cross-entropy loss, and
//! SGD with momentum. All training math is `f64` so gradient checks
//! against finite differences can be tight.

mod layers;
mod loss;
mod net;
mod optim;

pub use layers::{AvgPool, BatchNorm, Conv1d, GlobalAvgPool, Layer, Relu, Softmax};
pub use loss::{cross_entropy_grad_wrt_logits, cross_entropy_mean};
pub use net::Network;
pub use optim::{Sgd, SgdConfig};

use alloc::vec;
use alloc::vec::Vec;

/// Whether batch normalization uses batch statistics (and updates its
/// running averages) or frozen running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// A batch of 1-D multi-channel signals, stored sample-major then
/// channel-major: `data[(b * channels + c) * len + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub n: usize,
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn zeros(n: usize, channels: usize, len: usize) -> Self {
        Batch { n, channels, len, data: vec![0.0; n * channels * len] }
    }

    pub fn from_data(n: usize, channels: usize, len: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * channels * len, "batch data size mismatch");
        Batch { n, channels, len, data }
    }

    /// Batch of single-channel signals, one row per window.
    pub fn from_windows<'a, I>(windows: I, len: usize) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut data = Vec::new();
        for w in windows {
            assert_eq!(w.len(), len, "window length mismatch");
            data.extend_from_slice(w);
        }
        let n = data.len() / len.max(1);
        Batch { n, channels: 1, len, data }
    }

    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[f64] {
        let start = (b * self.channels + c) * self.len;
        &self.data[start..start + self.len]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let start = (b * self.channels + c) * self.len;
        &mut self.data[start..start + self.len]
    }
}
