//! Ordered layer stack with training and serialization support.

use alloc::vec::Vec;

use super::{cross_entropy_grad_wrt_logits, cross_entropy_mean, Batch, Layer, Mode, Sgd};
use crate::error::{Error, Result};

/// A feed-forward stack of layers ending in softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub in_channels: usize,
    pub in_len: usize,
}

impl Network {
    pub fn new(layers: Vec<Layer>, in_channels: usize, in_len: usize) -> Self {
        Network { layers, in_channels, in_len }
    }

    /// Runs all layers. `Mode::Train` lets batch normalization use and
    /// update batch statistics; inference must use `Mode::Infer`.
    pub fn forward(&mut self, x: &Batch, mode: Mode) -> Batch {
        assert_eq!(x.channels, self.in_channels, "network input channel mismatch");
        assert_eq!(x.len, self.in_len, "network input length mismatch");
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, mode);
        }
        cur
    }

    /// Probability of the positive class (class 1) for each sample.
    pub fn predict_positive(&mut self, x: &Batch) -> Vec<f64> {
        let probs = self.forward(x, Mode::Infer);
        assert!(probs.channels >= 2, "positive-class prediction needs 2 classes");
        (0..probs.n).map(|b| probs.data[b * probs.channels + 1]).collect()
    }

    /// One optimizer step on a minibatch. Runs the forward pass in train
    /// mode, backpropagates the fused softmax + cross-entropy gradient from
    /// the logits (skipping the final softmax layer), and updates the
    /// parameters. Returns the batch's mean loss.
    pub fn train_minibatch(&mut self, x: &Batch, labels: &[usize], opt: &mut Sgd) -> f64 {
        assert!(
            matches!(self.layers.last(), Some(Layer::Softmax(_))),
            "training expects a softmax head"
        );
        let probs = self.forward(x, Mode::Train);
        let loss = cross_entropy_mean(&probs, labels);
        let mut grad = cross_entropy_grad_wrt_logits(&probs, labels);
        let n_layers = self.layers.len();
        for layer in self.layers[..n_layers - 1].iter_mut().rev() {
            grad = layer.backward(&grad);
        }
        opt.step(&mut self.layers);
        loss
    }

    /// Total stored values over all layers (the published parameter-count
    /// convention, running statistics included).
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.state_len()).sum()
    }

    /// Flattens all parameters in layer order.
    pub fn state(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            layer.append_state(&mut out);
        }
        out
    }

    /// Restores what [`Network::state`] produced.
    pub fn load_state(&mut self, state: &[f64]) -> Result<()> {
        if state.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                actual: state.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            offset += layer.load_state(&state[offset..]);
        }
        Ok(())
    }

    /// Rounds every parameter to the nearest 32-bit float so that a write
    /// to the single-precision on-disk format reads back bit-identically.
    pub fn quantize_to_f32(&mut self) {
        for layer in &mut self.layers {
            layer.map_state(&mut |v| v as f32 as f64);
        }
    }

    /// (channels, length) after every layer, starting from the declared
    /// input shape.
    pub fn shape_trace(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let (mut c, mut l) = (self.in_channels, self.in_len);
        for layer in &self.layers {
            let (nc, nl) = layer.out_shape(c, l);
            shapes.push((nc, nl));
            c = nc;
            l = nl;
        }
        shapes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{AvgPool, BatchNorm, Conv1d, GlobalAvgPool, Relu, SgdConfig, Softmax};
    use crate::rng::Rng;
    use alloc::vec;

    fn tiny_net(rng: &mut Rng) -> Network {
        Network::new(
            vec![
                Layer::Conv(Conv1d::init(1, 4, 3, rng)),
                Layer::Relu(Relu::default()),
                Layer::BatchNorm(BatchNorm::new(4)),
                Layer::AvgPool(AvgPool::new(2, 2)),
                Layer::Conv(Conv1d::init(4, 2, 3, rng)),
                Layer::GlobalAvgPool(GlobalAvgPool::default()),
                Layer::Softmax(Softmax::default()),
            ],
            1,
            16,
        )
    }

    #[test]
    fn forward_shapes_match_trace() {
        let mut rng = Rng::new(11);
        let mut net = tiny_net(&mut rng);
        let trace = net.shape_trace();
        assert_eq!(trace, vec![(4, 14), (4, 14), (4, 14), (4, 7), (2, 5), (2, 1), (2, 1)]);
        let out = net.forward(&Batch::zeros(3, 1, 16), Mode::Infer);
        assert_eq!((out.n, out.channels, out.len), (3, 2, 1));
    }

    #[test]
    fn state_round_trip_preserves_outputs() {
        let mut rng = Rng::new(13);
        let mut net = tiny_net(&mut rng);
        let x = Batch::from_data(2, 1, 16, (0..32).map(|i| libm::sin(i as f64)).collect());
        // Touch train mode so running stats are nontrivial.
        let mut opt = Sgd::new(SgdConfig::default());
        net.train_minibatch(&x, &[0, 1], &mut opt);

        let state = net.state();
        assert_eq!(state.len(), net.param_count());
        let mut clone = tiny_net(&mut Rng::new(99));
        clone.load_state(&state).unwrap();
        let a = net.forward(&x, Mode::Infer);
        let b = clone.forward(&x, Mode::Infer);
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn load_state_rejects_wrong_length() {
        let mut rng = Rng::new(1);
        let mut net = tiny_net(&mut rng);
        let state = net.state();
        assert!(net.load_state(&state[..state.len() - 1]).is_err());
    }

    #[test]
    fn quantize_is_idempotent() {
        let mut rng = Rng::new(17);
        let mut net = tiny_net(&mut rng);
        net.quantize_to_f32();
        let once = net.state();
        net.quantize_to_f32();
        assert_eq!(once, net.state());
        for v in &once {
            assert_eq!(*v, *v as f32 as f64);
        }
    }

    #[test]
    fn training_reduces_loss_on_separable_toy() {
        let mut rng = Rng::new(23);
        let mut net = tiny_net(&mut rng);
        // Class 0: flat windows; class 1: high-frequency alternation.
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            if i % 2 == 0 {
                data.extend((0..16).map(|_| 0.2));
                labels.push(0);
            } else {
                data.extend((0..16).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }));
                labels.push(1);
            }
        }
        let x = Batch::from_data(8, 1, 16, data);
        let mut opt = Sgd::new(SgdConfig { learning_rate: 0.05, momentum: 0.9 });
        let first = net.train_minibatch(&x, &labels, &mut opt);
        let mut last = first;
        for _ in 0..60 {
            last = net.train_minibatch(&x, &labels, &mut opt);
        }
        assert!(last < first * 0.5, "loss {first} -> {last}");
    }
}
