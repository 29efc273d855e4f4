//! Stochastic gradient descent with classical momentum.

use alloc::vec;
use alloc::vec::Vec;

use super::Layer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { learning_rate: 0.01, momentum: 0.9 }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> bool {
        self.learning_rate > 0.0 && (0.0..1.0).contains(&self.momentum)
    }
}

/// Velocity-per-parameter optimizer. Update rule, applied blockwise in the
/// layers' fixed parameter order:
///
/// `v <- momentum * v - learning_rate * g;  w <- w + v`
#[derive(Debug, Clone)]
pub struct Sgd {
    pub cfg: SgdConfig,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(cfg: SgdConfig) -> Self {
        assert!(cfg.validate(), "optimizer config out of range");
        Sgd { cfg, velocity: Vec::new() }
    }

    /// Applies one update from the gradients currently accumulated in the
    /// layers, then clears them. Velocity buffers are allocated (zeroed) on
    /// first use and keyed by block position, so the layer list must not
    /// change shape between steps.
    pub fn step(&mut self, layers: &mut [Layer]) {
        let mut block = 0usize;
        let lr = self.cfg.learning_rate;
        let m = self.cfg.momentum;
        let velocity = &mut self.velocity;
        for layer in layers.iter_mut() {
            layer.visit_trainable(&mut |params, grads| {
                if velocity.len() == block {
                    velocity.push(vec![0.0; params.len()]);
                }
                let v = &mut velocity[block];
                assert_eq!(v.len(), params.len(), "parameter block changed size");
                for i in 0..params.len() {
                    v[i] = m * v[i] - lr * grads[i];
                    params[i] += v[i];
                    grads[i] = 0.0;
                }
                block += 1;
            });
        }
    }
}
