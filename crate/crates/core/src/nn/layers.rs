//! Layer implementations with forward and backward passes.
//!
//! Each layer caches what its backward pass needs during forward; calling
//! `backward` without a preceding forward is a programming error and
//! panics. Parameter gradients accumulate until `zero_grads`.

use alloc::vec;
use alloc::vec::Vec;

use super::{Batch, Mode};
use crate::rng::Rng;

/// Valid cross-correlation with stride 1: `out[b,o,t] = bias[o] +
/// sum_{c,j} w[o,c,j] * x[b,c,t+j]`, output length `L - k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
    /// `out_ch * in_ch * k`, kernel-major within an (out, in) pair.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
    cache_x: Option<Batch>,
}

impl Conv1d {
    /// Zero-initialized parameters; use [`Conv1d::init`] for training.
    pub fn new(in_ch: usize, out_ch: usize, k: usize) -> Self {
        assert!(k >= 1, "conv kernel must be at least 1");
        Conv1d {
            in_ch,
            out_ch,
            k,
            weights: vec![0.0; out_ch * in_ch * k],
            bias: vec![0.0; out_ch],
            grad_weights: vec![0.0; out_ch * in_ch * k],
            grad_bias: vec![0.0; out_ch],
            cache_x: None,
        }
    }

    /// Fan-in-scaled uniform weights, bound `sqrt(6 / (in_ch * k))`, zero
    /// biases.
    pub fn init(in_ch: usize, out_ch: usize, k: usize, rng: &mut Rng) -> Self {
        let mut layer = Conv1d::new(in_ch, out_ch, k);
        let bound = libm::sqrt(6.0 / (in_ch * k) as f64);
        for w in &mut layer.weights {
            *w = rng.uniform(-bound, bound);
        }
        layer
    }

    #[inline]
    fn w(&self, o: usize, c: usize) -> &[f64] {
        let start = (o * self.in_ch + c) * self.k;
        &self.weights[start..start + self.k]
    }

    pub fn forward(&mut self, x: &Batch) -> Batch {
        assert_eq!(x.channels, self.in_ch, "conv input channel mismatch");
        assert!(x.len >= self.k, "conv input shorter than kernel");
        let out_len = x.len - self.k + 1;
        let mut out = Batch::zeros(x.n, self.out_ch, out_len);
        for b in 0..x.n {
            for o in 0..self.out_ch {
                let row = out.row_mut(b, o);
                row.fill(self.bias[o]);
                for c in 0..self.in_ch {
                    let x_row = x.row(b, c);
                    let w = self.w(o, c);
                    for (j, &wj) in w.iter().enumerate() {
                        let src = &x_row[j..j + out_len];
                        for (y, &xv) in row.iter_mut().zip(src) {
                            *y += wj * xv;
                        }
                    }
                }
            }
        }
        self.cache_x = Some(x.clone());
        out
    }

    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        let x = self.cache_x.as_ref().expect("conv backward before forward");
        let out_len = x.len - self.k + 1;
        assert_eq!(grad_out.channels, self.out_ch, "conv grad channel mismatch");
        assert_eq!(grad_out.len, out_len, "conv grad length mismatch");
        assert_eq!(grad_out.n, x.n, "conv grad batch mismatch");
        let mut grad_x = Batch::zeros(x.n, self.in_ch, x.len);
        for b in 0..x.n {
            for o in 0..self.out_ch {
                let g = grad_out.row(b, o);
                self.grad_bias[o] += g.iter().sum::<f64>();
                for c in 0..self.in_ch {
                    let x_row = x.row(b, c);
                    let gw_start = (o * self.in_ch + c) * self.k;
                    for j in 0..self.k {
                        let src = &x_row[j..j + out_len];
                        let mut acc = 0.0;
                        for (&gv, &xv) in g.iter().zip(src) {
                            acc += gv * xv;
                        }
                        self.grad_weights[gw_start + j] += acc;
                    }
                    let w = &self.weights[gw_start..gw_start + self.k];
                    let gx_row = grad_x.row_mut(b, c);
                    for (j, &wj) in w.iter().enumerate() {
                        let dst = &mut gx_row[j..j + out_len];
                        for (d, &gv) in dst.iter_mut().zip(g) {
                            *d += wj * gv;
                        }
                    }
                }
            }
        }
        grad_x
    }
}

/// Elementwise `max(0, x)`; the gradient at exactly 0 is defined as 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Relu {
    cache_x: Option<Batch>,
}

impl Relu {
    pub fn forward(&mut self, x: &Batch) -> Batch {
        let mut out = x.clone();
        for v in &mut out.data {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.cache_x = Some(x.clone());
        out
    }

    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        let x = self.cache_x.as_ref().expect("relu backward before forward");
        assert_eq!(x.data.len(), grad_out.data.len(), "relu grad size mismatch");
        let mut grad_x = grad_out.clone();
        for (g, &xv) in grad_x.data.iter_mut().zip(&x.data) {
            if xv <= 0.0 {
                *g = 0.0;
            }
        }
        grad_x
    }
}

/// Per-channel batch normalization over the pooled (batch, time) axis.
///
/// Train mode normalizes with the biased batch variance and folds the batch
/// statistics into the running averages (`r <- (1 - momentum) * r +
/// momentum * batch_stat`); infer mode uses the running statistics only.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub channels: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub grad_gamma: Vec<f64>,
    pub grad_beta: Vec<f64>,
    pub epsilon: f64,
    pub momentum: f64,
    cache: Option<BnCache>,
}

#[derive(Debug, Clone, PartialEq)]
struct BnCache {
    xhat: Batch,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            channels,
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            grad_gamma: vec![0.0; channels],
            grad_beta: vec![0.0; channels],
            epsilon: 1e-5,
            momentum: 0.1,
            cache: None,
        }
    }

    pub fn forward(&mut self, x: &Batch, mode: Mode) -> Batch {
        assert_eq!(x.channels, self.channels, "batchnorm channel mismatch");
        let m = x.n * x.len;
        let mut out = x.clone();
        match mode {
            Mode::Train => {
                assert!(m >= 2, "batchnorm train mode needs at least 2 values per channel");
                let mut xhat = x.clone();
                let mut inv_std = vec![0.0; self.channels];
                for c in 0..self.channels {
                    let mut mean = 0.0;
                    for b in 0..x.n {
                        mean += x.row(b, c).iter().sum::<f64>();
                    }
                    mean /= m as f64;
                    let mut var = 0.0;
                    for b in 0..x.n {
                        for &v in x.row(b, c) {
                            var += (v - mean) * (v - mean);
                        }
                    }
                    var /= m as f64;
                    let istd = 1.0 / libm::sqrt(var + self.epsilon);
                    inv_std[c] = istd;
                    for b in 0..x.n {
                        for v in xhat.row_mut(b, c) {
                            *v = (*v - mean) * istd;
                        }
                        let start = (b * x.channels + c) * x.len;
                        for t in start..start + x.len {
                            out.data[t] = self.gamma[c] * xhat.data[t] + self.beta[c];
                        }
                    }
                    self.running_mean[c] =
                        (1.0 - self.momentum) * self.running_mean[c] + self.momentum * mean;
                    self.running_var[c] =
                        (1.0 - self.momentum) * self.running_var[c] + self.momentum * var;
                }
                self.cache = Some(BnCache { xhat, inv_std });
            }
            Mode::Infer => {
                for c in 0..self.channels {
                    let istd = 1.0 / libm::sqrt(self.running_var[c] + self.epsilon);
                    let mean = self.running_mean[c];
                    for b in 0..x.n {
                        let o = out.row_mut(b, c);
                        for v in o.iter_mut() {
                            *v = self.gamma[c] * (*v - mean) * istd + self.beta[c];
                        }
                    }
                }
                self.cache = None;
            }
        }
        out
    }

    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        let cache = self.cache.as_ref().expect("batchnorm backward needs a train-mode forward");
        let xhat = &cache.xhat;
        assert_eq!(grad_out.data.len(), xhat.data.len(), "batchnorm grad size mismatch");
        let m = (xhat.n * xhat.len) as f64;
        let mut grad_x = Batch::zeros(xhat.n, xhat.channels, xhat.len);
        for c in 0..self.channels {
            let mut sum_g = 0.0;
            let mut sum_gx = 0.0;
            for b in 0..xhat.n {
                for (&g, &h) in grad_out.row(b, c).iter().zip(xhat.row(b, c)) {
                    sum_g += g;
                    sum_gx += g * h;
                }
            }
            self.grad_beta[c] += sum_g;
            self.grad_gamma[c] += sum_gx;
            let scale = self.gamma[c] * cache.inv_std[c] / m;
            for b in 0..xhat.n {
                let gx = grad_x.row_mut(b, c);
                let g = grad_out.row(b, c);
                let h = xhat.row(b, c);
                for t in 0..gx.len() {
                    gx[t] = scale * (m * g[t] - sum_g - h[t] * sum_gx);
                }
            }
        }
        grad_x
    }
}

/// Average pooling: each output is the mean of a `pool`-wide window taken
/// every `stride` samples; output length `floor((L - pool) / stride) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AvgPool {
    pub pool: usize,
    pub stride: usize,
    cache_in_len: Option<usize>,
    cache_shape: (usize, usize),
}

impl AvgPool {
    pub fn new(pool: usize, stride: usize) -> Self {
        assert!(pool >= 1 && stride >= 1, "pool and stride must be at least 1");
        AvgPool { pool, stride, cache_in_len: None, cache_shape: (0, 0) }
    }

    pub fn out_len(&self, in_len: usize) -> usize {
        assert!(in_len >= self.pool, "pool wider than input");
        (in_len - self.pool) / self.stride + 1
    }

    pub fn forward(&mut self, x: &Batch) -> Batch {
        let out_len = self.out_len(x.len);
        let mut out = Batch::zeros(x.n, x.channels, out_len);
        let inv = 1.0 / self.pool as f64;
        for b in 0..x.n {
            for c in 0..x.channels {
                let src = x.row(b, c);
                let dst = out.row_mut(b, c);
                for (t, d) in dst.iter_mut().enumerate() {
                    let start = t * self.stride;
                    *d = src[start..start + self.pool].iter().sum::<f64>() * inv;
                }
            }
        }
        self.cache_in_len = Some(x.len);
        self.cache_shape = (x.n, x.channels);
        out
    }

    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        let in_len = self.cache_in_len.expect("avgpool backward before forward");
        let (n, channels) = self.cache_shape;
        assert_eq!(grad_out.len, self.out_len(in_len), "avgpool grad length mismatch");
        let inv = 1.0 / self.pool as f64;
        let mut grad_x = Batch::zeros(n, channels, in_len);
        for b in 0..n {
            for c in 0..channels {
                let g = grad_out.row(b, c);
                let gx = grad_x.row_mut(b, c);
                for (t, &gv) in g.iter().enumerate() {
                    let start = t * self.stride;
                    for d in &mut gx[start..start + self.pool] {
                        *d += gv * inv;
                    }
                }
            }
        }
        grad_x
    }
}

/// Global average pooling: collapses each channel to its mean, producing
/// length-1 feature maps (one value per channel).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalAvgPool {
    cache_in_len: Option<usize>,
}

impl GlobalAvgPool {
    pub fn forward(&mut self, x: &Batch) -> Batch {
        assert!(x.len >= 1, "global pool needs at least one sample");
        let mut out = Batch::zeros(x.n, x.channels, 1);
        let inv = 1.0 / x.len as f64;
        for b in 0..x.n {
            for c in 0..x.channels {
                out.row_mut(b, c)[0] = x.row(b, c).iter().sum::<f64>() * inv;
            }
        }
        self.cache_in_len = Some(x.len);
        out
    }

    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        let in_len = self.cache_in_len.expect("global pool backward before forward");
        assert_eq!(grad_out.len, 1, "global pool grad must have length 1");
        let inv = 1.0 / in_len as f64;
        let mut grad_x = Batch::zeros(grad_out.n, grad_out.channels, in_len);
        for b in 0..grad_out.n {
            for c in 0..grad_out.channels {
                let g = grad_out.row(b, c)[0] * inv;
                for d in grad_x.row_mut(b, c) {
                    *d = g;
                }
            }
        }
        grad_x
    }
}

/// Softmax across channels of length-1 feature maps (the class axis after
/// global pooling), computed with max-subtraction for stability.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Softmax {
    cache_probs: Option<Batch>,
}

impl Softmax {
    pub fn forward(&mut self, x: &Batch) -> Batch {
        assert_eq!(x.len, 1, "softmax expects length-1 feature maps (one logit per class)");
        let mut out = x.clone();
        for b in 0..x.n {
            let start = b * x.channels;
            let row = &mut out.data[start..start + x.channels];
            let max = row.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - max);
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        self.cache_probs = Some(out.clone());
        out
    }

    /// True softmax Jacobian: `dx_i = p_i * (g_i - sum_j g_j p_j)`.
    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        let probs = self.cache_probs.as_ref().expect("softmax backward before forward");
        assert_eq!(grad_out.data.len(), probs.data.len(), "softmax grad size mismatch");
        let mut grad_x = grad_out.clone();
        for b in 0..probs.n {
            let start = b * probs.channels;
            let p = &probs.data[start..start + probs.channels];
            let g = &grad_out.data[start..start + probs.channels];
            let dot: f64 = p.iter().zip(g).map(|(&pv, &gv)| pv * gv).sum();
            for (i, d) in grad_x.data[start..start + probs.channels].iter_mut().enumerate() {
                *d = p[i] * (g[i] - dot);
            }
        }
        grad_x
    }
}

/// One network layer. The enum keeps the model a plain ordered list that
/// can be walked for shapes, parameters, and serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(Conv1d),
    Relu(Relu),
    BatchNorm(BatchNorm),
    AvgPool(AvgPool),
    GlobalAvgPool(GlobalAvgPool),
    Softmax(Softmax),
}

impl Layer {
    pub fn forward(&mut self, x: &Batch, mode: Mode) -> Batch {
        match self {
            Layer::Conv(l) => l.forward(x),
            Layer::Relu(l) => l.forward(x),
            Layer::BatchNorm(l) => l.forward(x, mode),
            Layer::AvgPool(l) => l.forward(x),
            Layer::GlobalAvgPool(l) => l.forward(x),
            Layer::Softmax(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, grad_out: &Batch) -> Batch {
        match self {
            Layer::Conv(l) => l.backward(grad_out),
            Layer::Relu(l) => l.backward(grad_out),
            Layer::BatchNorm(l) => l.backward(grad_out),
            Layer::AvgPool(l) => l.backward(grad_out),
            Layer::GlobalAvgPool(l) => l.backward(grad_out),
            Layer::Softmax(l) => l.backward(grad_out),
        }
    }

    /// Calls `f(params, grads)` for every trainable parameter block, in a
    /// fixed order (conv: weights, bias; batchnorm: gamma, beta).
    pub fn visit_trainable(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        match self {
            Layer::Conv(l) => {
                f(&mut l.weights, &mut l.grad_weights);
                f(&mut l.bias, &mut l.grad_bias);
            }
            Layer::BatchNorm(l) => {
                f(&mut l.gamma, &mut l.grad_gamma);
                f(&mut l.beta, &mut l.grad_beta);
            }
            _ => {}
        }
    }

    pub fn zero_grads(&mut self) {
        self.visit_trainable(&mut |_, g| g.fill(0.0));
    }

    /// Stored values per layer: conv `out*in*k + out`; batch normalization
    /// `4 * channels` (gamma, beta, and both running statistics); 0 for the
    /// parameterless layers.
    pub fn state_len(&self) -> usize {
        match self {
            Layer::Conv(l) => l.weights.len() + l.bias.len(),
            Layer::BatchNorm(l) => 4 * l.channels,
            _ => 0,
        }
    }

    /// Serialization order: conv weights then bias; batchnorm gamma, beta,
    /// running mean, running variance.
    pub fn append_state(&self, out: &mut Vec<f64>) {
        match self {
            Layer::Conv(l) => {
                out.extend_from_slice(&l.weights);
                out.extend_from_slice(&l.bias);
            }
            Layer::BatchNorm(l) => {
                out.extend_from_slice(&l.gamma);
                out.extend_from_slice(&l.beta);
                out.extend_from_slice(&l.running_mean);
                out.extend_from_slice(&l.running_var);
            }
            _ => {}
        }
    }

    /// Reads back what `append_state` wrote; returns values consumed.
    pub fn load_state(&mut self, src: &[f64]) -> usize {
        let needed = self.state_len();
        assert!(src.len() >= needed, "layer state underrun");
        match self {
            Layer::Conv(l) => {
                let nw = l.weights.len();
                let nb = l.bias.len();
                l.weights.copy_from_slice(&src[..nw]);
                l.bias.copy_from_slice(&src[nw..nw + nb]);
            }
            Layer::BatchNorm(l) => {
                let c = l.channels;
                l.gamma.copy_from_slice(&src[..c]);
                l.beta.copy_from_slice(&src[c..2 * c]);
                l.running_mean.copy_from_slice(&src[2 * c..3 * c]);
                l.running_var.copy_from_slice(&src[3 * c..4 * c]);
            }
            _ => {}
        }
        needed
    }

    /// Maps every stored value through `f` (used to force parameters onto
    /// the 32-bit grid the on-disk format uses).
    pub fn map_state(&mut self, f: &mut dyn FnMut(f64) -> f64) {
        match self {
            Layer::Conv(l) => {
                for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                    *v = f(*v);
                }
            }
            Layer::BatchNorm(l) => {
                for v in l
                    .gamma
                    .iter_mut()
                    .chain(l.beta.iter_mut())
                    .chain(l.running_mean.iter_mut())
                    .chain(l.running_var.iter_mut())
                {
                    *v = f(*v);
                }
            }
            _ => {}
        }
    }

    /// Output (channels, length) for an input of the given shape.
    pub fn out_shape(&self, channels: usize, len: usize) -> (usize, usize) {
        match self {
            Layer::Conv(l) => (l.out_ch, len - l.k + 1),
            Layer::AvgPool(l) => (channels, l.out_len(len)),
            Layer::GlobalAvgPool(_) => (channels, 1),
            _ => (channels, len),
        }
    }
}
