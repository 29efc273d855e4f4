//! Feature-based baseline classifier: eight hand-crafted descriptors per
//! window feeding a regularized logistic model.
//!
//! This stands in for a kernel-SVM stage whose internals are out of scope;
//! what the pipeline needs from it is a second, independently derived
//! probability stream with sane calibration, which a logistic model over
//! standard EEG features provides.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft::magnitude_spectrum;

pub const FEATURE_COUNT: usize = 8;

/// Names in vector order, used by reports and the model file.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "rms",
    "line_length",
    "zero_crossings",
    "hjorth_mobility",
    "hjorth_complexity",
    "spectral_edge_80",
    "band_ratio_1_4",
    "spectral_entropy",
];

fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|p| p[1] - p[0]).collect()
}

/// Extracts the eight features from one window.
///
/// - `rms`: root mean square amplitude.
/// - `line_length`: sum of absolute successive differences.
/// - `zero_crossings`: count of strict sign changes.
/// - `hjorth_mobility`: sqrt(var(x') / var(x)), 0 for a flat window.
/// - `hjorth_complexity`: mobility(x') / mobility(x), 0 when undefined.
/// - `spectral_edge_80`: lowest frequency below which 80% of the spectral
///   power lies.
/// - `band_ratio_1_4`: power in 1-4 Hz (edges inclusive) over total power.
/// - `spectral_entropy`: Shannon entropy of the normalized power spectrum,
///   scaled to [0,1] by ln(bin count); 0 when the window carries no power.
///
/// Spectral features use a 256-point magnitude spectrum at the given sample
/// rate.
pub fn extract_features(window: &[f64], fs_hz: f64) -> [f64; FEATURE_COUNT] {
    assert_eq!(window.len(), 256, "features are defined on 256-sample windows");
    let n = window.len() as f64;

    let rms = libm::sqrt(window.iter().map(|x| x * x).sum::<f64>() / n);
    let line_length: f64 = window.windows(2).map(|p| libm::fabs(p[1] - p[0])).sum();
    let zero_crossings = window
        .windows(2)
        .filter(|p| (p[0] > 0.0 && p[1] < 0.0) || (p[0] < 0.0 && p[1] > 0.0))
        .count() as f64;

    let var0 = variance(window);
    let d1 = diff(window);
    let var1 = variance(&d1);
    let mobility = if var0 > 0.0 { libm::sqrt(var1 / var0) } else { 0.0 };
    let complexity = if var1 > 0.0 && mobility > 0.0 {
        let var2 = variance(&diff(&d1));
        libm::sqrt(var2 / var1) / mobility
    } else {
        0.0
    };

    let mags = magnitude_spectrum(window);
    let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let total: f64 = power.iter().sum();
    let bin_hz = fs_hz / window.len() as f64;

    let (mut edge, mut band, mut entropy) = (0.0, 0.0, 0.0);
    if total > 0.0 {
        let mut cum = 0.0;
        for (i, &p) in power.iter().enumerate() {
            cum += p;
            if cum >= 0.8 * total {
                edge = i as f64 * bin_hz;
                break;
            }
        }
        band = power
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let f = *i as f64 * bin_hz;
                (1.0..=4.0).contains(&f)
            })
            .map(|(_, p)| p)
            .sum::<f64>()
            / total;
        for &p in &power {
            if p > 0.0 {
                let q = p / total;
                entropy -= q * libm::log(q);
            }
        }
        entropy /= libm::log(power.len() as f64);
    }

    [rms, line_length, zero_crossings, mobility, complexity, edge, band, entropy]
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// Logistic classifier over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

impl BaselineModel {
    /// Probability of the positive class for one feature vector.
    pub fn probability(&self, features: &[f64; FEATURE_COUNT]) -> f64 {
        let mut score = self.bias;
        for i in 0..FEATURE_COUNT {
            let z = (features[i] - self.feature_means[i]) / self.feature_stds[i];
            score += self.weights[i] * z;
        }
        sigmoid(score)
    }

    /// Flat value list in a fixed order: means, stds, weights, bias, l2.
    pub fn state(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * FEATURE_COUNT + 2);
        out.extend_from_slice(&self.feature_means);
        out.extend_from_slice(&self.feature_stds);
        out.extend_from_slice(&self.weights);
        out.push(self.bias);
        out.push(self.l2);
        out
    }

    pub fn from_state(state: &[f64]) -> Result<Self> {
        let expected = 3 * FEATURE_COUNT + 2;
        if state.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: state.len() });
        }
        let f = FEATURE_COUNT;
        Ok(BaselineModel {
            feature_means: state[..f].to_vec(),
            feature_stds: state[f..2 * f].to_vec(),
            weights: state[2 * f..3 * f].to_vec(),
            bias: state[3 * f],
            l2: state[3 * f + 1],
        })
    }

    /// Rounds the stored values to the single-precision grid used on disk.
    pub fn quantize_to_f32(&mut self) {
        for v in self
            .feature_means
            .iter_mut()
            .chain(self.feature_stds.iter_mut())
            .chain(self.weights.iter_mut())
        {
            *v = *v as f32 as f64;
        }
        self.bias = self.bias as f32 as f64;
        self.l2 = self.l2 as f32 as f64;
    }
}

/// Regularized logistic loss and its gradient on standardized features.
/// Exposed so the gradient suite can check it directly.
pub fn logistic_loss_grad(
    z: &[Vec<f64>],
    labels: &[bool],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = z.len() as f64;
    let d = weights.len();
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for (row, &y) in z.iter().zip(labels) {
        let mut score = bias;
        for i in 0..d {
            score += weights[i] * row[i];
        }
        let p = sigmoid(score).clamp(1e-12, 1.0 - 1e-12);
        loss -= if y { libm::log(p) } else { libm::log(1.0 - p) };
        let err = p - if y { 1.0 } else { 0.0 };
        for i in 0..d {
            grad_w[i] += err * row[i];
        }
        grad_b += err;
    }
    loss /= n;
    grad_b /= n;
    for i in 0..d {
        grad_w[i] = grad_w[i] / n + l2 * weights[i];
        loss += 0.5 * l2 * weights[i] * weights[i];
    }
    (loss, grad_w, grad_b)
}

/// Fits the model by monotone gradient descent: a step is halved until it
/// does not increase the loss, and iteration stops when an accepted step
/// improves the loss by less than 1e-12 (relative) or after 5000 steps.
pub fn train_baseline(
    features: &[[f64; FEATURE_COUNT]],
    labels: &[bool],
    l2: f64,
) -> Result<BaselineModel> {
    if features.is_empty() {
        return Err(Error::EmptyInput("baseline training set"));
    }
    assert_eq!(features.len(), labels.len(), "one label per feature vector");
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass("baseline training"));
    }

    let n = features.len() as f64;
    let mut means = vec![0.0; FEATURE_COUNT];
    let mut stds = vec![0.0; FEATURE_COUNT];
    for i in 0..FEATURE_COUNT {
        means[i] = features.iter().map(|f| f[i]).sum::<f64>() / n;
        let var = features.iter().map(|f| (f[i] - means[i]) * (f[i] - means[i])).sum::<f64>() / n;
        stds[i] = libm::sqrt(var.max(1e-12));
    }
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|f| (0..FEATURE_COUNT).map(|i| (f[i] - means[i]) / stds[i]).collect())
        .collect();

    let mut weights = vec![0.0; FEATURE_COUNT];
    let mut bias = 0.0;
    let mut step = 1.0;
    let (mut loss, mut grad_w, mut grad_b) = logistic_loss_grad(&z, labels, &weights, bias, l2);
    for _ in 0..5000 {
        let mut accepted = false;
        while step > 1e-16 {
            let cand_w: Vec<f64> =
                weights.iter().zip(&grad_w).map(|(w, g)| w - step * g).collect();
            let cand_b = bias - step * grad_b;
            let (cand_loss, cand_gw, cand_gb) = logistic_loss_grad(&z, labels, &cand_w, cand_b, l2);
            if cand_loss <= loss {
                let improved = loss - cand_loss;
                weights = cand_w;
                bias = cand_b;
                grad_w = cand_gw;
                grad_b = cand_gb;
                loss = cand_loss;
                accepted = true;
                step *= 1.2;
                if improved < 1e-12 * loss.max(1e-12) {
                    step = 0.0;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || step == 0.0 {
            break;
        }
    }

    Ok(BaselineModel { feature_means: means, feature_stds: stds, weights, bias, l2 })
}
