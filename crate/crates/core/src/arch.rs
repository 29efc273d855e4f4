//! Declarative network descriptions, the two detector architectures, and
//! the calculators for their shapes, parameter counts, and receptive
//! fields.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::{self, Network};
use crate::rng::Rng;

/// One layer of a network description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv { out_ch: usize, k: usize },
    Relu,
    BatchNorm { channels: usize },
    AvgPool { pool: usize, stride: usize },
    GlobalAvgPool,
    Softmax,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Relu => "relu",
            LayerSpec::BatchNorm { .. } => "batchnorm",
            LayerSpec::AvgPool { .. } => "avgpool",
            LayerSpec::GlobalAvgPool => "global_avg_pool",
            LayerSpec::Softmax => "softmax",
        }
    }
}

/// An ordered network description plus its input shape. Windows enter as a
/// single channel of 256 samples (8 s at 32 Hz).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub input_len: usize,
    pub layers: Vec<LayerSpec>,
}

/// One row of an architecture report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchRow {
    pub name: &'static str,
    pub channels: usize,
    pub len: usize,
    /// Input samples visible to one output value of this layer.
    pub receptive_field: usize,
    /// Input samples between adjacent output values.
    pub jump: usize,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchReport {
    pub rows: Vec<ArchRow>,
    pub total_params: usize,
}

/// The deep detector: eleven kernel-width-3 convolutions in four blocks
/// separated by average poolings, batch normalization closing each of the
/// first three blocks, rectification after every convolution, and a
/// global-average-pooled softmax head. 28,642 parameters, receptive field
/// 212 samples at the last convolution.
pub fn build_cnn11() -> NetworkSpec {
    let mut layers = Vec::new();
    let conv_block = |layers: &mut Vec<LayerSpec>, n: usize| {
        for _ in 0..n {
            layers.push(LayerSpec::Conv { out_ch: 32, k: 3 });
            layers.push(LayerSpec::Relu);
        }
    };
    conv_block(&mut layers, 3);
    layers.push(LayerSpec::BatchNorm { channels: 32 });
    layers.push(LayerSpec::AvgPool { pool: 8, stride: 3 });
    conv_block(&mut layers, 3);
    layers.push(LayerSpec::BatchNorm { channels: 32 });
    layers.push(LayerSpec::AvgPool { pool: 4, stride: 3 });
    conv_block(&mut layers, 3);
    layers.push(LayerSpec::BatchNorm { channels: 32 });
    layers.push(LayerSpec::AvgPool { pool: 2, stride: 3 });
    conv_block(&mut layers, 1);
    layers.push(LayerSpec::Conv { out_ch: 2, k: 3 });
    layers.push(LayerSpec::Relu);
    layers.push(LayerSpec::GlobalAvgPool);
    layers.push(LayerSpec::Softmax);
    NetworkSpec { input_channels: 1, input_len: 256, layers }
}

/// The compact detector, reconstructed from its published constraints: six
/// kernel-width-4 convolutions, 17,058 parameters, and a receptive field of
/// 47 samples at the last convolution. Pool placement and the single batch
/// normalization are choices of this reconstruction; alternative orderings
/// can be assembled from a hand-built [`NetworkSpec`].
pub fn build_cnn6() -> NetworkSpec {
    let mut layers = Vec::new();
    let conv = |layers: &mut Vec<LayerSpec>, out_ch: usize| {
        layers.push(LayerSpec::Conv { out_ch, k: 4 });
        layers.push(LayerSpec::Relu);
    };
    conv(&mut layers, 32);
    conv(&mut layers, 32);
    layers.push(LayerSpec::AvgPool { pool: 3, stride: 2 });
    conv(&mut layers, 32);
    conv(&mut layers, 32);
    layers.push(LayerSpec::BatchNorm { channels: 32 });
    layers.push(LayerSpec::AvgPool { pool: 2, stride: 2 });
    conv(&mut layers, 32);
    conv(&mut layers, 2);
    layers.push(LayerSpec::GlobalAvgPool);
    layers.push(LayerSpec::Softmax);
    NetworkSpec { input_channels: 1, input_len: 256, layers }
}

fn shape_error(i: usize, spec: &LayerSpec, len: usize) -> Error {
    Error::ShapeMismatch(format!(
        "layer {i} ({}) needs a longer input than {len}",
        spec.name()
    ))
}

/// (channels, length) after every layer, or an error where the length
/// algebra breaks down. ReLU, batch normalization, and softmax preserve
/// shape; convolutions shorten by `k - 1`; poolings subsample; global
/// pooling collapses the length to 1.
pub fn shape_trace(spec: &NetworkSpec) -> Result<Vec<(usize, usize)>> {
    let mut shapes = Vec::with_capacity(spec.layers.len());
    let (mut c, mut l) = (spec.input_channels, spec.input_len);
    for (i, layer) in spec.layers.iter().enumerate() {
        match *layer {
            LayerSpec::Conv { out_ch, k } => {
                if l < k {
                    return Err(shape_error(i, layer, l));
                }
                c = out_ch;
                l = l - k + 1;
            }
            LayerSpec::AvgPool { pool, stride } => {
                if l < pool || stride == 0 {
                    return Err(shape_error(i, layer, l));
                }
                l = (l - pool) / stride + 1;
            }
            LayerSpec::GlobalAvgPool => l = 1,
            LayerSpec::BatchNorm { channels } => {
                if channels != c {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {i} normalizes {channels} channels but receives {c}"
                    )));
                }
            }
            LayerSpec::Relu | LayerSpec::Softmax => {}
        }
        shapes.push((c, l));
    }
    Ok(shapes)
}

/// The shape summary in the published table's condensed form: one entry per
/// shape-changing layer. Convolutions and poolings report their output
/// length; global pooling reports the surviving values per sample, which
/// equals the class count. Rectifications, normalizations, and the softmax
/// change nothing and add no entry.
pub fn output_shapes(spec: &NetworkSpec) -> Result<Vec<usize>> {
    let trace = shape_trace(spec)?;
    let mut out = Vec::new();
    for (layer, (c, l)) in spec.layers.iter().zip(&trace) {
        match layer {
            LayerSpec::Conv { .. } | LayerSpec::AvgPool { .. } => out.push(*l),
            LayerSpec::GlobalAvgPool => out.push(*c),
            _ => {}
        }
    }
    Ok(out)
}

fn layer_params(layer: &LayerSpec, in_ch: usize) -> usize {
    match *layer {
        LayerSpec::Conv { out_ch, k } => out_ch * in_ch * k + out_ch,
        // Gamma, beta, running mean, running variance. Counting the running
        // statistics is the convention that reproduces the published totals.
        LayerSpec::BatchNorm { channels } => 4 * channels,
        _ => 0,
    }
}

/// Total stored values: `out*in*k + out` per convolution, 4 per normalized
/// channel, nothing for the rest.
pub fn param_count(spec: &NetworkSpec) -> usize {
    let mut c = spec.input_channels;
    let mut total = 0;
    for layer in &spec.layers {
        total += layer_params(layer, c);
        if let LayerSpec::Conv { out_ch, .. } = layer {
            c = *out_ch;
        }
    }
    total
}

/// Input samples visible to one output value of layer `layer_index`,
/// computed by accumulating `(k - 1) * jump` per window-touching layer and
/// multiplying the jump by each stride.
pub fn receptive_field(spec: &NetworkSpec, layer_index: usize) -> Result<usize> {
    if layer_index >= spec.layers.len() {
        return Err(Error::IndexOutOfRange { index: layer_index, len: spec.layers.len() });
    }
    let mut rf = 1usize;
    let mut jump = 1usize;
    for layer in &spec.layers[..=layer_index] {
        let (k, stride) = match *layer {
            LayerSpec::Conv { k, .. } => (k, 1),
            LayerSpec::AvgPool { pool, stride } => (pool, stride),
            _ => (1, 1),
        };
        rf += (k - 1) * jump;
        jump *= stride;
    }
    Ok(rf)
}

/// Index of the last convolution (the layer whose receptive field the
/// architecture claims are stated for).
pub fn last_conv_index(spec: &NetworkSpec) -> Option<usize> {
    spec.layers
        .iter()
        .rposition(|l| matches!(l, LayerSpec::Conv { .. }))
}

/// Per-layer report: shape, receptive field, jump, and parameters.
pub fn report(spec: &NetworkSpec) -> Result<ArchReport> {
    let trace = shape_trace(spec)?;
    let mut rows = Vec::with_capacity(spec.layers.len());
    let mut in_ch = spec.input_channels;
    let mut rf = 1usize;
    let mut jump = 1usize;
    for (layer, &(c, l)) in spec.layers.iter().zip(&trace) {
        let (k, stride) = match *layer {
            LayerSpec::Conv { k, .. } => (k, 1),
            LayerSpec::AvgPool { pool, stride } => (pool, stride),
            _ => (1, 1),
        };
        rf += (k - 1) * jump;
        jump *= stride;
        rows.push(ArchRow {
            name: layer.name(),
            channels: c,
            len: l,
            receptive_field: rf,
            jump,
            params: layer_params(layer, in_ch),
        });
        in_ch = c;
    }
    Ok(ArchReport { total_params: param_count(spec), rows })
}

/// Validates a description end to end: shapes must work out, the head must
/// be global pooling plus softmax, and the class axis must carry 2 values.
pub fn validate(spec: &NetworkSpec) -> Result<()> {
    if spec.input_channels == 0 || spec.input_len == 0 {
        return Err(Error::InvalidConfig(String::from("input shape must be nonzero")));
    }
    let trace = shape_trace(spec)?;
    let n = spec.layers.len();
    if n < 2
        || !matches!(spec.layers[n - 1], LayerSpec::Softmax)
        || !spec.layers[..n - 1].iter().any(|l| matches!(l, LayerSpec::GlobalAvgPool))
    {
        return Err(Error::InvalidConfig(String::from(
            "network must end in global pooling followed by softmax",
        )));
    }
    let (classes, len) = trace[n - 1];
    if classes != 2 || len != 1 {
        return Err(Error::InvalidConfig(format!(
            "head must emit 2 class values, got {classes} channels x {len}"
        )));
    }
    Ok(())
}

/// Instantiates a description with seeded fan-in-scaled initialization.
/// Parameters are rounded to the single-precision grid so the assembled
/// model serializes bit-exactly.
pub fn assemble(spec: &NetworkSpec, seed: u64) -> Result<Network> {
    validate(spec)?;
    let mut rng = Rng::new(seed);
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut c = spec.input_channels;
    for layer in &spec.layers {
        layers.push(match *layer {
            LayerSpec::Conv { out_ch, k } => {
                let l = nn::Conv1d::init(c, out_ch, k, &mut rng);
                c = out_ch;
                nn::Layer::Conv(l)
            }
            LayerSpec::Relu => nn::Layer::Relu(nn::Relu::default()),
            LayerSpec::BatchNorm { channels } => nn::Layer::BatchNorm(nn::BatchNorm::new(channels)),
            LayerSpec::AvgPool { pool, stride } => nn::Layer::AvgPool(nn::AvgPool::new(pool, stride)),
            LayerSpec::GlobalAvgPool => nn::Layer::GlobalAvgPool(nn::GlobalAvgPool::default()),
            LayerSpec::Softmax => nn::Layer::Softmax(nn::Softmax::default()),
        });
    }
    let mut net = Network::new(layers, spec.input_channels, spec.input_len);
    net.quantize_to_f32();
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Batch, Mode};
    use alloc::vec;

    #[test]
    fn deep_network_shape_column() {
        let shapes = output_shapes(&build_cnn11()).unwrap();
        assert_eq!(
            shapes,
            vec![254, 252, 250, 81, 79, 77, 75, 24, 22, 20, 18, 6, 4, 2, 2]
        );
        assert_eq!(*shapes.last().unwrap(), 2);
    }

    #[test]
    fn deep_network_param_count() {
        assert_eq!(param_count(&build_cnn11()), 28_642);
    }

    #[test]
    fn deep_network_receptive_fields() {
        let spec = build_cnn11();
        // First conv sees exactly its kernel width.
        assert_eq!(receptive_field(&spec, 0).unwrap(), 3);
        // Fourth conv (first after the opening pooling stage).
        let fourth_conv = spec
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Conv { .. }))
            .nth(3)
            .unwrap()
            .0;
        assert_eq!(receptive_field(&spec, fourth_conv).unwrap(), 20);
        let last = last_conv_index(&spec).unwrap();
        assert_eq!(receptive_field(&spec, last).unwrap(), 212);
    }

    #[test]
    fn compact_network_meets_published_constraints() {
        let spec = build_cnn6();
        let n_convs = spec
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::Conv { .. }))
            .count();
        assert_eq!(n_convs, 6);
        assert!(spec
            .layers
            .iter()
            .all(|l| !matches!(l, LayerSpec::Conv { k, .. } if *k != 4)));
        assert_eq!(param_count(&spec), 17_058);
        let last = last_conv_index(&spec).unwrap();
        assert_eq!(receptive_field(&spec, last).unwrap(), 47);
        validate(&spec).unwrap();
    }

    #[test]
    fn single_conv_param_example() {
        let spec = NetworkSpec {
            input_channels: 1,
            input_len: 8,
            layers: vec![LayerSpec::Conv { out_ch: 2, k: 3 }],
        };
        assert_eq!(param_count(&spec), 8);
    }

    #[test]
    fn receptive_field_and_jump_are_monotone() {
        for spec in [build_cnn11(), build_cnn6()] {
            let mut prev_rf = 0;
            let report = report(&spec).unwrap();
            let mut prev_jump = 0;
            for row in &report.rows {
                assert!(row.receptive_field >= prev_rf);
                assert!(row.jump >= prev_jump);
                prev_rf = row.receptive_field;
                prev_jump = row.jump;
            }
        }
    }

    #[test]
    fn shape_trace_rejects_short_input() {
        let mut spec = build_cnn11();
        spec.input_len = 2;
        assert!(matches!(shape_trace(&spec), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn pool_examples() {
        let spec = NetworkSpec {
            input_channels: 1,
            input_len: 250,
            layers: vec![LayerSpec::AvgPool { pool: 8, stride: 3 }],
        };
        assert_eq!(shape_trace(&spec).unwrap(), vec![(1, 81)]);
    }

    #[test]
    fn assemble_is_deterministic() {
        let spec = build_cnn11();
        let a = assemble(&spec, 4242).unwrap();
        let b = assemble(&spec, 4242).unwrap();
        assert_eq!(a.state(), b.state());
        let c = assemble(&spec, 4243).unwrap();
        assert_ne!(a.state(), c.state());
    }

    #[test]
    fn assembled_state_size_matches_param_count() {
        for spec in [build_cnn11(), build_cnn6()] {
            let net = assemble(&spec, 7).unwrap();
            assert_eq!(net.param_count(), param_count(&spec));
            assert_eq!(net.state().len(), param_count(&spec));
        }
    }

    #[test]
    fn assembled_forward_emits_probabilities() {
        let mut net = assemble(&build_cnn11(), 31).unwrap();
        let x = Batch::from_data(
            1,
            1,
            256,
            (0..256).map(|t| libm::sin(t as f64 * 0.21)).collect(),
        );
        let out = net.forward(&x, Mode::Infer);
        assert_eq!((out.channels, out.len), (2, 1));
        let sum: f64 = out.data.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(out.data.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn runtime_shapes_match_predictions() {
        for spec in [build_cnn11(), build_cnn6()] {
            let mut net = assemble(&spec, 3).unwrap();
            let predicted = shape_trace(&spec).unwrap();
            assert_eq!(net.shape_trace(), predicted);
            // And the real forward pass agrees with the prediction.
            let x = Batch::zeros(2, 1, 256);
            let out = net.forward(&x, Mode::Infer);
            assert_eq!((out.channels, out.len), *predicted.last().unwrap());
        }
    }

    #[test]
    fn validate_rejects_missing_head() {
        let spec = NetworkSpec {
            input_channels: 1,
            input_len: 16,
            layers: vec![LayerSpec::Conv { out_ch: 2, k: 3 }],
        };
        assert!(validate(&spec).is_err());

        let spec = NetworkSpec {
            input_channels: 1,
            input_len: 16,
            layers: vec![
                LayerSpec::Conv { out_ch: 3, k: 3 },
                LayerSpec::GlobalAvgPool,
                LayerSpec::Softmax,
            ],
        };
        assert!(validate(&spec).is_err(), "3 classes must be rejected");
    }
}
