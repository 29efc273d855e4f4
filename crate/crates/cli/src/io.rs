//! On-disk artifact formats.
//!
//! - Recording: `<id>.eeg` holds little-endian 32-bit floats, channel-major
//!   (all of channel 0, then channel 1, ...), described by a `<id>.json`
//!   sidecar.
//! - Labels: `<id>.labels.csv` with header `second,label`, one row per whole
//!   second, label 0 or 1.
//! - Model: `<name>.manifest.json` lists the layers in forward order with
//!   their parameter shapes; `<name>.weights` holds the parameter values as
//!   little-endian 32-bit floats concatenated in manifest order.
//! - Trace: `<name>.csv` with header `second,probability`.
//!
//! Every reader validates declared sizes against actual payloads, and every
//! write/read pair restores the value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use seizdet_core::arch::{self, LayerSpec, NetworkSpec};
use seizdet_core::nn::Network;
use seizdet_core::shallow::{BaselineModel, FEATURE_COUNT, FEATURE_NAMES};
use seizdet_core::{EegRecording, LabelTrack};

use crate::fail;

pub const MODEL_FORMAT: &str = "seizdet-model";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    subject_id: String,
    sample_rate_hz: f64,
    n_channels: usize,
    n_samples: usize,
    channel_names: Vec<String>,
}

fn write_f32_blob(path: &Path, values: impl Iterator<Item = f32>) -> anyhow::Result<()> {
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_f32_blob(path: &Path, expected: usize) -> anyhow::Result<Vec<f32>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() != 4 * expected {
        return Err(fail::data(format!(
            "{}: expected {} samples ({} bytes), file holds {} bytes",
            path.display(),
            expected,
            4 * expected,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Writes `<id>.eeg` and `<id>.json` into `dir`.
pub fn write_recording(dir: &Path, rec: &EegRecording) -> anyhow::Result<()> {
    let sidecar = Sidecar {
        subject_id: rec.subject_id.clone(),
        sample_rate_hz: rec.sample_rate_hz,
        n_channels: rec.n_channels(),
        n_samples: rec.n_samples(),
        channel_names: rec.channels.clone(),
    };
    let json_path = dir.join(format!("{}.json", rec.subject_id));
    let text = serde_json::to_string_pretty(&sidecar)?;
    fs::write(&json_path, text).with_context(|| format!("writing {}", json_path.display()))?;
    write_f32_blob(
        &dir.join(format!("{}.eeg", rec.subject_id)),
        rec.samples.iter().flat_map(|ch| ch.iter().copied()),
    )
}

/// Reads the `<id>.eeg` + `<id>.json` pair back into a recording.
pub fn read_recording(dir: &Path, subject_id: &str) -> anyhow::Result<EegRecording> {
    let json_path = dir.join(format!("{subject_id}.json"));
    let text = fs::read_to_string(&json_path)
        .with_context(|| format!("reading {}", json_path.display()))?;
    let sidecar: Sidecar = serde_json::from_str(&text)
        .map_err(|e| fail::data(format!("{}: {e}", json_path.display())))?;
    if sidecar.channel_names.len() != sidecar.n_channels {
        return Err(fail::data(format!(
            "{}: {} channel names for {} channels",
            json_path.display(),
            sidecar.channel_names.len(),
            sidecar.n_channels
        )));
    }
    let flat = read_f32_blob(
        &dir.join(format!("{subject_id}.eeg")),
        sidecar.n_channels * sidecar.n_samples,
    )?;
    let samples: Vec<Vec<f32>> =
        flat.chunks_exact(sidecar.n_samples).map(|c| c.to_vec()).collect();
    EegRecording::new(sidecar.subject_id, sidecar.sample_rate_hz, sidecar.channel_names, samples)
        .map_err(|e| fail::data(format!("{}: {e}", json_path.display())))
}

fn labels_path(dir: &Path, subject_id: &str) -> PathBuf {
    dir.join(format!("{subject_id}.labels.csv"))
}

pub fn write_labels(dir: &Path, track: &LabelTrack) -> anyhow::Result<()> {
    let mut text = String::from("second,label\n");
    for (s, &l) in track.labels.iter().enumerate() {
        let _ = writeln!(text, "{s},{}", u8::from(l));
    }
    let path = labels_path(dir, &track.subject_id);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parses a two-column CSV whose first column must count 0,1,2,... and
/// returns the second column raw.
fn read_indexed_csv(path: &Path, header: &str) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == header => {}
        other => {
            return Err(fail::data(format!(
                "{}: expected header {header:?}, got {:?}",
                path.display(),
                other.unwrap_or("")
            )))
        }
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let Some((sec, value)) = line.split_once(',') else {
            return Err(fail::data(format!("{}: row {row}: missing comma", path.display())));
        };
        if sec.parse::<usize>().ok() != Some(row) {
            return Err(fail::data(format!(
                "{}: row {row}: second index {sec:?} is not contiguous from 0",
                path.display()
            )));
        }
        out.push(value.trim_end().to_string());
    }
    Ok(out)
}

/// Reads a label CSV by full path.
pub fn read_labels_file(path: &Path) -> anyhow::Result<Vec<bool>> {
    let mut labels = Vec::new();
    for (row, value) in read_indexed_csv(path, "second,label")?.into_iter().enumerate() {
        labels.push(match value.as_str() {
            "0" => false,
            "1" => true,
            other => {
                return Err(fail::data(format!(
                    "{}: row {row}: label {other:?} is not 0 or 1",
                    path.display()
                )))
            }
        });
    }
    Ok(labels)
}

pub fn read_labels(dir: &Path, subject_id: &str) -> anyhow::Result<LabelTrack> {
    let labels = read_labels_file(&labels_path(dir, subject_id))?;
    Ok(LabelTrack::new(subject_id.to_string(), labels))
}

/// Writes a per-second probability trace as `second,probability` rows.
/// Values print in shortest round-trip form, so rewriting a read trace
/// reproduces the file byte for byte.
pub fn write_trace(path: &Path, trace: &[f64]) -> anyhow::Result<()> {
    let mut text = String::from("second,probability\n");
    for (s, p) in trace.iter().enumerate() {
        let _ = writeln!(text, "{s},{p}");
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_trace(path: &Path) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    for (row, value) in read_indexed_csv(path, "second,probability")?.into_iter().enumerate() {
        let p: f64 = value.parse().map_err(|_| {
            fail::data(format!("{}: row {row}: bad probability {value:?}", path.display()))
        })?;
        out.push(p);
    }
    Ok(out)
}

/// Subject ids in `dir`, sorted: every `<id>.json` sidecar that has a
/// matching `<id>.eeg` payload. Model manifests do not count.
pub fn list_subjects(dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut ids = Vec::new();
    let entries =
        fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(".json") else { continue };
        if stem.ends_with(".manifest") {
            continue;
        }
        if dir.join(format!("{stem}.eeg")).is_file() {
            ids.push(stem.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

/// One layer of a model manifest, tagged by operation, carrying the
/// parameter shapes stored for that layer in `.weights` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", deny_unknown_fields)]
pub enum LayerEntry {
    #[serde(rename = "conv")]
    Conv { out_ch: usize, k: usize, param_shapes: Vec<Vec<usize>> },
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "batchnorm")]
    BatchNorm { channels: usize, param_shapes: Vec<Vec<usize>> },
    #[serde(rename = "avgpool")]
    AvgPool { pool: usize, stride: usize },
    #[serde(rename = "global_avg_pool")]
    GlobalAvgPool,
    #[serde(rename = "softmax")]
    Softmax,
}

impl LayerEntry {
    fn from_spec(layer: &LayerSpec, in_ch: usize) -> LayerEntry {
        match *layer {
            LayerSpec::Conv { out_ch, k } => LayerEntry::Conv {
                out_ch,
                k,
                param_shapes: vec![vec![out_ch, in_ch, k], vec![out_ch]],
            },
            LayerSpec::Relu => LayerEntry::Relu,
            LayerSpec::BatchNorm { channels } => LayerEntry::BatchNorm {
                channels,
                // Gamma, beta, running mean, running variance.
                param_shapes: vec![vec![channels]; 4],
            },
            LayerSpec::AvgPool { pool, stride } => LayerEntry::AvgPool { pool, stride },
            LayerSpec::GlobalAvgPool => LayerEntry::GlobalAvgPool,
            LayerSpec::Softmax => LayerEntry::Softmax,
        }
    }

    fn to_spec(&self) -> LayerSpec {
        match *self {
            LayerEntry::Conv { out_ch, k, .. } => LayerSpec::Conv { out_ch, k },
            LayerEntry::Relu => LayerSpec::Relu,
            LayerEntry::BatchNorm { channels, .. } => LayerSpec::BatchNorm { channels },
            LayerEntry::AvgPool { pool, stride } => LayerSpec::AvgPool { pool, stride },
            LayerEntry::GlobalAvgPool => LayerSpec::GlobalAvgPool,
            LayerEntry::Softmax => LayerSpec::Softmax,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkManifest {
    input_channels: usize,
    input_len: usize,
    layers: Vec<LayerEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineManifest {
    feature_names: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelManifest {
    format: String,
    /// cnn11 | cnn6 | custom | baseline
    kind: String,
    /// Number of 32-bit values in the `.weights` blob.
    value_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    network: Option<NetworkManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    baseline: Option<BaselineManifest>,
}

/// A model loaded from disk, either detector flavor.
#[derive(Debug)]
pub enum LoadedModel {
    Network { spec: NetworkSpec, network: Network },
    Baseline(BaselineModel),
}

fn manifest_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let name = stem.file_name().and_then(|n| n.to_str()).unwrap_or("model");
    let dir = stem.parent().map(Path::to_path_buf).unwrap_or_default();
    (dir.join(format!("{name}.manifest.json")), dir.join(format!("{name}.weights")))
}

/// Saves a trained network as `<stem>.manifest.json` + `<stem>.weights`.
/// The state must already sit on the 32-bit grid (training quantizes it),
/// so the cast to the on-disk width loses nothing.
pub fn save_network(
    stem: &Path,
    kind: &str,
    spec: &NetworkSpec,
    network: &Network,
) -> anyhow::Result<()> {
    let state = network.state();
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut in_ch = spec.input_channels;
    for layer in &spec.layers {
        layers.push(LayerEntry::from_spec(layer, in_ch));
        if let LayerSpec::Conv { out_ch, .. } = layer {
            in_ch = *out_ch;
        }
    }
    let manifest = ModelManifest {
        format: MODEL_FORMAT.to_string(),
        kind: kind.to_string(),
        value_count: state.len(),
        network: Some(NetworkManifest {
            input_channels: spec.input_channels,
            input_len: spec.input_len,
            layers,
        }),
        baseline: None,
    };
    let (manifest_path, weights_path) = manifest_paths(stem);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, text)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    write_f32_blob(&weights_path, state.iter().map(|&v| v as f32))
}

/// Saves the feature-based model as `<stem>.manifest.json` + `<stem>.weights`.
pub fn save_baseline(stem: &Path, model: &BaselineModel) -> anyhow::Result<()> {
    let state = model.state();
    let manifest = ModelManifest {
        format: MODEL_FORMAT.to_string(),
        kind: "baseline".to_string(),
        value_count: state.len(),
        network: None,
        baseline: Some(BaselineManifest {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    };
    let (manifest_path, weights_path) = manifest_paths(stem);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, text)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    write_f32_blob(&weights_path, state.iter().map(|&v| v as f32))
}

/// Loads either model flavor back, checking the weight blob against the
/// manifest's declared count and the layer shapes.
pub fn load_model(stem: &Path) -> anyhow::Result<LoadedModel> {
    let (manifest_path, weights_path) = manifest_paths(stem);
    let text = fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: ModelManifest = serde_json::from_str(&text)
        .map_err(|e| fail::data(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != MODEL_FORMAT {
        return Err(fail::data(format!(
            "{}: format {:?} is not {MODEL_FORMAT:?}",
            manifest_path.display(),
            manifest.format
        )));
    }
    let values: Vec<f64> = read_f32_blob(&weights_path, manifest.value_count)?
        .into_iter()
        .map(f64::from)
        .collect();
    match (&manifest.network, &manifest.baseline) {
        (Some(netm), None) => {
            let spec = NetworkSpec {
                input_channels: netm.input_channels,
                input_len: netm.input_len,
                layers: netm.layers.iter().map(LayerEntry::to_spec).collect(),
            };
            if arch::param_count(&spec) != manifest.value_count {
                return Err(fail::data(format!(
                    "{}: layers need {} values, manifest declares {}",
                    manifest_path.display(),
                    arch::param_count(&spec),
                    manifest.value_count
                )));
            }
            let mut network = arch::assemble(&spec, 0)
                .map_err(|e| fail::data(format!("{}: {e}", manifest_path.display())))?;
            network
                .load_state(&values)
                .map_err(|e| fail::data(format!("{}: {e}", weights_path.display())))?;
            Ok(LoadedModel::Network { spec, network })
        }
        (None, Some(base)) => {
            if base.feature_names.len() != FEATURE_COUNT {
                return Err(fail::data(format!(
                    "{}: {} feature names, expected {FEATURE_COUNT}",
                    manifest_path.display(),
                    base.feature_names.len()
                )));
            }
            let model = BaselineModel::from_state(&values)
                .map_err(|e| fail::data(format!("{}: {e}", weights_path.display())))?;
            Ok(LoadedModel::Baseline(model))
        }
        _ => Err(fail::data(format!(
            "{}: manifest must describe exactly one of network or baseline",
            manifest_path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use seizdet_core::nn::{Batch, Mode};
    use seizdet_core::rng::Rng;

    fn sample_recording() -> EegRecording {
        let mut rng = Rng::new(9);
        let samples: Vec<Vec<f32>> = (0..2)
            .map(|_| (0..320).map(|_| rng.uniform(-40.0, 40.0) as f32).collect())
            .collect();
        EegRecording::new(
            "s01".to_string(),
            256.0,
            vec!["c1".to_string(), "c2".to_string()],
            samples,
        )
        .unwrap()
    }

    #[test]
    fn recording_round_trip_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let rec = sample_recording();
        write_recording(dir.path(), &rec).unwrap();
        let payload = fs::metadata(dir.path().join("s01.eeg")).unwrap().len();
        assert_eq!(payload, 2 * 320 * 4);
        let back = read_recording(dir.path(), "s01").unwrap();
        assert_eq!(rec, back);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_recording(dir.path(), &sample_recording()).unwrap();
        let path = dir.path().join("s01.eeg");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        let err = read_recording(dir.path(), "s01").unwrap_err();
        assert_eq!(fail::exit_code(&err), 2);
    }

    #[test]
    fn labels_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let track = LabelTrack::new(
            "s01".to_string(),
            (0..60).map(|s| (10..20).contains(&s)).collect(),
        );
        write_labels(dir.path(), &track).unwrap();
        let text = fs::read_to_string(labels_path(dir.path(), "s01")).unwrap();
        assert_eq!(text.lines().count(), 61, "header plus one row per second");
        assert_eq!(read_labels(dir.path(), "s01").unwrap(), track);

        fs::write(labels_path(dir.path(), "s02"), "second,label\n0,2\n").unwrap();
        assert!(read_labels(dir.path(), "s02").is_err());
        fs::write(labels_path(dir.path(), "s03"), "second,label\n0,1\n2,0\n").unwrap();
        assert!(read_labels(dir.path(), "s03").is_err());
    }

    #[test]
    fn trace_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut rng = Rng::new(4);
        let trace: Vec<f64> = (0..50).map(|_| rng.next_f64()).collect();
        write_trace(&path, &trace).unwrap();
        let bytes = fs::read(&path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(trace, back);
        write_trace(&path, &back).unwrap();
        assert_eq!(bytes, fs::read(&path).unwrap());
    }

    #[test]
    fn network_round_trip_preserves_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let spec = arch::build_cnn6();
        let net = arch::assemble(&spec, 21).unwrap();
        let stem = dir.path().join("model");
        save_network(&stem, "cnn6", &spec, &net).unwrap();
        let LoadedModel::Network { spec: spec2, network: mut net2 } = load_model(&stem).unwrap()
        else {
            panic!("expected a network");
        };
        assert_eq!(spec, spec2);
        assert_eq!(net.state(), net2.state());
        let x = Batch::from_data(
            1,
            1,
            256,
            (0..256).map(|t| (t as f64 * 0.13).sin()).collect(),
        );
        let mut net1 = net;
        assert_eq!(
            net1.forward(&x, Mode::Infer).data,
            net2.forward(&x, Mode::Infer).data
        );
    }

    #[test]
    fn truncated_weight_blob_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let spec = arch::build_cnn6();
        let net = arch::assemble(&spec, 21).unwrap();
        let stem = dir.path().join("model");
        save_network(&stem, "cnn6", &spec, &net).unwrap();
        let wpath = dir.path().join("model.weights");
        let bytes = fs::read(&wpath).unwrap();
        fs::write(&wpath, &bytes[..bytes.len() - 8]).unwrap();
        let err = load_model(&stem).unwrap_err();
        assert_eq!(fail::exit_code(&err), 2);
    }

    #[test]
    fn baseline_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut model = BaselineModel {
            feature_means: (0..8).map(|i| i as f64).collect(),
            feature_stds: vec![1.5; 8],
            weights: (0..8).map(|i| 0.1 * i as f64 - 0.3).collect(),
            bias: 0.25,
            l2: 1e-3,
        };
        model.quantize_to_f32();
        let stem = dir.path().join("base");
        save_baseline(&stem, &model).unwrap();
        let LoadedModel::Baseline(back) = load_model(&stem).unwrap() else {
            panic!("expected the baseline");
        };
        assert_eq!(model, back);
    }

    #[test]
    fn subject_listing_skips_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = sample_recording();
        write_recording(dir.path(), &rec).unwrap();
        rec.subject_id = "s00".to_string();
        write_recording(dir.path(), &rec).unwrap();
        let spec = arch::build_cnn6();
        let net = arch::assemble(&spec, 1).unwrap();
        save_network(&dir.path().join("model"), "cnn6", &spec, &net).unwrap();
        fs::write(dir.path().join("stray.json"), "{}").unwrap();
        assert_eq!(list_subjects(dir.path()).unwrap(), vec!["s00", "s01"]);
    }
}
