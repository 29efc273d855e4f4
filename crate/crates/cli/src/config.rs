//! Experiment configuration: one TOML file covering every stage, with
//! defaults matching the pipeline's published recipe. Unknown keys are
//! rejected so typos fail loudly instead of silently using a default.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use seizdet_core::dsp::{FilterSpec, PreprocessConfig};
use seizdet_core::fusion::{FusionConfig, FusionMode};
use seizdet_core::loo::LooConfig;
use seizdet_core::post::{ChannelFusion, PostConfig};
use seizdet_core::synth::SynthConfig;
use seizdet_core::train::TrainConfig;

use crate::fail;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub paths: PathsSection,
    pub experiment: ExperimentSection,
    pub synth: SynthSection,
    pub preprocess: PreprocessSection,
    pub train: TrainSection,
    pub post: PostSection,
    pub fusion: FusionSection,
    pub baseline: BaselineSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection { data_dir: PathBuf::from("data"), out_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// cnn11 | cnn6 | baseline
    pub arch: String,
    pub master_seed: u64,
    pub threads: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection { arch: String::from("cnn11"), master_seed: 0, threads: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub subjects: usize,
    pub duration_s: f64,
    pub n_channels: usize,
    pub seizure_event_count: usize,
    pub seizure_freq_range_hz: [f64; 2],
    pub event_duration_s: [u32; 2],
    pub background_scale: f64,
    pub subject_variability: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let base = SynthConfig::default();
        SynthSection {
            subjects: 4,
            duration_s: base.duration_s,
            n_channels: base.n_channels,
            seizure_event_count: base.seizure_event_count,
            seizure_freq_range_hz: [base.seizure_freq_range_hz.0, base.seizure_freq_range_hz.1],
            event_duration_s: [base.event_duration_s.0, base.event_duration_s.1],
            background_scale: base.background_scale,
            subject_variability: base.subject_variability,
        }
    }
}

impl SynthSection {
    /// Config for one subject; seed and id are assigned by the caller.
    pub fn subject_config(&self, subject_id: String, seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            subject_id,
            duration_s: self.duration_s,
            n_channels: self.n_channels,
            seizure_event_count: self.seizure_event_count,
            seizure_freq_range_hz: (self.seizure_freq_range_hz[0], self.seizure_freq_range_hz[1]),
            event_duration_s: (self.event_duration_s[0], self.event_duration_s[1]),
            background_scale: self.background_scale,
            subject_variability: self.subject_variability,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub tap_count: Option<usize>,
    pub target_rate_hz: f64,
    pub window_len_s: u32,
    pub shift_s: u32,
    pub standardize: bool,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let base = PreprocessConfig::default();
        PreprocessSection {
            low_cut_hz: base.filter.low_cut_hz,
            high_cut_hz: base.filter.high_cut_hz,
            tap_count: base.filter.tap_count,
            target_rate_hz: base.target_rate_hz,
            window_len_s: base.window_len_s,
            shift_s: base.shift_s,
            standardize: base.standardize,
        }
    }
}

impl PreprocessSection {
    pub fn to_core(&self) -> PreprocessConfig {
        PreprocessConfig {
            filter: FilterSpec {
                low_cut_hz: self.low_cut_hz,
                high_cut_hz: self.high_cut_hz,
                tap_count: self.tap_count,
            },
            target_rate_hz: self.target_rate_hz,
            window_len_s: self.window_len_s,
            shift_s: self.shift_s,
            standardize: self.standardize,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_train_fraction: f64,
    pub stop_at_train_accuracy: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let base = TrainConfig::default();
        TrainSection {
            epochs: base.epochs,
            batch_size: base.batch_size,
            learning_rate: base.learning_rate,
            momentum: base.momentum,
            max_train_fraction: base.max_train_fraction,
            stop_at_train_accuracy: base.stop_at_train_accuracy,
        }
    }
}

impl TrainSection {
    /// Trainer settings with the given seed and channel fusion rule.
    pub fn to_core(&self, seed: u64, channel_fusion: ChannelFusion) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            max_train_fraction: self.max_train_fraction,
            channel_fusion,
            seed,
            stop_at_train_accuracy: self.stop_at_train_accuracy,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostSection {
    pub smooth_window_s: u32,
    pub bg_window_s: u32,
    pub beta: f64,
    /// max | mean
    pub channel_fusion: String,
    pub collar_s: u32,
}

impl Default for PostSection {
    fn default() -> Self {
        let base = PostConfig::default();
        PostSection {
            smooth_window_s: base.smooth_window_s,
            bg_window_s: base.bg_window_s,
            beta: base.beta,
            channel_fusion: String::from("max"),
            collar_s: base.collar_s,
        }
    }
}

impl PostSection {
    pub fn to_core(&self) -> anyhow::Result<PostConfig> {
        Ok(PostConfig {
            smooth_window_s: self.smooth_window_s,
            bg_window_s: self.bg_window_s,
            beta: self.beta,
            collar_s: self.collar_s,
            channel_fusion: parse_channel_fusion(&self.channel_fusion)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionSection {
    pub alpha: f64,
    /// arithmetic | geometric
    pub mode: String,
}

impl Default for FusionSection {
    fn default() -> Self {
        FusionSection { alpha: 0.5, mode: String::from("arithmetic") }
    }
}

impl FusionSection {
    pub fn to_core(&self) -> anyhow::Result<FusionConfig> {
        Ok(FusionConfig { alpha: self.alpha, mode: parse_fusion_mode(&self.mode)? })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub l2: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection { l2: 1e-3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub max_fdh: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { max_fdh: 0.25 }
    }
}

impl ExperimentConfig {
    /// Cross-validation settings assembled from the train, post, and eval
    /// sections.
    pub fn loo_config(&self) -> anyhow::Result<LooConfig> {
        let post = self.post.to_core()?;
        Ok(LooConfig {
            master_seed: self.experiment.master_seed,
            train: self.train.to_core(0, post.channel_fusion),
            post,
            max_fdh: self.eval.max_fdh,
        })
    }
}

pub fn parse_channel_fusion(name: &str) -> anyhow::Result<ChannelFusion> {
    match name {
        "max" => Ok(ChannelFusion::Max),
        "mean" => Ok(ChannelFusion::Mean),
        other => Err(fail::usage(format!(
            "unknown channel fusion {other:?}; expected \"max\" or \"mean\""
        ))),
    }
}

pub fn parse_fusion_mode(name: &str) -> anyhow::Result<FusionMode> {
    match name {
        "arithmetic" => Ok(FusionMode::Arithmetic),
        "geometric" => Ok(FusionMode::Geometric),
        other => Err(fail::usage(format!(
            "unknown fusion mode {other:?}; expected \"arithmetic\" or \"geometric\""
        ))),
    }
}

/// Loads the config file, or defaults when no path is given.
pub fn load(path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            let cfg: ExperimentConfig = toml::from_str(&text)
                .map_err(|e| fail::usage(format!("config {}: {e}", p.display())))?;
            Ok(cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_pipeline_recipe() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.train.epochs, 100);
        assert_eq!(cfg.train.batch_size, 2048);
        assert_eq!(cfg.train.learning_rate, 0.01);
        assert_eq!(cfg.train.momentum, 0.9);
        assert_eq!(cfg.post.smooth_window_s, 60);
        assert_eq!(cfg.post.collar_s, 30);
        assert_eq!(cfg.eval.max_fdh, 0.25);
        assert_eq!(cfg.experiment.arch, "cnn11");
    }

    #[test]
    fn parses_partial_file_and_rejects_unknown_keys() {
        let cfg: ExperimentConfig =
            toml::from_str("[train]\nepochs = 7\n").unwrap();
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.train.batch_size, 2048);
        let bad: Result<ExperimentConfig, _> =
            toml::from_str("[train]\nepocks = 7\n");
        assert!(bad.is_err());
        let bad: Result<ExperimentConfig, _> = toml::from_str("[trian]\nepochs = 7\n");
        assert!(bad.is_err());
    }

    #[test]
    fn fusion_names_parse() {
        assert!(matches!(parse_channel_fusion("max"), Ok(ChannelFusion::Max)));
        assert!(matches!(parse_channel_fusion("mean"), Ok(ChannelFusion::Mean)));
        assert!(parse_channel_fusion("median").is_err());
        assert!(matches!(parse_fusion_mode("geometric"), Ok(FusionMode::Geometric)));
        assert!(parse_fusion_mode("harmonic").is_err());
    }
}
