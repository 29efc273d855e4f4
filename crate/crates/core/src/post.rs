//! Probability post-processing: temporal smoothing, background adaptation,
//! decision collar, and cross-channel combination.
//!
//! The chain runs on per-second probability traces: smooth with a one-minute
//! moving average, normalize against the trailing background level, then
//! threshold; binary decisions finally get a collar to win back the seconds
//! the smoothing ate off each event's flanks.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// How per-channel traces combine into the subject's single trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelFusion {
    /// Per-second maximum: one confident channel drives the decision.
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostConfig {
    /// Moving-average width in seconds.
    pub smooth_window_s: u32,
    /// Trailing window for the background probability level.
    pub bg_window_s: u32,
    /// Background weight in `p / (p + beta * bg)`.
    pub beta: f64,
    /// Seconds added to each side of every detection run.
    pub collar_s: u32,
    pub channel_fusion: ChannelFusion,
}

impl Default for PostConfig {
    fn default() -> Self {
        PostConfig {
            smooth_window_s: 60,
            bg_window_s: 600,
            beta: 1.0,
            collar_s: 30,
            channel_fusion: ChannelFusion::Max,
        }
    }
}

/// Centered moving average with a shrinking window: position `t` averages
/// the samples within `[t - (w-1)/2, t + w/2]` clipped to the trace, so
/// edges average over what exists rather than padded values.
pub fn moving_average(trace: &[f64], window_s: u32) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::EmptyInput("moving average"));
    }
    if window_s == 0 {
        return Err(Error::InvalidConfig(String::from("window must be positive")));
    }
    let w = window_s as usize;
    let left = (w - 1) / 2;
    let right = w / 2;
    let n = trace.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, &v) in trace.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    Ok((0..n)
        .map(|t| {
            let lo = t.saturating_sub(left);
            let hi = (t + right + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect())
}

/// Divides each probability by its trailing background level:
/// `p / (p + beta * bg)` where `bg` is the mean over the last
/// `bg_window_s` seconds (current one included, fewer while the record is
/// younger than the window), floored at 1e-3. A zero denominator maps to 0.
pub fn adapt_background(trace: &[f64], bg_window_s: u32, beta: f64) -> Result<Vec<f64>> {
    if bg_window_s < 60 {
        return Err(Error::InvalidConfig(String::from(
            "background window must cover at least 60 s",
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidConfig(String::from("beta must be non-negative")));
    }
    let w = bg_window_s as usize;
    let n = trace.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, &v) in trace.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    Ok((0..n)
        .map(|t| {
            let lo = (t + 1).saturating_sub(w);
            let bg = ((prefix[t + 1] - prefix[lo]) / (t + 1 - lo) as f64).max(1e-3);
            let denom = trace[t] + beta * bg;
            if denom > 0.0 {
                trace[t] / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// Extends every maximal run of `true` by `collar_s` seconds on both sides,
/// clipped at the record boundaries.
pub fn apply_collar(decisions: &[bool], collar_s: u32) -> Vec<bool> {
    if collar_s == 0 || decisions.is_empty() {
        return decisions.to_vec();
    }
    let c = collar_s as usize;
    let n = decisions.len();
    let mut out = vec![false; n];
    let mut i = 0;
    while i < n {
        if decisions[i] {
            let start = i;
            while i < n && decisions[i] {
                i += 1;
            }
            let lo = start.saturating_sub(c);
            let hi = (i + c).min(n);
            for d in &mut out[lo..hi] {
                *d = true;
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Combines aligned per-channel traces into one per-second trace.
pub fn channel_fuse(traces: &[Vec<f64>], mode: ChannelFusion) -> Result<Vec<f64>> {
    let first = traces.first().ok_or(Error::EmptyInput("channel fusion"))?;
    let n = first.len();
    for t in traces {
        if t.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: t.len() });
        }
    }
    Ok((0..n)
        .map(|i| match mode {
            ChannelFusion::Max => traces.iter().map(|t| t[i]).fold(f64::NEG_INFINITY, f64::max),
            ChannelFusion::Mean => traces.iter().map(|t| t[i]).sum::<f64>() / traces.len() as f64,
        })
        .collect())
}

/// Smoothing plus background adaptation (the probability-level part of the
/// chain; thresholding and the collar act later, on decisions).
pub fn post_process(trace: &[f64], cfg: &PostConfig) -> Result<Vec<f64>> {
    let smoothed = moving_average(trace, cfg.smooth_window_s)?;
    adapt_background(&smoothed, cfg.bg_window_s, cfg.beta)
}

/// Thresholds a processed trace (decision = value >= threshold) and applies
/// the collar.
pub fn decisions_with_collar(trace: &[f64], threshold: f64, collar_s: u32) -> Vec<bool> {
    let raw: Vec<bool> = trace.iter().map(|&v| v >= threshold).collect();
    apply_collar(&raw, collar_s)
}
