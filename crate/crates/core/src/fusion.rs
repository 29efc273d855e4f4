//! Probability-level combination of the deep and shallow classifiers, and
//! the weight sweep that maps out the blend.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metrics::{auc_pair, mean_ci};
use crate::post::{post_process, PostConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    /// `alpha * p_a + (1 - alpha) * p_b`
    #[default]
    Arithmetic,
    /// `p_a^alpha * p_b^(1 - alpha)`, inputs floored at 1e-12
    Geometric,
}

impl FusionMode {
    pub fn name(&self) -> &'static str {
        match self {
            FusionMode::Arithmetic => "arithmetic",
            FusionMode::Geometric => "geometric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Weight of the first classifier, in [0, 1].
    pub alpha: f64,
    pub mode: FusionMode,
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "fusion weight must lie in [0,1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Blends one pair of probabilities. The endpoints bypass the arithmetic so
/// alpha 0 returns `p_b` and alpha 1 returns `p_a` bit-exactly in both
/// modes.
pub fn fuse(p_a: f64, p_b: f64, cfg: &FusionConfig) -> f64 {
    if cfg.alpha == 0.0 {
        return p_b;
    }
    if cfg.alpha == 1.0 {
        return p_a;
    }
    match cfg.mode {
        FusionMode::Arithmetic => {
            // A convex combination lies in [min, max] exactly; clamp away
            // the last-ulp drift the two-product form can pick up.
            let v = cfg.alpha * p_a + (1.0 - cfg.alpha) * p_b;
            v.clamp(p_a.min(p_b), p_a.max(p_b))
        }
        FusionMode::Geometric => {
            let a = p_a.max(1e-12);
            let b = p_b.max(1e-12);
            libm::exp(cfg.alpha * libm::log(a) + (1.0 - cfg.alpha) * libm::log(b))
        }
    }
}

/// Blends aligned per-second traces; runs before post-processing.
pub fn fuse_traces(trace_a: &[f64], trace_b: &[f64], cfg: &FusionConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if trace_a.len() != trace_b.len() {
        return Err(Error::LengthMismatch { expected: trace_a.len(), actual: trace_b.len() });
    }
    Ok(trace_a
        .iter()
        .zip(trace_b)
        .map(|(&a, &b)| fuse(a, b, cfg))
        .collect())
}

/// One subject's aligned raw traces and labels for the sweep.
#[derive(Debug, Clone)]
pub struct SweepSubject {
    pub subject_id: alloc::string::String,
    pub trace_a: Vec<f64>,
    pub trace_b: Vec<f64>,
    pub labels: Vec<bool>,
}

/// Aggregate metrics of one (alpha, mode) grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub mode: FusionMode,
    pub mean_auc: f64,
    pub ci_auc: f64,
    pub mean_auc90: f64,
    pub ci_auc90: f64,
}

/// The default weight grid: 0.0 to 1.0 in steps of 0.1.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Evaluates every grid weight in both modes: per subject, fuse the raw
/// traces, run the post-processing chain, score AUC and the
/// high-specificity AUC, then aggregate across subjects as mean with 95%
/// confidence half-width.
pub fn alpha_sweep(
    subjects: &[SweepSubject],
    grid: &[f64],
    post_cfg: &PostConfig,
) -> Result<Vec<SweepRow>> {
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects { needed: 2, got: subjects.len() });
    }
    let mut rows = Vec::with_capacity(grid.len() * 2);
    for mode in [FusionMode::Arithmetic, FusionMode::Geometric] {
        for &alpha in grid {
            let cfg = FusionConfig { alpha, mode };
            cfg.validate()?;
            let mut aucs = Vec::with_capacity(subjects.len());
            let mut auc90s = Vec::with_capacity(subjects.len());
            for s in subjects {
                let fused = fuse_traces(&s.trace_a, &s.trace_b, &cfg)?;
                let processed = post_process(&fused, post_cfg)?;
                let (a, a90) = auc_pair(&processed, &s.labels)?;
                aucs.push(a);
                auc90s.push(a90);
            }
            let (mean_auc, ci_auc) = mean_ci(&aucs)?;
            let (mean_auc90, ci_auc90) = mean_ci(&auc90s)?;
            rows.push(SweepRow { alpha, mode, mean_auc, ci_auc, mean_auc90, ci_auc90 });
        }
    }
    Ok(rows)
}
