//! Blends two probability traces. The weight applies to the first trace,
//! so weight 0 copies the second file exactly and weight 1 the first.

use std::path::{Path, PathBuf};

use seizdet_core::fusion::{fuse_traces, FusionConfig};

use super::Ctx;
use crate::config::parse_fusion_mode;
use crate::io;

pub fn run(
    ctx: &Ctx,
    trace_a: &Path,
    trace_b: &Path,
    alpha: Option<f64>,
    mode: Option<String>,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    ctx.ensure_out_dir()?;
    let cfg = FusionConfig {
        alpha: alpha.unwrap_or(ctx.cfg.fusion.alpha),
        mode: parse_fusion_mode(mode.as_deref().unwrap_or(&ctx.cfg.fusion.mode))?,
    };
    cfg.validate()?;
    let a = io::read_trace(trace_a)?;
    let b = io::read_trace(trace_b)?;
    let fused = fuse_traces(&a, &b, &cfg)?;
    let out = output.unwrap_or_else(|| ctx.out_dir.join("fused.trace.csv"));
    io::write_trace(&out, &fused)?;
    println!(
        "fused {} + {} ({}, weight {} on the first) -> {}",
        trace_a.display(),
        trace_b.display(),
        cfg.mode.name(),
        cfg.alpha,
        out.display()
    );
    Ok(())
}
