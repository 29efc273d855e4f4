//! Scores one probability trace against a label file: post-processing
//! chain, ROC metrics, budgeted sensitivity, and the threshold table.

use std::path::Path;

use seizdet_core::loo::fd_table;
use seizdet_core::metrics::{roc, trace_metrics};
use seizdet_core::post::post_process;

use super::Ctx;
use crate::{fail, io, report};

pub fn run(ctx: &Ctx, trace_path: &Path, labels_path: &Path, no_post: bool) -> anyhow::Result<()> {
    ctx.ensure_out_dir()?;
    let trace = io::read_trace(trace_path)?;
    let labels = io::read_labels_file(labels_path)?;
    if labels.len() < trace.len() {
        return Err(fail::data(format!(
            "trace covers {} seconds but labels cover only {}",
            trace.len(),
            labels.len()
        )));
    }
    // Window k summarizes the 8 s starting at second k, so a windowed trace
    // is shorter than its recording; score against the covered prefix.
    let labels = &labels[..trace.len()];

    let post = ctx.cfg.post.to_core()?;
    let (processed, collar_s) = if no_post {
        (trace, 0)
    } else {
        (post_process(&trace, &post)?, post.collar_s)
    };
    let metrics = trace_metrics(&processed, labels, ctx.cfg.eval.max_fdh, collar_s)?;
    let curve = roc(&processed, labels)?;
    let table = fd_table(&processed, labels, collar_s);

    report::write_metrics(&ctx.out_dir.join("metrics.csv"), &metrics, ctx.cfg.eval.max_fdh)?;
    report::write_roc(&ctx.out_dir.join("roc.csv"), &curve)?;
    report::write_fd_table(&ctx.out_dir.join("fd_table.csv"), &table)?;

    println!("auc: {:.2}%", metrics.auc_pct);
    println!("auc90: {:.2}%", metrics.auc90_pct);
    let s = &metrics.sensitivity;
    if s.feasible {
        println!(
            "sensitivity within {} FD/h: {:.2}% at threshold {} ({:.3} FD/h)",
            ctx.cfg.eval.max_fdh,
            s.sensitivity_pct,
            s.threshold.map(|t| t.to_string()).unwrap_or_default(),
            s.fd_per_hour
        );
    } else {
        println!("no threshold stays within {} FD/h", ctx.cfg.eval.max_fdh);
    }
    println!("wrote metrics.csv, roc.csv, fd_table.csv to {}", ctx.out_dir.display());
    Ok(())
}
