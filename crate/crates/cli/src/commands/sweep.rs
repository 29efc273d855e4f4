//! Sweeps the blend weight grid over saved per-subject trace pairs and
//! aggregates across subjects.

use seizdet_core::fusion::{alpha_sweep, default_grid, SweepSubject};

use super::Ctx;
use crate::{fail, io, report};

pub fn run(ctx: &Ctx, tag_a: &str, tag_b: &str) -> anyhow::Result<()> {
    ctx.ensure_out_dir()?;
    let ids = io::list_subjects(&ctx.data_dir)?;
    if ids.is_empty() {
        return Err(fail::data(format!("no subjects in {}", ctx.data_dir.display())));
    }
    let mut subjects = Vec::with_capacity(ids.len());
    for id in &ids {
        let path_a = ctx.out_dir.join(format!("{id}.{tag_a}.trace.csv"));
        let path_b = ctx.out_dir.join(format!("{id}.{tag_b}.trace.csv"));
        if !path_a.is_file() || !path_b.is_file() {
            return Err(fail::data(format!(
                "missing traces for {id}: need {} and {} (run loo or score first)",
                path_a.display(),
                path_b.display()
            )));
        }
        let trace_a = io::read_trace(&path_a)?;
        let trace_b = io::read_trace(&path_b)?;
        if trace_a.len() != trace_b.len() {
            return Err(fail::data(format!(
                "{id}: trace lengths differ ({} vs {})",
                trace_a.len(),
                trace_b.len()
            )));
        }
        let labels = io::read_labels(&ctx.data_dir, id)?.labels;
        if labels.len() < trace_a.len() {
            return Err(fail::data(format!(
                "{id}: trace covers {} seconds but labels cover only {}",
                trace_a.len(),
                labels.len()
            )));
        }
        subjects.push(SweepSubject {
            subject_id: id.clone(),
            labels: labels[..trace_a.len()].to_vec(),
            trace_a,
            trace_b,
        });
    }

    let post = ctx.cfg.post.to_core()?;
    let rows = alpha_sweep(&subjects, &default_grid(), &post)?;
    report::write_sweep(&ctx.out_dir.join("sweep.csv"), &rows)?;

    let best = rows
        .iter()
        .max_by(|x, y| x.mean_auc.total_cmp(&y.mean_auc))
        .expect("the grid is never empty");
    println!(
        "best blend: {} weight {} -> mean auc {:.2}% (ci {:.2})",
        best.mode.name(),
        best.alpha,
        best.mean_auc,
        best.ci_auc
    );
    println!("wrote {}", ctx.out_dir.join("sweep.csv").display());
    Ok(())
}
