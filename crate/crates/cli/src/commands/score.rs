//! Scores every subject with a saved model, writing one raw per-second
//! probability trace per subject. No smoothing or adaptation happens here;
//! eval owns the post-processing chain.

use std::path::PathBuf;

use seizdet_core::loo::baseline_subject_trace;
use seizdet_core::train::subject_trace;

use super::{load_subjects, Ctx};
use crate::io::{self, LoadedModel};

pub fn run(ctx: &Ctx, model: Option<PathBuf>, tag: Option<String>) -> anyhow::Result<()> {
    ctx.ensure_out_dir()?;
    let stem = model.unwrap_or_else(|| ctx.out_dir.join(&ctx.cfg.experiment.arch));
    let loaded = io::load_model(&stem)?;
    let tag = tag.unwrap_or_else(|| {
        match &loaded {
            LoadedModel::Network { .. } => "cnn",
            LoadedModel::Baseline(_) => "baseline",
        }
        .to_string()
    });
    let fusion = ctx.cfg.post.to_core()?.channel_fusion;
    let subjects = load_subjects(ctx, None)?;

    let save = |id: &str, trace: &[f64]| -> anyhow::Result<()> {
        let path = ctx.out_dir.join(format!("{id}.{tag}.trace.csv"));
        io::write_trace(&path, trace)?;
        println!("  {id} -> {} ({} windows)", path.display(), trace.len());
        Ok(())
    };
    match loaded {
        LoadedModel::Network { mut network, .. } => {
            for s in &subjects {
                save(&s.subject_id, &subject_trace(&mut network, s, fusion)?)?;
            }
        }
        LoadedModel::Baseline(model) => {
            for s in &subjects {
                save(&s.subject_id, &baseline_subject_trace(&model, s, fusion)?)?;
            }
        }
    }
    Ok(())
}
