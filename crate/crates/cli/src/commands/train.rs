//! Trains one model on every subject in the data directory. The trainer
//! draws its balanced window subset from the pooled subjects and uses the
//! same subjects for validation-based epoch selection; held-out evaluation
//! is the loo command's job.

use seizdet_core::loo::baseline_from_windows;
use seizdet_core::rng::{derive_seed, hash_str, Rng};
use seizdet_core::shallow::FEATURE_NAMES;
use seizdet_core::train::{balanced_subset, collect_windows, train_model, SubjectWindows};

use super::{load_subjects, network_spec, Ctx};
use crate::{io, report};

fn subset_windows(
    ctx: &Ctx,
    subjects: &[SubjectWindows],
) -> anyhow::Result<seizdet_core::train::WindowSet> {
    let pool = collect_windows(subjects.iter())?;
    let cap = (ctx.cfg.train.max_train_fraction * pool.n() as f64) as usize;
    let mut rng = Rng::new(derive_seed(ctx.seed, hash_str("subset")));
    Ok(balanced_subset(&pool, cap, &mut rng)?)
}

pub fn run(ctx: &Ctx, arch_override: Option<String>) -> anyhow::Result<()> {
    let arch = arch_override.unwrap_or_else(|| ctx.cfg.experiment.arch.clone());
    ctx.ensure_out_dir()?;
    let subjects = load_subjects(ctx, None)?;
    let subset = subset_windows(ctx, &subjects)?;
    let (pos, neg) = subset.class_counts();
    println!(
        "training {arch} on {} windows ({pos} seizure, {neg} background) from {} subjects",
        subset.n(),
        subjects.len()
    );

    if arch == "baseline" {
        let mut model =
            baseline_from_windows(&subset, ctx.cfg.preprocess.target_rate_hz, ctx.cfg.baseline.l2)?;
        model.quantize_to_f32();
        let stem = ctx.out_dir.join("baseline");
        io::save_baseline(&stem, &model)?;
        for (name, w) in FEATURE_NAMES.iter().zip(&model.weights) {
            println!("  {name}: {w:.4}");
        }
        println!("saved {}.manifest.json", stem.display());
        return Ok(());
    }

    let spec = network_spec(&arch)?;
    let post = ctx.cfg.post.to_core()?;
    let train_cfg = ctx
        .cfg
        .train
        .to_core(derive_seed(ctx.seed, hash_str("train")), post.channel_fusion);
    let validation: Vec<&SubjectWindows> = subjects.iter().collect();
    let outcome = train_model(&spec, &subset, &validation, &train_cfg)?;

    let stem = ctx.out_dir.join(&arch);
    io::save_network(&stem, &arch, &spec, &outcome.network)?;
    report::write_epochs(&ctx.out_dir.join("epochs.csv"), &outcome.log)?;
    println!(
        "best epoch {} of {}: validation auc {:.2}%",
        outcome.best_epoch,
        outcome.log.len(),
        outcome.best_val_auc_pct
    );
    println!("saved {}.manifest.json", stem.display());
    Ok(())
}
