//! Leave-one-subject-out cross-validation over the data directory. Each
//! fold trains the network and the shallow baseline on the same balanced
//! subset; the held-out subject's raw traces are saved for the fusion
//! sweep, and both scorers get a fold table with mean and confidence
//! footers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use seizdet_core::loo::{self, run_fold, summarize, FoldReport, LooConfig};
use seizdet_core::metrics::{trace_metrics, TraceMetrics};
use seizdet_core::post::post_process;
use seizdet_core::train::SubjectWindows;

use super::{load_subjects, network_spec, Ctx};
use crate::{io, report};

struct FoldOutput {
    report: FoldReport,
    baseline_trace: Vec<f64>,
    baseline_metrics: TraceMetrics,
}

/// Runs `f(0..n)` on up to `threads` workers. Results come back in index
/// order, so the caller sees the same output as a serial loop.
fn run_indexed<T, F>(threads: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                if tx.send((i, f(i))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut out: Vec<(usize, T)> = rx.into_iter().collect();
    out.sort_by_key(|&(i, _)| i);
    out.into_iter().map(|(_, v)| v).collect()
}

fn run_one(
    subjects: &[SubjectWindows],
    test_index: usize,
    spec: &seizdet_core::arch::NetworkSpec,
    cfg: &LooConfig,
    fs_hz: f64,
    l2: f64,
) -> anyhow::Result<FoldOutput> {
    let report = run_fold(subjects, test_index, spec, cfg)?;
    let subset = loo::fold_training_subset(subjects, test_index, cfg)?;
    let model = loo::baseline_from_windows(&subset, fs_hz, l2)?;
    let baseline_trace =
        loo::baseline_subject_trace(&model, &subjects[test_index], cfg.post.channel_fusion)?;
    let processed = post_process(&baseline_trace, &cfg.post)?;
    let baseline_metrics =
        trace_metrics(&processed, &report.labels, cfg.max_fdh, cfg.post.collar_s)?;
    Ok(FoldOutput { report, baseline_trace, baseline_metrics })
}

pub fn run(ctx: &Ctx, limit: Option<usize>) -> anyhow::Result<()> {
    ctx.ensure_out_dir()?;
    let spec = network_spec(&ctx.cfg.experiment.arch)?;
    let subjects = load_subjects(ctx, limit)?;
    let mut cfg = ctx.cfg.loo_config()?;
    cfg.master_seed = ctx.seed;
    let fs_hz = ctx.cfg.preprocess.target_rate_hz;
    let l2 = ctx.cfg.baseline.l2;

    // Hold subjects out in id order, matching the serial harness.
    let mut order: Vec<usize> = (0..subjects.len()).collect();
    order.sort_by(|&a, &b| subjects[a].subject_id.cmp(&subjects[b].subject_id));

    println!(
        "cross-validating {} over {} subjects ({} threads)",
        ctx.cfg.experiment.arch,
        subjects.len(),
        ctx.threads
    );
    let outputs = run_indexed(ctx.threads, order.len(), |k| {
        run_one(&subjects, order[k], &spec, &cfg, fs_hz, l2)
    });

    let mut folds = Vec::with_capacity(outputs.len());
    let mut baseline_rows = Vec::with_capacity(outputs.len());
    for out in outputs {
        let fold = out?;
        let id = fold.report.subject_id.clone();
        io::write_trace(
            &ctx.out_dir.join(format!("{id}.cnn.trace.csv")),
            &fold.report.raw_trace,
        )?;
        io::write_trace(
            &ctx.out_dir.join(format!("{id}.baseline.trace.csv")),
            &fold.baseline_trace,
        )?;
        println!(
            "  {id}: auc {:.2}%, auc90 {:.2}%, sensitivity {:.1}% within {} FD/h (best epoch {})",
            fold.report.auc_pct,
            fold.report.auc90_pct,
            fold.report.sensitivity.sensitivity_pct,
            cfg.max_fdh,
            fold.report.best_epoch
        );
        baseline_rows.push((id, fold.baseline_metrics));
        folds.push(fold.report);
    }

    let summary = summarize(&folds)?;
    report::write_folds(&ctx.out_dir.join("folds.csv"), &folds, &summary)?;
    report::write_scored_folds(&ctx.out_dir.join("baseline_folds.csv"), &baseline_rows)?;
    report::write_fd_tables(&ctx.out_dir.join("fd_tables.csv"), &folds)?;

    println!(
        "network: mean auc {:.2}% (ci {:.2}), mean auc90 {:.2}% (ci {:.2})",
        summary.mean_auc_pct, summary.ci_auc_pct, summary.mean_auc90_pct, summary.ci_auc90_pct
    );
    let base_auc: Vec<f64> = baseline_rows.iter().map(|(_, m)| m.auc_pct).collect();
    let (bmean, bci) = seizdet_core::metrics::mean_ci(&base_auc)?;
    println!("baseline: mean auc {bmean:.2}% (ci {bci:.2})");
    println!(
        "wrote folds.csv, baseline_folds.csv, fd_tables.csv, and per-subject traces to {}",
        ctx.out_dir.display()
    );
    Ok(())
}
