//! CSV report writers. Numbers print through the shortest round-trip
//! formatter, so a rerun that reaches the same values reproduces each file
//! byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;

use seizdet_core::fusion::SweepRow;
use seizdet_core::loo::{FoldReport, LooSummary};
use seizdet_core::metrics::{RocCurve, TraceMetrics};
use seizdet_core::train::EpochStat;

fn save(path: &Path, text: String) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_roc(path: &Path, curve: &RocCurve) -> anyhow::Result<()> {
    let mut text = String::from("threshold,sensitivity,specificity\n");
    for p in &curve.points {
        let _ = writeln!(text, "{},{},{}", p.threshold, p.sensitivity, p.specificity);
    }
    save(path, text)
}

pub fn write_epochs(path: &Path, log: &[EpochStat]) -> anyhow::Result<()> {
    let mut text = String::from("epoch,mean_loss,val_auc,train_accuracy\n");
    for e in log {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            e.epoch,
            e.mean_loss,
            e.val_auc_pct,
            opt(e.train_accuracy)
        );
    }
    save(path, text)
}

/// One `metric,value` row per quantity in a [`TraceMetrics`].
pub fn write_metrics(path: &Path, m: &TraceMetrics, max_fdh: f64) -> anyhow::Result<()> {
    let mut text = String::from("metric,value\n");
    let _ = writeln!(text, "auc,{}", m.auc_pct);
    let _ = writeln!(text, "auc90,{}", m.auc90_pct);
    let _ = writeln!(text, "fd_budget_per_hour,{max_fdh}");
    let _ = writeln!(text, "sensitivity_at_budget,{}", m.sensitivity.sensitivity_pct);
    let _ = writeln!(text, "threshold_at_budget,{}", opt(m.sensitivity.threshold));
    let _ = writeln!(text, "fd_per_hour_at_budget,{}", m.sensitivity.fd_per_hour);
    let _ = writeln!(text, "budget_feasible,{}", m.sensitivity.feasible);
    save(path, text)
}

/// Per-fold results with mean and 95% confidence half-width footer rows.
pub fn write_folds(
    path: &Path,
    folds: &[FoldReport],
    summary: &LooSummary,
) -> anyhow::Result<()> {
    let mut text =
        String::from("subject,auc,auc90,sensitivity_at_budget,threshold,fd_per_hour,best_epoch\n");
    for f in folds {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            f.subject_id,
            f.auc_pct,
            f.auc90_pct,
            f.sensitivity.sensitivity_pct,
            opt(f.sensitivity.threshold),
            f.sensitivity.fd_per_hour,
            f.best_epoch
        );
    }
    let _ = writeln!(text, "mean,{},{},,,,", summary.mean_auc_pct, summary.mean_auc90_pct);
    let _ = writeln!(text, "ci95,{},{},,,,", summary.ci_auc_pct, summary.ci_auc90_pct);
    save(path, text)
}

/// The threshold sweep of a single trace.
pub fn write_fd_table(path: &Path, table: &[seizdet_core::loo::FdTableRow]) -> anyhow::Result<()> {
    let mut text = String::from("threshold,fd_per_hour,sensitivity\n");
    for row in table {
        let _ = writeln!(text, "{},{},{}", row.threshold, row.fd_per_hour, row.sensitivity_pct);
    }
    save(path, text)
}

/// The per-subject threshold sweep: false detections per hour and
/// sensitivity at each probed threshold.
pub fn write_fd_tables(path: &Path, folds: &[FoldReport]) -> anyhow::Result<()> {
    let mut text = String::from("subject,threshold,fd_per_hour,sensitivity\n");
    for f in folds {
        for row in &f.fd_table {
            let _ = writeln!(
                text,
                "{},{},{},{}",
                f.subject_id, row.threshold, row.fd_per_hour, row.sensitivity_pct
            );
        }
    }
    save(path, text)
}

/// Per-subject metric rows for a second scorer (the shallow baseline in the
/// cross-validation run), with the same mean and confidence footer as the
/// main fold table.
pub fn write_scored_folds(path: &Path, rows: &[(String, TraceMetrics)]) -> anyhow::Result<()> {
    let mut text = String::from("subject,auc,auc90,sensitivity_at_budget,threshold,fd_per_hour\n");
    for (id, m) in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            id,
            m.auc_pct,
            m.auc90_pct,
            m.sensitivity.sensitivity_pct,
            opt(m.sensitivity.threshold),
            m.sensitivity.fd_per_hour
        );
    }
    let aucs: Vec<f64> = rows.iter().map(|(_, m)| m.auc_pct).collect();
    let auc90s: Vec<f64> = rows.iter().map(|(_, m)| m.auc90_pct).collect();
    let (mean_auc, ci_auc) = seizdet_core::metrics::mean_ci(&aucs)?;
    let (mean_auc90, ci_auc90) = seizdet_core::metrics::mean_ci(&auc90s)?;
    let _ = writeln!(text, "mean,{mean_auc},{mean_auc90},,,");
    let _ = writeln!(text, "ci95,{ci_auc},{ci_auc90},,,");
    save(path, text)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut text = String::from("alpha,mode,mean_auc,ci_auc,mean_auc90,ci_auc90\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.alpha,
            r.mode.name(),
            r.mean_auc,
            r.ci_auc,
            r.mean_auc90,
            r.ci_auc90
        );
    }
    save(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use seizdet_core::metrics::roc;

    #[test]
    fn roc_file_has_one_row_per_point() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.csv");
        let curve = roc(&[0.9, 0.4, 0.6, 0.1], &[true, false, true, false]).unwrap();
        write_roc(&path, &curve).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + curve.points.len());
        assert!(text.starts_with("threshold,sensitivity,specificity\n"));
    }

    #[test]
    fn epoch_rows_leave_missing_accuracy_blank() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("epochs.csv");
        let log = vec![
            EpochStat { epoch: 1, mean_loss: 0.7, val_auc_pct: 55.0, train_accuracy: None },
            EpochStat { epoch: 2, mean_loss: 0.5, val_auc_pct: 60.5, train_accuracy: Some(0.75) },
        ];
        write_epochs(&path, &log).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("1,0.7,55,\n"));
        assert!(text.contains("2,0.5,60.5,0.75\n"));
    }
}
