//! Leave-one-subject-out cross-validation.
//!
//! Every subject is held out exactly once; the remaining subjects supply
//! both the balanced training subset and the validation recordings used
//! for best-epoch selection. Per-fold seeds derive from the master seed
//! and the held-out subject's id, so results do not depend on the order
//! subjects are listed in.

use alloc::string::String;
use alloc::vec::Vec;

use crate::arch::NetworkSpec;
use crate::error::{Error, Result};
use crate::metrics::{trace_metrics, mean_ci, SensitivityAtBudget};
use crate::post::{channel_fuse, decisions_with_collar, post_process, ChannelFusion, PostConfig};
use crate::rng::{derive_seed, hash_str, Rng};
use crate::shallow::{extract_features, train_baseline, BaselineModel};
use crate::train::{
    balanced_subset, collect_windows, subject_trace, train_model, SubjectWindows, TrainConfig,
    WindowSet,
};

const TAG_SUBSET: u64 = 0x5EED_0003;
const TAG_TRAIN: u64 = 0x5EED_0004;

/// Decision thresholds reported in each fold's false-detection table.
pub const FD_TABLE_THRESHOLDS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct LooConfig {
    pub master_seed: u64,
    /// Per-fold trainer settings; the seed field is replaced by the fold
    /// seed.
    pub train: TrainConfig,
    /// Post-processing applied to the held-out subject's trace before
    /// metrics.
    pub post: PostConfig,
    /// False-detection budget for the reported sensitivity.
    pub max_fdh: f64,
}

impl Default for LooConfig {
    fn default() -> Self {
        LooConfig {
            master_seed: 0,
            train: TrainConfig::default(),
            post: PostConfig::default(),
            max_fdh: 0.25,
        }
    }
}

/// False detections per hour and per-second sensitivity of the collared
/// decisions at one fixed threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FdTableRow {
    pub threshold: f64,
    pub fd_per_hour: f64,
    pub sensitivity_pct: f64,
}

/// Everything measured on one held-out subject.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub subject_id: String,
    pub auc_pct: f64,
    pub auc90_pct: f64,
    /// Sensitivity at the configured false-detection budget.
    pub sensitivity: SensitivityAtBudget,
    pub fd_table: Vec<FdTableRow>,
    /// Epoch whose weights were selected by validation AUC.
    pub best_epoch: usize,
    /// Channel-fused network output before post-processing, one value per
    /// window start-second. Kept so fusion sweeps can reuse the fold
    /// output without rescoring.
    pub raw_trace: Vec<f64>,
    /// Labels aligned to `raw_trace`.
    pub labels: Vec<bool>,
}

/// Builds the per-threshold false-detection table for a post-processed
/// trace: collared decisions at each threshold in [`FD_TABLE_THRESHOLDS`],
/// scored for false events per hour and per-second sensitivity.
pub fn fd_table(processed: &[f64], labels: &[bool], collar_s: u32) -> Vec<FdTableRow> {
    let seizure_seconds = labels.iter().filter(|&&y| y).count();
    FD_TABLE_THRESHOLDS
        .iter()
        .map(|&threshold| {
            let decisions = decisions_with_collar(processed, threshold, collar_s);
            let hits = decisions.iter().zip(labels).filter(|&(&d, &y)| d && y).count();
            FdTableRow {
                threshold,
                fd_per_hour: crate::metrics::fd_per_hour(&decisions, labels).unwrap_or(0.0),
                sensitivity_pct: if seizure_seconds > 0 {
                    100.0 * hits as f64 / seizure_seconds as f64
                } else {
                    0.0
                },
            }
        })
        .collect()
}

fn check_subjects(subjects: &[SubjectWindows]) -> Result<()> {
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects { needed: 2, got: subjects.len() });
    }
    for (i, a) in subjects.iter().enumerate() {
        for b in &subjects[i + 1..] {
            if a.subject_id == b.subject_id {
                return Err(Error::InvalidConfig(alloc::format!(
                    "duplicate subject id {:?}",
                    a.subject_id
                )));
            }
        }
    }
    Ok(())
}

/// The balanced training subset a fold draws from the non-test subjects.
/// Deterministic in (master seed, held-out subject id), so an audit can
/// reproduce a fold's exact training windows and compare them against the
/// held-out subject's windows.
pub fn fold_training_subset(
    subjects: &[SubjectWindows],
    test_index: usize,
    cfg: &LooConfig,
) -> Result<WindowSet> {
    let test_id = &subjects[test_index].subject_id;
    // Pool in id order so the drawn subset is a function of the subject
    // set, not of how the caller happened to arrange it.
    let mut train_refs: Vec<&SubjectWindows> = subjects
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != test_index)
        .map(|(_, s)| s)
        .collect();
    train_refs.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    let pool = collect_windows(train_refs.iter().copied())?;
    let cap = (cfg.train.max_train_fraction * pool.n() as f64) as usize;
    let fold_seed = derive_seed(cfg.master_seed, hash_str(test_id));
    let mut rng = Rng::new(derive_seed(fold_seed, TAG_SUBSET));
    balanced_subset(&pool, cap, &mut rng)
}

/// Trains on all subjects but one and evaluates on the held-out subject.
/// Subject order does not influence the result: the fold seed comes from
/// the held-out subject's id alone.
pub fn run_fold(
    subjects: &[SubjectWindows],
    test_index: usize,
    spec: &NetworkSpec,
    cfg: &LooConfig,
) -> Result<FoldReport> {
    check_subjects(subjects)?;
    if test_index >= subjects.len() {
        return Err(Error::IndexOutOfRange { index: test_index, len: subjects.len() });
    }
    let test = &subjects[test_index];
    let validation: Vec<&SubjectWindows> = subjects
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != test_index)
        .map(|(_, s)| s)
        .collect();
    assert!(
        validation.iter().all(|s| s.subject_id != test.subject_id),
        "held-out subject leaked into the training fold"
    );

    let subset = fold_training_subset(subjects, test_index, cfg)?;
    let fold_seed = derive_seed(cfg.master_seed, hash_str(&test.subject_id));
    let train_cfg = TrainConfig { seed: derive_seed(fold_seed, TAG_TRAIN), ..cfg.train.clone() };
    let outcome = train_model(spec, &subset, &validation, &train_cfg)?;

    let mut net = outcome.network;
    let raw_trace = subject_trace(&mut net, test, cfg.post.channel_fusion)?;
    let labels: Vec<bool> = test.window_labels()[..raw_trace.len().min(test.window_labels().len())]
        .to_vec();
    let processed = post_process(&raw_trace, &cfg.post)?;
    let metrics = trace_metrics(&processed, &labels, cfg.max_fdh, cfg.post.collar_s)?;
    let fd_table = fd_table(&processed, &labels, cfg.post.collar_s);

    Ok(FoldReport {
        subject_id: test.subject_id.clone(),
        auc_pct: metrics.auc_pct,
        auc90_pct: metrics.auc90_pct,
        sensitivity: metrics.sensitivity,
        fd_table,
        best_epoch: outcome.best_epoch,
        raw_trace,
        labels,
    })
}

/// Runs every fold. Reports come back ordered by subject id, so two runs
/// over the same subjects agree even when the input order differs.
pub fn loo_harness(
    subjects: &[SubjectWindows],
    spec: &NetworkSpec,
    cfg: &LooConfig,
) -> Result<Vec<FoldReport>> {
    check_subjects(subjects)?;
    let mut order: Vec<usize> = (0..subjects.len()).collect();
    order.sort_by(|&a, &b| subjects[a].subject_id.cmp(&subjects[b].subject_id));
    order
        .into_iter()
        .map(|idx| run_fold(subjects, idx, spec, cfg))
        .collect()
}

/// Per-metric aggregate over folds: mean and 95% half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct LooSummary {
    pub mean_auc_pct: f64,
    pub ci_auc_pct: f64,
    pub mean_auc90_pct: f64,
    pub ci_auc90_pct: f64,
}

pub fn summarize(folds: &[FoldReport]) -> Result<LooSummary> {
    let auc: Vec<f64> = folds.iter().map(|f| f.auc_pct).collect();
    let auc90: Vec<f64> = folds.iter().map(|f| f.auc90_pct).collect();
    let (mean_auc_pct, ci_auc_pct) = mean_ci(&auc)?;
    let (mean_auc90_pct, ci_auc90_pct) = mean_ci(&auc90)?;
    Ok(LooSummary { mean_auc_pct, ci_auc_pct, mean_auc90_pct, ci_auc90_pct })
}

/// Trains the shallow baseline on a fold's window subset.
pub fn baseline_from_windows(set: &WindowSet, fs_hz: f64, l2: f64) -> Result<BaselineModel> {
    let features: Vec<[f64; crate::shallow::FEATURE_COUNT]> =
        (0..set.n()).map(|i| extract_features(set.window(i), fs_hz)).collect();
    train_baseline(&features, &set.labels, l2)
}

/// Scores one subject with the shallow baseline: per-window probabilities
/// per channel, then channel fusion. The baseline analogue of the network
/// scoring path.
pub fn baseline_subject_trace(
    model: &BaselineModel,
    subject: &SubjectWindows,
    fusion: ChannelFusion,
) -> Result<Vec<f64>> {
    let mut traces: Vec<Vec<f64>> = Vec::with_capacity(subject.channels.len());
    for batch in &subject.channels {
        let fs = batch.samples_per_second() as f64;
        let trace: Vec<f64> = (0..batch.n_windows())
            .map(|k| model.probability(&extract_features(batch.window(k), fs)))
            .collect();
        traces.push(trace);
    }
    channel_fuse(&traces, fusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::LayerSpec;
    use crate::dsp::PreprocessConfig;
    use crate::synth::{synth_subject, SynthConfig};
    use crate::train::prepare_subject;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn tiny_spec() -> NetworkSpec {
        NetworkSpec {
            input_channels: 1,
            input_len: 256,
            layers: vec![
                LayerSpec::Conv { out_ch: 4, k: 8 },
                LayerSpec::Relu,
                LayerSpec::AvgPool { pool: 4, stride: 4 },
                LayerSpec::Conv { out_ch: 2, k: 8 },
                LayerSpec::GlobalAvgPool,
                LayerSpec::Softmax,
            ],
        }
    }

    fn tiny_subjects(n: usize) -> Vec<SubjectWindows> {
        let pre = PreprocessConfig::default();
        (0..n)
            .map(|i| {
                let cfg = SynthConfig {
                    seed: 100 + i as u64,
                    subject_id: format!("s{:02}", i + 1),
                    duration_s: 120.0,
                    n_channels: 1,
                    seizure_event_count: 2,
                    event_duration_s: (15, 25),
                    ..SynthConfig::default()
                };
                let (rec, track) = synth_subject(&cfg).unwrap();
                prepare_subject(&rec, &track, &pre).unwrap()
            })
            .collect()
    }

    fn quick_cfg() -> LooConfig {
        LooConfig {
            master_seed: 3,
            train: TrainConfig {
                epochs: 2,
                batch_size: 16,
                max_train_fraction: 0.5,
                ..TrainConfig::default()
            },
            post: PostConfig { bg_window_s: 60, ..PostConfig::default() },
            max_fdh: 0.25,
        }
    }

    #[test]
    fn each_subject_held_out_once() {
        let subjects = tiny_subjects(3);
        let folds = loo_harness(&subjects, &tiny_spec(), &quick_cfg()).unwrap();
        assert_eq!(folds.len(), 3);
        let ids: Vec<&str> = folds.iter().map(|f| f.subject_id.as_str()).collect();
        assert_eq!(ids, vec!["s01", "s02", "s03"]);
        for f in &folds {
            assert!((0.0..=100.0).contains(&f.auc_pct));
            assert!((0.0..=100.0).contains(&f.auc90_pct));
            assert_eq!(f.raw_trace.len(), f.labels.len());
            assert_eq!(f.fd_table.len(), FD_TABLE_THRESHOLDS.len());
        }
    }

    #[test]
    fn reports_do_not_depend_on_subject_order() {
        let mut subjects = tiny_subjects(3);
        let a = loo_harness(&subjects, &tiny_spec(), &quick_cfg()).unwrap();
        subjects.reverse();
        let b = loo_harness(&subjects, &tiny_spec(), &quick_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_or_duplicate_subjects_error() {
        let subjects = tiny_subjects(1);
        assert!(matches!(
            loo_harness(&subjects, &tiny_spec(), &quick_cfg()),
            Err(Error::TooFewSubjects { needed: 2, got: 1 })
        ));
        let mut dup = tiny_subjects(2);
        dup[1].subject_id = "s01".to_string();
        assert!(matches!(
            loo_harness(&dup, &tiny_spec(), &quick_cfg()),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn fold_subset_excludes_test_windows() {
        let subjects = tiny_subjects(3);
        let cfg = quick_cfg();
        for test_index in 0..subjects.len() {
            let subset = fold_training_subset(&subjects, test_index, &cfg).unwrap();
            let test = &subjects[test_index];
            for i in 0..subset.n() {
                let w = subset.window(i);
                for batch in &test.channels {
                    for k in 0..batch.n_windows() {
                        assert_ne!(w, batch.window(k), "test window found in training subset");
                    }
                }
            }
        }
    }

    #[test]
    fn summary_aggregates_fold_metrics() {
        let subjects = tiny_subjects(3);
        let folds = loo_harness(&subjects, &tiny_spec(), &quick_cfg()).unwrap();
        let summary = summarize(&folds).unwrap();
        let by_hand: f64 = folds.iter().map(|f| f.auc_pct).sum::<f64>() / folds.len() as f64;
        assert!((summary.mean_auc_pct - by_hand).abs() < 1e-12);
        assert!(summary.ci_auc_pct >= 0.0);
    }

    #[test]
    fn baseline_trains_and_scores_on_fold_data() {
        let subjects = tiny_subjects(3);
        let cfg = quick_cfg();
        let subset = fold_training_subset(&subjects, 0, &cfg).unwrap();
        let model = baseline_from_windows(&subset, 32.0, 1e-3).unwrap();
        let trace = baseline_subject_trace(&model, &subjects[0], ChannelFusion::Max).unwrap();
        assert_eq!(trace.len(), subjects[0].n_windows());
        assert!(trace.iter().all(|p| (0.0..=1.0).contains(p)));
    }
}
