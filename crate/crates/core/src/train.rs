//! Model training: balanced subset selection, the epoch loop with
//! per-epoch validation AUC, and best-epoch snapshot selection.
//!
//! The recipe: train on a small balanced subset of windows, score whole
//! validation recordings after every epoch, and keep the weights from the
//! epoch with the highest validation AUC (earliest epoch on ties).

use alloc::string::String;
use alloc::vec::Vec;

use crate::arch::{assemble, NetworkSpec};
use crate::dsp::{preprocess, PreprocessConfig, WindowBatch};
use crate::error::{Error, Result};
use crate::metrics::auc_pair;
use crate::nn::{Batch, Network, Sgd, SgdConfig};
use crate::post::{channel_fuse, ChannelFusion};
use crate::record::{EegRecording, LabelTrack};
use crate::rng::{derive_seed, Rng};

/// Windows scored at once during inference. Bounds the activation memory
/// for long recordings without changing any output value.
const INFER_CHUNK: usize = 128;

const TAG_INIT: u64 = 0x5EED_0001;
const TAG_SHUFFLE: u64 = 0x5EED_0002;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Upper bound on training-set size as a fraction of the total
    /// validation window count. Set to 1.0 to disable the check (used by
    /// the overfit smoke test, where train and validation coincide).
    pub max_train_fraction: f64,
    /// How per-channel validation scores are combined into one trace.
    pub channel_fusion: ChannelFusion,
    /// Seed for weight initialization and epoch shuffling.
    pub seed: u64,
    /// When set, training accuracy is recorded each epoch and the loop
    /// stops early once it reaches this value.
    pub stop_at_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 2048,
            learning_rate: 0.01,
            momentum: 0.9,
            max_train_fraction: 0.02,
            channel_fusion: ChannelFusion::Max,
            seed: 0,
            stop_at_train_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(String::from(
                "epochs and batch size must be at least 1",
            )));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(String::from(
                "need learning rate > 0 and momentum in [0, 1)",
            )));
        }
        if !(self.max_train_fraction > 0.0 && self.max_train_fraction <= 1.0) {
            return Err(Error::InvalidConfig(String::from(
                "max_train_fraction must lie in (0, 1]",
            )));
        }
        if let Some(t) = self.stop_at_train_accuracy {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig(String::from(
                    "stop_at_train_accuracy must lie in [0, 1]",
                )));
            }
        }
        Ok(())
    }
}

/// A flat set of equal-length single-channel windows with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub window_len: usize,
    data: Vec<f64>,
    pub labels: Vec<bool>,
}

impl WindowSet {
    pub fn new(window_len: usize) -> Self {
        WindowSet { window_len, data: Vec::new(), labels: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn push(&mut self, window: &[f64], label: bool) {
        assert_eq!(window.len(), self.window_len, "window length mismatch");
        self.data.extend_from_slice(window);
        self.labels.push(label);
    }

    pub fn window(&self, i: usize) -> &[f64] {
        &self.data[i * self.window_len..(i + 1) * self.window_len]
    }

    /// (non-seizure, seizure) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y).count();
        (self.labels.len() - pos, pos)
    }

    /// Rows gathered into a single-channel batch, in the given order.
    fn gather(&self, order: &[usize]) -> Batch {
        Batch::from_windows(order.iter().map(|&i| self.window(i)), self.window_len)
    }
}

/// One subject ready for scoring: per-channel preprocessed windows plus
/// the per-second annotation. Window k of every channel starts at second k,
/// so trace index and label index line up directly.
#[derive(Debug, Clone)]
pub struct SubjectWindows {
    pub subject_id: String,
    pub channels: Vec<WindowBatch>,
    pub labels: Vec<bool>,
}

impl SubjectWindows {
    pub fn n_windows(&self) -> usize {
        self.channels.first().map_or(0, WindowBatch::n_windows)
    }

    /// Labels aligned to the window starts (the tail seconds that cannot
    /// start a full window carry no score and are dropped).
    pub fn window_labels(&self) -> &[bool] {
        &self.labels[..self.n_windows().min(self.labels.len())]
    }
}

/// Runs the signal front end over a recording and pairs the result with its
/// annotation.
pub fn prepare_subject(
    rec: &EegRecording,
    track: &LabelTrack,
    cfg: &PreprocessConfig,
) -> Result<SubjectWindows> {
    track.validate_against(rec)?;
    let channels = preprocess(rec, cfg)?;
    Ok(SubjectWindows {
        subject_id: rec.subject_id.clone(),
        channels,
        labels: track.labels.clone(),
    })
}

/// Label for a window covering `window_s` whole seconds from
/// `start_second`: majority vote over the covered annotation, with the
/// exact tie counted as seizure.
pub fn window_label(labels: &[bool], start_second: usize, window_s: usize) -> bool {
    let end = (start_second + window_s).min(labels.len());
    let covered = end.saturating_sub(start_second);
    if covered == 0 {
        return false;
    }
    let pos = labels[start_second..end].iter().filter(|&&y| y).count();
    2 * pos >= covered
}

/// Flattens every channel window of every subject into one labeled pool.
pub fn collect_windows<'a, I>(subjects: I) -> Result<WindowSet>
where
    I: IntoIterator<Item = &'a SubjectWindows> + Clone,
{
    let window_len = subjects
        .clone()
        .into_iter()
        .flat_map(|s| s.channels.first())
        .map(|b| b.window_len())
        .next()
        .ok_or(Error::EmptyInput("window pool"))?;
    let mut set = WindowSet::new(window_len);
    for subject in subjects {
        for batch in &subject.channels {
            let window_s = batch.window_s();
            for k in 0..batch.n_windows() {
                let label = window_label(&subject.labels, batch.start_second(k), window_s);
                set.push(batch.window(k), label);
            }
        }
    }
    Ok(set)
}

/// Draws a class-balanced random subset of at most `max_total` windows
/// (half per class, limited by the rarer class). Errors when either class
/// is absent.
pub fn balanced_subset(pool: &WindowSet, max_total: usize, rng: &mut Rng) -> Result<WindowSet> {
    let mut neg: Vec<usize> = Vec::new();
    let mut pos: Vec<usize> = Vec::new();
    for (i, &y) in pool.labels.iter().enumerate() {
        if y {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    let per_class = pos.len().min(neg.len()).min(max_total / 2);
    if per_class == 0 {
        return Err(Error::SingleClass("balanced subset selection"));
    }
    rng.shuffle(&mut neg);
    rng.shuffle(&mut pos);
    let mut picks: Vec<usize> = Vec::with_capacity(2 * per_class);
    picks.extend_from_slice(&neg[..per_class]);
    picks.extend_from_slice(&pos[..per_class]);
    rng.shuffle(&mut picks);
    let mut out = WindowSet::new(pool.window_len);
    for &i in &picks {
        out.push(pool.window(i), pool.labels[i]);
    }
    Ok(out)
}

/// Raw per-second positive-class trace for one subject: network inference
/// per channel, then channel fusion. No post-processing.
pub fn subject_trace(
    net: &mut Network,
    subject: &SubjectWindows,
    fusion: ChannelFusion,
) -> Result<Vec<f64>> {
    let mut traces: Vec<Vec<f64>> = Vec::with_capacity(subject.channels.len());
    for batch in &subject.channels {
        let mut trace = Vec::with_capacity(batch.n_windows());
        let mut start = 0;
        while start < batch.n_windows() {
            let stop = (start + INFER_CHUNK).min(batch.n_windows());
            let x = Batch::from_windows(
                (start..stop).map(|k| batch.window(k)),
                batch.window_len(),
            );
            trace.extend(net.predict_positive(&x));
            start = stop;
        }
        traces.push(trace);
    }
    channel_fuse(&traces, fusion)
}

/// Fraction of windows whose positive-class probability crosses 0.5 on the
/// correct side. Inference mode.
pub fn training_accuracy(net: &mut Network, set: &WindowSet) -> f64 {
    if set.n() == 0 {
        return 0.0;
    }
    let mut correct = 0usize;
    let mut start = 0;
    while start < set.n() {
        let stop = (start + INFER_CHUNK).min(set.n());
        let order: Vec<usize> = (start..stop).collect();
        let probs = net.predict_positive(&set.gather(&order));
        for (p, &i) in probs.iter().zip(&order) {
            if (*p > 0.5) == set.labels[i] {
                correct += 1;
            }
        }
        start = stop;
    }
    correct as f64 / set.n() as f64
}

/// Pooled validation AUC: every subject's raw fused trace is scored against
/// its window-aligned labels and the pairs are ranked together.
pub fn validation_auc(
    net: &mut Network,
    validation: &[&SubjectWindows],
    fusion: ChannelFusion,
) -> Result<f64> {
    let mut scores: Vec<f64> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    for subject in validation {
        let trace = subject_trace(net, subject, fusion)?;
        let aligned = subject.window_labels();
        let n = trace.len().min(aligned.len());
        scores.extend_from_slice(&trace[..n]);
        labels.extend_from_slice(&aligned[..n]);
    }
    Ok(auc_pair(&scores, &labels)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStat {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean minibatch cross-entropy over the epoch.
    pub mean_loss: f64,
    pub val_auc_pct: f64,
    /// Recorded only when an accuracy stop target is configured.
    pub train_accuracy: Option<f64>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// The best-epoch weights, quantized to f32 precision.
    pub network: Network,
    pub log: Vec<EpochStat>,
    pub best_epoch: usize,
    pub best_val_auc_pct: f64,
}

/// Trains a network from `spec` on the labeled window set, scoring the
/// validation subjects after every epoch. Returns the weights of the epoch
/// with the highest validation AUC; on ties the earliest such epoch wins.
pub fn train_model(
    spec: &NetworkSpec,
    train: &WindowSet,
    validation: &[&SubjectWindows],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.n() == 0 {
        return Err(Error::EmptyInput("training windows"));
    }
    let (neg, pos) = train.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::SingleClass("training set"));
    }
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation subjects"));
    }
    let val_windows: usize = validation
        .iter()
        .map(|s| s.channels.iter().map(WindowBatch::n_windows).sum::<usize>())
        .sum();
    if train.n() as f64 > cfg.max_train_fraction * val_windows as f64 {
        return Err(Error::InvalidConfig(alloc::format!(
            "{} training windows exceed {} of the {} validation windows",
            train.n(),
            cfg.max_train_fraction,
            val_windows
        )));
    }

    let mut net = assemble(spec, derive_seed(cfg.seed, TAG_INIT))?;
    let mut opt = Sgd::new(SgdConfig {
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
    });
    let mut shuffle_rng = Rng::new(derive_seed(cfg.seed, TAG_SHUFFLE));
    let mut order: Vec<usize> = (0..train.n()).collect();

    let mut log: Vec<EpochStat> = Vec::with_capacity(cfg.epochs);
    let mut best_auc = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut best_state: Vec<f64> = Vec::new();

    for epoch in 1..=cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let x = train.gather(chunk);
            let labels: Vec<usize> =
                chunk.iter().map(|&i| usize::from(train.labels[i])).collect();
            loss_sum += net.train_minibatch(&x, &labels, &mut opt);
            batches += 1;
        }
        let val_auc = validation_auc(&mut net, validation, cfg.channel_fusion)?;
        if val_auc > best_auc {
            best_auc = val_auc;
            best_epoch = epoch;
            best_state = net.state();
        }
        let train_accuracy = cfg
            .stop_at_train_accuracy
            .map(|_| training_accuracy(&mut net, train));
        log.push(EpochStat {
            epoch,
            mean_loss: loss_sum / batches as f64,
            val_auc_pct: val_auc,
            train_accuracy,
        });
        if let (Some(target), Some(acc)) = (cfg.stop_at_train_accuracy, train_accuracy) {
            if acc >= target {
                break;
            }
        }
    }

    net.load_state(&best_state)?;
    net.quantize_to_f32();
    Ok(TrainOutcome { network: net, log, best_epoch, best_val_auc_pct: best_auc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_cnn11, LayerSpec};
    use crate::dsp::Provenance;
    use alloc::string::ToString;
    use alloc::vec;

    fn tiny_spec() -> NetworkSpec {
        NetworkSpec {
            input_channels: 1,
            input_len: 64,
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

    /// Windows of length 64: class 1 carries a strong rhythm, class 0 is
    /// low-amplitude noise.
    fn toy_pool(n_per_class: usize, seed: u64) -> WindowSet {
        let mut rng = Rng::new(seed);
        let mut set = WindowSet::new(64);
        for i in 0..2 * n_per_class {
            let label = i % 2 == 1;
            let window: Vec<f64> = (0..64)
                .map(|t| {
                    let noise = 0.3 * rng.gaussian();
                    if label {
                        2.0 * libm::sin(t as f64 * 0.7) + noise
                    } else {
                        noise
                    }
                })
                .collect();
            set.push(&window, label);
        }
        set
    }

    /// Wraps a window set as a one-channel pseudo subject so the pool can
    /// serve as its own validation data.
    fn as_subject(set: &WindowSet) -> SubjectWindows {
        let mut data = Vec::new();
        for i in 0..set.n() {
            data.extend_from_slice(set.window(i));
        }
        let batch = WindowBatch::from_parts(
            Provenance { subject_id: "pool".to_string(), channel: "c1".to_string() },
            set.window_len,
            set.window_len,
            set.window_len,
            data,
        )
        .unwrap();
        SubjectWindows {
            subject_id: "pool".to_string(),
            channels: vec![batch],
            labels: set.labels.clone(),
        }
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            max_train_fraction: 1.0,
            seed: 7,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { momentum: 1.0, ..TrainConfig::default() }.validate().is_err());
        assert!(
            TrainConfig { max_train_fraction: 0.0, ..TrainConfig::default() }
                .validate()
                .is_err()
        );
        assert!(TrainConfig { stop_at_train_accuracy: Some(1.5), ..TrainConfig::default() }
            .validate()
            .is_err());
    }

    #[test]
    fn window_label_majority_and_tie() {
        let labels = [false, false, true, true, true, false, false, false];
        assert!(!window_label(&labels, 0, 8));
        assert!(window_label(&labels, 1, 4));
        // Exact tie counts as seizure.
        assert!(window_label(&[true, false], 0, 2));
        assert!(!window_label(&labels, 8, 8));
    }

    #[test]
    fn balanced_subset_is_balanced_and_capped() {
        let pool = toy_pool(40, 1);
        let mut rng = Rng::new(2);
        let sub = balanced_subset(&pool, 20, &mut rng).unwrap();
        assert_eq!(sub.n(), 20);
        assert_eq!(sub.class_counts(), (10, 10));
        // Rarer class limits the draw.
        let mut lopsided = WindowSet::new(64);
        for i in 0..pool.n() {
            if pool.labels[i] || lopsided.class_counts().1 < 3 {
                lopsided.push(pool.window(i), pool.labels[i]);
            }
        }
        let mut skewed = WindowSet::new(64);
        for i in 0..pool.n() {
            if !pool.labels[i] {
                skewed.push(pool.window(i), false);
            } else if skewed.class_counts().1 < 3 {
                skewed.push(pool.window(i), true);
            }
        }
        let sub = balanced_subset(&skewed, 100, &mut rng).unwrap();
        assert_eq!(sub.class_counts(), (3, 3));
    }

    #[test]
    fn balanced_subset_needs_both_classes() {
        let mut pool = WindowSet::new(4);
        pool.push(&[0.0; 4], false);
        pool.push(&[1.0; 4], false);
        let mut rng = Rng::new(0);
        assert!(matches!(
            balanced_subset(&pool, 10, &mut rng),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn balanced_subset_is_seed_deterministic() {
        let pool = toy_pool(20, 3);
        let a = balanced_subset(&pool, 16, &mut Rng::new(9)).unwrap();
        let b = balanced_subset(&pool, 16, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_single_class_and_oversize() {
        let cfg = quick_cfg();
        let pool = toy_pool(8, 4);
        let subject = as_subject(&pool);
        let empty = WindowSet::new(64);
        assert!(matches!(
            train_model(&tiny_spec(), &empty, &[&subject], &cfg),
            Err(Error::EmptyInput(_))
        ));
        let mut ones = WindowSet::new(64);
        ones.push(&[1.0; 64], true);
        ones.push(&[2.0; 64], true);
        assert!(matches!(
            train_model(&tiny_spec(), &ones, &[&subject], &cfg),
            Err(Error::SingleClass(_))
        ));
        let strict = TrainConfig { max_train_fraction: 0.02, ..cfg.clone() };
        assert!(matches!(
            train_model(&tiny_spec(), &pool, &[&subject], &strict),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            train_model(&tiny_spec(), &pool, &[], &cfg),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn learns_separable_toy_problem() {
        let pool = toy_pool(16, 5);
        let subject = as_subject(&pool);
        let cfg = TrainConfig { stop_at_train_accuracy: Some(1.0), ..quick_cfg() };
        let out = train_model(&tiny_spec(), &pool, &[&subject], &cfg).unwrap();
        assert!(out.log.len() <= 30);
        let acc = out.log.last().unwrap().train_accuracy.unwrap();
        assert!(acc >= 0.9, "accuracy {acc}");
        assert!(out.best_val_auc_pct > 95.0, "val auc {}", out.best_val_auc_pct);
    }

    #[test]
    fn best_epoch_matches_log_maximum() {
        let pool = toy_pool(12, 6);
        let subject = as_subject(&pool);
        let out = train_model(&tiny_spec(), &pool, &[&subject], &quick_cfg()).unwrap();
        let log_max = out.log.iter().map(|e| e.val_auc_pct).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.best_val_auc_pct, log_max);
        let first_max = out
            .log
            .iter()
            .find(|e| e.val_auc_pct == log_max)
            .map(|e| e.epoch)
            .unwrap();
        assert_eq!(out.best_epoch, first_max);
    }

    #[test]
    fn training_is_deterministic() {
        let pool = toy_pool(10, 8);
        let subject = as_subject(&pool);
        let cfg = quick_cfg();
        let a = train_model(&tiny_spec(), &pool, &[&subject], &cfg).unwrap();
        let b = train_model(&tiny_spec(), &pool, &[&subject], &cfg).unwrap();
        assert_eq!(a.network.state(), b.network.state());
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn accuracy_stop_shortens_the_log() {
        let pool = toy_pool(16, 5);
        let subject = as_subject(&pool);
        let cfg = TrainConfig {
            epochs: 60,
            stop_at_train_accuracy: Some(0.9),
            ..quick_cfg()
        };
        let out = train_model(&tiny_spec(), &pool, &[&subject], &cfg).unwrap();
        assert!(out.log.len() < 60, "stopped after {} epochs", out.log.len());
        let last = out.log.last().unwrap();
        assert!(last.train_accuracy.unwrap() >= 0.9);
    }

    #[test]
    fn full_architecture_accepts_standard_windows() {
        let pool = {
            let mut rng = Rng::new(1);
            let mut set = WindowSet::new(256);
            for i in 0..8 {
                let label = i % 2 == 1;
                let w: Vec<f64> = (0..256)
                    .map(|t| {
                        let noise = 0.3 * rng.gaussian();
                        if label { 2.0 * libm::sin(t as f64 * 0.5) + noise } else { noise }
                    })
                    .collect();
                set.push(&w, label);
            }
            set
        };
        let subject = as_subject(&pool);
        let cfg = TrainConfig { epochs: 2, batch_size: 8, ..quick_cfg() };
        let out = train_model(&build_cnn11(), &pool, &[&subject], &cfg).unwrap();
        assert_eq!(out.log.len(), 2);
        assert!(out.log.iter().all(|e| e.mean_loss.is_finite()));
    }
}
