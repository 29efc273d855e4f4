//! Epoch-based (per-second) detection metrics: ROC curves, full and
//! high-specificity AUC, false detections per hour, sensitivity at a false
//! detection budget, and per-subject aggregation.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Operating points swept from threshold negative infinity (everything
/// flagged: sensitivity 1, specificity 0) to positive infinity (nothing
/// flagged), one point per distinct score in between. A decision at
/// threshold t flags scores >= t.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Builds the ROC curve of per-second scores against per-second labels.
pub fn roc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), actual: scores.len() });
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("roc scores"));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("roc labels"));
    }

    let mut pairs: Vec<(f64, bool)> =
        scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // pos_at_or_above[i] = positives among pairs[i..].
    let mut points = Vec::with_capacity(pairs.len() + 2);
    points.push(RocPoint { threshold: f64::NEG_INFINITY, sensitivity: 1.0, specificity: 0.0 });
    let mut pos_below = 0usize;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        // Counts strictly below this threshold decide the point: flagged
        // means score >= threshold.
        let sensitivity = (n_pos - pos_below) as f64 / n_pos as f64;
        let specificity = neg_below as f64 / n_neg as f64;
        points.push(RocPoint { threshold, sensitivity, specificity });
        while i < pairs.len() && pairs[i].0 == threshold {
            if pairs[i].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
    }
    points.push(RocPoint { threshold: f64::INFINITY, sensitivity: 0.0, specificity: 1.0 });
    Ok(RocCurve { points })
}

/// Area under the curve as a percentage: trapezoids over specificity. For
/// per-second scores this equals the probability that a random seizure
/// second outscores a random non-seizure second, ties counted half.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut area = 0.0;
    for pair in curve.points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        area += (b.specificity - a.specificity) * (a.sensitivity + b.sensitivity) * 0.5;
    }
    area * 100.0
}

/// Unevaluated sum `hi + lo` with `|lo|` below half an ulp of `hi`; about
/// 106 bits of precision. Just enough machinery for the band integral in
/// `auc90`, where the bound 9/10 has no binary representation and plain
/// f64 evaluation misses the analytic anchor values by an ulp.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn dd(v: f64) -> Dd {
    Dd { hi: v, lo: 0.0 }
}

/// Error-free: hi + lo == a + b.
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let v = s - a;
    Dd { hi: s, lo: (a - (s - v)) + (b - v) }
}

/// Error-free: hi + lo == a * b (Dekker splitting; safe far from overflow).
fn two_prod(a: f64, b: f64) -> Dd {
    const SPLIT: f64 = 134217729.0; // 2^27 + 1
    let p = a * b;
    let ca = SPLIT * a;
    let ahi = ca - (ca - a);
    let alo = a - ahi;
    let cb = SPLIT * b;
    let bhi = cb - (cb - b);
    let blo = b - bhi;
    Dd { hi: p, lo: ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo }
}

fn dd_add(a: Dd, b: Dd) -> Dd {
    let s = two_sum(a.hi, b.hi);
    two_sum(s.hi, s.lo + a.lo + b.lo)
}

fn dd_sub(a: Dd, b: Dd) -> Dd {
    dd_add(a, Dd { hi: -b.hi, lo: -b.lo })
}

fn dd_mul(a: Dd, b: Dd) -> Dd {
    let p = two_prod(a.hi, b.hi);
    two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi)
}

fn dd_div(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi / b.hi;
    let r = dd_sub(a, dd_mul(dd(q1), b));
    let q2 = (r.hi + r.lo) / b.hi;
    two_sum(q1, q2)
}

/// Area restricted to specificities in [0.9, 1.0], linearly interpolated at
/// 0.9 and normalized by the 0.1 span so a perfect detector still scores
/// 100 and the chance diagonal scores 5. The clipped integral runs in
/// double-double arithmetic with the bound carried as 9/10 exactly, so both
/// anchors come out as their analytic values: exactly 100 and exactly 5.
pub fn auc90(curve: &RocCurve) -> f64 {
    // 9/10 to two doubles. The leading double sits above 9/10, so the f64
    // values at or below 9/10 are exactly those strictly below `hi`.
    let bound = Dd { hi: 0.9, lo: -2.220_446_049_250_313_2e-17 };
    let band = dd_sub(dd(1.0), bound);
    let mut area = dd(0.0);
    for pair in curve.points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (s1, s2) = (a.specificity, b.specificity);
        if s2 < bound.hi || s2 <= s1 {
            continue;
        }
        let (x1, y1) = if s1 < bound.hi {
            let t = dd_div(dd_sub(bound, dd(s1)), two_sum(s2, -s1));
            let y = dd_add(dd(a.sensitivity), dd_mul(t, two_sum(b.sensitivity, -a.sensitivity)));
            (bound, y)
        } else {
            (dd(s1), dd(a.sensitivity))
        };
        let term = dd_mul(dd_sub(dd(s2), x1), dd_add(y1, dd(b.sensitivity)));
        area = dd_add(area, Dd { hi: term.hi * 0.5, lo: term.lo * 0.5 });
    }
    let r = dd_mul(dd_div(area, band), dd(100.0));
    r.hi + r.lo
}

/// False detections per hour: maximal runs of flagged seconds that overlap
/// no labeled seizure second, divided by the record duration.
pub fn fd_per_hour(decisions: &[bool], labels: &[bool]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::EmptyInput("false detection rate"));
    }
    if decisions.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), actual: decisions.len() });
    }
    let mut events = 0usize;
    let mut i = 0;
    while i < decisions.len() {
        if decisions[i] {
            let start = i;
            while i < decisions.len() && decisions[i] {
                i += 1;
            }
            if !labels[start..i].iter().any(|&y| y) {
                events += 1;
            }
        } else {
            i += 1;
        }
    }
    let hours = decisions.len() as f64 / 3600.0;
    Ok(events as f64 / hours)
}

/// Result of the false-detection-budget sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityAtBudget {
    /// Percent of seizure seconds flagged, 0 when nothing fits the budget.
    pub sensitivity_pct: f64,
    /// Chosen decision threshold; None when no threshold fits.
    pub threshold: Option<f64>,
    pub fd_per_hour: f64,
    pub feasible: bool,
}

/// Sensitivity at the most permissive threshold whose collared decisions
/// stay within `max_fdh` false detections per hour.
///
/// Candidate thresholds are the distinct trace values; a threshold flags
/// the seconds strictly above it, so the largest value always yields an
/// empty (and trivially within-budget) decision set. The sweep therefore
/// comes back infeasible only for a negative budget.
pub fn sensitivity_at_fdh(
    trace: &[f64],
    labels: &[bool],
    max_fdh: f64,
    collar_s: u32,
) -> Result<SensitivityAtBudget> {
    if trace.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), actual: trace.len() });
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass("sensitivity sweep labels"));
    }
    let mut candidates: Vec<f64> = trace.to_vec();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();

    for &threshold in candidates.iter() {
        // Strictly-above decisions: bump the threshold past the value.
        let decisions: Vec<bool> = trace.iter().map(|&v| v > threshold).collect();
        let decisions = crate::post::apply_collar(&decisions, collar_s);
        let fdh = fd_per_hour(&decisions, labels)?;
        if fdh <= max_fdh {
            let hits = decisions
                .iter()
                .zip(labels)
                .filter(|(&d, &y)| d && y)
                .count();
            return Ok(SensitivityAtBudget {
                sensitivity_pct: 100.0 * hits as f64 / n_pos as f64,
                threshold: Some(threshold),
                fd_per_hour: fdh,
                feasible: true,
            });
        }
    }
    Ok(SensitivityAtBudget {
        sensitivity_pct: 0.0,
        threshold: None,
        fd_per_hour: f64::INFINITY,
        feasible: false,
    })
}

/// Mean and 95% confidence half-width (`1.96 * s / sqrt(n)`, sample
/// standard deviation with the n-1 denominator).
pub fn mean_ci(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, 1.96 * libm::sqrt(var) / libm::sqrt(n)))
}

/// Convenience: AUC and AUC90 of a score trace in one call.
pub fn auc_pair(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    let curve = roc(scores, labels)?;
    Ok((auc(&curve), auc90(&curve)))
}

/// The processed-trace metric set one fold reports for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetrics {
    pub auc_pct: f64,
    pub auc90_pct: f64,
    pub sensitivity: SensitivityAtBudget,
}

/// Runs the full metric chain on a post-processed trace: ROC metrics on the
/// probabilities plus the budgeted sensitivity sweep on collared decisions.
pub fn trace_metrics(
    processed: &[f64],
    labels: &[bool],
    max_fdh: f64,
    collar_s: u32,
) -> Result<TraceMetrics> {
    let (auc_pct, auc90_pct) = auc_pair(processed, labels)?;
    let sensitivity = sensitivity_at_fdh(processed, labels, max_fdh, collar_s)?;
    Ok(TraceMetrics { auc_pct, auc90_pct, sensitivity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn separable_scores_reach_perfect_corner() {
        let curve = roc(&[0.9, 0.8, 0.7, 0.1], &[true, true, false, false]).unwrap();
        assert!(curve
            .points
            .iter()
            .any(|p| p.sensitivity == 1.0 && p.specificity == 1.0));
        assert_eq!(auc(&curve), 100.0);
        assert_eq!(auc90(&curve), 100.0);
    }

    #[test]
    fn one_swapped_pair_gives_75() {
        let curve = roc(&[0.9, 0.4, 0.7, 0.1], &[true, true, false, false]).unwrap();
        assert!((auc(&curve) - 75.0).abs() < 1e-12);
    }

    #[test]
    fn label_inversion_mirrors_auc() {
        let scores = [0.3, 0.9, 0.2, 0.8, 0.5, 0.1];
        let labels = [false, true, false, true, true, false];
        let inverted: Vec<bool> = labels.iter().map(|&y| !y).collect();
        let a = auc(&roc(&scores, &labels).unwrap());
        let b = auc(&roc(&scores, &inverted).unwrap());
        assert!((a + b - 100.0).abs() < 1e-10);
    }

    #[test]
    fn tied_scores_collapse_to_three_points() {
        let curve = roc(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]).unwrap();
        assert_eq!(curve.points.len(), 3);
        assert!((auc(&curve) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn curve_is_monotone_along_sweep() {
        let scores = [0.1, 0.7, 0.7, 0.3, 0.9, 0.2, 0.5];
        let labels = [false, true, false, true, true, false, false];
        let curve = roc(&scores, &labels).unwrap();
        for pair in curve.points.windows(2) {
            assert!(pair[1].sensitivity <= pair[0].sensitivity);
            assert!(pair[1].specificity >= pair[0].specificity);
        }
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.sensitivity, first.specificity), (1.0, 0.0));
        assert_eq!((last.sensitivity, last.specificity), (0.0, 1.0));
    }

    #[test]
    fn roc_rejects_degenerate_inputs() {
        assert!(matches!(
            roc(&[0.1, 0.2], &[true, true]),
            Err(Error::SingleClass(_))
        ));
        assert!(roc(&[0.1], &[true, false]).is_err());
        assert!(matches!(
            roc(&[f64::NAN, 0.2], &[true, false]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn chance_diagonal_auc90_is_five() {
        // All-equal scores produce the exact chance diagonal; the banded
        // integral must land on the analytic value without an ulp of slack.
        let curve = roc(&[0.5; 10], &[true, false, true, false, true, false, true, false, true, false])
            .unwrap();
        assert!((auc(&curve) - 50.0).abs() < 1e-12);
        assert_eq!(auc90(&curve), 5.0);

        // The same diagonal drawn as a staircase of 16 tie groups, one
        // positive and one negative each. Sixteen steps keep every vertex
        // k/16 exactly representable, so the polyline is exactly diagonal.
        let scores: Vec<f64> = (0..32).map(|i| (i / 2) as f64).collect();
        let labels: Vec<bool> = (0..32).map(|i| i % 2 == 0).collect();
        let curve = roc(&scores, &labels).unwrap();
        assert_eq!(auc90(&curve), 5.0);
    }

    #[test]
    fn auc90_equals_auc_when_curve_lives_above_ninety() {
        // Perfect curve: the restriction changes nothing.
        let curve = roc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(auc90(&curve), auc(&curve));
    }

    #[test]
    fn fd_rate_examples() {
        let labels = vec![false; 7200];
        assert_eq!(fd_per_hour(&vec![false; 7200], &labels).unwrap(), 0.0);

        let mut one_event = vec![false; 7200];
        for d in &mut one_event[100..160] {
            *d = true;
        }
        assert!((fd_per_hour(&one_event, &labels).unwrap() - 0.5).abs() < 1e-12);

        let mut labels = vec![false; 3600];
        for y in &mut labels[500..560] {
            *y = true;
        }
        let decisions: Vec<bool> = labels.clone();
        assert_eq!(fd_per_hour(&decisions, &labels).unwrap(), 0.0);
    }

    #[test]
    fn fd_rate_counts_distinct_events() {
        let labels = vec![false; 3600];
        let mut decisions = vec![false; 3600];
        decisions[10] = true;
        decisions[11] = true;
        decisions[1000] = true;
        assert!((fd_per_hour(&decisions, &labels).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fd_event_touching_seizure_is_not_false() {
        let mut labels = vec![false; 3600];
        labels[100] = true;
        let mut decisions = vec![false; 3600];
        for d in &mut decisions[95..120] {
            *d = true;
        }
        assert_eq!(fd_per_hour(&decisions, &labels).unwrap(), 0.0);
    }

    #[test]
    fn budget_sweep_on_separable_trace() {
        let mut trace = vec![0.1; 600];
        let mut labels = vec![false; 600];
        for i in 300..360 {
            trace[i] = 0.9;
            labels[i] = true;
        }
        let r = sensitivity_at_fdh(&trace, &labels, 0.25, 0).unwrap();
        assert_eq!(r.sensitivity_pct, 100.0);
        assert!(r.feasible);
        assert_eq!(r.fd_per_hour, 0.0);
    }

    #[test]
    fn budget_sweep_all_zero_trace() {
        let mut labels = vec![false; 600];
        for y in &mut labels[10..20] {
            *y = true;
        }
        let r = sensitivity_at_fdh(&[0.0; 600], &labels, 0.25, 30).unwrap();
        assert_eq!(r.sensitivity_pct, 0.0);
        assert!(r.feasible, "empty decisions always fit the budget");
    }

    #[test]
    fn budget_sweep_matches_brute_force() {
        // Deterministic pseudo-random trace, cross-checked against
        // independent enumeration of every distinct value.
        let mut rng = crate::rng::Rng::new(1234);
        let n = 2400;
        let mut labels = vec![false; n];
        for y in &mut labels[600..700] {
            *y = true;
        }
        for y in &mut labels[1800..1850] {
            *y = true;
        }
        let trace: Vec<f64> = (0..n)
            .map(|i| {
                let base = if labels[i] { 0.6 } else { 0.2 };
                (base + rng.uniform(-0.2, 0.3)).clamp(0.0, 1.0)
            })
            .collect();
        let fast = sensitivity_at_fdh(&trace, &labels, 0.5, 10).unwrap();

        let mut best: Option<(f64, f64, f64)> = None;
        let mut values: Vec<f64> = trace.clone();
        values.sort_unstable_by(f64::total_cmp);
        values.dedup();
        for &theta in &values {
            let d: Vec<bool> = trace.iter().map(|&v| v > theta).collect();
            let d = crate::post::apply_collar(&d, 10);
            let fdh = fd_per_hour(&d, &labels).unwrap();
            if fdh <= 0.5 {
                let hits = d.iter().zip(&labels).filter(|(&d, &y)| d && y).count();
                let sens = 100.0 * hits as f64 / labels.iter().filter(|&&y| y).count() as f64;
                if best.is_none() {
                    best = Some((theta, sens, fdh));
                }
            }
        }
        let (theta, sens, fdh) = best.unwrap();
        assert_eq!(fast.threshold, Some(theta));
        assert_eq!(fast.sensitivity_pct, sens);
        assert_eq!(fast.fd_per_hour, fdh);
    }

    #[test]
    fn budget_sweep_infeasible_negative_budget() {
        let mut labels = vec![false; 600];
        labels[5] = true;
        let r = sensitivity_at_fdh(&[0.2; 600], &labels, -1.0, 0).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.sensitivity_pct, 0.0);
        assert_eq!(r.threshold, None);
    }

    #[test]
    fn mean_ci_formula() {
        let (mean, ci) = mean_ci(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(ci, 0.0);

        let (mean, ci) = mean_ci(&[2.0, 4.0]).unwrap();
        assert_eq!(mean, 3.0);
        // s = sqrt(2), half-width = 1.96 * sqrt(2) / sqrt(2) = 1.96.
        assert!((ci - 1.96).abs() < 1e-12);

        assert!(mean_ci(&[1.0]).is_err());
    }
}
