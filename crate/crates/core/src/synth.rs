//! Seeded synthetic EEG: colored-noise background with injected rhythmic
//! events, plus the per-second label track that marks exactly those events.
//!
//! The generator makes no claim of clinical fidelity. It produces what the
//! pipeline needs to be exercised honestly: subject-to-subject variability,
//! a 1/f-shaped background, and seizure segments that are rhythmic,
//! band-limited, and evolve in amplitude and frequency.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::record::{EegRecording, LabelTrack};
use crate::rng::Rng;

pub const SAMPLE_RATE_HZ: f64 = 256.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub subject_id: String,
    pub duration_s: f64,
    pub n_channels: usize,
    pub seizure_event_count: usize,
    /// Fundamental frequency range for events; must sit inside the 0.5 to
    /// 12.8 Hz analysis band.
    pub seizure_freq_range_hz: (f64, f64),
    /// Event length bounds in whole seconds.
    pub event_duration_s: (u32, u32),
    /// Background amplitude scale (arbitrary units standing in for uV).
    pub background_scale: f64,
    /// Spread of per-subject parameter draws; larger means subjects differ
    /// more.
    pub subject_variability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            subject_id: String::from("subject"),
            duration_s: 1800.0,
            n_channels: 8,
            seizure_event_count: 3,
            seizure_freq_range_hz: (1.0, 4.0),
            event_duration_s: (30, 90),
            background_scale: 20.0,
            subject_variability: 0.3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s >= 60.0) {
            return Err(Error::InvalidConfig(format!(
                "duration must be at least 60 s, got {}",
                self.duration_s
            )));
        }
        if self.n_channels == 0 {
            return Err(Error::InvalidConfig(String::from("need at least one channel")));
        }
        let (lo, hi) = self.seizure_freq_range_hz;
        if !(0.5 <= lo && lo < hi && hi <= 12.8) {
            return Err(Error::InvalidConfig(format!(
                "event frequency range must sit inside [0.5, 12.8] Hz, got ({lo}, {hi})"
            )));
        }
        let (dmin, dmax) = self.event_duration_s;
        if dmin == 0 || dmin > dmax {
            return Err(Error::InvalidConfig(format!(
                "event duration bounds must satisfy 1 <= min <= max, got ({dmin}, {dmax})"
            )));
        }
        if !(self.background_scale > 0.0) || !(self.subject_variability > 0.0) {
            return Err(Error::InvalidConfig(String::from(
                "background scale and subject variability must be positive",
            )));
        }
        Ok(())
    }
}

/// One planned event, in whole seconds from record start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub start_s: u32,
    pub duration_s: u32,
}

impl Event {
    pub fn end_s(&self) -> u32 {
        self.start_s + self.duration_s
    }
}

const EDGE_MARGIN_S: u32 = 5;
const MIN_GAP_S: u32 = 10;

/// Places events at integer seconds by rejection sampling: at least 5 s
/// from either edge, pairwise gaps of at least 10 s, no overlap. Errors
/// when the schedule cannot be placed within the attempt budget.
pub fn plan_events(cfg: &SynthConfig, rng: &mut Rng) -> Result<Vec<Event>> {
    let total_s = cfg.duration_s as u32;
    let mut events: Vec<Event> = Vec::with_capacity(cfg.seizure_event_count);
    let budget = 1000 + 200 * cfg.seizure_event_count as u32;
    let mut attempts = 0;
    while events.len() < cfg.seizure_event_count {
        if attempts >= budget {
            return Err(Error::InvalidConfig(format!(
                "could not place {} events of {:?} s in {} s",
                cfg.seizure_event_count, cfg.event_duration_s, total_s
            )));
        }
        attempts += 1;
        let (dmin, dmax) = cfg.event_duration_s;
        let duration_s = dmin + rng.below((dmax - dmin + 1) as usize) as u32;
        if total_s < 2 * EDGE_MARGIN_S + duration_s {
            continue;
        }
        let span = total_s - 2 * EDGE_MARGIN_S - duration_s;
        let start_s = EDGE_MARGIN_S + rng.below(span as usize + 1) as u32;
        let candidate = Event { start_s, duration_s };
        let clashes = events.iter().any(|e| {
            candidate.start_s < e.end_s() + MIN_GAP_S && e.start_s < candidate.end_s() + MIN_GAP_S
        });
        if !clashes {
            events.push(candidate);
        }
    }
    events.sort_unstable_by_key(|e| e.start_s);
    Ok(events)
}

/// Per-subject background texture: weights of the white/pink/brown mix and
/// a slow amplitude modulation, drawn once per subject.
struct SubjectParams {
    white_w: f64,
    pink_w: f64,
    brown_w: f64,
    /// Cycles per second of the slow background amplitude modulation.
    mod_freq_hz: f64,
    mod_depth: f64,
    /// Event amplitude relative to the background scale.
    event_amp: f64,
}

impl SubjectParams {
    fn draw(cfg: &SynthConfig, rng: &mut Rng) -> Self {
        let v = cfg.subject_variability;
        let jitter = |rng: &mut Rng, base: f64| (base * (1.0 + v * rng.gaussian())).max(0.05);
        SubjectParams {
            white_w: jitter(rng, 0.4),
            pink_w: jitter(rng, 1.0),
            brown_w: jitter(rng, 0.3),
            mod_freq_hz: 0.05 * (1.0 + 0.5 * v * rng.gaussian()).clamp(0.2, 3.0),
            mod_depth: (0.2 * (1.0 + v * rng.gaussian())).clamp(0.0, 0.6),
            event_amp: (3.5 * (1.0 + 0.5 * v * rng.gaussian())).clamp(2.8, 5.0),
        }
    }
}

/// 1/f-shaped noise: white plus pink plus brown components. Pink comes from
/// a three-pole filter cascade (coefficients from the well-known audio
/// approximation); brown from a leaky integrator. The mix is normalized to
/// unit RMS, so the caller's scale factor sets the background amplitude
/// directly regardless of the drawn component weights.
fn colored_noise(n: usize, p: &SubjectParams, rng: &mut Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut brown = 0.0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let w = rng.gaussian();
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        let pink = (b0 + b1 + b2 + w * 0.1848) / 2.6;
        brown = 0.995 * brown + w;
        out.push(p.white_w * w + p.pink_w * pink + p.brown_w * brown / 10.0);
    }
    let rms = libm::sqrt(out.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64);
    if rms > 0.0 {
        for v in &mut out {
            *v /= rms;
        }
    }
    out
}

/// One event's rhythmic waveform at the recording rate, together with its
/// envelope: a phase-continuous fundamental that drifts as a bounded random
/// walk, plus second and third harmonics at half and quarter amplitude,
/// under a trapezoid envelope whose ramps span 10% of the event (at least
/// 2 s).
fn event_waveform(cfg: &SynthConfig, duration_s: u32, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let n = duration_s as usize * SAMPLE_RATE_HZ as usize;
    let (f_lo, f_hi) = cfg.seizure_freq_range_hz;
    let mut freq = rng.uniform(f_lo, f_hi);
    let drift_per_step = 0.3 / SAMPLE_RATE_HZ;
    let ramp = ((duration_s as f64 * 0.1).max(2.0) * SAMPLE_RATE_HZ) as usize;
    let ramp = ramp.min(n / 2);
    let dt = 1.0 / SAMPLE_RATE_HZ;
    let mut phase = rng.uniform(0.0, 2.0 * core::f64::consts::PI);
    let mut wave = Vec::with_capacity(n);
    let mut envelope = Vec::with_capacity(n);
    for t in 0..n {
        freq = (freq + drift_per_step * rng.gaussian()).clamp(f_lo, f_hi);
        phase += 2.0 * core::f64::consts::PI * freq * dt;
        let env = if t < ramp {
            t as f64 / ramp as f64
        } else if t >= n - ramp {
            (n - t) as f64 / ramp as f64
        } else {
            1.0
        };
        let s = libm::sin(phase) + 0.5 * libm::sin(2.0 * phase) + 0.25 * libm::sin(3.0 * phase);
        wave.push(env * s);
        envelope.push(env);
    }
    (wave, envelope)
}

/// Generates one subject. Deterministic for a fixed config: the stream of
/// random draws is consumed in a fixed documented order (subject
/// parameters, event plan, event waveforms, then per-channel noise and
/// event gains).
pub fn synth_subject(cfg: &SynthConfig) -> Result<(EegRecording, LabelTrack)> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let params = SubjectParams::draw(cfg, &mut rng);
    let events = plan_events(cfg, &mut rng)?;
    let waveforms: Vec<(Vec<f64>, Vec<f64>)> = events
        .iter()
        .map(|e| event_waveform(cfg, e.duration_s, &mut rng))
        .collect();

    let n_samples = (cfg.duration_s * SAMPLE_RATE_HZ) as usize;
    let fs = SAMPLE_RATE_HZ as usize;
    let mut channels: Vec<Vec<f32>> = Vec::with_capacity(cfg.n_channels);
    for _ in 0..cfg.n_channels {
        let mut signal = colored_noise(n_samples, &params, &mut rng);
        // Slow per-channel amplitude modulation with a random phase.
        let mod_phase = rng.uniform(0.0, 2.0 * core::f64::consts::PI);
        for (t, v) in signal.iter_mut().enumerate() {
            let m = 1.0
                + params.mod_depth
                    * libm::sin(
                        2.0 * core::f64::consts::PI * params.mod_freq_hz * t as f64
                            / SAMPLE_RATE_HZ
                            + mod_phase,
                    );
            *v *= cfg.background_scale * m;
        }
        for (event, (wave, envelope)) in events.iter().zip(&waveforms) {
            // Every channel sees the event at no less than 70% strength.
            let gain = rng.uniform(0.7, 1.0);
            let start = event.start_s as usize * fs;
            for (i, (&w, &env)) in wave.iter().zip(envelope).enumerate() {
                let t = start + i;
                if t >= n_samples {
                    break;
                }
                // Rhythmic activity dominates: the background under the
                // event is attenuated toward half amplitude.
                signal[t] = signal[t] * (1.0 - 0.5 * env)
                    + gain * params.event_amp * cfg.background_scale * w;
            }
        }
        channels.push(signal.iter().map(|&v| v as f32).collect());
    }

    let names: Vec<String> = (1..=cfg.n_channels).map(|i| format!("ch{i:02}")).collect();
    let recording = EegRecording::new(
        cfg.subject_id.clone(),
        SAMPLE_RATE_HZ,
        names,
        channels,
    )?;

    let total_s = cfg.duration_s as usize;
    let mut labels = vec![false; total_s];
    for e in &events {
        for s in e.start_s..e.end_s().min(total_s as u32) {
            labels[s as usize] = true;
        }
    }
    let track = LabelTrack { subject_id: cfg.subject_id.clone(), labels };
    Ok((recording, track))
}
