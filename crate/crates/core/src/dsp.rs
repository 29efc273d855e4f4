//! Preprocessing front end: band-pass filtering, decimation, and
//! sliding-window extraction.
//!
//! The chain mirrors the clinical system it reproduces: raw EEG is filtered
//! to 0.5-12.8 Hz, down-sampled to 32 Hz, and cut into 8-second windows with
//! a 1-second shift, giving one 256-sample window per start second.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::record::EegRecording;

/// Band edges and FIR design parameters.
///
/// The filter is a linear-phase windowed-sinc FIR (Hamming window). The
/// default tap count is `4 * fs + 1` rounded to odd, i.e. a 4-second impulse
/// response: long enough that the lower transition fits between DC and the
/// 1 Hz pass-band edge. Applied with group-delay compensation, so the output
/// is time-aligned with the input and of equal length; the first and last
/// `(taps - 1) / 2` samples are edge transient (the signal is zero-padded).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    /// Overrides the default `4 * fs + 1` tap count when set. Forced to odd.
    pub tap_count: Option<usize>,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec { low_cut_hz: 0.5, high_cut_hz: 12.8, tap_count: None }
    }
}

impl FilterSpec {
    pub fn taps_for(&self, fs_hz: f64) -> usize {
        let n = match self.tap_count {
            Some(n) => n.max(3),
            None => (4.0 * fs_hz) as usize + 1,
        };
        if n % 2 == 0 { n + 1 } else { n }
    }

    fn validate(&self, fs_hz: f64) -> Result<()> {
        if !(self.low_cut_hz > 0.0 && self.low_cut_hz < self.high_cut_hz) {
            return Err(Error::InvalidConfig(alloc::format!(
                "band edges must satisfy 0 < low < high, got {} and {}",
                self.low_cut_hz, self.high_cut_hz
            )));
        }
        if fs_hz <= 2.0 * self.high_cut_hz {
            return Err(Error::SampleRateTooLow { fs_hz, high_cut_hz: self.high_cut_hz });
        }
        Ok(())
    }
}

/// Windowed-sinc band-pass taps (difference of two Hamming-windowed
/// low-passes), normalized to unit gain at the band center.
pub fn design_bandpass(fs_hz: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate(fs_hz)?;
    let n = spec.taps_for(fs_hz);
    let mid = (n - 1) as f64 / 2.0;
    let wl = 2.0 * core::f64::consts::PI * spec.low_cut_hz / fs_hz;
    let wh = 2.0 * core::f64::consts::PI * spec.high_cut_hz / fs_hz;

    let mut taps = vec![0.0; n];
    for (i, tap) in taps.iter_mut().enumerate() {
        let x = i as f64 - mid;
        let ideal = if x == 0.0 {
            (wh - wl) / core::f64::consts::PI
        } else {
            (libm::sin(wh * x) - libm::sin(wl * x)) / (core::f64::consts::PI * x)
        };
        let window = 0.54
            - 0.46 * libm::cos(2.0 * core::f64::consts::PI * i as f64 / (n - 1) as f64);
        *tap = ideal * window;
    }

    // Normalize gain to exactly 1 at the arithmetic band center.
    let fc = 0.5 * (spec.low_cut_hz + spec.high_cut_hz);
    let w0 = 2.0 * core::f64::consts::PI * fc / fs_hz;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &tap) in taps.iter().enumerate() {
        re += tap * libm::cos(w0 * i as f64);
        im -= tap * libm::sin(w0 * i as f64);
    }
    let gain = libm::sqrt(re * re + im * im);
    for tap in &mut taps {
        *tap /= gain;
    }
    Ok(taps)
}

/// Zero-phase band-pass: zero-padded FIR convolution with the group delay
/// removed, so `output[n]` is aligned with `input[n]` and lengths match.
pub fn bandpass(signal: &[f64], fs_hz: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    let taps = design_bandpass(fs_hz, spec)?;
    Ok(apply_fir_compensated(signal, &taps))
}

/// Applies an odd-length linear-phase FIR with its `(taps-1)/2` group delay
/// compensated. Out-of-range input samples are treated as zero.
pub fn apply_fir_compensated(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let m = (taps.len() - 1) / 2;
    let mut out = vec![0.0; n];
    // y[t] = sum_j h[j] * x[t + m - j]; accumulate tap-by-tap over the valid
    // output range so the inner loop stays a contiguous slide.
    for (j, &h) in taps.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        // x index = t + m - j must lie in [0, n)
        let t_lo = j.saturating_sub(m);
        let t_hi = (n + j).saturating_sub(m).min(n);
        let shift = m as isize - j as isize;
        for t in t_lo..t_hi {
            out[t] += h * signal[(t as isize + shift) as usize];
        }
    }
    out
}

/// Keeps every `fs_in/fs_out`-th sample. The ratio must be a whole number;
/// a trailing block shorter than the ratio is dropped, so the output length
/// is `floor(len / ratio)`.
pub fn decimate(signal: &[f64], fs_in_hz: f64, fs_out_hz: f64) -> Result<Vec<f64>> {
    if !(fs_out_hz > 0.0) || !(fs_in_hz > 0.0) {
        return Err(Error::InvalidConfig(String::from("sample rates must be positive")));
    }
    let ratio = fs_in_hz / fs_out_hz;
    let r = libm::round(ratio);
    if (ratio - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::NonIntegerRatio { fs_in_hz, fs_out_hz });
    }
    let r = r as usize;
    Ok((0..signal.len() / r).map(|i| signal[i * r]).collect())
}

/// Identifies where a batch of windows came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub subject_id: String,
    pub channel: String,
}

/// A batch of equal-length single-channel windows cut from one channel.
///
/// Window `k` starts `k * shift` samples into the signal; at the pipeline's
/// 32 Hz / 1 s shift that start falls on second `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    pub provenance: Provenance,
    window_len: usize,
    shift: usize,
    samples_per_second: usize,
    data: Vec<f64>,
}

impl WindowBatch {
    /// Assembles a batch from raw parts. `data` holds the windows
    /// back to back; its length must be a multiple of `window_len`.
    pub fn from_parts(
        provenance: Provenance,
        window_len: usize,
        shift: usize,
        samples_per_second: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if window_len == 0 || shift == 0 || samples_per_second == 0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "window_len {window_len}, shift {shift}, and rate {samples_per_second} must be positive"
            )));
        }
        if data.len() % window_len != 0 {
            return Err(Error::LengthMismatch {
                expected: data.len().next_multiple_of(window_len),
                actual: data.len(),
            });
        }
        Ok(WindowBatch { provenance, window_len, shift, samples_per_second, data })
    }

    pub fn n_windows(&self) -> usize {
        if self.window_len == 0 { 0 } else { self.data.len() / self.window_len }
    }

    /// Whole seconds covered by one window.
    pub fn window_s(&self) -> usize {
        self.window_len / self.samples_per_second
    }

    pub fn samples_per_second(&self) -> usize {
        self.samples_per_second
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn window(&self, k: usize) -> &[f64] {
        &self.data[k * self.window_len..(k + 1) * self.window_len]
    }

    /// Start of window `k` in whole seconds from the signal start.
    pub fn start_second(&self, k: usize) -> usize {
        k * self.shift / self.samples_per_second
    }

    pub fn windows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.window_len)
    }
}

/// Cuts a signal into `len_s`-second windows every `shift_s` seconds.
pub fn window(signal: &[f64], fs_hz: f64, len_s: u32, shift_s: u32) -> Result<WindowBatch> {
    if len_s == 0 || shift_s == 0 {
        return Err(Error::InvalidConfig(String::from(
            "window length and shift must be positive",
        )));
    }
    let per_second = fs_hz as usize;
    if per_second == 0 || (fs_hz - per_second as f64).abs() > 1e-9 {
        return Err(Error::InvalidConfig(alloc::format!(
            "windowing needs a whole-number sample rate, got {fs_hz}"
        )));
    }
    let window_len = per_second * len_s as usize;
    let shift = per_second * shift_s as usize;
    if signal.len() < window_len {
        return Err(Error::SignalTooShort { needed: window_len, got: signal.len() });
    }
    let n_windows = (signal.len() - window_len) / shift + 1;
    let mut data = Vec::with_capacity(n_windows * window_len);
    for k in 0..n_windows {
        data.extend_from_slice(&signal[k * shift..k * shift + window_len]);
    }
    Ok(WindowBatch {
        provenance: Provenance::default(),
        window_len,
        shift,
        samples_per_second: per_second,
        data,
    })
}

/// Normalizes each window to zero mean and unit variance. The variance is
/// floored at 1e-8, so a flat window maps to all zeros instead of dividing
/// by zero.
pub fn standardize_windows(batch: &WindowBatch) -> WindowBatch {
    let mut out = batch.clone();
    let len = out.window_len;
    for win in out.data.chunks_exact_mut(len) {
        let mean = win.iter().sum::<f64>() / len as f64;
        let var = win.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / len as f64;
        let inv_std = 1.0 / libm::sqrt(var.max(1e-8));
        for x in win.iter_mut() {
            *x = (*x - mean) * inv_std;
        }
    }
    out
}

/// Options for the full preprocessing chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub filter: FilterSpec,
    pub target_rate_hz: f64,
    pub window_len_s: u32,
    pub shift_s: u32,
    /// Per-window standardization; enable for the CNN input path, disable
    /// when amplitude-bearing features are extracted downstream.
    pub standardize: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            filter: FilterSpec::default(),
            target_rate_hz: 32.0,
            window_len_s: 8,
            shift_s: 1,
            standardize: true,
        }
    }
}

/// Full front end for one recording: band-pass, decimate, window (and
/// optionally standardize) every channel. Returns one batch per channel.
pub fn preprocess(rec: &EegRecording, cfg: &PreprocessConfig) -> Result<Vec<WindowBatch>> {
    if rec.sample_rate_hz < 64.0 {
        return Err(Error::SampleRateTooLow {
            fs_hz: rec.sample_rate_hz,
            high_cut_hz: cfg.filter.high_cut_hz,
        });
    }
    let taps = design_bandpass(rec.sample_rate_hz, &cfg.filter)?;
    let mut batches = Vec::with_capacity(rec.n_channels());
    for (ci, name) in rec.channels.iter().enumerate() {
        let raw = rec.channel_f64(ci);
        let filtered = apply_fir_compensated(&raw, &taps);
        let decimated = decimate(&filtered, rec.sample_rate_hz, cfg.target_rate_hz)?;
        let mut batch = window(&decimated, cfg.target_rate_hz, cfg.window_len_s, cfg.shift_s)?;
        batch.provenance = Provenance {
            subject_id: rec.subject_id.clone(),
            channel: name.clone(),
        };
        if cfg.standardize {
            batch = standardize_windows(&batch);
        }
        batches.push(batch);
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn sine(freq_hz: f64, fs_hz: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| libm::sin(2.0 * core::f64::consts::PI * freq_hz * t as f64 / fs_hz))
            .collect()
    }

    /// Steady-state peak amplitude, measured away from the edge transient.
    fn steady_state_peak(signal: &[f64], margin: usize) -> f64 {
        signal[margin..signal.len() - margin]
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()))
    }

    #[test]
    fn dc_is_rejected() {
        let fs = 256.0;
        let input = vec![1.0; 4096];
        let out = bandpass(&input, fs, &FilterSpec::default()).unwrap();
        let margin = FilterSpec::default().taps_for(fs) / 2;
        let body = &out[margin..out.len() - margin];
        let rms = libm::sqrt(body.iter().map(|x| x * x).sum::<f64>() / body.len() as f64);
        assert!(rms < 0.01, "DC leak rms {rms}");
    }

    #[test]
    fn passband_tone_passes() {
        let fs = 256.0;
        let out = bandpass(&sine(5.0, fs, 8192), fs, &FilterSpec::default()).unwrap();
        let peak = steady_state_peak(&out, FilterSpec::default().taps_for(fs));
        assert!((0.89..=1.12).contains(&peak), "5 Hz steady-state peak {peak}");
    }

    #[test]
    fn stopband_tone_is_attenuated() {
        let fs = 256.0;
        let out = bandpass(&sine(20.0, fs, 8192), fs, &FilterSpec::default()).unwrap();
        let peak = steady_state_peak(&out, FilterSpec::default().taps_for(fs));
        assert!(peak <= 0.1, "20 Hz steady-state peak {peak}");
    }

    #[test]
    fn bandpass_rejects_low_sample_rate() {
        let r = bandpass(&[0.0; 64], 25.0, &FilterSpec::default());
        assert!(matches!(r, Err(Error::SampleRateTooLow { .. })));
    }

    #[test]
    fn bandpass_is_linear() {
        let fs = 256.0;
        let spec = FilterSpec { tap_count: Some(129), ..FilterSpec::default() };
        let mut rng = crate::rng::Rng::new(5);
        let x: Vec<f64> = (0..512).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let y: Vec<f64> = (0..512).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (a, b) = (0.7, -1.3);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let fx = bandpass(&x, fs, &spec).unwrap();
        let fy = bandpass(&y, fs, &spec).unwrap();
        let fc = bandpass(&combo, fs, &spec).unwrap();
        for i in 0..512 {
            assert!((fc[i] - (a * fx[i] + b * fy[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn decimate_counts_and_values() {
        let x: Vec<f64> = (0..2560).map(|i| i as f64).collect();
        let out = decimate(&x, 256.0, 32.0).unwrap();
        assert_eq!(out.len(), 320);

        let ramp: Vec<f64> = (0..80).map(|i| i as f64).collect();
        let out = decimate(&ramp, 256.0, 32.0).unwrap();
        let expected: Vec<f64> = (0..10).map(|i| (i * 8) as f64).collect();
        assert_eq!(out, expected);

        let constant = vec![2.5; 256];
        assert!(decimate(&constant, 256.0, 32.0).unwrap().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn decimate_rejects_non_integer_ratio() {
        assert!(matches!(
            decimate(&[0.0; 100], 100.0, 32.0),
            Err(Error::NonIntegerRatio { .. })
        ));
    }

    #[test]
    fn window_counts() {
        // 60 s at 32 Hz -> 53 windows.
        let signal = vec![0.0; 60 * 32];
        let batch = window(&signal, 32.0, 8, 1).unwrap();
        assert_eq!(batch.n_windows(), 53);

        // Exactly one window when the signal is one window long.
        let signal: Vec<f64> = (0..256).map(|i| i as f64).collect();
        let batch = window(&signal, 32.0, 8, 1).unwrap();
        assert_eq!(batch.n_windows(), 1);
        assert_eq!(batch.window(0), &signal[..]);

        // Window 2 of a 10 s ramp starts at sample 64.
        let signal: Vec<f64> = (0..320).map(|i| i as f64).collect();
        let batch = window(&signal, 32.0, 8, 1).unwrap();
        assert_eq!(batch.n_windows(), 3);
        assert_eq!(batch.window(2)[0], 64.0);
        assert_eq!(batch.start_second(2), 2);
    }

    #[test]
    fn window_rejects_short_signal() {
        let r = window(&[0.0; 255], 32.0, 8, 1);
        assert!(matches!(r, Err(Error::SignalTooShort { needed: 256, got: 255 })));
    }

    #[test]
    fn shift_consistency() {
        // Window k of the signal equals window k-1 of the signal delayed by
        // one shift.
        let mut rng = crate::rng::Rng::new(21);
        let signal: Vec<f64> = (0..640).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let delayed = &signal[32..];
        let full = window(&signal, 32.0, 8, 1).unwrap();
        let late = window(delayed, 32.0, 8, 1).unwrap();
        for k in 1..full.n_windows() {
            assert_eq!(full.window(k), late.window(k - 1));
        }
    }

    #[test]
    fn standardize_handles_flat_windows() {
        let signal = vec![0.0; 256];
        let batch = window(&signal, 32.0, 8, 1).unwrap();
        let std = standardize_windows(&batch);
        assert!(std.window(0).iter().all(|&v| v == 0.0));

        let signal = vec![5.0; 256];
        let batch = window(&signal, 32.0, 8, 1).unwrap();
        let std = standardize_windows(&batch);
        assert!(std.window(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_normalizes_moments() {
        let mut rng = crate::rng::Rng::new(2);
        let signal: Vec<f64> = (0..512).map(|_| rng.uniform(-4.0, 9.0)).collect();
        let std = standardize_windows(&window(&signal, 32.0, 8, 1).unwrap());
        for win in std.windows() {
            let mean = win.iter().sum::<f64>() / win.len() as f64;
            let var = win.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / win.len() as f64;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn preprocess_counts_and_provenance() {
        let fs = 256.0;
        let n = (120.0 * fs) as usize;
        let mut rng = crate::rng::Rng::new(8);
        let mk = |rng: &mut crate::rng::Rng| -> Vec<f32> {
            (0..n).map(|_| rng.uniform(-30.0, 30.0) as f32).collect()
        };
        let ch: Vec<f32> = mk(&mut rng);
        let rec = EegRecording::new(
            "subj".to_string(),
            fs,
            vec!["c1".to_string(), "c2".to_string()],
            vec![ch.clone(), ch],
        )
        .unwrap();
        let batches = preprocess(&rec, &PreprocessConfig::default()).unwrap();
        assert_eq!(batches.len(), 2);
        for b in &batches {
            assert_eq!(b.n_windows(), 113); // 120 - 8 + 1
            assert_eq!(b.window_len(), 256);
            assert_eq!(b.provenance.subject_id, "subj");
        }
        // Identical channels give identical batches apart from provenance.
        assert_eq!(batches[0].data, batches[1].data);
    }

    #[test]
    fn preprocess_zero_recording_stays_zero() {
        let rec = EegRecording::new(
            "z".to_string(),
            256.0,
            vec!["c1".to_string()],
            vec![vec![0.0f32; 256 * 64]],
        )
        .unwrap();
        let batches = preprocess(&rec, &PreprocessConfig::default()).unwrap();
        assert!(batches[0].windows().all(|w| w.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn preprocess_rejects_low_rate_recordings() {
        let rec = EegRecording::new(
            "s".to_string(),
            32.0,
            vec!["c1".to_string()],
            vec![vec![0.0f32; 32 * 60]],
        )
        .unwrap();
        assert!(preprocess(&rec, &PreprocessConfig::default()).is_err());
    }
}
