//! Minimal iterative radix-2 FFT, used for the shallow classifier's
//! 256-point magnitude spectra. Input length must be a power of two.

use alloc::vec;
use alloc::vec::Vec;

/// In-place decimation-in-time FFT over (re, im).
pub(crate) fn fft_pow2(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert_eq!(n, im.len());
    debug_assert!(n.is_power_of_two());

    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let ang = -2.0 * core::f64::consts::PI / len as f64;
        let (wr, wi) = (libm::cos(ang), libm::sin(ang));
        for start in (0..n).step_by(len) {
            let mut cr = 1.0;
            let mut ci = 0.0;
            for k in 0..len / 2 {
                let a = start + k;
                let b = a + len / 2;
                let tr = re[b] * cr - im[b] * ci;
                let ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                let next_cr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = next_cr;
            }
        }
        len <<= 1;
    }
}

/// Magnitude spectrum of a real signal: bins 0..=n/2.
pub(crate) fn magnitude_spectrum(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut re = signal.to_vec();
    let mut im = vec![0.0; n];
    fft_pow2(&mut re, &mut im);
    (0..=n / 2)
        .map(|k| libm::sqrt(re[k] * re[k] + im[k] * im[k]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    /// Direct O(n^2) DFT magnitude, the independent reference.
    fn dft_magnitude(signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &x) in signal.iter().enumerate() {
                    let ang = -2.0 * core::f64::consts::PI * (k * t) as f64 / n as f64;
                    re += x * libm::cos(ang);
                    im += x * libm::sin(ang);
                }
                libm::sqrt(re * re + im * im)
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        let mut rng = crate::rng::Rng::new(11);
        let signal: Vec<f64> = (0..64).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let fast = magnitude_spectrum(&signal);
        let slow = dft_magnitude(&signal);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn pure_tone_peaks_at_its_bin() {
        let n = 256;
        let k0 = 32; // 4 Hz at 32 Hz sampling
        let signal: Vec<f64> = (0..n)
            .map(|t| libm::sin(2.0 * core::f64::consts::PI * (k0 * t) as f64 / n as f64))
            .collect();
        let mag = magnitude_spectrum(&signal);
        let peak = (0..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
        assert_eq!(peak, k0);
        // A bin-centered tone concentrates all energy in its bin.
        assert!((mag[k0] - n as f64 / 2.0).abs() < 1e-6);
    }
}
