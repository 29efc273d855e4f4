//! Seeded random number generation.
//!
//! Every stochastic step in the pipeline (synthetic EEG, weight
//! initialization, epoch shuffling, subset sampling) draws from [`Rng`], a
//! xoshiro256** generator seeded through SplitMix64. Both algorithms are
//! fixed, published constants, so a seed reproduces the same stream on any
//! platform and in any port of this code:
//!
//! - SplitMix64: Steele, Lea, Flood, "Fast splittable pseudorandom number
//!   generators" (the standard 0x9E3779B97F4A7C15 increment mixer).
//! - xoshiro256**: Blackman & Vigna, <https://prng.di.unimi.it/>.

/// SplitMix64 state advance + output mix. Used for seeding and for deriving
/// independent child seeds from a master seed.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a stream tag. Distinct tags give
/// independent-looking streams; the same (master, tag) pair always gives the
/// same child.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut s = master ^ tag.wrapping_mul(0xA076_1D64_78BD_642F);
    splitmix64(&mut s)
}

/// FNV-1a 64-bit hash. Used to turn subject identifiers into stable stream
/// tags so per-fold seeds do not depend on subject ordering.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// xoshiro256** generator.
pub struct Rng {
    s: [u64; 4],
    gauss_spare: Option<f64>,
}

impl Rng {
    /// Creates a generator from a 64-bit seed, expanding it to the 256-bit
    /// state with SplitMix64 as recommended by the xoshiro authors.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s, gauss_spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / ((1u64 << 53) as f64))
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). `n` must be non-zero. Plain modulo
    /// reduction: the bias is below 2^-50 for every n used here and the
    /// mapping stays identical across ports.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via the Box-Muller transform (polar-free form).
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        // u in (0, 1] so the log is finite.
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u));
        let theta = 2.0 * core::f64::consts::PI * v;
        self.gauss_spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
