//! Seeded, platform-stable random streams.
//!
//! Every random quantity in the toolkit is drawn from xoshiro256++ seeded via
//! SplitMix64 (`SeedableRng::seed_from_u64`). Stream seeds are derived from a
//! base seed plus a small tuple of integers with [`derive_seed`], so two
//! implementations that follow the same recipe produce identical draws:
//!
//! * uniform `f64` in `[0, 1)`: `(next_u64() >> 11) * 2^-53`
//! * standard normal: Box-Muller, `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`, one
//!   normal per pair of uniforms (the sine half is discarded).

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Stream tags. Kept stable: changing them changes every generated dataset.
pub mod stream {
    pub const BASE_SERIES: u64 = 1;
    pub const EVENTS: u64 = 2;
    pub const ATTRIBUTES: u64 = 3;
    pub const INIT: u64 = 10;
    pub const SHUFFLE: u64 = 11;
    pub const DROPOUT: u64 = 12;
    pub const POLICY: u64 = 20;
    pub const EMBED: u64 = 30;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base` with SplitMix64 finalisation after every word.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(base), |acc, &p| splitmix(acc ^ p))
}

pub fn stream_rng(base: u64, parts: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(base, parts))
}

#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[lo, hi)`.
#[inline]
pub fn uniform_range<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = uniform(rng);
    let u2 = uniform(rng);
    libm::sqrt(-2.0 * libm::log(1.0 - u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Uniform integer in `0..n` by rejection sampling. `n` must be positive.
pub fn below<R: Rng + ?Sized>(rng: &mut R, n: u64) -> u64 {
    debug_assert!(n > 0);
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % n;
        }
    }
}

/// Index drawn proportionally to non-negative `weights`. Returns `None` when
/// all weights are zero.
pub fn weighted_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = uniform(rng) * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return Some(i);
        }
    }
    weights.iter().rposition(|&w| w > 0.0)
}

/// Fisher-Yates shuffle.
pub fn shuffle<T, R: Rng + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
