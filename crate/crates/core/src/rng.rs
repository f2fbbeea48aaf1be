//! Seed derivation and random streams.
//!
//! All randomness flows from a single 64-bit seed through a derivation tree:
//! `seed -> purpose -> (chunk | path | worker)`. A purpose is a fixed label
//! ([`Purpose`]); the leaf stream is a ChaCha8 stream selected with
//! `set_stream`, so the values drawn for sample `i` never depend on how work
//! is split across threads.
//!
//! Lazily materialized objects (dyadic bits beyond the initial depth, shift
//! coordinates) use counter-derived generators: the generator for index `k`
//! is a pure function of `(seed, k)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// The generator handed to samplers.
pub type SimRng = ChaCha8Rng;

/// Labels of the second level of the seed tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Paths = 1,
    Compensator = 2,
    Covariance = 3,
    Koopman = 4,
    ZeroType = 5,
    Rigidity = 6,
    LevyExponent = 7,
    CorrelationQ = 8,
    Integrability = 9,
    ScalingLhs = 10,
    ScalingRhs = 11,
    QuasiInvariance = 12,
    Cocycle = 13,
    SemiStable = 14,
    Validation = 15,
    Oracle = 16,
    Marginals = 17,
}

/// Mixes a parent seed and a label into a child seed.
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    let mut outer = SplitMix64::seed_from_u64(parent);
    let mixed = outer.next_u64() ^ label;
    SplitMix64::seed_from_u64(mixed).next_u64()
}

pub fn purpose_seed(seed: u64, purpose: Purpose) -> u64 {
    derive_seed(seed, purpose as u64)
}

/// Independent stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream `index` of the subtree labelled `purpose`.
pub fn purpose_stream(seed: u64, purpose: Purpose, index: u64) -> SimRng {
    stream(purpose_seed(seed, purpose), index)
}

/// Fast generator that is a pure function of `(seed, index)`.
pub fn counter_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, index))
}

/// 64 independent Bernoulli(p) bits packed in a word.
///
/// Each bit compares a lazily generated uniform variate with `p`, one binary
/// digit at a time; all 64 comparisons run in parallel on the word. The result
/// is exact for the binary value of `p` and needs about eight random words.
pub fn bernoulli_word<R: RngCore + ?Sized>(rng: &mut R, p: f64) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let mut out = 0u64;
    let mut undecided = u64::MAX;
    let mut frac = p;
    while undecided != 0 {
        frac *= 2.0;
        let digit = frac >= 1.0;
        if digit {
            frac -= 1.0;
        }
        let r = rng.next_u64();
        if digit {
            // uniform digit 0 under a p digit 1: u < p
            out |= undecided & !r;
            undecided &= r;
        } else {
            undecided &= !r;
        }
    }
    out
}

/// Uniform on the open interval (0, 1).
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
