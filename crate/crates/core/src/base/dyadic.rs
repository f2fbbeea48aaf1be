//! Dyadic integers under a biased product measure, and the odometer acting on them.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use super::CocycleValue;
use crate::error::{invalid, Error, Result};
use crate::rng::{bernoulli_word, counter_rng};

/// Bits sampled eagerly when a point is drawn.
pub const INITIAL_DEPTH: usize = 64;
/// Carry/borrow chains longer than this are reported as failures.
pub const DEFAULT_DEPTH_CAP: usize = 4096;

const WORD_BITS: usize = 64;

/// A point of the group of dyadic integers, `x = sum_i x_i 2^(i-1)`, bits
/// indexed from 1 (bit 1 is the least significant).
///
/// Bits beyond the materialized words are a pure function of
/// `(tail_seed, word index)`, so the point is a fixed group element even though
/// only finitely many bits are ever stored. Translating a point keeps the tail
/// seed, which makes every untouched high bit identical to the original.
#[derive(Clone)]
pub struct DyadicPoint {
    words: SmallVec<[u64; 2]>,
    tail_seed: u64,
    p: f64,
}

impl DyadicPoint {
    /// Draws a point of the product measure with `P(bit = 1) = p`.
    pub fn sample<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> Self {
        let first = bernoulli_word(rng, p);
        let tail_seed = rng.next_u64();
        Self {
            words: smallvec![first],
            tail_seed,
            p,
        }
    }

    /// Point whose leading bits are `bits` (each 0 or 1, bit 1 first). The rest
    /// of the last partial word and everything above it come from the tail stream.
    pub fn from_bits(bits: &[u8], p: f64, tail_seed: u64) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(invalid("bits", format!("bit value {b} is not 0 or 1")));
        }
        let n_words = bits.len().div_ceil(WORD_BITS).max(1);
        let mut point = Self {
            words: SmallVec::new(),
            tail_seed,
            p,
        };
        for j in 0..n_words {
            let mut w = point.derived_word(j);
            for (k, &b) in bits.iter().enumerate().skip(j * WORD_BITS).take(WORD_BITS) {
                let mask = 1u64 << (k - j * WORD_BITS);
                if b == 1 {
                    w |= mask;
                } else {
                    w &= !mask;
                }
            }
            point.words.push(w);
        }
        Ok(point)
    }

    pub fn from_words(words: &[u64], p: f64, tail_seed: u64) -> Self {
        let mut words: SmallVec<[u64; 2]> = words.iter().copied().collect();
        if words.is_empty() {
            words.push(0);
            words[0] = Self { words: SmallVec::new(), tail_seed, p }.derived_word(0);
        }
        Self { words, tail_seed, p }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn tail_seed(&self) -> u64 {
        self.tail_seed
    }

    /// Number of bits currently stored.
    pub fn materialized_depth(&self) -> usize {
        self.words.len() * WORD_BITS
    }

    fn derived_word(&self, j: usize) -> u64 {
        bernoulli_word(&mut counter_rng(self.tail_seed, j as u64), self.p)
    }

    /// Word `j` holds bits `64 j + 1 ..= 64 j + 64`.
    pub fn word(&self, j: usize) -> u64 {
        match self.words.get(j) {
            Some(&w) => w,
            None => self.derived_word(j),
        }
    }

    /// Bit `i`, indexed from 1.
    pub fn bit(&self, i: usize) -> u8 {
        assert!(i >= 1, "dyadic bits are indexed from 1");
        let k = i - 1;
        ((self.word(k / WORD_BITS) >> (k % WORD_BITS)) & 1) as u8
    }

    /// `sum_{i <= 64} x_i 2^-i`.
    pub fn dyadic_sum(&self) -> f64 {
        self.words[0].reverse_bits() as f64 * (1.0 / 18_446_744_073_709_551_616.0)
    }

    fn ensure_word(&mut self, j: usize) {
        while self.words.len() <= j {
            let w = self.derived_word(self.words.len());
            self.words.push(w);
        }
    }

    /// In-place translation by `m` with binary carry (or borrow when `m < 0`).
    pub fn add_assign(&mut self, m: i64, cap_bits: usize) -> Result<()> {
        if m == 0 {
            return Ok(());
        }
        let cap_words = cap_bits.div_ceil(WORD_BITS).max(1);
        let negative = m < 0;
        let mut operand = m.unsigned_abs();
        let mut j = 0;
        loop {
            if j >= cap_words {
                return Err(Error::DepthCapExceeded { cap: cap_bits });
            }
            self.ensure_word(j);
            let (next, overflow) = if negative {
                self.words[j].overflowing_sub(operand)
            } else {
                self.words[j].overflowing_add(operand)
            };
            self.words[j] = next;
            if !overflow {
                return Ok(());
            }
            operand = 1;
            j += 1;
        }
    }

    pub fn translated(&self, m: i64, cap_bits: usize) -> Result<Self> {
        let mut out = self.clone();
        out.add_assign(m, cap_bits)?;
        Ok(out)
    }

    /// `min{n : x_n = 0} - 2`.
    pub fn phi(&self, cap_bits: usize) -> Result<i64> {
        let cap_words = cap_bits.div_ceil(WORD_BITS).max(1);
        for j in 0..cap_words {
            let w = self.word(j);
            if w != u64::MAX {
                let first_zero = j * WORD_BITS + w.trailing_ones() as usize + 1;
                return Ok(first_zero as i64 - 2);
            }
        }
        Err(Error::DepthCapExceeded { cap: cap_bits })
    }

    /// `log_lambda` of `prod_i p(other_i) / p(self_i)`, i.e. (#bits 1 -> 0) - (#bits 0 -> 1).
    /// Both points must share their tail stream, so only stored words can differ.
    pub fn flip_exponent(&self, other: &DyadicPoint) -> i64 {
        debug_assert_eq!(self.tail_seed, other.tail_seed);
        let n = self.words.len().max(other.words.len());
        (0..n)
            .map(|j| {
                let (a, b) = (self.word(j), other.word(j));
                (a & !b).count_ones() as i64 - (!a & b).count_ones() as i64
            })
            .sum()
    }
}

impl PartialEq for DyadicPoint {
    fn eq(&self, other: &Self) -> bool {
        if self.tail_seed != other.tail_seed || self.p.to_bits() != other.p.to_bits() {
            return false;
        }
        let n = self.words.len().max(other.words.len());
        (0..n).all(|j| self.word(j) == other.word(j))
    }
}

impl fmt::Debug for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: String = (1..=16.min(self.materialized_depth()))
            .map(|i| char::from(b'0' + self.bit(i)))
            .collect();
        f.debug_struct("DyadicPoint")
            .field("bits", &format_args!("{shown}..."))
            .field("depth", &self.materialized_depth())
            .field("tail_seed", &self.tail_seed)
            .finish()
    }
}

/// Translation by 1 on the dyadic integers, with the product measure
/// `mu_p([e_1..e_n]) = prod p(e_k)`, `p(1) = p`, `p(0) = 1 - p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Odometer {
    pub p: f64,
    #[serde(default = "default_cap")]
    pub depth_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DEPTH_CAP
}

impl Odometer {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.5 && p < 1.0) {
            return Err(invalid("p", format!("odometer bias must lie in (1/2, 1), got {p}")));
        }
        Ok(Self {
            p,
            depth_cap: DEFAULT_DEPTH_CAP,
        })
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap.max(WORD_BITS);
        self
    }

    /// `lambda = (1 - p) / p`, the ratio `p(0) / p(1)`.
    pub fn lambda(&self) -> f64 {
        (1.0 - self.p) / self.p
    }

    pub fn sample_point<R: RngCore + ?Sized>(&self, rng: &mut R) -> DyadicPoint {
        DyadicPoint::sample(self.p, rng)
    }

    pub fn apply(&self, x: &DyadicPoint, m: i64) -> Result<DyadicPoint> {
        x.translated(m, self.depth_cap)
    }

    pub fn phi(&self, x: &DyadicPoint) -> Result<i64> {
        x.phi(self.depth_cap)
    }

    /// `tau^m x` together with the lambda-exponent of the m-step derivative,
    /// read off the flipped bits.
    pub fn apply_with_exponent(&self, x: &DyadicPoint, m: i64) -> Result<(DyadicPoint, i64)> {
        let y = self.apply(x, m)?;
        let e = x.flip_exponent(&y);
        Ok((y, e))
    }

    /// Exponent of the m-step derivative as a telescoping sum of `phi` along the orbit.
    pub fn exponent_telescoping(&self, x: &DyadicPoint, m: i64) -> Result<i64> {
        let (mut cur, sign) = if m >= 0 {
            (x.clone(), 1)
        } else {
            (self.apply(x, m)?, -1)
        };
        let mut total = 0i64;
        for _ in 0..m.unsigned_abs() {
            total += cur.phi(self.depth_cap)?;
            cur.add_assign(1, self.depth_cap)?;
        }
        Ok(sign * total)
    }

    /// Radon-Nikodym derivative of `tau^m` at `x`, computed by the telescoping
    /// cocycle product and by the direct bit ratio; the two must agree exactly.
    pub fn rn(&self, x: &DyadicPoint, m: i64) -> Result<CocycleValue> {
        let telescoped = self.exponent_telescoping(x, m)?;
        let (_, ratio) = self.apply_with_exponent(x, m)?;
        if telescoped != ratio {
            return Err(Error::Inconsistent(format!(
                "odometer derivative exponent: telescoping {telescoped} vs bit ratio {ratio}"
            )));
        }
        Ok(CocycleValue::lattice(ratio, self.lambda()))
    }
}

/// `x + m` in the dyadic group.
pub fn odometer_apply(x: &DyadicPoint, m: i64) -> Result<DyadicPoint> {
    x.translated(m, DEFAULT_DEPTH_CAP)
}

/// `min{n : x_n = 0} - 2`, bits indexed from 1.
pub fn phi(x: &DyadicPoint) -> Result<i64> {
    x.phi(DEFAULT_DEPTH_CAP)
}

/// Derivative of the m-step translation at `x` under the point's own measure.
pub fn odometer_rn(x: &DyadicPoint, m: i64) -> Result<CocycleValue> {
    Odometer::new(x.p())?.rn(x, m)
}
