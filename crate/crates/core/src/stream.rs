//! Counter-based, splittable random streams.
//!
//! A [`StreamKey`] is a 128-bit key derived by absorbing 64-bit words into two
//! independent SplitMix64-style lanes. Draws are pure functions of
//! `(key, index, counter)`, so any lattice coordinate can be sampled directly
//! without generating the values in between, and results do not depend on
//! evaluation order or thread count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const LANE_B: u64 = 0xd1b5_4a32_d192_ed03;
const ABSORB: u64 = 0xff51_afd7_ed55_8ccd;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.wrapping_mul(ABSORB) ^ word.wrapping_add(GOLDEN))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    a: u64,
    b: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self {
            a: absorb(GOLDEN, seed),
            b: absorb(LANE_B, seed),
        }
    }

    /// Derives an independent child stream labelled by `label`.
    pub fn split(self, label: u64) -> Self {
        Self {
            a: absorb(self.a ^ self.b.rotate_left(17), label),
            b: absorb(self.b ^ self.a.rotate_left(41), label ^ LANE_B),
        }
    }

    /// A uniform 128-bit draw at coordinate `(index, counter)`.
    #[inline]
    pub fn draw_u128(&self, index: i128, counter: u32) -> u128 {
        let lo = index as u128 as u64;
        let hi = ((index as u128) >> 64) as u64;
        let mut a = absorb(absorb(absorb(self.a, lo), hi), counter as u64);
        let mut b = absorb(absorb(absorb(self.b, hi), lo), !(counter as u64));
        a = mix64(a ^ b.rotate_left(32));
        b = mix64(b.wrapping_add(a));
        ((a as u128) << 64) | b as u128
    }

    /// A uniform 64-bit draw at `index`.
    #[inline]
    pub fn draw_u64(&self, index: i128) -> u64 {
        let lo = index as u128 as u64;
        let hi = ((index as u128) >> 64) as u64;
        mix64(absorb(absorb(self.a, lo), hi) ^ self.b)
    }

    /// A uniform double in `[0, 1)` using the top 53 bits.
    #[inline]
    pub fn draw_unit(&self, index: i128) -> f64 {
        (self.draw_u64(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Number of `u ∈ [0, 2^128)` per unit of a `1/q` event: `⌊2^128 / q⌋`.
pub fn unit_width(q: u128) -> u128 {
    assert!(q >= 2);
    let floor = u128::MAX / q;
    // 2^128 = (u128::MAX + 1); bump when q divides 2^128 exactly
    if u128::MAX % q == q - 1 {
        floor + 1
    } else {
        floor
    }
}

/// Outcome of comparing a 128-bit uniform against the exact thresholds of a
/// symmetric three-point law with tail probability `1/q` on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreePointDraw {
    Positive,
    Negative,
    Zero,
    /// `u` fell in the leftover range `[q·w, 2^128)`; redraw.
    Reject,
}

/// Classifies `u` with acceptance range `[0, q·w)`, `w = ⌊2^128/q⌋`.
///
/// On the accepted range `u < w` has probability exactly `w/(q·w) = 1/q`,
/// as does `w ≤ u < 2w`; the comparison is pure integer arithmetic.
#[inline]
pub fn classify_three_point(u: u128, q: u128, width: u128) -> ThreePointDraw {
    if let Some(limit) = q.checked_mul(width) {
        if u >= limit {
            return ThreePointDraw::Reject;
        }
    }
    if u < width {
        ThreePointDraw::Positive
    } else if u - width < width {
        ThreePointDraw::Negative
    } else {
        ThreePointDraw::Zero
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure() {
        let key = StreamKey::new(7).split(3);
        assert_eq!(key.draw_u128(-5, 0), key.draw_u128(-5, 0));
        assert_ne!(key.draw_u128(-5, 0), key.draw_u128(-5, 1));
        assert_ne!(key.draw_u128(-5, 0), key.draw_u128(5, 0));
        assert_ne!(key.split(1), key.split(2));
        assert_ne!(StreamKey::new(1), StreamKey::new(2));
    }

    #[test]
    fn unit_draws_in_range() {
        let key = StreamKey::new(11);
        let mean = (0..100_000).map(|i| key.draw_unit(i)).sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.005);
        assert!((0..1000).all(|i| (0.0..1.0).contains(&key.draw_unit(i))));
    }

    #[test]
    fn unit_width_exact() {
        assert_eq!(unit_width(2), 1u128 << 127);
        assert_eq!(unit_width(64), 1u128 << 122);
        assert_eq!(unit_width(3), u128::MAX / 3);
        // q·w ≤ 2^128 < q·(w+1)
        for q in [3u128, 5, 64, 1000, 131_072, (1 << 100) + 7] {
            let w = unit_width(q);
            if q.is_power_of_two() {
                assert_eq!(w, 1u128 << (128 - q.trailing_zeros()));
            } else {
                assert!(q.checked_mul(w).is_some());
                assert!(q.checked_mul(w + 1).is_none());
            }
        }
    }

    #[test]
    fn threshold_arithmetic_is_exact() {
        // With q = 2kM, each sign occupies exactly w of the q·w accepted
        // values, so P(+) = P(−) = 1/q with no rounding.
        for q in [64u128, 96, 262_144, 2 * 3 * 6_442_450_944] {
            let w = unit_width(q);
            assert_eq!(classify_three_point(0, q, w), ThreePointDraw::Positive);
            assert_eq!(classify_three_point(w - 1, q, w), ThreePointDraw::Positive);
            assert_eq!(classify_three_point(w, q, w), ThreePointDraw::Negative);
            assert_eq!(
                classify_three_point(2 * w - 1, q, w),
                ThreePointDraw::Negative
            );
            assert_eq!(classify_three_point(2 * w, q, w), ThreePointDraw::Zero);
            match q.checked_mul(w) {
                Some(limit) => {
                    assert_eq!(classify_three_point(limit - 1, q, w), ThreePointDraw::Zero);
                    if limit < u128::MAX {
                        assert_eq!(classify_three_point(limit, q, w), ThreePointDraw::Reject);
                    }
                }
                None => assert_eq!(classify_three_point(u128::MAX, q, w), ThreePointDraw::Zero),
            }
        }
    }
}
