//! Independent oracles shared by the integration tests. Nothing here calls the
//! closed forms under test; coefficients are recounted from definitions and
//! moments are enumerated in exact rational arithmetic.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use quenched_core::innovations::LatticeView;
use quenched_core::schedule::ParameterSchedule;

/// Number of pairs `(i, j) ∈ [0, ℓ)²` with `i + j = r`.
pub fn pair_count(ell: u64, r: i128) -> i64 {
    let mut c = 0;
    for i in 0..ell as i128 {
        let j = r - i;
        if (0..ell as i128).contains(&j) {
            c += 1;
        }
    }
    c
}

/// Integer weights `w` with `S_n(f)` block `k` equal to `∑_i w_i e_k(i)`,
/// accumulated from `f(t) = ∑_{i<ℓ} e(t−N+i) − ∑_{ℓ≤i<2ℓ} e(t−N+i)`.
pub fn sum_weights(s: &ParameterSchedule, k: usize, n: i128) -> BTreeMap<i128, i64> {
    let ell = s.ell(k) as i128;
    let nk = s.n_i128(k).unwrap();
    let mut w = BTreeMap::new();
    for t in 1..=n {
        for i in 0..2 * ell {
            *w.entry(t - nk + i).or_insert(0) += if i < ell { 1 } else { -1 };
        }
    }
    w.retain(|_, v| *v != 0);
    w
}

/// `E⁰[S_n(f)]` by summing weights over past indices only.
pub fn brute_conditional_mean<V: LatticeView>(view: &V, n: i128, k_max: usize) -> f64 {
    let s = view.schedule();
    (1..=k_max)
        .map(|k| {
            sum_weights(s, k, n)
                .into_iter()
                .filter(|(i, _)| *i <= 0)
                .map(|(i, w)| w as f64 * view.value_at(k, i))
                .sum::<f64>()
        })
        .sum()
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn big_rat(n: &BigUint, d: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(n.clone()), BigInt::from(d.clone()))
}

pub fn to_f64(x: &BigRational) -> f64 {
    // scale to keep 60 bits of precision for tiny or huge ratios
    let num = x.numer().to_f64().unwrap_or(f64::NAN);
    let den = x.denom().to_f64().unwrap_or(f64::NAN);
    if num.is_finite() && den.is_finite() && den != 0.0 {
        return num / den;
    }
    let shift = x.numer().bits() as i64 - x.denom().bits() as i64 - 60;
    let scaled = if shift >= 0 {
        x / BigRational::from_integer(BigInt::one() << shift as usize)
    } else {
        x * BigRational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let v = scaled.numer().to_f64().unwrap() / scaled.denom().to_f64().unwrap();
    v * 2f64.powi(shift as i32)
}

/// Exact block moments, in units where `e_k ∈ {−1, 0, +1}` scaled by
/// `v² = M/ℓ²`: returns `(E e², E f², E g²)`.
pub struct RationalMoments {
    pub e2: BigRational,
    pub f2: BigRational,
    pub g2: BigRational,
}

/// Sums over all `3^{2ℓ}` sign patterns of the entries read by `f_k(0)`.
pub fn enumerate_rational(s: &ParameterSchedule, k: usize) -> RationalMoments {
    let ell = s.ell(k) as usize;
    let width = 2 * ell;
    let two_km = BigUint::from(2 * k as u64) * s.m(k);
    let p = big_rat(&BigUint::one(), &two_km);
    let stay = BigRational::one() - &p * rat(2, 1);
    let v2 = big_rat(s.m(k), &BigUint::from((ell * ell) as u64));
    let (mut e2, mut f2, mut g2) = (
        BigRational::zero(),
        BigRational::zero(),
        BigRational::zero(),
    );
    for code in 0..3u64.pow(width as u32) {
        let mut rest = code;
        let mut prob = BigRational::one();
        let mut signs = Vec::with_capacity(width);
        for _ in 0..width {
            let (sgn, w) = match rest % 3 {
                0 => (0i64, &stay),
                1 => (1, &p),
                _ => (-1, &p),
            };
            rest /= 3;
            prob *= w;
            signs.push(sgn);
        }
        let f: i64 = signs[..ell].iter().sum::<i64>() - signs[ell..].iter().sum::<i64>();
        let g: i64 = (0..width - 1)
            .map(|r| pair_count(ell as u64, r as i128) * signs[r])
            .sum();
        e2 += &prob * rat(signs[0] * signs[0], 1);
        f2 += &prob * rat(f * f, 1);
        g2 += &prob * rat(g * g, 1);
    }
    RationalMoments {
        e2: e2 * &v2,
        f2: f2 * &v2,
        g2: g2 * v2,
    }
}

/// The two leading Bonferroni terms evaluated exactly with `p = 1/(2kM_k)`.
pub fn bonferroni_rational(s: &ParameterSchedule, k: usize) -> BigRational {
    let ell = s.ell(k);
    let m = BigInt::from(s.m(k).clone());
    let p = BigRational::new(BigInt::one(), BigInt::from(2 * k as u64) * &m);
    let stay = BigRational::one() - &p * rat(2, 1);
    let mut stay_pow = BigRational::one();
    for _ in 0..(2 * ell - 2) {
        stay_pow *= &stay;
    }
    let lead = BigRational::from_integer(&m - BigInt::from(2 * ell - 2));
    let pair = BigRational::from_integer(&m - BigInt::from(2 * ell));
    let first = lead * &p * &stay_pow;
    let second = pair.clone() * pair * &p * &p * stay_pow * rat(1, 2);
    first - second
}
