//! Block parameter sequences `ℓ_k`, `M_k`, `N_k` and their closed-form
//! moments.
//!
//! `M_k` and `N_k` grow super-exponentially under the default rule
//! `M_k = k·ℓ_k⁵·M_{k−1}` (with `ℓ_k = 2^k`, `M_5` already exceeds `u64`), so
//! they are stored as [`BigUint`] and every real-valued ratio is evaluated in
//! log space.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How `M_1..M_K` are chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MRule {
    /// `M_k = max(k·ℓ_k⁵·M_{k−1}, 2ℓ_k)` starting from `M_0`.
    Default,
    /// User supplied values, validated against the schedule invariants.
    Explicit(Vec<BigUint>),
}

/// The sequences `ℓ_k`, `M_k` and partial sums `N_k = M_1 + … + M_k`.
///
/// Blocks are indexed from 1. Invariants (checked on construction):
/// `ℓ` and `M` strictly increasing, `M_k ≥ 2ℓ_k`, `N_k = N_{k−1} + M_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSchedule {
    ell: Vec<u64>,
    m0: BigUint,
    m: Vec<BigUint>,
    n: Vec<BigUint>,
}

impl ParameterSchedule {
    /// Builds a schedule from the first `k_max` entries of `ell`.
    pub fn build(ell: &[u64], k_max: usize, rule: MRule) -> Result<Self> {
        Self::build_with_m0(ell, k_max, rule, BigUint::one())
    }

    pub fn build_with_m0(ell: &[u64], k_max: usize, rule: MRule, m0: BigUint) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidSchedule("k_max must be at least 1".into()));
        }
        if ell.len() < k_max {
            return Err(Error::InvalidSchedule(format!(
                "need {k_max} values of ell, got {}",
                ell.len()
            )));
        }
        if m0.is_zero() {
            return Err(Error::InvalidSchedule("M_0 must be positive".into()));
        }
        let ell = ell[..k_max].to_vec();
        validate_ell(&ell)?;

        let m = match rule {
            MRule::Default => {
                let mut out = Vec::with_capacity(k_max);
                let mut prev = m0.clone();
                for (idx, &l) in ell.iter().enumerate() {
                    let k = idx as u64 + 1;
                    let raw = &prev * BigUint::from(k) * BigUint::from(l).pow(5);
                    let floor = BigUint::from(l) * 2u32;
                    let mk = raw.max(floor);
                    prev = mk.clone();
                    out.push(mk);
                }
                out
            }
            MRule::Explicit(values) => {
                if values.len() < k_max {
                    return Err(Error::InvalidSchedule(format!(
                        "need {k_max} values of M, got {}",
                        values.len()
                    )));
                }
                values[..k_max].to_vec()
            }
        };

        let mut prev = &m0;
        for (idx, (mk, &l)) in m.iter().zip(&ell).enumerate() {
            let k = idx + 1;
            if mk <= prev {
                return Err(Error::InvalidSchedule(format!(
                    "M must be strictly increasing: M_{k} = {mk} <= M_{} = {prev}",
                    k - 1
                )));
            }
            if *mk < BigUint::from(l) * 2u32 {
                return Err(Error::InvalidSchedule(format!(
                    "M_{k} = {mk} violates M_k >= 2*ell_k = {}",
                    2 * l as u128
                )));
            }
            prev = mk;
        }

        let mut n = Vec::with_capacity(k_max);
        let mut acc = BigUint::zero();
        for mk in &m {
            acc += mk;
            n.push(acc.clone());
        }
        Ok(Self { ell, m0, m, n })
    }

    /// The default-rule schedule with `ℓ_k = 2^k`.
    pub fn pow2(k_max: usize) -> Result<Self> {
        if k_max > 63 {
            return Err(Error::InvalidSchedule(
                "ell_k = 2^k overflows u64 beyond k = 63".into(),
            ));
        }
        let ell: Vec<u64> = (1..=k_max as u32).map(|k| 1u64 << k).collect();
        Self::build(&ell, k_max, MRule::Default)
    }

    pub fn k_max(&self) -> usize {
        self.ell.len()
    }

    /// `ℓ_k` for `1 ≤ k ≤ k_max`.
    pub fn ell(&self, k: usize) -> u64 {
        self.ell[self.idx(k)]
    }

    pub fn ells(&self) -> &[u64] {
        &self.ell
    }

    /// `M_k`; `M_0` for `k = 0`.
    pub fn m(&self, k: usize) -> &BigUint {
        if k == 0 {
            &self.m0
        } else {
            &self.m[self.idx(k)]
        }
    }

    pub fn m0(&self) -> &BigUint {
        &self.m0
    }

    /// `N_k`, with `N_0 = 0`.
    pub fn n(&self, k: usize) -> BigUint {
        if k == 0 {
            BigUint::zero()
        } else {
            self.n[self.idx(k)].clone()
        }
    }

    /// `N_k` as `i128` when representable. `N_0 = 0`.
    pub fn n_i128(&self, k: usize) -> Option<i128> {
        if k == 0 {
            Some(0)
        } else {
            self.n[self.idx(k)].to_i128()
        }
    }

    /// `ln M_k` (k = 0 gives `ln M_0`).
    pub fn ln_m(&self, k: usize) -> f64 {
        ln_big(self.m(k))
    }

    /// The unique block `k` with `N_{k−1} < n ≤ N_k`, if `1 ≤ n ≤ N_{k_max}`.
    pub fn block_of(&self, n: &BigUint) -> Option<usize> {
        if n.is_zero() {
            return None;
        }
        let pos = self.n.partition_point(|nk| nk < n);
        (pos < self.n.len()).then_some(pos + 1)
    }

    pub fn block_of_i128(&self, n: i128) -> Option<usize> {
        if n < 1 {
            return None;
        }
        self.block_of(&BigUint::from(n as u128))
    }

    /// The triangular weight `c_{k,r}`: `r + 1` on the rising side,
    /// `2ℓ_k − 1 − r` on the falling side, zero outside `0..=2ℓ_k−2`.
    pub fn coefficient(&self, k: usize, r: i128) -> u64 {
        triangle_coefficient(self.ell(k), r)
    }

    /// Law of the block-`k` innovation `e_k`.
    pub fn three_point_law(&self, k: usize) -> ThreePointLaw {
        let l = self.ell(k) as f64;
        let magnitude = match self.m(k).to_f64() {
            Some(m) if m.is_finite() => m.sqrt() / l,
            _ => (0.5 * self.ln_m(k) - l.ln()).exp(),
        };
        ThreePointLaw {
            k,
            magnitude,
            denominator: BigUint::from(2 * k as u64) * self.m(k),
        }
    }

    /// Closed-form norms of `e_k`, `f_k` and the `L¹` bounds on `h_k`, `g_k`.
    pub fn exact_block_moments(&self, k: usize) -> BlockMoments {
        let kf = k as f64;
        let l = self.ell(k) as f64;
        let sqrt_m = (0.5 * self.ln_m(k)).exp();
        let e_l1 = 1.0 / (kf * l * sqrt_m);
        let e_l2_sq = 1.0 / (kf * l * l);
        BlockMoments {
            k,
            e_l1,
            e_l2_sq,
            f_l2_sq: 2.0 / (kf * l),
            h_l1_bound: l * e_l1,
            g_l1_bound: l / (kf * sqrt_m),
        }
    }

    /// Evaluates the summands of
    /// `∑_k [1/√(kℓ_k) + ℓ_k²·√(M_{k−1}/M_k)]` up to `k_max`.
    ///
    /// The tail bound is a geometric extrapolation from the last term ratio
    /// and is only reported when that ratio is below one.
    pub fn check_condition2(&self) -> SummabilityReport {
        let mut terms = Vec::with_capacity(self.k_max());
        let mut log_summands = Vec::with_capacity(self.k_max());
        let mut partial_sums = Vec::with_capacity(self.k_max());
        let mut acc = 0.0;
        for k in 1..=self.k_max() {
            let l = self.ell(k) as f64;
            let first = -0.5 * (k as f64 * l).ln();
            let second = 2.0 * l.ln() + 0.5 * (self.ln_m(k - 1) - self.ln_m(k));
            let term = first.exp() + second.exp();
            acc += term;
            terms.push(term);
            log_summands.push((first, second));
            partial_sums.push(acc);
        }
        let tail_bound = match terms.as_slice() {
            [.., prev, last] if last < prev && *prev > 0.0 => {
                let rho = last / prev;
                TailBound::Bounded(last * rho / (1.0 - rho))
            }
            _ => TailBound::Unbounded,
        };
        SummabilityReport {
            terms,
            log_summands,
            partial_sums,
            tail_bound,
        }
    }

    pub fn to_doc(&self) -> ScheduleDoc {
        ScheduleDoc {
            k_max: self.k_max(),
            ell: self.ell.clone(),
            m0: self.m0.to_string(),
            m: self.m.iter().map(|x| x.to_string()).collect(),
            n: Some(self.n.iter().map(|x| x.to_string()).collect()),
        }
    }

    pub fn from_doc(doc: &ScheduleDoc) -> Result<Self> {
        let m0 = parse_big(&doc.m0)?;
        let m = doc
            .m
            .iter()
            .map(|s| parse_big(s))
            .collect::<Result<Vec<_>>>()?;
        let schedule = Self::build_with_m0(&doc.ell, doc.k_max, MRule::Explicit(m), m0)?;
        if let Some(n) = &doc.n {
            let expected: Vec<String> = schedule.n.iter().map(|x| x.to_string()).collect();
            if *n != expected {
                return Err(Error::InvalidSchedule(
                    "N does not equal the partial sums of M".into(),
                ));
            }
        }
        Ok(schedule)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScheduleDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    fn idx(&self, k: usize) -> usize {
        assert!(
            (1..=self.k_max()).contains(&k),
            "block {k} outside 1..={}",
            self.k_max()
        );
        k - 1
    }
}

fn validate_ell(ell: &[u64]) -> Result<()> {
    if ell.first() == Some(&0) {
        return Err(Error::InvalidSchedule("ell must be positive".into()));
    }
    if let Some(w) = ell.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule(format!(
            "ell must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn parse_big(s: &str) -> Result<BigUint> {
    s.parse::<BigUint>()
        .map_err(|e| Error::InvalidSchedule(format!("bad integer {s:?}: {e}")))
}

/// Natural log of a big integer, accurate to double precision at any size.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().unwrap_or(f64::NAN).ln()
    } else {
        let shift = bits - 64;
        (x >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * LN_2
    }
}

/// `c_r` for a triangle of half-width `ell`.
pub fn triangle_coefficient(ell: u64, r: i128) -> u64 {
    let l = ell as i128;
    if r < 0 || r > 2 * l - 2 {
        0
    } else if r < l {
        (r + 1) as u64
    } else {
        (2 * l - 1 - r) as u64
    }
}

/// `∑_r c_r²` for a triangle of half-width `ell`, i.e. `ℓ(2ℓ² + 1)/3`.
pub fn triangle_square_sum(ell: u64) -> f64 {
    let l = ell as f64;
    l * (2.0 * l * l + 1.0) / 3.0
}

/// `e_k = ±magnitude` each with probability `1/denominator`, zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreePointLaw {
    pub k: usize,
    /// `√M_k / ℓ_k`.
    pub magnitude: f64,
    /// `2·k·M_k`, so that `tail_prob = 1/denominator` exactly.
    pub denominator: BigUint,
}

impl ThreePointLaw {
    pub fn tail_prob(&self) -> f64 {
        (-ln_big(&self.denominator)).exp()
    }

    pub fn mean(&self) -> f64 {
        // ±magnitude carry equal mass
        0.0
    }

    pub fn second_moment(&self) -> f64 {
        (2.0 * self.magnitude.ln() + LN_2 - ln_big(&self.denominator)).exp()
    }

    pub fn first_abs_moment(&self) -> f64 {
        (self.magnitude.ln() + LN_2 - ln_big(&self.denominator)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockMoments {
    pub k: usize,
    /// `‖e_k‖₁ = 1/(kℓ_k√M_k)`
    pub e_l1: f64,
    /// `‖e_k‖₂² = 1/(kℓ_k²)`
    pub e_l2_sq: f64,
    /// `‖f_k‖₂² = 2/(kℓ_k)`
    pub f_l2_sq: f64,
    /// `‖h_k‖₁ ≤ ℓ_k‖e_k‖₁`
    pub h_l1_bound: f64,
    /// `‖g_k‖₁ ≤ ℓ_k²‖e_k‖₁ = ℓ_k/(k√M_k)`
    pub g_l1_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailBound {
    Bounded(f64),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub terms: Vec<f64>,
    /// The two summands of each term, as natural logs.
    pub log_summands: Vec<(f64, f64)>,
    pub partial_sums: Vec<f64>,
    pub tail_bound: TailBound,
}

/// JSON form of a schedule; big integers are decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    pub k_max: usize,
    pub ell: Vec<u64>,
    #[serde(default = "one_string")]
    pub m0: String,
    pub m: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<String>>,
}

fn one_string() -> String {
    "1".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: u128) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn default_rule_small() {
        let s = ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap();
        assert_eq!(s.m(1), &big(32));
        assert_eq!(s.m(2), &big(65536));
        assert_eq!(s.n(1), big(32));
        assert_eq!(s.n(2), big(65568));
    }

    #[test]
    fn default_rule_three_blocks() {
        let s = ParameterSchedule::build(&[2, 4, 8], 3, MRule::Default).unwrap();
        assert_eq!(s.m(3), &big(6_442_450_944));
        assert_eq!(s.n(3), big(6_442_516_512));
    }

    #[test]
    fn explicit_boundary_is_valid() {
        let s = ParameterSchedule::build(&[1], 1, MRule::Explicit(vec![big(2)])).unwrap();
        assert_eq!(s.m(1), &big(2));
        assert_eq!(s.n(1), big(2));
    }

    #[test]
    fn default_rule_applies_floor() {
        // 1·1⁵·1 = 1 < 2ℓ_1 = 2
        let s = ParameterSchedule::build(&[1], 1, MRule::Default).unwrap();
        assert_eq!(s.m(1), &big(2));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ParameterSchedule::build(&[4, 4], 2, MRule::Default).is_err());
        assert!(ParameterSchedule::build(&[3, 2], 2, MRule::Default).is_err());
        assert!(ParameterSchedule::build(&[0, 2], 2, MRule::Default).is_err());
        assert!(ParameterSchedule::build(&[2], 0, MRule::Default).is_err());
        assert!(ParameterSchedule::build(&[2], 2, MRule::Default).is_err());
        assert!(ParameterSchedule::build(&[2], 1, MRule::Explicit(vec![big(3)])).is_err());
        assert!(
            ParameterSchedule::build(&[1, 2], 2, MRule::Explicit(vec![big(8), big(8)])).is_err()
        );
    }

    #[test]
    fn big_schedule_exceeds_u64() {
        let s = ParameterSchedule::pow2(5).unwrap();
        assert!(s.m(5).to_u64().is_none());
        assert!(s.ln_m(5) > 64.0 * LN_2);
    }

    #[test]
    fn coefficients() {
        let s = ParameterSchedule::build(&[4], 1, MRule::Default).unwrap();
        let c: Vec<u64> = (0..7).map(|r| s.coefficient(1, r)).collect();
        assert_eq!(c, vec![1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(s.coefficient(1, -1), 0);
        assert_eq!(s.coefficient(1, 7), 0);

        assert_eq!(triangle_coefficient(1, 0), 1);
        assert!((1..10).all(|r| triangle_coefficient(1, r) == 0));

        let sum: u64 = (0..5).map(|r| triangle_coefficient(3, r).pow(2)).sum();
        assert_eq!(sum, 19);
        assert_eq!(triangle_square_sum(3), 19.0);
    }

    #[test]
    fn condition2_default_rule() {
        let s = ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap();
        let rep = s.check_condition2();
        assert!((rep.terms[0] - 2.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((rep.terms[1] - 2.0 / 8f64.sqrt()).abs() < 1e-12);
        for (a, b) in &rep.log_summands {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(rep.tail_bound, TailBound::Bounded(_)));
    }

    #[test]
    fn condition2_single_block() {
        let s = ParameterSchedule::build(&[2], 1, MRule::Default).unwrap();
        let rep = s.check_condition2();
        assert_eq!(rep.terms.len(), 1);
        assert_eq!(rep.partial_sums, rep.terms);
        assert_eq!(rep.tail_bound, TailBound::Unbounded);
    }

    #[test]
    fn condition2_pow2_converges() {
        let s = ParameterSchedule::pow2(12).unwrap();
        let rep = s.check_condition2();
        assert!(rep.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        let tail: f64 = (7..=12)
            .map(|k| 2.0 / ((k as f64) * 2f64.powi(k)).sqrt())
            .sum();
        assert!((rep.partial_sums[11] - rep.partial_sums[5] - tail).abs() < 1e-12);
    }

    #[test]
    fn block_moments_closed_form() {
        let s = ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap();
        let b1 = s.exact_block_moments(1);
        assert!((b1.e_l2_sq - 0.25).abs() < 1e-15);
        assert!((b1.f_l2_sq - 1.0).abs() < 1e-15);
        let b2 = s.exact_block_moments(2);
        assert!((b2.f_l2_sq - 0.25).abs() < 1e-15);
        assert!((b2.g_l1_bound - 0.0078125).abs() < 1e-15);
    }

    #[test]
    fn three_point_law_moments() {
        let s = ParameterSchedule::pow2(6).unwrap();
        for k in 1..=6 {
            let law = s.three_point_law(k);
            let l = s.ell(k) as f64;
            assert_eq!(law.mean(), 0.0);
            assert!((law.second_moment() - 1.0 / (k as f64 * l * l)).abs() < 1e-12);
        }
        let law = s.three_point_law(1);
        assert!((law.magnitude - 8f64.sqrt()).abs() < 1e-14);
        assert_eq!(law.denominator, big(64));
    }

    #[test]
    fn block_lookup() {
        let s = ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap();
        assert_eq!(s.block_of_i128(0), None);
        assert_eq!(s.block_of_i128(1), Some(1));
        assert_eq!(s.block_of_i128(32), Some(1));
        assert_eq!(s.block_of_i128(33), Some(2));
        assert_eq!(s.block_of_i128(65568), Some(2));
        assert_eq!(s.block_of_i128(65569), None);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = ParameterSchedule::pow2(6).unwrap();
        let text = s.to_json().unwrap();
        assert!(text.contains(&format!("\"{}\"", s.m(6))));
        assert_eq!(ParameterSchedule::from_json(&text).unwrap(), s);

        let bad_n = r#"{"k_max":1,"ell":[2],"m":["32"],"n":["33"]}"#;
        assert!(ParameterSchedule::from_json(bad_n).is_err());
        let unknown = r#"{"k_max":1,"ell":[2],"m":["32"],"extra":1}"#;
        assert!(ParameterSchedule::from_json(unknown).is_err());
        let minimal = r#"{"k_max":1,"ell":[2],"m":["32"]}"#;
        assert_eq!(ParameterSchedule::from_json(minimal).unwrap().n(1), big(32));
    }
}
