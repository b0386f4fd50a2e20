//! The innovation lattice `{e_k(i) : k ≥ 1, i ∈ ℤ}` and quenched scenarios.
//!
//! Entry `(k, i)` plays the role of `U^i e_k`. Entries are sampled on demand
//! from a counter-based stream keyed by `(seed, k, i)`, so coordinates near
//! `−N_k` cost the same as coordinates near zero. A [`Scenario`] freezes the
//! past (`i ≤ 0`) of a lattice and draws the future (`i ≥ 1`) from a
//! per-replicate substream, which realises sampling from the conditional law
//! given `F_0`.
//!
//! Besides the block entries, every lattice carries auxiliary streams of
//! Rademacher or Gaussian innovations for the reference families.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::sync::{Arc, RwLock};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::ParameterSchedule;
use crate::stream::{classify_three_point, unit_width, StreamKey, ThreePointDraw};

const AUX_TAG: u64 = 0xa0a0_0001;
const FUTURE_TAG: u64 = 0xf0f0_0002;
/// Largest admissible `N_k`; keeps `t − N_k + r` arithmetic inside `i128`.
const MAX_INDEX: i128 = 1 << 120;

/// How entries not covered by an override are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    Random,
    Zero,
}

/// Fill policy for the past (`i ≤ 0`) and the future (`i ≥ 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Background {
    pub past: Fill,
    pub future: Fill,
}

impl Background {
    pub const RANDOM: Self = Self {
        past: Fill::Random,
        future: Fill::Random,
    };
    pub const ZERO: Self = Self {
        past: Fill::Zero,
        future: Fill::Zero,
    };
    /// Deterministic zero past with random future innovations.
    pub const ZERO_PAST: Self = Self {
        past: Fill::Zero,
        future: Fill::Random,
    };

    fn fill(&self, i: i128) -> Fill {
        if i <= 0 {
            self.past
        } else {
            self.future
        }
    }
}

impl Default for Background {
    fn default() -> Self {
        Self::RANDOM
    }
}

/// A forced lattice entry `e_k(i) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Override {
    pub k: usize,
    pub i: i128,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideDoc {
    k: usize,
    i: String,
    value: String,
}

/// Serialises overrides as `[{"k":…,"i":"…","value":"…"}]`.
pub fn overrides_to_json(overrides: &[Override]) -> Result<String> {
    let docs: Vec<OverrideDoc> = overrides
        .iter()
        .map(|o| OverrideDoc {
            k: o.k,
            i: o.i.to_string(),
            value: format!("{:?}", o.value),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&docs)?)
}

pub fn overrides_from_json(text: &str) -> Result<Vec<Override>> {
    let docs: Vec<OverrideDoc> = serde_json::from_str(text)?;
    docs.into_iter()
        .map(|d| {
            let i =
                d.i.parse::<i128>()
                    .map_err(|e| Error::InvalidArgument(format!("bad index {:?}: {e}", d.i)))?;
            let value = d
                .value
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad value {:?}: {e}", d.value)))?;
            Ok(Override { k: d.k, i, value })
        })
        .collect()
}

#[derive(Debug, Clone)]
struct BlockLaw {
    magnitude: f64,
    q: u128,
    width: u128,
}

/// Read access to block innovations, shared by lattices and scenarios.
pub trait LatticeView: Sync {
    fn schedule(&self) -> &ParameterSchedule;

    /// `e_k(i)` for `1 ≤ k ≤ k_max`.
    fn value_at(&self, k: usize, i: i128) -> f64;
}

/// The lazily sampled array of block innovations.
#[derive(Debug)]
pub struct InnovationLattice {
    seed: u64,
    key: StreamKey,
    schedule: Option<Arc<ParameterSchedule>>,
    laws: Vec<BlockLaw>,
    background: Background,
    overrides: BTreeMap<(usize, i128), i8>,
    past: RwLock<HashMap<(usize, i128), i8>>,
}

impl Clone for InnovationLattice {
    fn clone(&self) -> Self {
        Self {
            seed: self.seed,
            key: self.key,
            schedule: self.schedule.clone(),
            laws: self.laws.clone(),
            background: self.background,
            overrides: self.overrides.clone(),
            past: RwLock::new(self.past.read().expect("cache poisoned").clone()),
        }
    }
}

impl InnovationLattice {
    /// Builds a lattice over `schedule` with the given forced entries.
    pub fn new(
        seed: u64,
        schedule: Arc<ParameterSchedule>,
        overrides: &[Override],
    ) -> Result<Self> {
        let mut laws = Vec::with_capacity(schedule.k_max());
        for k in 1..=schedule.k_max() {
            let law = schedule.three_point_law(k);
            let q = law.denominator.to_u128().ok_or_else(|| {
                Error::LatticeRange(format!("2kM_{k} = {} exceeds 128 bits", law.denominator))
            })?;
            match schedule.n_i128(k) {
                Some(n) if n < MAX_INDEX => {}
                _ => {
                    return Err(Error::LatticeRange(format!(
                        "N_{k} = {} exceeds the index range",
                        schedule.n(k)
                    )))
                }
            }
            laws.push(BlockLaw {
                magnitude: law.magnitude,
                q,
                width: unit_width(q),
            });
        }
        let mut lattice = Self {
            seed,
            key: StreamKey::new(seed),
            schedule: Some(schedule),
            laws,
            background: Background::RANDOM,
            overrides: BTreeMap::new(),
            past: RwLock::new(HashMap::new()),
        };
        for o in overrides {
            lattice.insert_override(*o)?;
        }
        Ok(lattice)
    }

    /// A lattice carrying only auxiliary streams (no block innovations).
    pub fn auxiliary(seed: u64) -> Self {
        Self {
            seed,
            key: StreamKey::new(seed),
            schedule: None,
            laws: Vec::new(),
            background: Background::RANDOM,
            overrides: BTreeMap::new(),
            past: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_background(mut self, background: Background) -> Self {
        self.background = background;
        self.past.get_mut().expect("cache poisoned").clear();
        self
    }

    /// Same schedule, background and overrides under a different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            key: StreamKey::new(seed),
            schedule: self.schedule.clone(),
            laws: self.laws.clone(),
            background: self.background,
            overrides: self.overrides.clone(),
            past: RwLock::new(HashMap::new()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn background(&self) -> Background {
        self.background
    }

    pub fn schedule_arc(&self) -> Option<&Arc<ParameterSchedule>> {
        self.schedule.as_ref()
    }

    pub fn has_blocks(&self) -> bool {
        self.schedule.is_some()
    }

    /// `√M_k / ℓ_k`.
    pub fn magnitude(&self, k: usize) -> f64 {
        self.law(k).magnitude
    }

    pub fn overrides(&self) -> Vec<Override> {
        self.overrides
            .iter()
            .map(|(&(k, i), &sign)| Override {
                k,
                i,
                value: sign as f64 * self.magnitude(k),
            })
            .collect()
    }

    /// Forces the configuration `A_n`: `e_k(n + ℓ_k − 1 − N_k) = +√M_k/ℓ_k`
    /// and zero at the other `2ℓ_k − 2` entries of the block-`k` window
    /// `n − N_k .. n − N_k + 2ℓ_k − 2`.
    pub fn force_event(&self, k: usize, n: i128) -> Result<Self> {
        self.force_event_signed(k, n, 1)
    }

    /// [`force_event`](Self::force_event) with the forced entry set to
    /// `sign · √M_k/ℓ_k` (`sign` is `+1` or `−1`).
    pub fn force_event_signed(&self, k: usize, n: i128, sign: i8) -> Result<Self> {
        let schedule = self.require_schedule()?;
        if !(1..=schedule.k_max()).contains(&k) {
            return Err(Error::BlockOutOfRange {
                k,
                k_max: schedule.k_max(),
            });
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidArgument(format!(
                "sign must be ±1, got {sign}"
            )));
        }
        let lo = schedule.n_i128(k - 1).expect("checked at construction");
        let hi = schedule.n_i128(k).expect("checked at construction");
        if n <= lo || n > hi {
            return Err(Error::OutsideBlock {
                n: n.to_string(),
                k,
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        let ell = schedule.ell(k) as i128;
        let base = n - hi;
        let mut out = self.clone();
        for r in 0..=(2 * ell - 2) {
            let value = if r == ell - 1 { sign } else { 0 };
            out.overrides.insert((k, base + r), value);
        }
        Ok(out)
    }

    /// Sign of the block entry (−1, 0, +1) under replicate `replicate` for
    /// future indices; past indices ignore the replicate.
    fn sign_at(&self, k: usize, i: i128, replicate: u64) -> i8 {
        if let Some(&s) = self.overrides.get(&(k, i)) {
            return s;
        }
        match self.background.fill(i) {
            Fill::Zero => 0,
            Fill::Random if i <= 0 => self.past_sign(k, i),
            Fill::Random => self.sample_sign(self.future_key(k, replicate), k, i),
        }
    }

    fn past_sign(&self, k: usize, i: i128) -> i8 {
        if let Some(&s) = self.past.read().expect("cache poisoned").get(&(k, i)) {
            return s;
        }
        let s = self.sample_sign(self.block_key(k), k, i);
        // write-once: a concurrent writer stores the same value
        self.past
            .write()
            .expect("cache poisoned")
            .entry((k, i))
            .or_insert(s);
        s
    }

    fn sample_sign(&self, key: StreamKey, k: usize, i: i128) -> i8 {
        let law = self.law(k);
        let mut counter = 0u32;
        loop {
            match classify_three_point(key.draw_u128(i, counter), law.q, law.width) {
                ThreePointDraw::Positive => return 1,
                ThreePointDraw::Negative => return -1,
                ThreePointDraw::Zero => return 0,
                ThreePointDraw::Reject => counter += 1,
            }
        }
    }

    fn block_key(&self, k: usize) -> StreamKey {
        self.key.split(k as u64)
    }

    fn future_key(&self, k: usize, replicate: u64) -> StreamKey {
        self.block_key(k).split(FUTURE_TAG).split(replicate)
    }

    fn aux_key(&self, stream: u32, i: i128, replicate: u64) -> Option<StreamKey> {
        let key = self.key.split(AUX_TAG).split(stream as u64);
        match self.background.fill(i) {
            Fill::Zero => None,
            Fill::Random if i <= 0 => Some(key),
            Fill::Random => Some(key.split(FUTURE_TAG).split(replicate)),
        }
    }

    fn law(&self, k: usize) -> &BlockLaw {
        assert!(
            (1..=self.laws.len()).contains(&k),
            "block {k} outside 1..={}",
            self.laws.len()
        );
        &self.laws[k - 1]
    }

    fn require_schedule(&self) -> Result<&ParameterSchedule> {
        self.schedule
            .as_deref()
            .ok_or_else(|| Error::Unsupported("lattice has no block innovations".into()))
    }

    fn insert_override(&mut self, o: Override) -> Result<()> {
        let k_max = self.laws.len();
        if !(1..=k_max).contains(&o.k) {
            return Err(Error::BlockOutOfRange { k: o.k, k_max });
        }
        let magnitude = self.magnitude(o.k);
        let tol = 1e-9 * magnitude.max(1.0);
        let sign = if o.value.abs() <= tol {
            0
        } else if (o.value - magnitude).abs() <= tol {
            1
        } else if (o.value + magnitude).abs() <= tol {
            -1
        } else {
            return Err(Error::IllegalOverride {
                k: o.k,
                value: o.value,
                magnitude,
            });
        };
        self.overrides.insert((o.k, o.i), sign);
        Ok(())
    }
}

impl LatticeView for InnovationLattice {
    fn schedule(&self) -> &ParameterSchedule {
        self.schedule
            .as_deref()
            .expect("lattice has no block innovations")
    }

    fn value_at(&self, k: usize, i: i128) -> f64 {
        self.sign_at(k, i, 0) as f64 * self.law(k).magnitude
    }
}

/// A frozen past of a lattice together with one replicate of the future.
#[derive(Debug, Clone)]
pub struct Scenario {
    lattice: Arc<InnovationLattice>,
    replicate: u64,
}

/// Scenario `replicate_id` over `lattice`; replicates share the past.
pub fn make_scenario(lattice: &Arc<InnovationLattice>, replicate_id: u64) -> Scenario {
    Scenario::new(Arc::clone(lattice), replicate_id)
}

impl Scenario {
    pub fn new(lattice: Arc<InnovationLattice>, replicate: u64) -> Self {
        Self { lattice, replicate }
    }

    pub fn lattice(&self) -> &Arc<InnovationLattice> {
        &self.lattice
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    /// Another replicate sharing this scenario's past.
    pub fn with_replicate(&self, replicate: u64) -> Self {
        Self {
            lattice: Arc::clone(&self.lattice),
            replicate,
        }
    }

    /// Rademacher innovation of auxiliary stream `stream` at time `i`
    /// (zero where the background fill is zero).
    pub fn rademacher(&self, stream: u32, i: i128) -> f64 {
        match self.lattice.aux_key(stream, i, self.replicate) {
            Some(key) if key.draw_u64(i) >> 63 == 1 => 1.0,
            Some(_) => -1.0,
            None => 0.0,
        }
    }

    /// Standard Gaussian innovation of auxiliary stream `stream` at time `i`.
    pub fn gaussian(&self, stream: u32, i: i128) -> f64 {
        match self.lattice.aux_key(stream, i, self.replicate) {
            Some(key) => {
                let bits = key.draw_u128(i, 0);
                let scale = 1.0 / (1u64 << 53) as f64;
                // u1 ∈ (0, 1], u2 ∈ [0, 1)
                let u1 = ((bits >> 75) as u64 + 1) as f64 * scale;
                let u2 = ((bits >> 11) as u64 & ((1 << 53) - 1)) as f64 * scale;
                (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
            }
            None => 0.0,
        }
    }
}

impl LatticeView for Scenario {
    fn schedule(&self) -> &ParameterSchedule {
        self.lattice.schedule()
    }

    fn value_at(&self, k: usize, i: i128) -> f64 {
        self.lattice.sign_at(k, i, self.replicate) as f64 * self.lattice.law(k).magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::MRule;

    fn sched_2_4() -> Arc<ParameterSchedule> {
        Arc::new(ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap())
    }

    #[test]
    fn pure_under_requery() {
        let lat = InnovationLattice::new(1, sched_2_4(), &[]).unwrap();
        for i in -50..50 {
            assert_eq!(lat.value_at(1, i), lat.value_at(1, i));
        }
        let again = InnovationLattice::new(1, sched_2_4(), &[]).unwrap();
        let a: Vec<f64> = (-500..500).map(|i| lat.value_at(1, i)).collect();
        let b: Vec<f64> = (-500..500)
            .rev()
            .map(|i| again.value_at(1, i))
            .rev()
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn override_in_support() {
        let v = 2.0 * 2f64.sqrt();
        let lat = InnovationLattice::new(
            1,
            sched_2_4(),
            &[Override {
                k: 1,
                i: 0,
                value: v,
            }],
        )
        .unwrap();
        assert!((lat.value_at(1, 0) - 2.828427).abs() < 1e-6);
        let neg = InnovationLattice::new(
            1,
            sched_2_4(),
            &[Override {
                k: 1,
                i: 3,
                value: -v,
            }],
        )
        .unwrap();
        assert_eq!(neg.value_at(1, 3), -lat.magnitude(1));
    }

    #[test]
    fn override_outside_support() {
        let err = InnovationLattice::new(
            1,
            sched_2_4(),
            &[Override {
                k: 1,
                i: 0,
                value: 1.5,
            }],
        );
        assert!(matches!(err, Err(Error::IllegalOverride { .. })));
        let err = InnovationLattice::new(
            1,
            sched_2_4(),
            &[Override {
                k: 3,
                i: 0,
                value: 0.0,
            }],
        );
        assert!(matches!(err, Err(Error::BlockOutOfRange { .. })));
    }

    #[test]
    fn zero_background() {
        let lat = InnovationLattice::new(9, sched_2_4(), &[])
            .unwrap()
            .with_background(Background::ZERO);
        assert!((-100..100).all(|i| lat.value_at(1, i) == 0.0 && lat.value_at(2, i) == 0.0));
        let scn = make_scenario(&Arc::new(lat), 4);
        assert_eq!(scn.rademacher(0, 5), 0.0);
        assert_eq!(scn.gaussian(0, -5), 0.0);
    }

    #[test]
    fn force_event_positions() {
        let sched = sched_2_4();
        let lat = InnovationLattice::new(3, Arc::clone(&sched), &[]).unwrap();
        let n = 65568 - 10;
        let forced = lat.force_event(2, n).unwrap();
        assert_eq!(forced.value_at(2, -7), 64.0);
        for i in [-10, -9, -8, -6, -5, -4] {
            assert_eq!(forced.value_at(2, i), 0.0);
        }
        assert_eq!(forced.overrides().len(), 7);

        let forced1 = lat.force_event(1, 32).unwrap();
        assert!((forced1.value_at(1, 1) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(forced1.value_at(1, 0), 0.0);
        assert_eq!(forced1.value_at(1, 2), 0.0);

        assert!(lat.force_event(2, 32).is_err());
        assert!(lat.force_event(2, 65569).is_err());
        assert!(lat.force_event(1, 0).is_err());
        assert!(lat.force_event(3, 40).is_err());
    }

    #[test]
    fn scenarios_share_past() {
        let lat = Arc::new(InnovationLattice::new(5, sched_2_4(), &[]).unwrap());
        let a = make_scenario(&lat, 1);
        let b = make_scenario(&lat, 2);
        for i in [0, -1, -5] {
            assert_eq!(a.value_at(1, i), b.value_at(1, i));
            assert_eq!(a.gaussian(0, i), b.gaussian(0, i));
        }
        assert_eq!(a.value_at(1, 3), a.value_at(1, 3));
        assert_eq!(a.value_at(1, 3), a.with_replicate(1).value_at(1, 3));
        // futures differ somewhere
        let differ = (1..2000).any(|i| a.gaussian(0, i) != b.gaussian(0, i));
        assert!(differ);
    }

    #[test]
    fn overrides_json() {
        let v = 2.0 * 2f64.sqrt();
        let list = vec![
            Override {
                k: 1,
                i: -170141183460469231731687303715884105728,
                value: v,
            },
            Override {
                k: 2,
                i: 7,
                value: 0.0,
            },
        ];
        let text = overrides_to_json(&list).unwrap();
        assert!(text.contains("\"-170141183460469231731687303715884105728\""));
        assert_eq!(overrides_from_json(&text).unwrap(), list);
        assert!(overrides_from_json(r#"[{"k":1,"i":"x","value":"0"}]"#).is_err());
    }

    #[test]
    fn lattice_rejects_huge_schedule() {
        let s = Arc::new(ParameterSchedule::pow2(7).unwrap());
        assert!(matches!(
            InnovationLattice::new(1, s, &[]),
            Err(Error::LatticeRange(_))
        ));
        let s = Arc::new(ParameterSchedule::pow2(6).unwrap());
        assert!(InnovationLattice::new(1, s, &[]).is_ok());
    }

    #[test]
    fn gaussian_moments() {
        let lat = Arc::new(InnovationLattice::auxiliary(17));
        let scn = make_scenario(&lat, 0);
        let n = 200_000;
        let xs: Vec<f64> = (1..=n).map(|i| scn.gaussian(0, i)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean;
        let se = (1.0 / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se);
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }
}
