//! Reference stationary processes with known limit behaviour.
//!
//! * `Iid`: `X_t = ε_t`, a martingale difference sequence.
//! * `Linear`: `X_t = ∑_{j=0}^{d} a_j ε_{t−j}` with finite support.
//! * `Counterexample`: the coboundary `f = g − Ug` of [`crate::counterexample`].
//! * `Perturbed`: `m + f` with `m = scale·η_0` built from an innovation stream
//!   independent of the lattice.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::counterexample::{self, SumMode};
use crate::error::{Error, Result};
use crate::innovations::{InnovationLattice, LatticeView, Scenario};
use crate::schedule::{ParameterSchedule, ScheduleDoc};

/// Auxiliary stream carrying `ε` for the i.i.d. and linear kinds.
const EPS_STREAM: u32 = 0;
/// Auxiliary stream carrying `η` for the martingale part of `m + f`.
const MART_STREAM: u32 = 1;
/// Largest supported coefficient support for the linear kind.
pub const MAX_LINEAR_SUPPORT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationLaw {
    Rademacher,
    Gaussian,
    /// The block-`k` law `e_k` of the attached schedule.
    ThreePoint {
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessKind {
    Iid {
        law: InnovationLaw,
    },
    Linear {
        law: InnovationLaw,
        coeffs: Vec<f64>,
    },
    Counterexample {
        k_max_used: usize,
    },
    Perturbed {
        k_max_used: usize,
        m_law: InnovationLaw,
        m_scale: f64,
    },
}

/// A stationary functional together with the schedule it needs, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    schedule: Option<Arc<ParameterSchedule>>,
    kind: ProcessKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schedule: Option<ScheduleDoc>,
    kind: ProcessKind,
}

impl ProcessSpec {
    pub fn new(schedule: Option<Arc<ParameterSchedule>>, kind: ProcessKind) -> Result<Self> {
        let spec = Self { schedule, kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn iid(law: InnovationLaw) -> Result<Self> {
        Self::new(None, ProcessKind::Iid { law })
    }

    pub fn iid_three_point(schedule: Arc<ParameterSchedule>, k: usize) -> Result<Self> {
        Self::new(
            Some(schedule),
            ProcessKind::Iid {
                law: InnovationLaw::ThreePoint { k },
            },
        )
    }

    pub fn linear(law: InnovationLaw, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(None, ProcessKind::Linear { law, coeffs })
    }

    pub fn counterexample(schedule: Arc<ParameterSchedule>, k_max_used: usize) -> Result<Self> {
        Self::new(Some(schedule), ProcessKind::Counterexample { k_max_used })
    }

    pub fn perturbed(
        schedule: Arc<ParameterSchedule>,
        k_max_used: usize,
        m_law: InnovationLaw,
        m_scale: f64,
    ) -> Result<Self> {
        Self::new(
            Some(schedule),
            ProcessKind::Perturbed {
                k_max_used,
                m_law,
                m_scale,
            },
        )
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn schedule(&self) -> Option<&Arc<ParameterSchedule>> {
        self.schedule.as_ref()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ProcessDoc {
            schedule: self.schedule.as_ref().map(|s| s.to_doc()),
            kind: self.kind.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProcessDoc = serde_json::from_str(text)?;
        let schedule = doc
            .schedule
            .as_ref()
            .map(ParameterSchedule::from_doc)
            .transpose()?
            .map(Arc::new);
        Self::new(schedule, doc.kind)
    }

    fn validate(&self) -> Result<()> {
        let check_law = |law: &InnovationLaw| -> Result<()> {
            if let InnovationLaw::ThreePoint { k } = law {
                let s = self.schedule.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("three-point innovations need a schedule".into())
                })?;
                if !(1..=s.k_max()).contains(k) {
                    return Err(Error::BlockOutOfRange {
                        k: *k,
                        k_max: s.k_max(),
                    });
                }
            }
            Ok(())
        };
        let check_blocks = |k_max_used: usize| -> Result<()> {
            let s = self.schedule.as_ref().ok_or_else(|| {
                Error::InvalidArgument("the counterexample needs a schedule".into())
            })?;
            if k_max_used == 0 || k_max_used > s.k_max() {
                return Err(Error::BlockOutOfRange {
                    k: k_max_used,
                    k_max: s.k_max(),
                });
            }
            Ok(())
        };
        match &self.kind {
            ProcessKind::Iid { law } => check_law(law),
            ProcessKind::Linear { law, coeffs } => {
                check_law(law)?;
                if coeffs.is_empty() || coeffs.len() > MAX_LINEAR_SUPPORT + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "linear coefficients must have 1..={} entries",
                        MAX_LINEAR_SUPPORT + 1
                    )));
                }
                if coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidArgument("coefficients must be finite".into()));
                }
                Ok(())
            }
            ProcessKind::Counterexample { k_max_used } => check_blocks(*k_max_used),
            ProcessKind::Perturbed {
                k_max_used,
                m_law,
                m_scale,
            } => {
                check_blocks(*k_max_used)?;
                if matches!(m_law, InnovationLaw::ThreePoint { .. }) {
                    return Err(Error::Unsupported(
                        "the martingale part must use an auxiliary (Rademacher/Gaussian) stream"
                            .into(),
                    ));
                }
                if !m_scale.is_finite() {
                    return Err(Error::InvalidArgument("m_scale must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// A lattice carrying everything this process reads.
    pub fn lattice(&self, seed: u64) -> Result<InnovationLattice> {
        match &self.schedule {
            Some(s) => InnovationLattice::new(seed, Arc::clone(s), &[]),
            None => Ok(InnovationLattice::auxiliary(seed)),
        }
    }

    /// `Var ε` for `law`.
    pub fn law_variance(&self, law: &InnovationLaw) -> f64 {
        match law {
            InnovationLaw::Rademacher | InnovationLaw::Gaussian => 1.0,
            InnovationLaw::ThreePoint { k } => {
                self.block_schedule().exact_block_moments(*k).e_l2_sq
            }
        }
    }

    /// `‖f‖₂²` (the stationary second moment of `X_t`).
    pub fn f_l2_sq(&self) -> f64 {
        match &self.kind {
            ProcessKind::Iid { law } => self.law_variance(law),
            ProcessKind::Linear { law, coeffs } => {
                self.law_variance(law) * coeffs.iter().map(|a| a * a).sum::<f64>()
            }
            ProcessKind::Counterexample { k_max_used } => self.counterexample_l2_sq(*k_max_used),
            ProcessKind::Perturbed {
                k_max_used,
                m_law,
                m_scale,
            } => {
                m_scale * m_scale * self.law_variance(m_law)
                    + self.counterexample_l2_sq(*k_max_used)
            }
        }
    }

    /// Variance of the normal limit of `S_n/√n`.
    pub fn limit_variance(&self) -> f64 {
        match &self.kind {
            ProcessKind::Iid { law } => self.law_variance(law),
            ProcessKind::Linear { law, coeffs } => {
                let total: f64 = coeffs.iter().sum();
                self.law_variance(law) * total * total
            }
            ProcessKind::Counterexample { .. } => 0.0,
            ProcessKind::Perturbed { m_law, m_scale, .. } => {
                m_scale * m_scale * self.law_variance(m_law)
            }
        }
    }

    /// `‖m‖₂²` of the martingale part (zero for the pure coboundary).
    pub fn martingale_l2_sq(&self) -> f64 {
        match &self.kind {
            ProcessKind::Perturbed { m_law, m_scale, .. } => {
                m_scale * m_scale * self.law_variance(m_law)
            }
            ProcessKind::Counterexample { .. } => 0.0,
            _ => self.limit_variance(),
        }
    }

    fn counterexample_l2_sq(&self, k_max_used: usize) -> f64 {
        let s = self.block_schedule();
        (1..=k_max_used)
            .map(|k| s.exact_block_moments(k).f_l2_sq)
            .sum()
    }

    fn block_schedule(&self) -> &ParameterSchedule {
        self.schedule
            .as_deref()
            .expect("validated: schedule present")
    }

    fn innovation(&self, scn: &Scenario, law: &InnovationLaw, stream: u32, i: i128) -> f64 {
        match law {
            InnovationLaw::Rademacher => scn.rademacher(stream, i),
            InnovationLaw::Gaussian => scn.gaussian(stream, i),
            InnovationLaw::ThreePoint { k } => scn.value_at(*k, i),
        }
    }

    /// Requires that `E⁰[S_n]` is computable within the truncated schedule.
    pub fn check_window(&self, n: i128) -> Result<()> {
        if n < 1 {
            return Err(Error::InvalidArgument(format!("n must be ≥ 1, got {n}")));
        }
        if let ProcessKind::Counterexample { k_max_used }
        | ProcessKind::Perturbed { k_max_used, .. } = &self.kind
        {
            let s = self.block_schedule();
            match s.n_i128(*k_max_used) {
                Some(limit) if n < limit => {}
                _ => {
                    return Err(Error::WindowOverflow(format!(
                        "n + 1 = {} exceeds N_{k_max_used} = {}",
                        n + 1,
                        s.n(*k_max_used)
                    )))
                }
            }
        }
        Ok(())
    }

    /// `X_t`.
    pub fn value(&self, scn: &Scenario, t: i128) -> f64 {
        match &self.kind {
            ProcessKind::Iid { law } => self.innovation(scn, law, EPS_STREAM, t),
            ProcessKind::Linear { law, coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(j, a)| a * self.innovation(scn, law, EPS_STREAM, t - j as i128))
                .sum(),
            ProcessKind::Counterexample { k_max_used } => {
                counterexample::eval_f(scn, t, *k_max_used)
            }
            ProcessKind::Perturbed {
                k_max_used,
                m_law,
                m_scale,
            } => {
                m_scale * self.innovation(scn, m_law, MART_STREAM, t)
                    + counterexample::eval_f(scn, t, *k_max_used)
            }
        }
    }

    /// `S_n = X_1 + … + X_n`.
    pub fn partial_sum(&self, scn: &Scenario, n: i128) -> f64 {
        match &self.kind {
            ProcessKind::Iid { law } => (1..=n)
                .map(|t| self.innovation(scn, law, EPS_STREAM, t))
                .sum(),
            ProcessKind::Linear { law, coeffs } => linear_weights(coeffs, n)
                .map(|(s, w)| w * self.innovation(scn, law, EPS_STREAM, s))
                .sum(),
            ProcessKind::Counterexample { k_max_used } => {
                counterexample::partial_sum(scn, n, SumMode::Telescoped, *k_max_used)
            }
            ProcessKind::Perturbed { .. } => self.coboundary_sum_unchecked(scn, n),
        }
    }

    /// `E⁰[S_n]`, a function of the scenario's frozen past.
    pub fn conditional_mean(&self, scn: &Scenario, n: i128) -> Result<f64> {
        self.check_window(n)?;
        match &self.kind {
            ProcessKind::Iid { .. } => Ok(0.0),
            ProcessKind::Linear { law, coeffs } => Ok(linear_weights(coeffs, n)
                .filter(|&(s, _)| s <= 0)
                .map(|(s, w)| w * self.innovation(scn, law, EPS_STREAM, s))
                .sum()),
            ProcessKind::Counterexample { k_max_used }
            | ProcessKind::Perturbed { k_max_used, .. } => {
                counterexample::conditional_mean(scn, n, *k_max_used)
            }
        }
    }

    /// `S_n − E⁰[S_n]`, summed from the future-only terms so no cancellation
    /// against the past occurs.
    pub fn centered_sum(&self, scn: &Scenario, n: i128) -> Result<f64> {
        self.check_window(n)?;
        match &self.kind {
            ProcessKind::Linear { law, coeffs } => Ok(linear_weights(coeffs, n)
                .filter(|&(s, _)| s >= 1)
                .map(|(s, w)| w * self.innovation(scn, law, EPS_STREAM, s))
                .sum()),
            _ => Ok(self.martingale_increments(scn, n)?.iter().sum()),
        }
    }

    /// Martingale differences `P_j S_n`, `j = 1..=n`, whose sum is
    /// `S_n − E⁰[S_n]`.
    pub fn martingale_increments(&self, scn: &Scenario, n: i128) -> Result<Vec<f64>> {
        self.check_window(n)?;
        match &self.kind {
            ProcessKind::Iid { law } => Ok((1..=n)
                .map(|t| self.innovation(scn, law, EPS_STREAM, t))
                .collect()),
            ProcessKind::Linear { .. } => Err(Error::Unsupported(
                "linear processes are not martingale differences".into(),
            )),
            ProcessKind::Counterexample { k_max_used } => {
                Ok(counterexample::centered_increments(scn, n, *k_max_used))
            }
            ProcessKind::Perturbed {
                k_max_used,
                m_law,
                m_scale,
            } => {
                let mut inc = counterexample::centered_increments(scn, n, *k_max_used);
                for (j, x) in inc.iter_mut().enumerate() {
                    *x += m_scale * self.innovation(scn, m_law, MART_STREAM, j as i128 + 1);
                }
                Ok(inc)
            }
        }
    }

    /// `S_n(m) + Ug − U^{n+1}g`.
    pub fn coboundary_sum(&self, scn: &Scenario, n: i128) -> Result<f64> {
        match &self.kind {
            ProcessKind::Counterexample { .. } | ProcessKind::Perturbed { .. } => {
                if n < 1 {
                    return Err(Error::InvalidArgument(format!("n must be ≥ 1, got {n}")));
                }
                Ok(self.coboundary_sum_unchecked(scn, n))
            }
            _ => Err(Error::Unsupported(
                "coboundary_sum needs the counterexample or m + f".into(),
            )),
        }
    }

    fn coboundary_sum_unchecked(&self, scn: &Scenario, n: i128) -> f64 {
        match &self.kind {
            ProcessKind::Counterexample { k_max_used } => {
                counterexample::partial_sum(scn, n, SumMode::Telescoped, *k_max_used)
            }
            ProcessKind::Perturbed {
                k_max_used,
                m_law,
                m_scale,
            } => {
                let martingale: f64 = (1..=n)
                    .map(|t| self.innovation(scn, m_law, MART_STREAM, t))
                    .sum();
                m_scale * martingale
                    + counterexample::partial_sum(scn, n, SumMode::Telescoped, *k_max_used)
            }
            _ => unreachable!(),
        }
    }

    /// `S_n(m+f)/√n = Y1 + Y2 + ν` with `Y1 = S_n(m)/√n`,
    /// `Y2 = (S_n(f) − E⁰S_n(f))/√n`, `ν = E⁰S_n(f)/√n`.
    pub fn decompose_sum(&self, scn: &Scenario, n: i128) -> Result<Decomposition> {
        let (k_max_used, martingale) = match &self.kind {
            ProcessKind::Counterexample { k_max_used } => (*k_max_used, 0.0),
            ProcessKind::Perturbed {
                k_max_used,
                m_law,
                m_scale,
            } => {
                let sum: f64 = (1..=n)
                    .map(|t| self.innovation(scn, m_law, MART_STREAM, t))
                    .sum();
                (*k_max_used, m_scale * sum)
            }
            _ => {
                return Err(Error::Unsupported(
                    "decompose_sum needs the counterexample or m + f".into(),
                ))
            }
        };
        self.check_window(n)?;
        let root = (n as f64).sqrt();
        let sn_f = counterexample::partial_sum(scn, n, SumMode::Telescoped, k_max_used);
        let cond = counterexample::conditional_mean(scn, n, k_max_used)?;
        Ok(Decomposition {
            y1: martingale / root,
            y2: (sn_f - cond) / root,
            nu: cond / root,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub y1: f64,
    pub y2: f64,
    pub nu: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.y1 + self.y2 + self.nu
    }
}

/// Weights `w_s` with `∑_{t=1}^n X_t = ∑_s w_s ε_s` for a linear process.
fn linear_weights(coeffs: &[f64], n: i128) -> impl Iterator<Item = (i128, f64)> + '_ {
    let d = coeffs.len() as i128 - 1;
    let mut prefix = Vec::with_capacity(coeffs.len() + 1);
    prefix.push(0.0);
    for a in coeffs {
        prefix.push(prefix.last().unwrap() + a);
    }
    ((1 - d)..=n).map(move |s| {
        // t ranges over max(1, s)..=min(n, s + d), i.e. lag j = t − s in lo..=hi
        let lo = (1 - s).max(0);
        let hi = (n - s).min(d);
        (s, prefix[(hi + 1) as usize] - prefix[lo as usize])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HannanVerdict {
    Holds,
    DivergingTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HannanReport {
    /// `∑_{i=0}^{j} ‖P_{−i} f‖₂` for `j = 0..=i_max`.
    pub partial_sums: Vec<f64>,
    /// Fitted decay exponent `p` in `|a_i| ≈ C·i^{−p}` over the upper half
    /// of the nonzero coefficients, when there are enough of them.
    pub tail_exponent: Option<f64>,
    pub verdict: HannanVerdict,
}

/// Tail exponents at or below this are reported as a diverging trend.
pub const HANNAN_EXPONENT_THRESHOLD: f64 = 1.05;

/// Partial sums of `‖P_{−i} f‖₂ = |a_i|·σ_ε` for a linear process.
pub fn hannan_partial_sums(spec: &ProcessSpec, i_max: usize) -> Result<HannanReport> {
    let ProcessKind::Linear { law, coeffs } = spec.kind() else {
        return Err(Error::Unsupported(
            "Hannan sums are computed for linear processes".into(),
        ));
    };
    let sigma = spec.law_variance(law).sqrt();
    let mut acc = 0.0;
    let partial_sums = (0..=i_max)
        .map(|i| {
            acc += coeffs.get(i).map_or(0.0, |a| a.abs()) * sigma;
            acc
        })
        .collect();

    let support: Vec<(f64, f64)> = coeffs
        .iter()
        .take(i_max + 1)
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(i, a)| (((i + 1) as f64).ln(), a.abs().ln()))
        .collect();
    let last_nonzero = coeffs.iter().rposition(|a| *a != 0.0).unwrap_or(0);
    let finite_support = last_nonzero < i_max / 2;
    let tail_exponent = (support.len() >= 8).then(|| {
        let tail = &support[support.len() / 2..];
        -least_squares_slope(tail)
    });
    let verdict = match tail_exponent {
        Some(p) if !finite_support && p <= HANNAN_EXPONENT_THRESHOLD => {
            HannanVerdict::DivergingTrend
        }
        _ => HannanVerdict::Holds,
    };
    Ok(HannanReport {
        partial_sums,
        tail_exponent,
        verdict,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::{make_scenario, Background};
    use crate::schedule::MRule;

    #[test]
    fn linear_weights_match_direct_sum() {
        let coeffs = vec![1.0, -0.5, 0.25, 2.0];
        let lat = Arc::new(InnovationLattice::auxiliary(3));
        let spec = ProcessSpec::linear(InnovationLaw::Gaussian, coeffs).unwrap();
        let scn = make_scenario(&lat, 0);
        for n in [1, 2, 3, 7, 20] {
            let direct: f64 = (1..=n).map(|t| spec.value(&scn, t)).sum();
            assert!((spec.partial_sum(&scn, n) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn hannan_geometric() {
        let coeffs: Vec<f64> = (0..=20).map(|i| 0.5f64.powi(i)).collect();
        let spec = ProcessSpec::linear(InnovationLaw::Rademacher, coeffs).unwrap();
        let rep = hannan_partial_sums(&spec, 20).unwrap();
        assert!((rep.partial_sums[20] - 2.0).abs() < 1e-5);
        assert_eq!(rep.verdict, HannanVerdict::Holds);
    }

    #[test]
    fn hannan_iid() {
        let spec = ProcessSpec::linear(InnovationLaw::Rademacher, vec![1.0]).unwrap();
        let rep = hannan_partial_sums(&spec, 5).unwrap();
        assert_eq!(rep.partial_sums, vec![1.0; 6]);
        assert_eq!(rep.verdict, HannanVerdict::Holds);
    }

    #[test]
    fn hannan_harmonic() {
        let coeffs: Vec<f64> = (0..=10_000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let spec = ProcessSpec::linear(InnovationLaw::Gaussian, coeffs).unwrap();
        let rep = hannan_partial_sums(&spec, 10_000).unwrap();
        let harmonic: f64 = (1..=10_001).map(|i| 1.0 / i as f64).sum();
        assert!((rep.partial_sums[10_000] - harmonic).abs() < 1e-9);
        assert_eq!(rep.verdict, HannanVerdict::DivergingTrend);
        assert!((rep.tail_exponent.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hannan_rejects_other_kinds() {
        let spec = ProcessSpec::iid(InnovationLaw::Rademacher).unwrap();
        assert!(matches!(
            hannan_partial_sums(&spec, 3),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn validation() {
        assert!(ProcessSpec::linear(InnovationLaw::Gaussian, vec![]).is_err());
        assert!(
            ProcessSpec::linear(InnovationLaw::Gaussian, vec![0.0; MAX_LINEAR_SUPPORT + 2])
                .is_err()
        );
        assert!(ProcessSpec::iid(InnovationLaw::ThreePoint { k: 1 }).is_err());
        let s = Arc::new(ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap());
        assert!(ProcessSpec::counterexample(Arc::clone(&s), 3).is_err());
        assert!(ProcessSpec::counterexample(Arc::clone(&s), 0).is_err());
        assert!(ProcessSpec::perturbed(s, 2, InnovationLaw::ThreePoint { k: 1 }, 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = Arc::new(ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap());
        let specs = [
            ProcessSpec::perturbed(Arc::clone(&s), 2, InnovationLaw::Rademacher, 0.5).unwrap(),
            ProcessSpec::linear(InnovationLaw::Gaussian, vec![1.0, 0.5]).unwrap(),
            ProcessSpec::iid_three_point(s, 1).unwrap(),
        ];
        for spec in specs {
            let text = spec.to_json().unwrap();
            assert_eq!(ProcessSpec::from_json(&text).unwrap(), spec);
        }
        assert!(
            ProcessSpec::from_json(r#"{"kind":{"type":"iid","law":"rademacher"},"x":1}"#).is_err()
        );
    }

    #[test]
    fn decomposition_zero_past() {
        let s = Arc::new(ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap());
        let spec =
            ProcessSpec::perturbed(Arc::clone(&s), 2, InnovationLaw::Rademacher, 0.0).unwrap();
        let lat = Arc::new(
            spec.lattice(1)
                .unwrap()
                .with_background(Background::ZERO_PAST),
        );
        let scn = make_scenario(&lat, 3);
        let d = spec.decompose_sum(&scn, 36).unwrap();
        assert_eq!(d.nu, 0.0);
        assert_eq!(d.y1, 0.0);
        let total = spec.coboundary_sum(&scn, 36).unwrap() / 6.0;
        assert!((d.total() - total).abs() < 1e-9);
    }

    #[test]
    fn decomposition_forced_past() {
        let s = Arc::new(ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap());
        let spec = ProcessSpec::perturbed(Arc::clone(&s), 2, InnovationLaw::Gaussian, 1.0).unwrap();
        let n0 = 37;
        let lat = spec
            .lattice(1)
            .unwrap()
            .with_background(Background::ZERO_PAST);
        let lat = Arc::new(lat.force_event(2, n0).unwrap());
        for r in 0..20 {
            let scn = make_scenario(&lat, r);
            let d = spec.decompose_sum(&scn, n0 - 1).unwrap();
            assert!((d.nu + 256.0 / ((n0 - 1) as f64).sqrt()).abs() < 1e-9);
            let total = spec.coboundary_sum(&scn, n0 - 1).unwrap() / ((n0 - 1) as f64).sqrt();
            assert!((d.total() - total).abs() < 1e-9);
        }
    }

    #[test]
    fn window_checks() {
        let s = Arc::new(ParameterSchedule::build(&[2, 4], 2, MRule::Default).unwrap());
        let spec = ProcessSpec::counterexample(s, 1).unwrap();
        assert!(spec.check_window(31).is_ok());
        assert!(spec.check_window(32).is_err());
        assert!(spec.check_window(0).is_err());
    }
}
