//! Monte Carlo estimation of quenched and annealed laws of `S_n/√n`.
//!
//! Replicates run in parallel with rayon; each replicate is a pure function
//! of `(seed, replicate index)` and results are collected in replicate order,
//! so every estimate is independent of the worker count.

use std::sync::Arc;

use libm::erfc;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::ProcessSpec;
use crate::innovations::{make_scenario, InnovationLattice, Scenario};
use crate::stream::StreamKey;

/// Smallest replicate count accepted by [`simulate_sums`].
pub const MIN_REPLICATES: usize = 100;

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical CDF of an empty sample".into(),
            ));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("sample contains NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `F̂(x) = #{X_i ≤ x}/R`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// `F̂(x⁻) = #{X_i < x}/R`.
    pub fn left_limit(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.sorted.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
            / (self.len() as f64 - 1.0).max(1.0)
    }

    /// `(x, F̂(x))` at each distinct sample value, for plotting.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let r = self.len() as f64;
        for (i, &x) in self.sorted.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = (i + 1) as f64 / r,
                _ => out.push((x, (i + 1) as f64 / r)),
            }
        }
        out
    }

    fn distinct(&self) -> impl Iterator<Item = f64> + '_ {
        let mut prev: Option<f64> = None;
        self.sorted.iter().copied().filter(move |&x| {
            let fresh = prev != Some(x);
            prev = Some(x);
            fresh
        })
    }
}

/// `Φ(x/σ)`; for `σ² = 0` the unit step at 0 (right-continuous).
pub fn normal_cdf(x: f64, sigma2: f64) -> f64 {
    if sigma2 == 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * erfc(-x / (2.0 * sigma2).sqrt())
}

/// Kolmogorov–Smirnov distance `sup_x |F̂(x) − Φ_{σ²}(x)|`, checking both
/// one-sided gaps at every jump of either distribution.
pub fn ks_to_normal(cdf: &EmpiricalCdf, sigma2: f64) -> Result<f64> {
    if sigma2.is_nan() || sigma2 < 0.0 || sigma2.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "sigma2 must be ≥ 0, got {sigma2}"
        )));
    }
    if cdf.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let target_left = |x: f64| {
        if sigma2 == 0.0 {
            (x > 0.0) as u8 as f64
        } else {
            normal_cdf(x, sigma2)
        }
    };
    let gap = |x: f64| {
        let right = (cdf.eval(x) - normal_cdf(x, sigma2)).abs();
        let left = (cdf.left_limit(x) - target_left(x)).abs();
        right.max(left)
    };
    let mut d = cdf.distinct().map(gap).fold(0.0, f64::max);
    if sigma2 == 0.0 {
        d = d.max(gap(0.0));
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    a.distinct()
        .chain(b.distinct())
        .map(|x| (a.eval(x) - b.eval(x)).abs())
        .fold(0.0, f64::max)
}

/// Where replicate randomness comes from.
#[derive(Debug, Clone)]
pub enum ScenarioMode {
    /// One frozen past; replicates redraw the future only.
    Quenched(Arc<InnovationLattice>),
    /// Every replicate redraws past and future.
    Annealed { seed: u64 },
}

impl ScenarioMode {
    pub fn quenched(spec: &ProcessSpec, seed: u64) -> Result<Self> {
        Ok(Self::Quenched(Arc::new(spec.lattice(seed)?)))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Quenched(_) => "quenched",
            Self::Annealed { .. } => "annealed",
        }
    }

    /// The scenario used for replicate `r`.
    pub fn scenario(&self, spec: &ProcessSpec, r: u64) -> Result<Scenario> {
        match self {
            Self::Quenched(lattice) => Ok(make_scenario(lattice, r)),
            Self::Annealed { seed } => {
                let sub = StreamKey::new(*seed).split(r).draw_u64(0);
                Ok(Scenario::new(Arc::new(spec.lattice(sub)?), 0))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// `S_n/√n`.
    Raw,
    /// `(S_n − E⁰S_n)/√n`.
    Conditional,
}

/// Samples of `S_n/√n` (or its conditionally centred version) over `reps`
/// replicates.
pub fn simulate_sums(
    spec: &ProcessSpec,
    mode: &ScenarioMode,
    n: i128,
    reps: usize,
    centering: Centering,
) -> Result<EmpiricalCdf> {
    if reps < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_REPLICATES} replicates, got {reps}"
        )));
    }
    spec.check_window(n)?;
    let root = (n as f64).sqrt();
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let scn = mode.scenario(spec, r)?;
            let sum = match centering {
                Centering::Raw => spec.partial_sum(&scn, n),
                Centering::Conditional => spec.centered_sum(&scn, n)?,
            };
            Ok(sum / root)
        })
        .collect::<Result<Vec<f64>>>()?;
    EmpiricalCdf::new(samples)
}

/// Sample mean and its standard error `SD/√R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        if let Some(&first) = xs.first() {
            if xs.iter().all(|&x| x == first) {
                return Self {
                    mean: first,
                    se: 0.0,
                };
            }
        }
        let r = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / r;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / r).sqrt(),
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.mean - target).abs() <= n_se * self.se
    }
}

/// Estimates of the martingale CLT conditions at one `n`, for
/// `X_{n,j} = D_j/√n` with `D_j` the martingale increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRow {
    pub n: i128,
    /// (i) `∑_j X_{n,j}²`.
    pub sum_sq: Estimate,
    /// (ii) `P[max_j |X_{n,j}| ≥ ε]`.
    pub max_tail: Estimate,
    /// (iii) `E[max_j X_{n,j}²]`.
    pub max_sq: Estimate,
    /// (iv) `E[max_j |X_{n,j}|]`.
    pub max_abs: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub eps: f64,
    pub rows: Vec<ConditionRow>,
    /// (iii) `sup_n E[max_j X_{n,j}²]` over the grid.
    pub sup_max_sq: Estimate,
}

/// Monte Carlo estimates of the McLeish and Lachout conditions along
/// `n_grid`.
pub fn mcleish_report(
    spec: &ProcessSpec,
    mode: &ScenarioMode,
    n_grid: &[i128],
    reps: usize,
    eps: f64,
) -> Result<ConditionReport> {
    if reps == 0 || n_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "need replicates and a non-empty grid".into(),
        ));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        spec.check_window(n)?;
        let nf = n as f64;
        let per_rep = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let scn = mode.scenario(spec, r)?;
                let inc = spec.martingale_increments(&scn, n)?;
                let sum_sq = inc.iter().map(|x| x * x).sum::<f64>() / nf;
                let max_abs = inc.iter().fold(0.0f64, |m, x| m.max(x.abs())) / nf.sqrt();
                Ok([
                    sum_sq,
                    (max_abs >= eps) as u8 as f64,
                    max_abs * max_abs,
                    max_abs,
                ])
            })
            .collect::<Result<Vec<[f64; 4]>>>()?;
        let column =
            |c: usize| Estimate::from_samples(&per_rep.iter().map(|v| v[c]).collect::<Vec<_>>());
        rows.push(ConditionRow {
            n,
            sum_sq: column(0),
            max_tail: column(1),
            max_sq: column(2),
            max_abs: column(3),
        });
    }
    let sup_max_sq = rows
        .iter()
        .map(|row| row.max_sq)
        .max_by(|a, b| a.mean.total_cmp(&b.mean))
        .expect("non-empty grid");
    Ok(ConditionReport {
        eps,
        rows,
        sup_max_sq,
    })
}

/// `(1/n)∑_{j=1}^n X_j²` along one realisation.
pub fn ergodic_average(spec: &ProcessSpec, scn: &Scenario, n: i128) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument(format!("n must be ≥ 1, got {n}")));
    }
    let total: f64 = (1..=n)
        .into_par_iter()
        .map(|t| spec.value(scn, t).powi(2))
        .sum();
    Ok(total / n as f64)
}

/// [`ergodic_average`] on a fresh random lattice.
pub fn ergodic_average_seeded(spec: &ProcessSpec, n: i128, seed: u64) -> Result<f64> {
    let lattice = Arc::new(spec.lattice(seed)?);
    ergodic_average(spec, &make_scenario(&lattice, 0), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalTail {
    pub lambda: f64,
    pub empirical_tail: f64,
    pub se: f64,
    /// `‖f‖₂²/λ²`.
    pub bound: f64,
    /// `empirical_tail ≤ bound + 3·se`.
    pub within_bound: bool,
}

/// Frequency of `sup_{n ≤ n_max} √((X_1² + … + X_n²)/n) > λ` against the
/// maximal-ergodic bound `‖f‖₂²/λ²`.
pub fn maximal_tail_check(
    spec: &ProcessSpec,
    mode: &ScenarioMode,
    lambda: f64,
    n_max: i128,
    reps: usize,
) -> Result<MaximalTail> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if n_max < 1 || reps == 0 {
        return Err(Error::InvalidArgument(
            "need n_max ≥ 1 and at least one replicate".into(),
        ));
    }
    let hits = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let scn = mode.scenario(spec, r)?;
            let mut acc = 0.0;
            let mut sup_sq = 0.0f64;
            for t in 1..=n_max {
                acc += spec.value(&scn, t).powi(2);
                sup_sq = sup_sq.max(acc / t as f64);
            }
            Ok((sup_sq > lambda * lambda) as u8 as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let est = Estimate::from_samples(&hits);
    let bound = spec.f_l2_sq() / (lambda * lambda);
    Ok(MaximalTail {
        lambda,
        empirical_tail: est.mean,
        se: est.se,
        bound,
        within_bound: est.mean <= bound + 3.0 * est.se,
    })
}

/// Quenched laws under one frozen past.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuenchedScenario {
    pub seed: u64,
    /// `ν_n = E⁰S_n/√n`, the horizontal shift of the quenched law.
    pub nu: f64,
    pub raw: EmpiricalCdf,
    pub centered: EmpiricalCdf,
    pub ks_raw: f64,
    pub ks_centered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuenchedComparison {
    pub n: i128,
    pub sigma2: f64,
    pub scenarios: Vec<QuenchedScenario>,
    pub nu_mean: f64,
    /// Spread of `ν_n` across pasts; nonzero spread with stable centred
    /// laws witnesses that convergence is not quenched.
    pub nu_sd: f64,
}

impl QuenchedComparison {
    /// Largest two-sample KS distance between centred laws of any two pasts.
    pub fn max_centered_ks(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.scenarios.iter().enumerate() {
            for b in &self.scenarios[i + 1..] {
                d = d.max(ks_two_sample(&a.centered, &b.centered));
            }
        }
        d
    }
}

/// Quenched laws of `S_n/√n` under each of the given frozen pasts.
pub fn quenched_compare_lattices(
    spec: &ProcessSpec,
    lattices: &[Arc<InnovationLattice>],
    n: i128,
    reps: usize,
) -> Result<QuenchedComparison> {
    let sigma2 = spec.limit_variance();
    let scenarios = lattices
        .iter()
        .map(|lattice| {
            let mode = ScenarioMode::Quenched(Arc::clone(lattice));
            let raw = simulate_sums(spec, &mode, n, reps, Centering::Raw)?;
            let centered = simulate_sums(spec, &mode, n, reps, Centering::Conditional)?;
            let nu = spec.conditional_mean(&make_scenario(lattice, 0), n)? / (n as f64).sqrt();
            Ok(QuenchedScenario {
                seed: lattice.seed(),
                nu,
                ks_raw: ks_to_normal(&raw, sigma2)?,
                ks_centered: ks_to_normal(&centered, sigma2)?,
                raw,
                centered,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nus: Vec<f64> = scenarios.iter().map(|s| s.nu).collect();
    let m = nus.iter().sum::<f64>() / nus.len().max(1) as f64;
    let sd = if nus.len() > 1 {
        (nus.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (nus.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(QuenchedComparison {
        n,
        sigma2,
        scenarios,
        nu_mean: m,
        nu_sd: sd,
    })
}

/// [`quenched_compare_lattices`] over fresh random pasts, one per seed.
pub fn quenched_compare(
    spec: &ProcessSpec,
    seeds: &[u64],
    n: i128,
    reps: usize,
) -> Result<QuenchedComparison> {
    let lattices = seeds
        .iter()
        .map(|&seed| spec.lattice(seed).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    quenched_compare_lattices(spec, &lattices, n, reps)
}
