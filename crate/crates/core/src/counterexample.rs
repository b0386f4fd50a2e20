//! Evaluation of the coboundary counterexample.
//!
//! With `h_k = ∑_{i<ℓ_k} U^i e_k`, the blocks are
//!
//! * `f_k = h_k − U^{ℓ_k} h_k`,
//! * `g_k = ∑_{i,j<ℓ_k} U^{i+j} e_k = ∑_r c_{k,r} U^r e_k`, so `f_k = g_k − U g_k`,
//!
//! and the process is `f = ∑_k U^{−N_k} f_k` with `g = ∑_k U^{−N_k} g_k`.
//! Block `k` of `f(t)` reads lattice entries `t − N_k .. t − N_k + 2ℓ_k − 1`;
//! block `k` of `g(t)` reads `t − N_k .. t − N_k + 2ℓ_k − 2`.
//!
//! Sums over `k` are truncated at a caller-supplied `k_max_used`.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::innovations::{Background, InnovationLattice, LatticeView};
use crate::schedule::{ln_big, triangle_coefficient, triangle_square_sum, ParameterSchedule};

use std::sync::Arc;

/// Lattice intervals read by `g(t)`, one per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowFootprint {
    pub t: i128,
    /// `(k, lo, hi)` with `lo = t − N_k`, `hi = lo + 2ℓ_k − 2`.
    pub blocks: Vec<(usize, i128, i128)>,
}

pub fn footprint(s: &ParameterSchedule, t: i128, k_max_used: usize) -> WindowFootprint {
    let blocks = (1..=k_max_used)
        .map(|k| {
            let lo = t - block_offset(s, k);
            (k, lo, lo + 2 * s.ell(k) as i128 - 2)
        })
        .collect();
    WindowFootprint { t, blocks }
}

fn block_offset(s: &ParameterSchedule, k: usize) -> i128 {
    s.n_i128(k).expect("N_k outside the lattice index range")
}

fn check_k(s: &ParameterSchedule, k_max_used: usize) {
    assert!(
        k_max_used <= s.k_max(),
        "k_max_used = {k_max_used} exceeds schedule k_max = {}",
        s.k_max()
    );
}

/// `f(t) = ∑_k (U^{t−N_k} f_k)`.
pub fn eval_f<V: LatticeView + ?Sized>(view: &V, t: i128, k_max_used: usize) -> f64 {
    let s = view.schedule();
    check_k(s, k_max_used);
    let mut total = 0.0;
    for k in 1..=k_max_used {
        let ell = s.ell(k) as i128;
        let base = t - block_offset(s, k);
        let rising: f64 = (0..ell).map(|i| view.value_at(k, base + i)).sum();
        let falling: f64 = (ell..2 * ell).map(|i| view.value_at(k, base + i)).sum();
        total += rising - falling;
    }
    total
}

/// `g(t) = ∑_k ∑_r c_{k,r} e_k(t − N_k + r)`.
pub fn eval_g<V: LatticeView + ?Sized>(view: &V, t: i128, k_max_used: usize) -> f64 {
    let s = view.schedule();
    check_k(s, k_max_used);
    (1..=k_max_used)
        .map(|k| block_g(view, k, t - block_offset(s, k)))
        .sum()
}

/// `∑_r c_{k,r} e_k(base + r)`.
fn block_g<V: LatticeView + ?Sized>(view: &V, k: usize, base: i128) -> f64 {
    let ell = view.schedule().ell(k);
    (0..=(2 * ell as i128 - 2))
        .map(|r| triangle_coefficient(ell, r) as f64 * view.value_at(k, base + r))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMode {
    /// `f(1) + … + f(n)`.
    Direct,
    /// `g(1) − g(n + 1)`.
    Telescoped,
}

/// `S_n(f)`.
pub fn partial_sum<V: LatticeView + ?Sized>(
    view: &V,
    n: i128,
    mode: SumMode,
    k_max_used: usize,
) -> f64 {
    assert!(n >= 1, "partial sums start at n = 1");
    match mode {
        SumMode::Direct => (1..=n).map(|t| eval_f(view, t, k_max_used)).sum(),
        SumMode::Telescoped => eval_g(view, 1, k_max_used) - eval_g(view, n + 1, k_max_used),
    }
}

/// `S_1(f), …, S_{n_max}(f)` by direct accumulation.
pub fn partial_sums_direct<V: LatticeView + ?Sized>(
    view: &V,
    n_max: i128,
    k_max_used: usize,
) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=n_max)
        .map(|t| {
            acc += eval_f(view, t, k_max_used);
            acc
        })
        .collect()
}

/// The split `E⁰(U^m g) = I(m) + II(m)` for block `k` with
/// `N_{k−1} < m ≤ N_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftParts {
    pub k: usize,
    pub i_value: f64,
    pub ii_value: f64,
    /// `m` lies in the truncated branch `N_k − 2ℓ_k + 2 < m ≤ N_k`.
    pub truncated: bool,
}

/// `E⁰(U^m g)` split into the block-`k` part and the later blocks.
///
/// `I(m) = U^{m−N_k} g_k` when `m ≤ N_k − 2ℓ_k + 2`, otherwise
/// `∑_{i=0}^{N_k−m} c_{k,i} e_k(i + m − N_k)`; `II(m) = ∑_{j>k} U^{m−N_j} g_j`.
/// Blocks `j < k` read only future entries and contribute zero.
pub fn drift_parts<V: LatticeView + ?Sized>(
    view: &V,
    m: i128,
    k_max_used: usize,
) -> Result<DriftParts> {
    let s = view.schedule();
    check_k(s, k_max_used);
    let k = block_within(s, m, k_max_used)?;
    let n_k = block_offset(s, k);
    let ell = s.ell(k) as i128;
    let base = m - n_k;
    let truncated = m > n_k - 2 * ell + 2;
    let i_value = if truncated {
        (0..=(n_k - m))
            .map(|i| triangle_coefficient(ell as u64, i) as f64 * view.value_at(k, base + i))
            .sum()
    } else {
        block_g(view, k, base)
    };
    let ii_value = ((k + 1)..=k_max_used)
        .map(|j| block_g(view, j, m - block_offset(s, j)))
        .sum();
    Ok(DriftParts {
        k,
        i_value,
        ii_value,
        truncated,
    })
}

fn block_within(s: &ParameterSchedule, m: i128, k_max_used: usize) -> Result<usize> {
    match s.block_of_i128(m) {
        Some(k) if k <= k_max_used => Ok(k),
        _ => Err(Error::WindowOverflow(format!(
            "time {m} is not in any block 1..={k_max_used} (N_{k_max_used} = {})",
            s.n(k_max_used)
        ))),
    }
}

/// `E⁰[S_n(f)] = g(1) − I(n+1) − II(n+1)`, reading only entries with index
/// `≤ 0`.
pub fn conditional_mean<V: LatticeView + ?Sized>(
    view: &V,
    n: i128,
    k_max_used: usize,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument(format!("n must be ≥ 1, got {n}")));
    }
    let parts = drift_parts(view, n + 1, k_max_used)?;
    Ok(eval_g(view, 1, k_max_used) - parts.i_value - parts.ii_value)
}

/// Martingale increments `P_j S_n(f)` for `j = 1..=n`.
///
/// Only `−g(n+1)` reads entries with positive index, so
/// `P_j S_n(f) = −∑_k c_{k, j−n−1+N_k} e_k(j)`. These are the
/// `√n·Y_{n,j}` of the conditionally centred sum.
pub fn centered_increments<V: LatticeView + ?Sized>(
    view: &V,
    n: i128,
    k_max_used: usize,
) -> Vec<f64> {
    let s = view.schedule();
    check_k(s, k_max_used);
    let mut out = vec![0.0; n.max(0) as usize];
    for k in 1..=k_max_used {
        let ell = s.ell(k) as i128;
        let shift = n + 1 - block_offset(s, k);
        let lo = shift.max(1);
        let hi = (shift + 2 * ell - 2).min(n);
        for j in lo..=hi {
            let c = triangle_coefficient(ell as u64, j - shift) as f64;
            out[(j - 1) as usize] -= c * view.value_at(k, j);
        }
    }
    out
}

/// `Var S_n(f) = ∑_k ‖e_k‖₂² ∑_r (c_{k,r} − c_{k,r−n})²`.
pub fn exact_variance_sn(s: &ParameterSchedule, n: u128, k_max_used: usize) -> f64 {
    check_k(s, k_max_used);
    assert!(n >= 1);
    (1..=k_max_used)
        .map(|k| {
            let ell = s.ell(k);
            let e2 = s.exact_block_moments(k).e_l2_sq;
            let overlap = if n >= 2 * ell as u128 - 1 {
                2.0 * triangle_square_sum(ell)
            } else {
                let n = n as i128;
                (0..=(2 * ell as i128 - 2 + n))
                    .map(|r| {
                        let d = triangle_coefficient(ell, r) as f64
                            - triangle_coefficient(ell, r - n) as f64;
                        d * d
                    })
                    .sum()
            };
            e2 * overlap
        })
        .sum()
}

/// Coefficient of `e_k(0)` in `P₀ U^{n−N_k} g_k`, for `N_{k−1} < n ≤ N_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Projection {
    pub k: usize,
    pub coeff: u64,
    pub l2_norm: f64,
}

/// `P₀U^{n−N_k}g_k = c_{k,N_k−n} e_k` when `N_k − 2ℓ_k + 2 < n ≤ N_k`, zero
/// otherwise, where `k` is the block containing `n`.
///
/// This is the index-0 part of `E⁰(U^n g)`; since
/// `S_{n−1}(f) = Ug − U^n g`, it equals `−P₀S_{n−1}(f)`.
pub fn projection_p0_sn(s: &ParameterSchedule, n: &BigUint) -> Result<P0Projection> {
    let k = s
        .block_of(n)
        .ok_or_else(|| Error::WindowOverflow(format!("n = {n} outside 1..=N_{}", s.k_max())))?;
    let ell = s.ell(k);
    let gap = s.n(k) - n;
    let coeff = match gap.to_u64() {
        Some(r) if r <= 2 * ell - 2 => triangle_coefficient(ell, r as i128),
        _ => 0,
    };
    let l2_norm = coeff as f64 * s.exact_block_moments(k).e_l2_sq.sqrt();
    Ok(P0Projection { k, coeff, l2_norm })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeydeRow {
    pub n: u128,
    pub variance_over_n: f64,
    /// `None` when `n > N_{k_max}`.
    pub p0_block: Option<usize>,
    pub p0_norm: Option<f64>,
}

/// `Var S_n(f)/n` and `‖P₀U^{n−N_k}g_k‖₂` along `n_grid`.
pub fn heyde_report(s: &ParameterSchedule, n_grid: &[u128], k_max_used: usize) -> Vec<HeydeRow> {
    n_grid
        .iter()
        .map(|&n| {
            let proj = projection_p0_sn(s, &BigUint::from(n)).ok();
            HeydeRow {
                n,
                variance_over_n: exact_variance_sn(s, n, k_max_used) / n as f64,
                p0_block: proj.map(|p| p.k),
                p0_norm: proj.map(|p| p.l2_norm),
            }
        })
        .collect()
}

/// Drift of the conditional mean on the forced configuration `A_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub k: usize,
    pub n: i128,
    pub i_value: f64,
    pub ii_value: f64,
    /// `E⁰[S_{n−1}(f)]/√(n−1)`; absent for `n = 1`.
    pub nu: Option<f64>,
    /// `I(n)/√N_k`.
    pub ratio: f64,
    pub truncated: bool,
}

/// Forces `A_n` in block `k` on an otherwise zero lattice and evaluates
/// `I(n)`, `II(n)` and the drift of `E⁰[S_{n−1}(f)]`.
pub fn drift_on_forced_event(s: Arc<ParameterSchedule>, k: usize, n: i128) -> Result<DriftReport> {
    let k_max = s.k_max();
    let sqrt_nk = (0.5 * ln_big(&s.n(k.clamp(1, k_max)))).exp();
    let lattice = InnovationLattice::new(0, s, &[])?.with_background(Background::ZERO);
    let forced = lattice.force_event(k, n)?;
    let parts = drift_parts(&forced, n, k_max)?;
    let nu = if n >= 2 {
        Some(conditional_mean(&forced, n - 1, k_max)? / ((n - 1) as f64).sqrt())
    } else {
        None
    };
    Ok(DriftReport {
        k,
        n,
        i_value: parts.i_value,
        ii_value: parts.ii_value,
        nu,
        ratio: parts.i_value / sqrt_nk,
        truncated: parts.truncated,
    })
}

/// Lower bound on `P(⋃_n A_n)` over block `k` from the first two
/// Bonferroni terms:
///
/// `(M_k−2ℓ_k+2)·p·(1−2p)^{2ℓ_k−2} − ½(M_k−2ℓ_k)²·p²·(1−2p)^{2ℓ_k−2}`
/// with `p = 1/(2kM_k)`.
pub fn bonferroni_bound(s: &ParameterSchedule, k: usize) -> f64 {
    let kf = k as f64;
    let ell = s.ell(k) as f64;
    let ln_m = s.ln_m(k);
    // every M-dependent factor as a ratio to M
    let lead = 1.0 - ((2.0 * ell - 2.0).ln() - ln_m).exp();
    let pair = 1.0 - ((2.0 * ell).ln() - ln_m).exp();
    let inv_km = (-(kf.ln() + ln_m)).exp();
    let stay_zero = ((2.0 * ell - 2.0) * (-inv_km).ln_1p()).exp();
    let first = lead / (2.0 * kf) * stay_zero;
    let second = 0.5 * pair * pair / (4.0 * kf * kf) * stay_zero;
    first - second
}

/// Moments of block `k` by summing over every sign pattern of the `2ℓ_k`
/// lattice entries that `f_k` reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnumeratedMoments {
    pub k: usize,
    pub outcomes: u64,
    pub e_l2_sq: f64,
    pub f_l2_sq: f64,
    pub g_l1: f64,
    pub g_l2_sq: f64,
}

/// Largest `ℓ_k` accepted by [`enumerate_block_moments`] (`3^6` outcomes).
pub const MAX_ENUMERATED_ELL: u64 = 3;

pub fn enumerate_block_moments(s: &ParameterSchedule, k: usize) -> Result<EnumeratedMoments> {
    if !(1..=s.k_max()).contains(&k) {
        return Err(Error::BlockOutOfRange {
            k,
            k_max: s.k_max(),
        });
    }
    let ell = s.ell(k);
    if ell > MAX_ENUMERATED_ELL {
        return Err(Error::Unsupported(format!(
            "enumeration needs ell_k <= {MAX_ENUMERATED_ELL}, got {ell}"
        )));
    }
    let law = s.three_point_law(k);
    let p = law.tail_prob();
    let v = law.magnitude;
    let width = 2 * ell as usize;
    let outcomes = 3u64.pow(width as u32);
    let (mut e2, mut f2, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0);
    for code in 0..outcomes {
        let mut rest = code;
        let mut prob = 1.0;
        let mut values = Vec::with_capacity(width);
        for _ in 0..width {
            let (x, w) = match rest % 3 {
                0 => (0.0, 1.0 - 2.0 * p),
                1 => (v, p),
                _ => (-v, p),
            };
            rest /= 3;
            prob *= w;
            values.push(x);
        }
        let ell = ell as usize;
        let f: f64 = values[..ell].iter().sum::<f64>() - values[ell..].iter().sum::<f64>();
        let g: f64 = values[..width - 1]
            .iter()
            .enumerate()
            .map(|(r, x)| triangle_coefficient(ell as u64, r as i128) as f64 * x)
            .sum();
        e2 += prob * values[0] * values[0];
        f2 += prob * f * f;
        g1 += prob * g.abs();
        g2 += prob * g * g;
    }
    Ok(EnumeratedMoments {
        k,
        outcomes,
        e_l2_sq: e2,
        f_l2_sq: f2,
        g_l1: g1,
        g_l2_sq: g2,
    })
}
