//! Thresholds, index sets and admissible weight windows.
//!
//! Everything here works on sorted real zero lists. A "corner" is described by
//! its S± zeros and the denominator `denom` that converts a zero into a weight
//! exponent: 2δ for the model corner problem, π − 2δᵢ for the contact corners.

use crate::error::{Error, Result};
use crate::spectral::{classify_q2, compute_quantities, real_zeros_upto, CornerParams, Kind, Q2Class};
use num_rational::Ratio;
use serde::Serialize;
use std::f64::consts::PI;

/// Interface contact angle in the rational encoding δ = π(1/2 − q/p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InterfaceAngle {
    pub q: u32,
    pub p: u32,
}

impl InterfaceAngle {
    pub fn radians(&self) -> f64 {
        PI * (0.5 - self.q as f64 / self.p as f64)
    }

    /// 2π/(π − 2δ) = p/q.
    pub fn two_pi_over_gap(&self) -> Ratio<i64> {
        Ratio::new(self.p as i64, self.q as i64)
    }

    /// π/(2δ) = p/(p − 2q).
    pub fn pi_over_two_delta(&self) -> Ratio<i64> {
        Ratio::new(self.p as i64, self.p as i64 - 2 * self.q as i64)
    }

    /// The model-corner angle δ_c = qπ/p = π/2 − δ, as corner parameters.
    pub fn corner_params(&self, alpha: f64, k: f64) -> Result<CornerParams> {
        CornerParams::new(1.0 / self.radians().tan(), alpha, k, self.q, self.p)
    }
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Continued-fraction convergents h/k of x ∈ (0, 1), in order.
fn convergents(x: f64, max_den: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as u64;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den {
            break;
        }
        out.push((h2, k2));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

/// Smallest-denominator convergent q/p of 1/2 − δ/π with |π(1/2 − q/p) − δ| ≤ tol.
pub fn rational_angle(delta: f64, tol: f64) -> Result<InterfaceAngle> {
    if !(delta > 0.0 && delta < PI / 2.0) {
        return Err(Error::InvalidParams(format!("angle {delta} not in (0, π/2)")));
    }
    let x = 0.5 - delta / PI;
    for (h, k) in convergents(x, 1 << 40) {
        if h == 0 || k <= 2 * h {
            continue;
        }
        if (PI * (0.5 - h as f64 / k as f64) - delta).abs() <= tol {
            return Ok(InterfaceAngle { q: h as u32, p: k as u32 });
        }
    }
    Err(Error::InvalidParams(format!("no convergent within {tol} of {delta}")))
}

/// Same, in the model-corner encoding δ = qπ/p.
pub fn rational_corner_angle(delta: f64, tol: f64) -> Result<(u32, u32)> {
    let a = rational_angle(PI / 2.0 - delta, tol)?;
    Ok((a.q, a.p))
}

/// Exact rational recognition of an interface angle (denominators ≤ 10⁴).
fn recognise(delta: f64) -> Option<InterfaceAngle> {
    rational_angle(delta, 1e-13).ok().filter(|a| a.p <= 10_000)
}

/// Smallest i ≥ 1 with z[i−1]/denom < bound ≤ z[i]/denom.
pub fn select_threshold(zeros_plus: &[f64], denom: f64, bound: f64) -> Result<usize> {
    (1..zeros_plus.len())
        .find(|&i| zeros_plus[i - 1] / denom < bound && bound <= zeros_plus[i] / denom)
        .ok_or(Error::NoThreshold { bound })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSets {
    /// −1 encodes "no admissible m".
    pub cap_minus: i64,
    pub cap_plus: i64,
    /// Membership with d₀ read existentially (some d₀ ∈ [0,1]).
    pub members_minus: Vec<i64>,
    /// Membership with d₀ read universally (every d₀ ∈ [0,1]).
    pub members_minus_universal: Vec<i64>,
    pub members_plus: Vec<i64>,
}

/// max{m ∈ ℕ : m < 1 + x}, or −1 if none.
pub fn strict_cap(x: f64) -> i64 {
    let c = (1.0 + x).ceil() as i64 - 1;
    c.max(-1)
}

/// Caps and member sets. `zm`, `zp` are the sorted real zeros of S⁻ and S⁺.
pub fn build_index_sets(zm: &[f64], zp: &[f64], i_star: usize, s_star: f64, denom: f64, bound: f64) -> Result<IndexSets> {
    if s_star <= 2.0 {
        return Err(Error::InvalidParams(format!("s* = {s_star} must exceed 2")));
    }
    if i_star + 2 >= zm.len() || i_star >= zp.len() || i_star == 0 || zm.len() < 2 {
        return Err(Error::InvalidParams("zero lists too short for the threshold".into()));
    }
    let g = s_star - 2.0;
    let cap_minus = strict_cap((zp[i_star] + zm[i_star + 2]) / (denom * g));
    let cap_plus = strict_cap((zp[i_star - 1] - zm[1]) / (denom * g));
    // "For some i" is easiest to meet at the largest 𝔷ᵢ⁻; d₀ = 1 (existential) or 0 (universal).
    let zmax = zm[1..=i_star + 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let members_minus = (0..=cap_minus).filter(|&m| -zmax / denom + g * (m as f64 - 1.0) < bound).collect();
    let members_minus_universal = (0..=cap_minus).filter(|&m| -zmax / denom + g * (m as f64) < bound).collect();
    // Likewise the smallest 𝔷ᵢ⁺.
    let zpmin = zp[..i_star].iter().cloned().fold(f64::INFINITY, f64::min);
    let members_plus = (0..=cap_plus).filter(|&m| zpmin / denom - g * (m as f64 - 1.0) < bound).collect();
    Ok(IndexSets { cap_minus, cap_plus, members_minus, members_minus_universal, members_plus })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZStar {
    pub z_under: f64,
    pub z_over: f64,
    pub z_star: f64,
    /// 𝔷̲ evaluated over the universal-d₀ member set.
    pub z_under_universal: f64,
}

/// 𝔷̲ = max −𝔷ᵢ⁻/denom + (s*−2)(m − d₀) (sup at d₀ = 0), 𝔷̄ = max 𝔷ᵢ⁺/denom − (s*−2)(m − 1).
pub fn compute_z_star(zm: &[f64], zp: &[f64], i_star: usize, sets: &IndexSets, s_star: f64, denom: f64) -> ZStar {
    let g = s_star - 2.0;
    let under = |members: &[i64]| {
        let mut best = f64::NEG_INFINITY;
        for &m in members {
            for z in &zm[1..=i_star + 2] {
                best = best.max(-z / denom + g * m as f64);
            }
        }
        best
    };
    let mut z_over = f64::NEG_INFINITY;
    for &m in &sets.members_plus {
        for z in &zp[..i_star] {
            z_over = z_over.max(z / denom - g * (m as f64 - 1.0));
        }
    }
    let z_under = under(&sets.members_minus);
    ZStar { z_under, z_over, z_star: z_under.max(z_over), z_under_universal: under(&sets.members_minus_universal) }
}

/// Threshold, sets and 𝔷* for one corner at one bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerWeights {
    pub denom: f64,
    pub bound: f64,
    pub i_star: usize,
    pub sets: IndexSets,
    pub z: ZStar,
}

pub fn corner_weights(zm: &[f64], zp: &[f64], s_star: f64, denom: f64, bound: f64) -> Result<CornerWeights> {
    let i_star = select_threshold(zp, denom, bound)?;
    let sets = build_index_sets(zm, zp, i_star, s_star, denom, bound)?;
    let z = compute_z_star(zm, zp, i_star, &sets, s_star, denom);
    Ok(CornerWeights { denom, bound, i_star, sets, z })
}

/// Sorted real zeros of S⁻ and S⁺ sufficient for bounds up to `bound`.
pub fn zero_prefixes(cp: &CornerParams, bound: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let sq = compute_quantities(cp)?;
    let denom = 2.0 * cp.delta();
    let xmax = denom * (bound + 8.0);
    Ok((real_zeros_upto(Kind::Minus, &sq, xmax)?, real_zeros_upto(Kind::Plus, &sq, xmax)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    H7Generic,
    H7Q0Eq1,
    H7Q1Eq1,
    H7BothEq1,
    H8,
    H9,
    Thm43,
    SStar,
}

/// Open interval minus finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightWindow {
    pub lower: f64,
    pub upper: f64,
    pub excluded: Vec<f64>,
    pub case_tag: CaseTag,
    pub empty: bool,
    pub reason: Option<String>,
}

impl WeightWindow {
    pub fn new(lower: f64, upper: f64, excluded: Vec<f64>, case_tag: CaseTag) -> Self {
        let mut ex: Vec<f64> = excluded.into_iter().filter(|&x| x > lower && x < upper).collect();
        ex.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ex.dedup();
        let empty = lower >= upper;
        let reason = empty.then(|| format!("lower {lower} ≥ upper {upper}"));
        Self { lower, upper, excluded: ex, case_tag, empty, reason }
    }

    pub fn contains(&self, x: f64) -> bool {
        !self.empty && x > self.lower && x < self.upper && !self.excluded.contains(&x)
    }

    /// Midpoint of the widest open sub-interval between exclusions.
    pub fn midpoint(&self) -> Option<f64> {
        if self.empty {
            return None;
        }
        let mut pts = vec![self.lower];
        pts.extend(&self.excluded);
        pts.push(self.upper);
        pts.windows(2)
            .max_by(|a, b| (a[1] - a[0]).partial_cmp(&(b[1] - b[0])).unwrap())
            .map(|w| 0.5 * (w[0] + w[1]))
    }
}

/// s* ∈ (max{13/4, 2π/(π−2δ₁), 2π/(π−2δ₀)}, 4) \ {π/(2δ₀), π/(2δ₁)}, exact when both angles are rational.
pub fn s_star_window(delta0: f64, delta1: f64) -> Result<WeightWindow> {
    for d in [delta0, delta1] {
        if !(d > 0.0 && d < PI / 2.0) {
            return Err(Error::InvalidParams(format!("angle {d} not in (0, π/2)")));
        }
    }
    let (lower, excluded) = match (recognise(delta0), recognise(delta1)) {
        (Some(a0), Some(a1)) => {
            let lo = Ratio::new(13, 4).max(a0.two_pi_over_gap()).max(a1.two_pi_over_gap());
            (to_f64(lo), vec![to_f64(a0.pi_over_two_delta()), to_f64(a1.pi_over_two_delta())])
        }
        _ => {
            let lo = (13.0f64 / 4.0).max(2.0 * PI / (PI - 2.0 * delta0)).max(2.0 * PI / (PI - 2.0 * delta1));
            (lo, vec![PI / (2.0 * delta0), PI / (2.0 * delta1)])
        }
    };
    Ok(WeightWindow::new(lower, 4.0, excluded, CaseTag::SStar))
}

/// Window for s+2 at the model corner under the f₁-only assumption.
pub fn h8_window(z1_star: f64) -> WeightWindow {
    WeightWindow::new(2f64.max(z1_star), 3.0, vec![], CaseTag::H8)
}

/// Window for s+2 at the model corner with all right-hand sides; δ is the corner angle.
pub fn h9_window(z2_star: f64, delta: f64) -> WeightWindow {
    WeightWindow::new(2f64.max(z2_star), 3f64.min(PI / delta), vec![PI / (PI - 2.0 * delta)], CaseTag::H9)
}

/// Window for s+2 in the q₂ = 1 model-corner case; `zm1` is 𝔷₁⁻.
pub fn thm43_window(zm1: f64, delta: f64, s_star: f64) -> WeightWindow {
    let upper = 3f64.min(PI / delta).min(2.0 * (s_star - 2.0) + zm1 / (2.0 * delta));
    WeightWindow::new(2.0, upper, vec![], CaseTag::Thm43)
}

/// Model-corner (§4) weights: j = 1 (bound 3) and j = 2 (bound min{3, π/δ}).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelCornerWeights {
    pub j1: CornerWeights,
    pub j2: CornerWeights,
    pub h8: WeightWindow,
    pub h9: WeightWindow,
    pub thm43: WeightWindow,
}

pub fn model_corner_weights(cp: &CornerParams, s_star: f64) -> Result<ModelCornerWeights> {
    let delta = cp.delta();
    let denom = 2.0 * delta;
    let b2 = 3f64.min(PI / delta);
    let (zm, zp) = zero_prefixes(cp, 3.0)?;
    let j1 = corner_weights(&zm, &zp, s_star, denom, 3.0)?;
    let j2 = corner_weights(&zm, &zp, s_star, denom, b2)?;
    Ok(ModelCornerWeights {
        h8: h8_window(j1.z.z_star),
        h9: h9_window(j2.z.z_star, delta),
        thm43: thm43_window(zm[1], delta, s_star),
        j1,
        j2,
    })
}

/// Contact-corner (§3.3) data for both corners and the resulting (h7) window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalWeights {
    pub q: [f64; 2],
    pub q_is_one: [bool; 2],
    pub bound: f64,
    /// None when Qᵢ = 1 (the corner does not enter the window).
    pub corners: [Option<CornerWeights>; 2],
    pub h_star: f64,
    pub f_star: f64,
    pub h7: WeightWindow,
}

/// Qᵢ = 1 test: exact clause or relative tolerance 1e-10.
fn q_is_one(cp: &CornerParams, q: f64) -> Result<bool> {
    Ok(classify_q2(cp)?.class == Q2Class::EqualOne || (q - 1.0).abs() <= 1e-10)
}

pub fn global_weights(a0: InterfaceAngle, a1: InterfaceAngle, alpha: [f64; 2], k: f64, s_star: f64) -> Result<GlobalWeights> {
    for a in [a0, a1] {
        if !(4 * a.q > a.p && 2 * a.q < a.p) {
            return Err(Error::InvalidParams(format!("angle {}/{} gives δ outside (0, π/4)", a.q, a.p)));
        }
    }
    let bound_r = Ratio::from_integer(3).min(a0.two_pi_over_gap()).min(a1.two_pi_over_gap());
    let bound = to_f64(bound_r);
    let mut q = [0.0; 2];
    let mut ones = [false; 2];
    let mut corners = [None, None];
    for (i, a) in [a0, a1].into_iter().enumerate() {
        let cp = a.corner_params(alpha[i], k)?;
        let sq = compute_quantities(&cp)?;
        q[i] = sq.q2;
        ones[i] = q_is_one(&cp, sq.q2)?;
        if !ones[i] {
            let (zm, zp) = zero_prefixes(&cp, bound)?;
            corners[i] = Some(corner_weights(&zm, &zp, s_star, PI - 2.0 * a.radians(), bound)?);
        }
    }
    let h_star = corners[0].as_ref().map_or(f64::NEG_INFINITY, |c| c.z.z_star);
    let f_star = corners[1].as_ref().map_or(f64::NEG_INFINITY, |c| c.z.z_star);
    let (lower, tag) = match (ones[0], ones[1]) {
        (false, false) => (2f64.max(h_star).max(f_star), CaseTag::H7Generic),
        (true, false) => (2f64.max(f_star), CaseTag::H7Q0Eq1),
        (false, true) => (2f64.max(h_star), CaseTag::H7Q1Eq1),
        (true, true) => (2.0, CaseTag::H7BothEq1),
    };
    let excluded = vec![to_f64(a0.pi_over_two_delta()), to_f64(a1.pi_over_two_delta())];
    let h7 = WeightWindow::new(lower, bound, excluded, tag);
    Ok(GlobalWeights { q, q_is_one: ones, bound, corners, h_star, f_star, h7 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimsupStep {
    pub tol: f64,
    pub angles: [InterfaceAngle; 2],
    pub h_star: f64,
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimsupWeights {
    pub h_star: f64,
    pub f_star: f64,
    pub steps: Vec<LimsupStep>,
    /// max − min of the tail values.
    pub spread: [f64; 2],
    pub converged: bool,
}

/// 𝔥*, 𝔣* for irrational angles as the running max of the tail of rational
/// approximants δᵢ^m = π(1/2 − c_m), one approximant per tolerance.
pub fn limsup_weights(
    delta0: f64,
    delta1: f64,
    alpha: [f64; 2],
    k: f64,
    s_star: f64,
    tol_ladder: &[f64],
    max_spread: f64,
) -> Result<LimsupWeights> {
    if tol_ladder.len() < 3 {
        return Err(Error::InvalidParams("tolerance ladder needs ≥ 3 entries".into()));
    }
    let mut steps = Vec::new();
    for &tol in tol_ladder {
        let a0 = rational_angle(delta0, tol)?;
        let a1 = rational_angle(delta1, tol)?;
        let g = global_weights(a0, a1, alpha, k, s_star)?;
        steps.push(LimsupStep { tol, angles: [a0, a1], h_star: g.h_star, f_star: g.f_star });
    }
    let tail = &steps[steps.len() / 2..];
    let fold = |f: &dyn Fn(&LimsupStep) -> f64| {
        let hi = tail.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().map(f).fold(f64::INFINITY, f64::min);
        (hi, hi - lo)
    };
    let (h_star, sh) = fold(&|s| s.h_star);
    let (f_star, sf) = fold(&|s| s.f_star);
    let spread = [sh, sf];
    let converged = sh.is_finite() && sf.is_finite() && sh <= max_spread && sf <= max_spread;
    Ok(LimsupWeights { h_star, f_star, steps, spread, converged })
}
