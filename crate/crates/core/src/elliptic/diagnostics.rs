//! Post-processing of a solved field: h4 verdict, maximum principle,
//! error norms, corner ratios αᵢ, linearized coefficients and power-law fits.

use super::{PressureField, ScalarFn, TRI7};
use crate::geometry::{InterfaceChart, Phase, Tag};
use crate::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Corner {
    A0,
    A1,
}

impl Corner {
    pub fn index(self) -> usize {
        match self {
            Corner::A0 => 0,
            Corner::A1 => 1,
        }
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

// ---- h4 ----

#[derive(Debug, Clone, Serialize)]
pub struct H4Report {
    pub k: f64,
    pub k_in_range: bool,
    /// max over the samples of ∂ₙ𝒰₁,₀ and ∂ₙ𝒰₂,₀.
    pub max_dn: [f64; 2],
    pub samples: usize,
    pub violations: usize,
    /// Largest distance to the nearer corner among violating samples.
    pub violation_radius: f64,
    /// −max(max_dn); positive when h4 holds.
    pub margin: f64,
    pub pass: bool,
    pub solved: bool,
}

/// Ratio check alone, used before any solve.
pub fn check_k_ratio(k1: f64, k2: f64) -> H4Report {
    let k = k2 / k1;
    let ok = k > 0.0 && k < 1.0;
    H4Report {
        k,
        k_in_range: ok,
        max_dn: [f64::NAN; 2],
        samples: 0,
        violations: 0,
        violation_radius: 0.0,
        margin: f64::NAN,
        pass: false,
        solved: false,
    }
}

/// k ∈ (0,1) and strictly negative normal derivatives of both phases at
/// every interface node other than the corner vertices themselves.
/// "Strictly" means below −(round-off level of the recovered gradient).
pub fn check_h4(field: &PressureField) -> H4Report {
    let mut rep = check_k_ratio(field.k[0], field.k[1]);
    rep.solved = true;
    let tr = &field.trace;
    let tol = noise_floor(field) / dist(field.corners[0], field.corners[1]);
    let m = tr.len();
    let mut max_dn = [f64::NEG_INFINITY; 2];
    for i in 1..m.saturating_sub(1) {
        let r = dist(tr.points[i], field.corners[0]).min(dist(tr.points[i], field.corners[1]));
        let dn = tr.dn[i];
        for k in 0..2 {
            max_dn[k] = max_dn[k].max(dn[k]);
        }
        if !(dn[0] < -tol && dn[1] < -tol) {
            rep.violations += 1;
            rep.violation_radius = rep.violation_radius.max(r);
        }
        rep.samples += 1;
    }
    rep.max_dn = max_dn;
    rep.margin = -max_dn[0].max(max_dn[1]);
    rep.pass = rep.k_in_range && rep.samples > 0 && rep.violations == 0;
    rep
}

// ---- maximum principle, norms, residuals ----

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaxPrincipleReport {
    pub data_min: f64,
    pub data_max: f64,
    pub min: f64,
    pub max: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// min(boundary data) ≤ W ≤ max(boundary data) at every node; meaningful
/// for zero sources and zero jumps.
pub fn max_principle(field: &PressureField) -> MaxPrincipleReport {
    let mesh = &field.mesh;
    let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in 0..mesh.nodes.len() {
        let mut take = |x: f64| {
            dmin = dmin.min(x);
            dmax = dmax.max(x);
        };
        if mesh.has(v, Tag::GAMMA2) {
            take(field.values[v][1]);
        } else if mesh.has(v, Tag::GAMMA1) {
            take(field.values[v][0]);
        }
    }
    let vals = field.values.iter().flatten().filter(|x| !x.is_nan());
    let (min, max) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let tolerance = 1e-10 * dmax.abs().max(dmin.abs()).max(1e-300);
    MaxPrincipleReport { data_min: dmin, data_max: dmax, min, max, tolerance, holds: min >= dmin - tolerance && max <= dmax + tolerance }
}

/// L² distance of the phase-wise P1 field to exact phase solutions.
pub fn l2_error(field: &PressureField, exact: &[ScalarFn; 2]) -> f64 {
    let mesh = &field.mesh;
    let mut acc = 0.0;
    for (t, &ph) in mesh.tris.iter().zip(&mesh.phase) {
        let k = if ph == Phase::One { 0 } else { 1 };
        let p = [field.nodes[t[0]], field.nodes[t[1]], field.nodes[t[2]]];
        let u = [field.values[t[0]][k], field.values[t[1]][k], field.values[t[2]][k]];
        let area = crate::geometry::signed_area_of(&field.nodes, t);
        for &(xi, eta, w) in &TRI7 {
            let l = [1.0 - xi - eta, xi, eta];
            let x = [0, 1].map(|c| l[0] * p[0][c] + l[1] * p[1][c] + l[2] * p[2][c]);
            let e = l[0] * u[0] + l[1] * u[1] + l[2] * u[2] - exact[k](x);
            acc += w * area * e * e;
        }
    }
    acc.sqrt()
}

/// ∫_Γ |k₁∂ₙW₁ − k₂∂ₙW₂ − φ₂| by the trapezoid rule on the recovered trace.
pub fn flux_residual(field: &PressureField, flux: &dyn Fn([f64; 2], [f64; 2]) -> f64) -> f64 {
    let tr = &field.trace;
    let f: Vec<f64> = (0..tr.len())
        .map(|i| (field.k[0] * tr.dn[i][0] - field.k[1] * tr.dn[i][1] - flux(tr.points[i], tr.normal[i])).abs())
        .collect();
    (1..tr.len()).map(|i| 0.5 * (f[i] + f[i - 1]) * dist(tr.points[i], tr.points[i - 1])).sum()
}

// ---- corner samples and power-law fits ----

/// (r, value) along Γ on the half nearer `corner`, vertex excluded, sorted by r.
pub fn corner_samples(field: &PressureField, corner: Corner, f: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    let c = field.corners[corner.index()];
    let o = field.corners[1 - corner.index()];
    let tr = &field.trace;
    let mut out: Vec<(f64, f64)> = (0..tr.len())
        .filter_map(|i| {
            let (r, ro) = (dist(tr.points[i], c), dist(tr.points[i], o));
            (r > 0.0 && r <= ro).then(|| (r, f(i)))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub fit_window: (f64, f64),
    /// Coefficient of determination of the log–log fit.
    pub quality: f64,
}

pub const FIT_RADII: usize = 12;

/// Least-squares slope of log|v| against log r at log-spaced radii in
/// `window`; values between samples come from log–log interpolation.
pub fn corner_exponent_fit(samples: &[(f64, f64)], window: (f64, f64), noise_floor: f64) -> Result<CornerFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::InvalidParams(format!("fit window ({lo}, {hi}) is not an interval of positive radii")));
    }
    let mut s: Vec<(f64, f64)> = samples.iter().copied().filter(|(r, v)| *r > 0.0 && v.is_finite()).collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eps = 1e-12 * hi;
    if s.is_empty() || s[0].0 > lo + eps || s[s.len() - 1].0 < hi - eps {
        return Err(Error::InsufficientData(format!("samples do not cover the window ({lo:.3e}, {hi:.3e})")));
    }
    let inside = s.iter().filter(|(r, _)| *r >= lo - eps && *r <= hi + eps).count();
    if inside < 3 {
        return Err(Error::InsufficientData(format!("{inside} samples inside the window, need 3")));
    }
    if let Some((r, v)) = s.iter().find(|(r, v)| *r >= lo - eps && *r <= hi + eps && v.abs() <= noise_floor) {
        return Err(Error::InsufficientData(format!("|value| = {:.3e} at r = {r:.3e} is at the noise floor {noise_floor:.3e}", v.abs())));
    }
    let interp = |r: f64| -> Result<f64> {
        let j = s.partition_point(|p| p.0 < r).clamp(1, s.len() - 1);
        let ((r0, v0), (r1, v1)) = (s[j - 1], s[j]);
        if v0.abs() <= noise_floor || v1.abs() <= noise_floor {
            return Err(Error::InsufficientData(format!("values at the noise floor near r = {r:.3e}")));
        }
        if r1 == r0 {
            return Ok(v0.abs().ln());
        }
        let t = (r.ln() - r0.ln()) / (r1.ln() - r0.ln());
        Ok((1.0 - t) * v0.abs().ln() + t * v1.abs().ln())
    };
    let mut xs = Vec::with_capacity(FIT_RADII);
    let mut ys = Vec::with_capacity(FIT_RADII);
    for k in 0..FIT_RADII {
        let r = lo * (hi / lo).powf(k as f64 / (FIT_RADII - 1) as f64);
        xs.push(r.ln());
        ys.push(interp(r)?);
    }
    let n = FIT_RADII as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let quality = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    // sign of the value nearest the window centre
    let mid = (lo * hi).sqrt();
    let sign = s
        .iter()
        .min_by(|a, b| (a.0.ln() - mid.ln()).abs().total_cmp(&(b.0.ln() - mid.ln()).abs()))
        .map_or(1.0, |p| p.1.signum());
    Ok(CornerFit { exponent: slope, prefactor: sign * icpt.exp(), fit_window: window, quality })
}

/// Solver-noise floor of a field: a few thousand ulps of its largest value.
pub fn noise_floor(field: &PressureField) -> f64 {
    let m = field.values.iter().flatten().filter(|x| !x.is_nan()).fold(0.0f64, |a, x| a.max(x.abs()));
    4096.0 * f64::EPSILON * m
}

/// Corner fit of |𝒰₁| along Γ over the decade ending at `r_hi`.
pub fn pressure_corner_fit(field: &PressureField, corner: Corner, r_hi: f64) -> Result<CornerFit> {
    let s = corner_samples(field, corner, |i| field.trace.value[i][0]);
    corner_exponent_fit(&s, (0.1 * r_hi, r_hi), noise_floor(field))
}

// ---- αᵢ ----

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaEstimate {
    pub corner: Corner,
    pub value: f64,
    /// Relative difference between the two Richardson estimates.
    pub spread: f64,
    pub radii: [f64; 3],
    pub ratios: [f64; 3],
}

/// α₀ = ∂ᵣ₀𝒰₁/∂ₙ𝒰₁ at A₀, α₁ = −∂ᵣ₁𝒰₁/∂ₙ𝒰₁ at A₁, from the ratio along
/// Γ at r, r/2, r/4 and first-order Richardson extrapolation to r = 0.
pub fn extract_alpha_at(field: &PressureField, corner: Corner, r: f64) -> Result<AlphaEstimate> {
    let c = field.corners[corner.index()];
    let tr = &field.trace;
    let sign = if corner == Corner::A0 { 1.0 } else { -1.0 };
    let s = corner_samples(field, corner, |i| {
        let p = tr.points[i];
        let rr = dist(p, c);
        let er = [(p[0] - c[0]) / rr, (p[1] - c[1]) / rr];
        sign * dot(tr.grad[i][0], er) / tr.dn[i][0]
    });
    let at = |x: f64| -> Result<f64> {
        let j = s.partition_point(|p| p.0 < x);
        if j == 0 || j >= s.len() {
            return Err(Error::InsufficientData(format!("no interface samples bracket r = {x:.3e}")));
        }
        let ((r0, v0), (r1, v1)) = (s[j - 1], s[j]);
        Ok(v0 + (v1 - v0) * (x - r0) / (r1 - r0))
    };
    let radii = [r, 0.5 * r, 0.25 * r];
    let ratios = [at(radii[0])?, at(radii[1])?, at(radii[2])?];
    let e1 = 2.0 * ratios[1] - ratios[0];
    let e2 = 2.0 * ratios[2] - ratios[1];
    let spread = (e2 - e1).abs() / e2.abs().max(e1.abs()).max(f64::MIN_POSITIVE);
    if !spread.is_finite() || spread > 0.1 {
        return Err(Error::DerivativeUnresolved { spread });
    }
    Ok(AlphaEstimate { corner, value: e2, spread, radii, ratios })
}

/// `extract_alpha_at` with r = 𝔞/80.
pub fn extract_alpha(field: &PressureField, corner: Corner) -> Result<AlphaEstimate> {
    let a = dist(field.corners[0], field.corners[1]);
    extract_alpha_at(field, corner, a / 80.0)
}

// ---- A₀ … A₃ ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Within ε of a corner.
    Near(Corner),
    /// Between ε and 2ε of a corner: the general 𝔩-dependent forms.
    Blend(Corner),
    Far,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoeffSample {
    pub omega: f64,
    pub point: [f64; 2],
    /// Distance to the nearer corner.
    pub r: f64,
    pub branch: Branch,
    pub a: [f64; 4],
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeamCheck {
    pub corner: Corner,
    pub radius: f64,
    pub coeff: usize,
    pub inner: f64,
    pub outer: f64,
    pub rel: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizedCoeffs {
    pub samples: Vec<CoeffSample>,
    pub seams: Vec<SeamCheck>,
    /// Samples (corners excluded) with A₀ ≥ 0 or A₁ ≤ 0.
    pub sign_violations: usize,
    pub seams_ok: bool,
}

pub const SEAM_TOL: f64 = 0.05;

struct CoeffForms {
    near: [f64; 4],
    general: [f64; 4],
    far: [f64; 4],
}

/// A₀…A₃ along Γ: the closed forms near each corner (r < ε), away from
/// both (r > 2ε), and the general transversal-field forms in between,
/// which reduce to the former two where 𝔩 is vertical or 𝔩 = n.
pub fn linearized_coeffs(field: &PressureField, chart: &InterfaceChart) -> Result<LinearizedCoeffs> {
    let k = field.k_ratio();
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidParams(format!("linearized coefficients need k in (0,1), got {k}")));
    }
    let k2 = field.k[1];
    let eps = chart.spec.eps;
    let mesh = &field.mesh;
    let tr = &field.trace;
    let m = tr.len();
    let mut forms = Vec::with_capacity(m);
    let mut where_ = Vec::with_capacity(m);
    for i in 0..m {
        let u = mesh.interface_u[i];
        let w = tr.omega[i];
        let p = tr.points[i];
        let (r0, r1) = (dist(p, field.corners[0]), dist(p, field.corners[1]));
        let (corner, r) = if r0 <= r1 { (Corner::A0, r0) } else { (Corner::A1, r1) };
        let (dn, dt) = (tr.dn[i][0], tr.dtau[i][0]);
        let l = chart.l_field_u(u);
        let (nn, tt) = (chart.normal_u(u), chart.tangent_u(u));
        let (ln, lt) = (dot(l, nn), dot(l, tt));
        let g1 = chart.profile.eval(u).1;
        let (phi, sgn) = match corner {
            Corner::A0 => (1.0 / g1, 1.0),
            Corner::A1 => (-1.0 / g1, -1.0),
        };
        let root = (1.0 + phi * phi).sqrt();
        let c = field.corners[corner.index()];
        let er = if r > 0.0 { [(p[0] - c[0]) / r, (p[1] - c[1]) / r] } else { [0.0; 2] };
        let dr = dot(tr.grad[i][0], er);
        let h = 1e-6;
        let ds1 = (chart.metric_coeffs(w, 0.0, h)?.1 - chart.metric_coeffs(w, 0.0, -h)?.1) / (2.0 * h);
        forms.push(CoeffForms {
            near: [(1.0 - k) / k / root * dn, k2 / (1.0 - k) * root, sgn * k2 / (1.0 - k) * phi * root, sgn * dr / dn],
            general: [
                (1.0 - k) / k * ln * dn,
                k2 / ((1.0 - k) * ln),
                -k2 * lt / ((1.0 - k) * ln * ln),
                ds1 * dt / ((k - 1.0) * dn),
            ],
            far: [(1.0 - k) / k * dn, k2 / (1.0 - k), 0.0, -dt / ((k - 1.0) * dn)],
        });
        let branch = if r < eps {
            Branch::Near(corner)
        } else if r <= 2.0 * eps {
            Branch::Blend(corner)
        } else {
            Branch::Far
        };
        where_.push((branch, r, corner));
    }
    let samples: Vec<CoeffSample> = (0..m)
        .map(|i| {
            let (branch, r, _) = where_[i];
            let a = match branch {
                Branch::Near(_) => forms[i].near,
                Branch::Blend(_) => forms[i].general,
                Branch::Far => forms[i].far,
            };
            CoeffSample { omega: tr.omega[i], point: tr.points[i], r, branch, a }
        })
        .collect();
    let sign_violations = samples[1..m - 1].iter().filter(|s| !(s.a[0] < 0.0 && s.a[1] > 0.0)).count();

    // seams: inner and outer forms interpolated to r = ε and r = 2ε
    let mut seams = Vec::new();
    let scale = [0, 1, 2, 3].map(|j| {
        forms.iter().flat_map(|f| [f.near[j], f.general[j], f.far[j]]).filter(|x| x.is_finite()).fold(0.0f64, |a, x| a.max(x.abs()))
    });
    for corner in [Corner::A0, Corner::A1] {
        let mut idx: Vec<usize> = (1..m - 1).filter(|&i| where_[i].2 == corner).collect();
        idx.sort_by(|&a, &b| where_[a].1.total_cmp(&where_[b].1));
        for (radius, inner_of, outer_of) in [
            (eps, (|f: &CoeffForms| f.near) as fn(&CoeffForms) -> [f64; 4], (|f: &CoeffForms| f.general) as fn(&CoeffForms) -> [f64; 4]),
            (2.0 * eps, |f: &CoeffForms| f.general, |f: &CoeffForms| f.far),
        ] {
            let j = idx.partition_point(|&i| where_[i].1 < radius);
            if j == 0 || j >= idx.len() {
                continue;
            }
            let (ia, ib) = (idx[j - 1], idx[j]);
            let t = (radius - where_[ia].1) / (where_[ib].1 - where_[ia].1);
            for c in 0..4 {
                let lerp = |g: fn(&CoeffForms) -> [f64; 4]| (1.0 - t) * g(&forms[ia])[c] + t * g(&forms[ib])[c];
                let (inner, outer) = (lerp(inner_of), lerp(outer_of));
                let den = inner.abs().max(outer.abs()).max(1e-9 * scale[c]).max(f64::MIN_POSITIVE);
                let rel = (inner - outer).abs() / den;
                seams.push(SeamCheck { corner, radius, coeff: c, inner, outer, rel, ok: rel <= SEAM_TOL });
            }
        }
    }
    let seams_ok = !seams.is_empty() && seams.iter().all(|s| s.ok);
    Ok(LinearizedCoeffs { samples, seams, sign_violations, seams_ok })
}

/// Corner fit of A₀ over the decade ending at `r_hi`.
pub fn a0_corner_fit(field: &PressureField, coeffs: &LinearizedCoeffs, corner: Corner, r_hi: f64) -> Result<CornerFit> {
    let c = field.corners[corner.index()];
    let o = field.corners[1 - corner.index()];
    let mut s: Vec<(f64, f64)> = coeffs
        .samples
        .iter()
        .filter(|x| x.r > 0.0 && dist(x.point, c) <= dist(x.point, o))
        .map(|x| (x.r, x.a[0]))
        .collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    corner_exponent_fit(&s, (0.1 * r_hi, r_hi), 0.0)
}
