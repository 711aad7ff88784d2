//! Corner spectral quantities and the transcendental functions S±.
//!
//! S⁺(z) = sin(z − θ₁) + q₂ sin(q₁z − θ₂),  S⁻(z) = sin z − q* sin(q₁z),
//! both 4qπ-periodic. In w = e^{iz/(2q)} each is w^{−p} times a degree-2p
//! polynomial, so every period strip carries exactly 2p zeros (with
//! multiplicity), real or not.

use crate::error::{Error, Result};
use crate::roots::{bisect_newton, poly_roots, sign_change_roots};
use crate::special::hurwitz_zeta;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Relative tolerance for detecting q₂ = 1 and q₂ = 1/q₁.
pub const EPS_EQ: f64 = 1e-12;
const ZERO_XTOL: f64 = 1e-13;
const SAMPLES_PER_INTERVAL: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerParams {
    pub a2: f64,
    pub a3: f64,
    pub k: f64,
    pub q: u32,
    pub p: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl CornerParams {
    pub fn new(a2: f64, a3: f64, k: f64, q: u32, p: u32) -> Result<Self> {
        let cp = Self { a2, a3, k, q, p };
        cp.validate()?;
        Ok(cp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(Error::InvalidParams(format!("k = {} not in (0,1)", self.k)));
        }
        if !(self.a2 > 0.0) || !self.a2.is_finite() {
            return Err(Error::InvalidParams(format!("a2 = {} must be positive", self.a2)));
        }
        if !self.a3.is_finite() {
            return Err(Error::InvalidParams("a3 not finite".into()));
        }
        if self.q == 0 || self.p <= 2 * self.q {
            return Err(Error::InvalidParams(format!("need p > 2q, got q={}, p={}", self.q, self.p)));
        }
        if gcd(self.q, self.p) != 1 {
            return Err(Error::InvalidParams(format!("q/p = {}/{} not irreducible", self.q, self.p)));
        }
        Ok(())
    }

    /// Corner opening δ = qπ/p.
    pub fn delta(&self) -> f64 {
        self.q as f64 * PI / self.p as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralQuantities {
    pub q1: f64,
    pub q_star: f64,
    pub q2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub period: f64,
    pub q: u32,
    pub p: u32,
}

impl SpectralQuantities {
    /// Number of zeros per period strip.
    pub fn strip_count(&self) -> usize {
        2 * self.p as usize
    }

    /// Residual certification scale (max slope proxy).
    pub fn scale(&self) -> f64 {
        1.0 + self.q_star + self.q2
    }
}

pub fn compute_quantities(cp: &CornerParams) -> Result<SpectralQuantities> {
    cp.validate()?;
    let CornerParams { a2, a3, k, q, p } = *cp;
    let b = 2.0 * k * a3 + (1.0 + k) * a2;
    let q2 = (((1.0 - k).powi(2) + b * b) / ((1.0 - k).powi(2) * (1.0 + a2 * a2))).sqrt();
    let d = (1.0 - k).hypot(b);
    Ok(SpectralQuantities {
        q1: p as f64 / (2.0 * q as f64),
        q_star: (1.0 + k) / (1.0 - k),
        q2,
        theta1: 1f64.atan2(a2),
        theta2: ((1.0 - k) / d).atan2(-b / d),
        period: 4.0 * q as f64 * PI,
        q,
        p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Q2Class {
    GreaterOne,
    EqualOne,
    LessOne,
}

/// Which sufficient condition decided the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Q2Clause {
    A3NonNegative,
    A2AboveMinusA3,
    A2BelowMinusKA3,
    A2EqualsMinusKA3,
    A2EqualsMinusA3,
    BetweenKA3AndA3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Q2Classification {
    pub class: Q2Class,
    pub clause: Q2Clause,
    /// |q₂ − 1| < ε_eq without an exact-equality clause.
    pub near_degenerate: bool,
}

/// Trichotomy of q₂ against 1. Uses q₂² − 1 ∝ (a₂ + a₃)(a₂ + k a₃), which makes
/// the equality clauses exact.
pub fn classify_q2(cp: &CornerParams) -> Result<Q2Classification> {
    let sq = compute_quantities(cp)?;
    let CornerParams { a2, a3, k, .. } = *cp;
    let tol = EPS_EQ * (a2.abs() + a3.abs());
    let (class, clause) = if (a2 + k * a3).abs() <= tol {
        (Q2Class::EqualOne, Q2Clause::A2EqualsMinusKA3)
    } else if (a2 + a3).abs() <= tol {
        (Q2Class::EqualOne, Q2Clause::A2EqualsMinusA3)
    } else if a3 >= 0.0 {
        (Q2Class::GreaterOne, Q2Clause::A3NonNegative)
    } else if a2 > -a3 {
        (Q2Class::GreaterOne, Q2Clause::A2AboveMinusA3)
    } else if a2 < -k * a3 {
        (Q2Class::GreaterOne, Q2Clause::A2BelowMinusKA3)
    } else {
        (Q2Class::LessOne, Q2Clause::BetweenKA3AndA3)
    };
    let near_degenerate = class != Q2Class::EqualOne && (sq.q2 - 1.0).abs() < EPS_EQ;
    Ok(Q2Classification { class, clause, near_degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Plus,
    Minus,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Plus => "plus",
            Kind::Minus => "minus",
        }
    }
}

pub fn eval_s(kind: Kind, z: Complex64, sq: &SpectralQuantities) -> Complex64 {
    match kind {
        Kind::Plus => (z - sq.theta1).sin() + sq.q2 * (sq.q1 * z - sq.theta2).sin(),
        Kind::Minus => z.sin() - sq.q_star * (sq.q1 * z).sin(),
    }
}

/// Real-line value and first two derivatives.
pub fn eval_s_real(kind: Kind, x: f64, sq: &SpectralQuantities) -> (f64, f64, f64) {
    match kind {
        Kind::Plus => {
            let (a, b) = (x - sq.theta1, sq.q1 * x - sq.theta2);
            (
                a.sin() + sq.q2 * b.sin(),
                a.cos() + sq.q2 * sq.q1 * b.cos(),
                -a.sin() - sq.q2 * sq.q1 * sq.q1 * b.sin(),
            )
        }
        Kind::Minus => {
            let b = sq.q1 * x;
            (
                x.sin() - sq.q_star * b.sin(),
                x.cos() - sq.q_star * sq.q1 * b.cos(),
                -x.sin() + sq.q_star * sq.q1 * sq.q1 * b.sin(),
            )
        }
    }
}

fn eval_ds(kind: Kind, z: Complex64, sq: &SpectralQuantities) -> Complex64 {
    match kind {
        Kind::Plus => (z - sq.theta1).cos() + sq.q2 * sq.q1 * (sq.q1 * z - sq.theta2).cos(),
        Kind::Minus => z.cos() - sq.q_star * sq.q1 * (sq.q1 * z).cos(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    pub location: f64,
    pub multiplicity: u32,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSet {
    pub kind: Kind,
    /// Real zeros in [0, period), increasing.
    pub zeros: Vec<Zero>,
    /// Non-real zeros with real part in [0, period). Only the q₂ < 1 regime has these.
    pub off_axis: Vec<Complex64>,
    pub period: f64,
}

impl ZeroSet {
    /// Real zeros counted with multiplicity (K⁺ or 2p).
    pub fn count(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity as usize).sum()
    }

    /// All zeros per strip, real and off-axis.
    pub fn total_count(&self) -> usize {
        self.count() + self.off_axis.len()
    }

    /// Real zero locations repeated by multiplicity.
    pub fn locations(&self) -> Vec<f64> {
        self.zeros
            .iter()
            .flat_map(|z| std::iter::repeat(z.location).take(z.multiplicity as usize))
            .collect()
    }

    /// Every zero in the strip as a complex number, repeated by multiplicity.
    pub fn all_complex(&self) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = self.locations().into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        v.extend(self.off_axis.iter().copied());
        v
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["kind", "index", "location", "multiplicity", "residual"])?;
        for (i, z) in self.zeros.iter().enumerate() {
            wr.write_record([
                self.kind.name().to_string(),
                i.to_string(),
                format!("{:.17e}", z.location),
                z.multiplicity.to_string(),
                format!("{:.3e}", z.residual),
            ])?;
        }
        wr.flush()
    }
}

/// Closed bracket for zero `i` of S⁻.
pub fn minus_bracket(i: usize, sq: &SpectralQuantities) -> (f64, f64) {
    let i = i as f64;
    (PI * (2.0 * i - 1.0) / (2.0 * sq.q1), PI * (2.0 * i + 1.0) / (2.0 * sq.q1))
}

/// Closed bracket for zero `i` of S⁺ when q₂ > 1 (may start below 0).
pub fn plus_bracket(i: usize, sq: &SpectralQuantities) -> (f64, f64) {
    let i = i as f64;
    (
        (PI * (2.0 * i - 1.0) + 2.0 * sq.theta2) / (2.0 * sq.q1),
        (PI * (2.0 * i + 1.0) + 2.0 * sq.theta2) / (2.0 * sq.q1),
    )
}

fn refine_in_bracket(kind: Kind, sq: &SpectralQuantities, lo: f64, hi: f64) -> Result<f64> {
    let f = |x: f64| eval_s_real(kind, x, sq).0;
    let df = |x: f64| eval_s_real(kind, x, sq).1;
    if let Some(r) = bisect_newton(f, df, lo, hi, ZERO_XTOL) {
        return Ok(r);
    }
    // Shared endpoints: shrink and accept an endpoint only if it is itself a zero.
    let tol = 1e-12 * sq.scale();
    for e in [lo, hi] {
        if f(e).abs() <= tol {
            return Ok(e);
        }
    }
    if let Some(r) = bisect_newton(f, df, lo + 1e-9, hi - 1e-9, ZERO_XTOL) {
        return Ok(r);
    }
    Err(Error::BracketFailure { kind: kind.name(), lo, hi })
}

fn make_zero(kind: Kind, sq: &SpectralQuantities, x: f64, multiplicity: u32) -> Zero {
    Zero { location: x, multiplicity, residual: eval_s_real(kind, x, sq).0.abs() }
}

/// Intervals of [0, period) where |sin(z − θ₁)| ≤ q₂, the necessary condition for
/// a real zero of S⁺ when q₂ < 1, merged and clipped to the strip.
pub fn g_intervals(sq: &SpectralQuantities) -> Vec<(f64, f64)> {
    g_intervals_upto(sq, sq.period)
}

fn g_intervals_upto(sq: &SpectralQuantities, xmax: f64) -> Vec<(f64, f64)> {
    let asq = sq.q2.min(1.0).asin();
    let t = sq.period.min(xmax);
    let mut raw = Vec::new();
    let lmax = (2 * sq.q as i64).min((t / (2.0 * PI)).ceil() as i64 + 1);
    for l in -1..=lmax {
        let base = 2.0 * PI * l as f64;
        for c in [sq.theta1 + base, sq.theta1 + PI + base] {
            let (a, b) = (c - asq, c + asq);
            let (a, b) = (a.max(0.0), b.min(t));
            if a < b {
                raw.push((a, b));
            }
        }
    }
    raw.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in raw {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Closed-form strip zeros of S⁺ at q₂ = 1:
/// S⁺ = 2 sin(((1+q₁)z − θ₁ − θ₂)/2) · cos(((1−q₁)z − θ₁ + θ₂)/2).
pub fn plus_zeros_q2_one(sq: &SpectralQuantities) -> Vec<f64> {
    let t = sq.period;
    let (q1, t1, t2) = (sq.q1, sq.theta1, sq.theta2);
    let wrap = |x: f64| {
        let r = x.rem_euclid(t);
        if (t - r).abs() < 1e-14 * t { 0.0 } else { r }
    };
    let mut out = Vec::new();
    let n_sin = (1.0 + q1) * t / (2.0 * PI);
    for n in 0..n_sin.round() as i64 {
        out.push(wrap((t1 + t2 + 2.0 * PI * n as f64) / (1.0 + q1)));
    }
    let n_cos = (q1 - 1.0) * t / (2.0 * PI);
    for m in 0..n_cos.round() as i64 {
        out.push(wrap((PI + 2.0 * PI * m as f64 + t1 - t2) / (1.0 - q1)));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Coefficients (ascending powers of w) of 2i·w^p·S(z), w = e^{iz/(2q)}.
pub fn w_polynomial(kind: Kind, sq: &SpectralQuantities) -> Vec<Complex64> {
    let (q, p) = (sq.q as usize, sq.p as usize);
    let mut c = vec![Complex64::new(0.0, 0.0); 2 * p + 1];
    match kind {
        Kind::Plus => {
            c[p + 2 * q] += Complex64::from_polar(1.0, -sq.theta1);
            c[p - 2 * q] -= Complex64::from_polar(1.0, sq.theta1);
            c[2 * p] += Complex64::from_polar(sq.q2, -sq.theta2);
            c[0] -= Complex64::from_polar(sq.q2, sq.theta2);
        }
        Kind::Minus => {
            c[p + 2 * q] += 1.0;
            c[p - 2 * q] -= 1.0;
            c[2 * p] -= sq.q_star;
            c[0] += sq.q_star;
        }
    }
    c
}

/// All strip zeros via the w-polynomial, Newton-polished in z, Re z ∈ [0, period).
pub fn polynomial_zeros(kind: Kind, sq: &SpectralQuantities) -> Vec<Complex64> {
    let q = sq.q as f64;
    let t = sq.period;
    poly_roots(&w_polynomial(kind, sq))
        .into_iter()
        .map(|w| {
            // z = −2qi ln w
            let mut z = Complex64::new(2.0 * q * w.arg(), -2.0 * q * w.norm().ln());
            for _ in 0..4 {
                let d = eval_ds(kind, z, sq);
                if d.norm() < 1e-8 {
                    break;
                }
                let step = eval_s(kind, z, sq) / d;
                if step.norm() > 1e-3 {
                    break;
                }
                z -= step;
            }
            Complex64::new(z.re.rem_euclid(t), z.im)
        })
        .collect()
}

pub fn find_zeros(kind: Kind, sq: &SpectralQuantities) -> Result<ZeroSet> {
    let t = sq.period;
    let n = sq.strip_count();
    let mut zeros = Vec::new();
    let mut off_axis = Vec::new();
    match kind {
        Kind::Minus => {
            zeros.push(make_zero(kind, sq, 0.0, 1)); // odd function
            for i in 1..n {
                let (lo, hi) = minus_bracket(i, sq);
                let r = refine_in_bracket(kind, sq, lo, hi)?;
                zeros.push(make_zero(kind, sq, r, 1));
            }
        }
        Kind::Plus => {
            let q2 = sq.q2;
            if (q2 - 1.0).abs() <= EPS_EQ {
                for x in plus_zeros_q2_one(sq) {
                    zeros.push(make_zero(kind, sq, x, 1));
                }
            } else if q2 > 1.0 {
                for i in 0..n {
                    let (lo, hi) = plus_bracket(i, sq);
                    let r = refine_in_bracket(kind, sq, lo, hi)?.rem_euclid(t);
                    zeros.push(make_zero(kind, sq, r, 1));
                }
            } else {
                let (real, off) = plus_zeros_below_one(sq)?;
                zeros = real;
                off_axis = off;
            }
        }
    }
    zeros.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
    let zs = ZeroSet { kind, zeros, off_axis, period: t };
    if zs.total_count() != n {
        return Err(Error::CountMismatch { found: zs.total_count(), expected: n });
    }
    Ok(zs)
}

fn plus_real_zeros_below_one(sq: &SpectralQuantities, xmax: f64) -> Vec<Zero> {
    let kind = Kind::Plus;
    let f = |x: f64| eval_s_real(kind, x, sq).0;
    let df = |x: f64| eval_s_real(kind, x, sq).1;
    let scale = sq.scale();
    let triple_possible = (sq.q2 - 1.0 / sq.q1).abs() <= 1e-8;
    let mut real = Vec::new();
    for (a, b) in g_intervals_upto(sq, xmax) {
        for r in sign_change_roots(&f, &df, a, b, SAMPLES_PER_INTERVAL, ZERO_XTOL) {
            if real.iter().any(|z: &Zero| (z.location - r).abs() < 1e-9) {
                continue;
            }
            let (_, d1, d2) = eval_s_real(kind, r, sq);
            let mult = if triple_possible && d1.abs() < 1e-5 * scale && d2.abs() < 1e-3 * scale {
                3
            } else {
                1
            };
            real.push(make_zero(kind, sq, r, mult));
        }
    }
    real
}

fn plus_zeros_below_one(sq: &SpectralQuantities) -> Result<(Vec<Zero>, Vec<Complex64>)> {
    let kind = Kind::Plus;
    let real = plus_real_zeros_below_one(sq, sq.period);
    // Off-axis zeros: polynomial roots left over after matching the real ones.
    let mut pool = polynomial_zeros(kind, sq);
    let t = sq.period;
    for z in &real {
        for _ in 0..z.multiplicity {
            let best = pool
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let dx = (w.re - z.location).abs();
                    (i, dx.min(t - dx).hypot(w.im))
                })
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            if let Some((i, _)) = best {
                pool.swap_remove(i);
            }
        }
    }
    pool.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    Ok((real, pool))
}

/// Real zeros in [0, xmax] (xmax ≤ period), increasing, repeated by multiplicity.
/// Only touches the brackets below `xmax`, so it stays cheap for large p.
pub fn real_zeros_upto(kind: Kind, sq: &SpectralQuantities, xmax: f64) -> Result<Vec<f64>> {
    let xmax = xmax.min(sq.period);
    let n = sq.strip_count();
    let mut out = Vec::new();
    match kind {
        Kind::Minus => {
            out.push(0.0);
            for i in 1..n {
                let (lo, hi) = minus_bracket(i, sq);
                if lo > xmax {
                    break;
                }
                out.push(refine_in_bracket(kind, sq, lo, hi)?);
            }
        }
        Kind::Plus if (sq.q2 - 1.0).abs() <= EPS_EQ => {
            out = plus_zeros_q2_one(sq);
        }
        Kind::Plus if sq.q2 > 1.0 => {
            for i in 0..n {
                let (lo, hi) = plus_bracket(i, sq);
                if lo > xmax {
                    break;
                }
                let r = refine_in_bracket(kind, sq, lo, hi)?;
                if r >= 0.0 {
                    out.push(r);
                }
            }
        }
        Kind::Plus => {
            for z in plus_real_zeros_below_one(sq, xmax) {
                out.extend(std::iter::repeat(z.location).take(z.multiplicity as usize));
            }
        }
    }
    out.retain(|&x| x <= xmax);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Axis-parallel box [x0, x1] × [y0, y1] in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Number of zeros inside `rect` by the argument principle (winding of S along
/// the boundary, adaptively sampled so each step turns by < π/8).
pub fn count_zeros_oracle(kind: Kind, sq: &SpectralQuantities, rect: Rect) -> Result<i64> {
    let corners = [
        Complex64::new(rect.x0, rect.y0),
        Complex64::new(rect.x1, rect.y0),
        Complex64::new(rect.x1, rect.y1),
        Complex64::new(rect.x0, rect.y1),
    ];
    let threshold = 1e-6 * sq.scale();
    let mut total = 0.0;
    let mut min_mod = f64::INFINITY;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let len = (b - a).norm();
        let mut m = ((len / 0.02).ceil() as usize).max(16);
        'refine: loop {
            let mut acc = 0.0;
            let mut prev = eval_s(kind, a, sq);
            min_mod = min_mod.min(prev.norm());
            for j in 1..=m {
                let z = a + (b - a) * (j as f64 / m as f64);
                let v = eval_s(kind, z, sq);
                min_mod = min_mod.min(v.norm());
                let d = (v / prev).arg();
                if d.abs() > PI / 8.0 && m < 1 << 22 {
                    m *= 4;
                    continue 'refine;
                }
                acc += d;
                prev = v;
            }
            total += acc;
            break;
        }
    }
    if min_mod < threshold {
        return Err(Error::BoundaryTooClose { min_modulus: min_mod });
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Height above which S has no zeros, from |sin(a+ib)| ∈ [sinh|b|, cosh b]:
/// the q₁-term dominates once c·sinh(q₁y) > cosh(y) (c = q₂ or q*).
pub fn zero_free_height(kind: Kind, sq: &SpectralQuantities) -> f64 {
    let c = match kind {
        Kind::Plus => sq.q2,
        Kind::Minus => sq.q_star,
    };
    let mut y: f64 = 0.05;
    while c * (sq.q1 * y).sinh() <= y.cosh() {
        y *= 1.25;
    }
    y
}

/// Period box for the oracle: left edge chosen between real zeros, height
/// from [`zero_free_height`] (independent of any zero list).
pub fn strip_rect(kind: Kind, sq: &SpectralQuantities) -> Rect {
    let h = zero_free_height(kind, sq) + 0.5;
    let t = sq.period;
    // left edge: sample candidates and keep the one with the largest |S| along it.
    let mut best = (f64::NEG_INFINITY, -0.25);
    for j in 0..64 {
        let x0 = -0.5 + j as f64 * (0.5 / 64.0);
        let mut m = f64::INFINITY;
        for i in 0..=200 {
            let y = -h + 2.0 * h * i as f64 / 200.0;
            m = m.min(eval_s(kind, Complex64::new(x0, y), sq).norm());
        }
        if m > best.0 {
            best = (m, x0);
        }
    }
    Rect { x0: best.1, x1: best.1 + t, y0: -h, y1: h }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Factorization {
    pub value: Complex64,
    /// Estimated log of the neglected factors n > N (asymptotic in 1/n).
    pub log_tail: Complex64,
}

impl Factorization {
    pub fn tail_corrected(&self) -> Complex64 {
        self.value * self.log_tail.exp()
    }
}

/// Truncated Hadamard product with n = 1..N, evaluated in log space.
///
/// minus: (1 − q₁q*) z ∏_{i≥1} (𝔷ᵢ² − z²)/𝔷ᵢ² ∏_n ∏_i ((𝔷ᵢ+nT)² − z²)/(𝔷ᵢ+nT)²
/// plus:  S⁺(0) ∏_i (𝔷ᵢ − z)/𝔷ᵢ ∏_n ∏_i (𝔷ᵢ+nT − z)(z − 𝔷ᵢ + nT)/((𝔷ᵢ+nT)(nT − 𝔷ᵢ))
pub fn eval_factorization(kind: Kind, z: Complex64, sq: &SpectralQuantities, zs: &ZeroSet, n: usize) -> Factorization {
    let t = sq.period;
    let roots = zs.all_complex();
    let zero = Complex64::new(0.0, 0.0);
    let mut lead = match kind {
        Kind::Minus => (1.0 - sq.q1 * sq.q_star) * z,
        Kind::Plus => Complex64::new(-(sq.theta1.sin() + sq.q2 * sq.theta2.sin()), 0.0),
    };
    for &r in &roots {
        if kind == Kind::Minus && r.norm() < 1e-14 {
            continue;
        }
        lead *= match kind {
            Kind::Minus => (r - z) * (r + z) / (r * r),
            Kind::Plus => (r - z) / r,
        };
    }
    if lead == zero {
        return Factorization { value: zero, log_tail: zero };
    }
    // Pairwise summation of the per-n logs.
    let logs: Vec<Complex64> = (1..=n)
        .map(|nn| {
            let nt = nn as f64 * t;
            let mut s = zero;
            for &r in &roots {
                let f = match kind {
                    Kind::Minus => (r + nt - z) * (r + nt + z) / ((r + nt) * (r + nt)),
                    Kind::Plus => (r + nt - z) * (z - r + nt) / ((r + nt) * (nt - r)),
                };
                s += f.ln();
            }
            s
        })
        .collect();
    let value = lead * pairwise_sum(&logs).exp();
    // Families of factors (1 − u/(nT + e)).
    let fams: Vec<(Complex64, Complex64)> = roots
        .iter()
        .flat_map(|&r| match kind {
            Kind::Minus => [(z, r), (-z, r)],
            Kind::Plus => [(z, r), (-z, -r)],
        })
        .collect();
    Factorization { value, log_tail: log_tail(&fams, t, n) }
}

/// Σ_{n>N} Σ_fam ln(1 − u/(nT + e)) by expansion in 1/n and Hurwitz ζ.
/// The 1/n terms cancel across the paired families.
fn log_tail(fams: &[(Complex64, Complex64)], t: f64, n: usize) -> Complex64 {
    const LMAX: usize = 10;
    let mut c = [Complex64::new(0.0, 0.0); LMAX + 1];
    for &(u, e) in fams {
        // ln(1 − u/(nT+e)) = −Σ_k (u^k/k) (nT)^{−k} (1 + e/(nT))^{−k}
        for k in 1..=LMAX {
            let uk = u.powu(k as u32) / k as f64;
            let mut binom = 1.0; // C(−k, j)
            let mut ej = Complex64::new(1.0, 0.0);
            for j in 0..=(LMAX - k) {
                c[k + j] -= uk * binom * ej / t.powi((k + j) as i32);
                binom *= -((k + j) as f64) / (j + 1) as f64;
                ej *= e;
            }
        }
    }
    let a = (n + 1) as f64;
    (2..=LMAX).map(|l| c[l] * hurwitz_zeta(l as f64, a)).sum()
}

fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(a2: f64, a3: f64, k: f64, q: u32, p: u32) -> SpectralQuantities {
        compute_quantities(&CornerParams::new(a2, a3, k, q, p).unwrap()).unwrap()
    }

    #[test]
    fn quantities_basic() {
        let s = sq(1.0, 0.0, 0.5, 1, 3);
        assert!((s.q1 - 1.5).abs() < 1e-15);
        assert!((s.q_star - 3.0).abs() < 1e-15);
        assert!((s.q2 - 5f64.sqrt()).abs() < 1e-14);
        assert!((s.theta1 - PI / 4.0).abs() < 1e-15);
        assert!((s.theta2 - (PI - (1.0 / 10f64.sqrt()).asin())).abs() < 1e-14);
        assert!((s.theta2 - 2.81984).abs() < 1e-5);
        assert!((s.period - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn q2_exact_one_and_below() {
        assert!((sq(1.0, -1.0, 0.5, 1, 3).q2 - 1.0).abs() < 1e-15);
        let s = sq(1.5, -2.0, 0.5, 1, 4);
        assert!((s.q2 * s.q2 - 0.3125 / 0.8125).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CornerParams::new(1.0, 0.0, 1.0, 1, 3).is_err());
        assert!(CornerParams::new(0.0, 0.0, 0.5, 1, 3).is_err());
        assert!(CornerParams::new(1.0, 0.0, 0.5, 2, 4).is_err());
        assert!(CornerParams::new(1.0, 0.0, 0.5, 2, 6).is_err());
    }

    #[test]
    fn classification_clauses() {
        let c = |a2, a3| classify_q2(&CornerParams::new(a2, a3, 0.5, 1, 3).unwrap()).unwrap();
        assert_eq!(c(1.0, 0.0).clause, Q2Clause::A3NonNegative);
        assert_eq!(c(1.0, -0.8).clause, Q2Clause::A2AboveMinusA3);
        assert_eq!(c(1.5, -2.0).class, Q2Class::LessOne);
        assert_eq!(c(0.5, -3.0).clause, Q2Clause::A2BelowMinusKA3);
        assert_eq!(c(1.0, -2.0).clause, Q2Clause::A2EqualsMinusKA3);
        assert_eq!(c(1.0, -1.0).clause, Q2Clause::A2EqualsMinusA3);
    }

    #[test]
    fn minus_closed_form_zeros() {
        // δ = π/4, q* = 3: S⁻ = sin z (1 − 2q* cos z)... with q₁ = 2
        let s = sq(1.0, 0.0, 0.5, 1, 4);
        let zs = find_zeros(Kind::Minus, &s).unwrap();
        let ac = (1.0f64 / 6.0).acos();
        let want = [0.0, ac, PI, 2.0 * PI - ac, 2.0 * PI, 2.0 * PI + ac, 3.0 * PI, 4.0 * PI - ac];
        assert_eq!(zs.count(), 8);
        for (z, w) in zs.zeros.iter().zip(want) {
            assert!((z.location - w).abs() < 1e-12, "{} vs {}", z.location, w);
        }
    }

    #[test]
    fn q2_one_closed_form() {
        // a₂ = −k a₃ ⇒ θ₂ = θ₁ and the first zero is 2θ₁/(q₁+1)
        let s = sq(1.0, -2.0, 0.5, 1, 3);
        assert!((s.theta2 - s.theta1).abs() < 1e-14);
        let zs = find_zeros(Kind::Plus, &s).unwrap();
        assert_eq!(zs.count(), 6);
        assert!((zs.zeros[0].location - PI / 5.0).abs() < 1e-14);
        for z in &zs.zeros {
            assert!(z.residual < 1e-13);
        }
        // a₂ = −a₃ branch: S⁺(π/5) ≠ 0, the closed form is the two-factor one
        let s = sq(1.0, -1.0, 0.5, 1, 3);
        assert!(eval_s_real(Kind::Plus, PI / 5.0, &s).0.abs() > 0.1);
        let zs = find_zeros(Kind::Plus, &s).unwrap();
        assert!((zs.zeros[0].location - 0.4 * PI).abs() < 1e-14);
    }

    #[test]
    fn q2_below_one_has_off_axis_pair() {
        let s = sq(1.5, -2.0, 0.5, 1, 4);
        let zs = find_zeros(Kind::Plus, &s).unwrap();
        assert_eq!(zs.total_count(), 8);
        // numpy.roots on the w-polynomial: real 0.8240, π, 7.1072, 3π and
        // two conjugate pairs at Re 4.7641 / 11.0472, |Im| 0.57263
        assert_eq!(zs.count(), 4);
        assert_eq!(zs.off_axis.len(), 4);
        for w in &zs.off_axis {
            let near = (w.re - 4.764_053_388).abs() < 1e-8 || (w.re - 11.047_238_696).abs() < 1e-8;
            assert!(near && (w.im.abs() - 0.572_630_406).abs() < 1e-8, "{w}");
            assert!(eval_s(Kind::Plus, *w, &s).norm() < 1e-12);
        }
        for z in &zs.zeros {
            assert!(g_intervals(&s).iter().any(|(a, b)| z.location >= *a && z.location <= *b));
        }
    }

    #[test]
    fn prefix_matches_full_strip() {
        for (a2, a3) in [(1.0, 0.0), (1.5, -2.0), (1.0, -2.0), (0.3, 0.7)] {
            let s = sq(a2, a3, 0.5, 2, 7);
            for kind in [Kind::Plus, Kind::Minus] {
                let full = find_zeros(kind, &s).unwrap().locations();
                let pre = real_zeros_upto(kind, &s, 9.0).unwrap();
                let want: Vec<f64> = full.into_iter().filter(|&x| x <= 9.0).collect();
                assert_eq!(pre.len(), want.len(), "{a2} {a3} {kind:?}");
                for (a, b) in pre.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn oracle_counts() {
        let s = sq(1.0, 0.0, 0.5, 1, 4);
        let r = Rect { x0: -0.1, x1: 4.0 * PI - 0.01, y0: -1.0, y1: 1.0 };
        assert_eq!(count_zeros_oracle(Kind::Minus, &s, r).unwrap(), 8);
        let gap = Rect { x0: 0.3, x1: 1.0, y0: -0.5, y1: 0.5 };
        assert_eq!(count_zeros_oracle(Kind::Minus, &s, gap).unwrap(), 0);
        let on_zero = Rect { x0: 0.0, x1: 1.0, y0: -0.5, y1: 0.5 };
        assert!(matches!(count_zeros_oracle(Kind::Minus, &s, on_zero), Err(Error::BoundaryTooClose { .. })));
    }

    #[test]
    fn factorization_vanishes_at_zero_and_converges() {
        let s = sq(1.0, 0.0, 0.5, 1, 4);
        let zs = find_zeros(Kind::Minus, &s).unwrap();
        let at = Complex64::new(zs.zeros[3].location, 0.0);
        assert_eq!(eval_factorization(Kind::Minus, at, &s, &zs, 10).value, Complex64::new(0.0, 0.0));
        let z = Complex64::new(1.0, 0.5);
        let f = eval_factorization(Kind::Minus, z, &s, &zs, 2000);
        let exact = eval_s(Kind::Minus, z, &s);
        let raw = ((f.value - exact) / exact).norm();
        let corrected = ((f.tail_corrected() - exact) / exact).norm();
        assert!(raw < 1e-4);
        assert!(corrected < 1e-10, "corrected {corrected}");
    }
}
