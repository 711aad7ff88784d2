//! The Mellin-type symbol 𝒢 of the model corner problem and the Gamma-product
//! solution V₀ of its homogeneous shift equation
//! μV(ν+1) = (s+2+ν(s*−2))·𝒢(−i(s*−2)ν)·V(ν).

use crate::error::{Error, Result};
use crate::special::{digamma, hurwitz_zeta, ln_gamma, ln_gamma_remainder, ln_gamma_remainder_series, remainder_coeff, KahanSum};
use crate::spectral::{classify_q2, compute_quantities, eval_s, find_zeros, CornerParams, Kind, Q2Class, SpectralQuantities};
use crate::weights::select_threshold;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

const POLE_REL: f64 = 1e-12;
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolParams {
    pub corner: CornerParams,
    pub s: f64,
    pub s_star: f64,
}

impl SymbolParams {
    pub fn new(corner: CornerParams, s: f64, s_star: f64) -> Result<Self> {
        corner.validate()?;
        if !(s_star > 2.0) || !s.is_finite() {
            return Err(Error::InvalidParams(format!("need s* > 2 and finite s, got s*={s_star}, s={s}")));
        }
        Ok(Self { corner, s, s_star })
    }

    pub fn s_hat(&self) -> f64 {
        (2.0 + self.s) / (self.s_star - 2.0)
    }

    /// 𝔯 = iζ + s + 2.
    pub fn r(&self, zeta: Complex64) -> Complex64 {
        I * zeta + self.s + 2.0
    }

    /// ζ = −i(s*−2)ν.
    pub fn zeta_of_nu(&self, nu: Complex64) -> Complex64 {
        -I * (self.s_star - 2.0) * nu
    }
}

struct Trig {
    cm: Complex64,
    sm: Complex64,
    cp: Complex64,
    sp: Complex64,
    /// Growth scales of the (δ−π/2) and (δ+π/2) terms.
    scale_m: f64,
    scale_p: f64,
}

fn trig(sp: &SymbolParams, zeta: Complex64) -> Trig {
    let d = sp.corner.delta();
    let r = sp.r(zeta);
    let (am, ap) = (r * (d - PI / 2.0), r * (d + PI / 2.0));
    let scale_m = (r.im * (d - PI / 2.0)).cosh();
    let scale_p = (r.im * (d + PI / 2.0)).cosh();
    Trig { cm: am.cos(), sm: am.sin(), cp: ap.cos(), sp: ap.sin(), scale_m, scale_p }
}

fn checked(den: Complex64, scale: f64) -> Result<Complex64> {
    if den.norm() < POLE_REL * scale {
        Err(Error::PoleProximity { modulus: den.norm() })
    } else {
        Ok(den)
    }
}

pub fn eval_n(zeta: Complex64, sp: &SymbolParams) -> Result<Complex64> {
    let (a3, k) = (sp.corner.a3, sp.corner.k);
    let t = trig(sp, zeta);
    let den = checked(t.cp + k * a3 * t.sp, t.scale_p * (1.0 + k * a3.abs()))?;
    Ok((t.cm + a3 * t.sm) / den)
}

pub fn eval_n1(zeta: Complex64, sp: &SymbolParams) -> Result<Complex64> {
    let t = trig(sp, zeta);
    Ok(sp.corner.k * eval_n(zeta, sp)? * t.sp - t.sm)
}

pub fn eval_n2(zeta: Complex64, sp: &SymbolParams) -> Result<Complex64> {
    let (a3, k) = (sp.corner.a3, sp.corner.k);
    let t = trig(sp, zeta);
    let sm = checked(t.sm, t.scale_m)?;
    let spp = checked(t.sp, t.scale_p)?;
    let den = checked(t.cp / spp + k * a3, 1.0 + k * a3.abs())?;
    Ok((t.cm / sm + a3) / den)
}

/// 𝒢(ζ), evaluated with 𝒩's denominator cleared so that only the genuine
/// poles (zeros of 𝒩₁) are reported.
pub fn eval_g(zeta: Complex64, sp: &SymbolParams) -> Result<Complex64> {
    let CornerParams { a2, a3, k, .. } = sp.corner;
    let t = trig(sp, zeta);
    let nn = t.cm + a3 * t.sm;
    let nd = t.cp + k * a3 * t.sp;
    let num = k * nn * t.cp - t.cm * nd;
    let den = k * nn * t.sp - t.sm * nd;
    let den = checked(den, t.scale_m * t.scale_p * (1.0 + a3.abs()) * (1.0 + k * a3.abs()))?;
    Ok(num / den - a2)
}

/// 𝒢(−i(s*−2)ν).
pub fn eval_g_nu(nu: Complex64, sp: &SymbolParams) -> Result<Complex64> {
    eval_g(sp.zeta_of_nu(nu), sp)
}

/// −√(1+a₂²)·S⁺(2δ𝔯)/S⁻(2δ𝔯) with 𝔯 = s+2+(s*−2)ν.
pub fn g_via_s(nu: Complex64, sp: &SymbolParams, sq: &SpectralQuantities) -> Result<Complex64> {
    let z = 2.0 * sp.corner.delta() * ((sp.s_star - 2.0) * nu + sp.s + 2.0);
    let den = checked(eval_s(Kind::Minus, z, sq), sq.scale() * (sq.q1.max(1.0) * z.im).cosh())?;
    Ok(-(1.0 + sp.corner.a2.powi(2)).sqrt() * eval_s(Kind::Plus, z, sq) / den)
}

/// 𝒢(0) = −[sin(2δ(s+2)−θ₁) + q₂ sin(π(s+2)−θ₂)] / [sin θ₁ (sin 2δ(s+2) − q* sin π(s+2))].
pub fn g_zero_closed_form(sp: &SymbolParams, sq: &SpectralQuantities) -> f64 {
    let d = sp.corner.delta();
    let r = sp.s + 2.0;
    -((2.0 * d * r - sq.theta1).sin() + sq.q2 * (PI * r - sq.theta2).sin())
        / (sq.theta1.sin() * ((2.0 * d * r).sin() - sq.q_star * (PI * r).sin()))
}

/// Precomputed shifted zeros and constants of the Gamma-product V₀.
#[derive(Debug, Clone)]
pub struct GammaProduct {
    pub sp: SymbolParams,
    pub sq: SpectralQuantities,
    pub zm: Vec<f64>,
    pub zp: Vec<f64>,
    pub i1_star: usize,
    /// 2δ(2+s) and 2δ(s*−2).
    pub b: f64,
    pub c: f64,
    pub ln_d: Complex64,
    pub g0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct V0Value {
    pub ln_value: Complex64,
    /// Estimated contribution of the factors n > N, already included in `ln_value`.
    pub tail: Complex64,
    pub truncation: usize,
}

impl V0Value {
    pub fn value(&self) -> Complex64 {
        self.ln_value.exp()
    }
}

/// Pole-free strip of V₀: lower < Re ν < upper, Re ν ∉ excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleFreeStrip {
    pub lower: f64,
    pub upper: f64,
    pub excluded: Vec<f64>,
}

impl PoleFreeStrip {
    pub fn admits(&self, re: f64, margin: f64) -> bool {
        re > self.lower + margin && re < self.upper - margin && self.excluded.iter().all(|e| (re - e).abs() > margin)
    }
}

/// One n-family of Gamma factors: Z(n) = (offset + nT)/c, weight ±1, argument x = ν or 1−ν.
#[derive(Clone, Copy)]
struct Family {
    offset: f64,
    weight: f64,
    reflect: bool,
}

impl GammaProduct {
    pub fn new(sp: SymbolParams) -> Result<Self> {
        let cp = sp.corner;
        if classify_q2(&cp)?.class != Q2Class::GreaterOne {
            return Err(Error::Unsupported("the Gamma-product V₀ needs q₂ > 1 (all 2p zeros of S⁺ real)".into()));
        }
        let sq = compute_quantities(&cp)?;
        let zm = find_zeros(Kind::Minus, &sq)?.locations();
        let zp = find_zeros(Kind::Plus, &sq)?.locations();
        let d = cp.delta();
        let i1_star = select_threshold(&zp, 2.0 * d, 3.0)?;
        let (b, c) = (2.0 * d * (2.0 + sp.s), 2.0 * d * (sp.s_star - 2.0));
        let g0 = eval_g(Complex64::new(0.0, 0.0), &sp)?.re;
        let mut ln_d = Complex64::new(g0 * sp.s_hat(), 0.0).ln();
        for &z in &zm[1..] {
            ln_d += Complex64::new((z + b) / c * ((z - b) / c), 0.0).ln();
        }
        for &z in &zp {
            ln_d -= Complex64::new((z - b) / c, 0.0).ln();
        }
        Ok(Self { sp, sq, zm, zp, i1_star, b, c, ln_d, g0 })
    }

    fn period(&self) -> f64 {
        self.sq.period
    }

    /// Sorted S⁻ zeros continued periodically past the strip.
    fn zm_ext(&self, i: usize) -> f64 {
        let n = self.zm.len();
        self.zm[i % n] + self.period() * (i / n) as f64
    }

    pub fn z_minus(&self, i: usize) -> f64 {
        (self.zm_ext(i) - self.b) / self.c
    }

    pub fn z_plus(&self, i: usize) -> f64 {
        (self.zp[i] - self.b) / self.c
    }

    pub fn strip(&self) -> PoleFreeStrip {
        let kp = self.zp.len();
        let lower = -(self.period() - self.zp[kp - 1] + self.b) / self.c;
        let upper = if 2 * self.sq.p as usize > self.i1_star + 3 {
            1.0 + self.z_minus(self.i1_star + 2)
        } else {
            4.0 * PI * self.sq.q as f64
        };
        let mut excluded = Vec::new();
        for i in 0..self.i1_star {
            let mut l = 1.0;
            loop {
                let e = 1.0 - l + self.z_plus(i);
                if e <= lower {
                    break;
                }
                if e < upper {
                    excluded.push(e);
                }
                l += 1.0;
            }
        }
        excluded.sort_by(|a, b| a.partial_cmp(b).unwrap());
        PoleFreeStrip { lower, upper, excluded }
    }

    /// Zero-free band of Lemma 4.1(ii).
    pub fn zero_free_band(&self) -> PoleFreeStrip {
        let lower = -(self.zm[1] + self.b) / self.c;
        let upper = 1.0 + self.z_plus(self.i1_star);
        let mut excluded = Vec::new();
        for i in 1..=self.i1_star + 2 {
            let mut m = 1.0;
            loop {
                let e = 1.0 - m + self.z_minus(i);
                if e <= lower {
                    break;
                }
                if e < upper {
                    excluded.push(e);
                }
                m += 1.0;
            }
        }
        excluded.sort_by(|a, b| a.partial_cmp(b).unwrap());
        PoleFreeStrip { lower, upper, excluded }
    }

    fn families(&self) -> Vec<Family> {
        let mut f = Vec::with_capacity(2 * (self.zm.len() + self.zp.len()));
        for &z in &self.zm {
            f.push(Family { offset: z - self.b, weight: 1.0, reflect: true });
            f.push(Family { offset: z + self.b, weight: -1.0, reflect: false });
        }
        for &z in &self.zp {
            f.push(Family { offset: -z + self.b, weight: 1.0, reflect: false });
            f.push(Family { offset: z - self.b, weight: -1.0, reflect: true });
        }
        f
    }

    /// ln V₀(ν, μ) with the infinite product truncated after `n` n-levels and
    /// the remaining levels replaced by their asymptotic sum.
    pub fn ln_v0(&self, nu: Complex64, mu: Complex64, n: usize) -> Result<V0Value> {
        self.ln_v0_with(nu, mu, n, true)
    }

    /// As [`Self::ln_v0`]; with `tail_correct = false` the product is plainly truncated.
    pub fn ln_v0_with(&self, nu: Complex64, mu: Complex64, n: usize, tail_correct: bool) -> Result<V0Value> {
        let strip = self.strip();
        if nu.re <= strip.lower || nu.re >= strip.upper || strip.excluded.iter().any(|e| (nu.re - e).abs() < 1e-8) {
            return Err(Error::PoleStripViolation { re: nu.re, im: nu.im });
        }
        if mu.norm() == 0.0 {
            return Err(Error::InvalidParams("μ must be nonzero".into()));
        }
        let g = self.sp.s_star - 2.0;
        let half = Complex64::new(0.5, 0.0);
        let mut acc = KahanSum::new();
        acc.add((nu - half) * self.ln_d);
        acc.add((half - nu) * (mu / g).ln());
        // 𝒫
        for i in 1..=self.i1_star + 2 {
            acc.add((PI * (1.0 + self.z_minus(i) - nu)).sin().ln());
        }
        for i in 0..self.i1_star {
            acc.add(-(PI * (1.0 + self.z_plus(i) - nu)).sin().ln());
        }
        // 𝓛₀
        for i in 1..self.zm.len() {
            acc.add(ln_gamma(self.z_minus(i) - nu + 1.0));
            acc.add(-ln_gamma((self.zm[i] + self.b) / self.c + nu));
        }
        for i in 0..self.zp.len() {
            acc.add(-ln_gamma(1.0 + self.z_plus(i) - nu));
        }
        // 𝓛: Stirling-normalized log-Gamma remainders
        let fams = self.families();
        let t = self.period();
        let one = Complex64::new(1.0, 0.0);
        for level in 1..=n {
            let mut lvl = Complex64::new(0.0, 0.0);
            for f in &fams {
                let z = (f.offset + level as f64 * t) / self.c;
                let x = if f.reflect { one - nu } else { nu };
                let rho = if z > 40.0 * (1.0 + x.norm()) {
                    ln_gamma_remainder_series(z, x, 14)
                } else {
                    ln_gamma_remainder(z, x)
                };
                lvl += f.weight * rho;
            }
            acc.add(lvl);
        }
        let tail = self.tail(nu, n);
        if tail_correct {
            acc.add(tail);
        }
        Ok(V0Value { ln_value: acc.value(), tail, truncation: n })
    }

    /// Σ_{n>N} of the level terms via the 1/Z expansion and Hurwitz ζ; the
    /// divergent k = 1 pieces cancel between families and are summed with ψ.
    fn tail(&self, nu: Complex64, n: usize) -> Complex64 {
        const K: usize = 8;
        let t = self.period();
        let ratio = self.c / t;
        let one = Complex64::new(1.0, 0.0);
        let mut out = Complex64::new(0.0, 0.0);
        for f in self.families() {
            let x = if f.reflect { one - nu } else { nu };
            let a = n as f64 + 1.0 + f.offset / t;
            out -= f.weight * remainder_coeff(1, x) * ratio * digamma(a);
            let mut rk = ratio;
            for k in 2..=K {
                rk *= ratio;
                out += f.weight * remainder_coeff(k, x) * rk * hurwitz_zeta(k as f64, a);
            }
        }
        out
    }

    pub fn v0(&self, nu: Complex64, mu: Complex64, n: usize) -> Result<Complex64> {
        Ok(self.ln_v0(nu, mu, n)?.value())
    }

    /// |μV₀(ν+1) − (s+2+ν(s*−2))𝒢V₀(ν)| / |μV₀(ν+1)|, computed in log space.
    pub fn functional_residual(&self, nu: Complex64, mu: Complex64, n: usize) -> Result<f64> {
        self.functional_residual_with(nu, mu, n, true)
    }

    pub fn functional_residual_with(&self, nu: Complex64, mu: Complex64, n: usize, tail_correct: bool) -> Result<f64> {
        let lhs = self.ln_v0_with(nu + 1.0, mu, n, tail_correct)?.ln_value + mu.ln();
        let coef = (self.sp.s + 2.0 + nu * (self.sp.s_star - 2.0)) * eval_g_nu(nu, &self.sp)?;
        let rhs = self.ln_v0_with(nu, mu, n, tail_correct)?.ln_value + coef.ln();
        Ok((1.0 - (rhs - lhs).exp()).norm())
    }

    /// Fit ln(1/|V₀|) ≈ a + b ln|ν| − rate·|Im ν| along Re ν = x0.
    pub fn decay_fit(&self, x0: f64, ims: &[f64], mu: Complex64, n: usize) -> Result<DecayFit> {
        if ims.len() < 4 {
            return Err(Error::InsufficientData(format!("{} samples, need ≥ 4", ims.len())));
        }
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for &y in ims {
            let nu = Complex64::new(x0, y);
            let lv = self.ln_v0(nu, mu, n)?;
            rows.extend_from_slice(&[1.0, nu.norm().ln(), -y.abs()]);
            rhs.push(-lv.ln_value.re);
        }
        let a = nalgebra::DMatrix::from_row_slice(ims.len(), 3, &rows);
        let bvec = nalgebra::DVector::from_vec(rhs);
        let svd = a.clone().svd(true, true);
        let sol = svd.solve(&bvec, 1e-12).map_err(|e| Error::InsufficientData(e.to_string()))?;
        let resid = (&a * &sol - &bvec).norm() / (ims.len() as f64).sqrt();
        let target = PI - self.sq.theta2;
        Ok(DecayFit { x0, rate: sol[2], log_power: sol[1], target, rel_error: (sol[2] - target).abs() / target, rms_residual: resid })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub x0: f64,
    pub rate: f64,
    pub log_power: f64,
    /// π − θ₂.
    pub target: f64,
    pub rel_error: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRow {
    pub nu_re: f64,
    pub nu_im: f64,
    pub mu_re: f64,
    pub mu_im: f64,
    pub residual: f64,
    pub truncation: usize,
    pub tail_estimate: f64,
}

pub fn write_residual_csv<W: Write>(rows: &[ResidualRow], w: W) -> std::io::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> SymbolParams {
        let cp = CornerParams::new(3f64.sqrt(), 0.0, 0.5, 1, 3).unwrap();
        SymbolParams::new(cp, 0.6, 3.5).unwrap()
    }

    #[test]
    fn g_zero_matches_closed_form() {
        let sp = worked();
        let sq = compute_quantities(&sp.corner).unwrap();
        let g0 = eval_g(Complex64::new(0.0, 0.0), &sp).unwrap();
        assert!((g0.re - g_zero_closed_form(&sp, &sq)).abs() < 1e-12);
        assert!(g0.im.abs() < 1e-14);
    }

    #[test]
    fn identity_at_a_point() {
        let sp = worked();
        let sq = compute_quantities(&sp.corner).unwrap();
        let nu = Complex64::new(0.37, -1.3);
        let a = eval_g_nu(nu, &sp).unwrap();
        let b = g_via_s(nu, &sp, &sq).unwrap();
        assert!((a - b).norm() / b.norm() < 1e-12);
    }

    #[test]
    fn strip_of_worked_config() {
        let gp = GammaProduct::new(worked()).unwrap();
        assert_eq!(gp.i1_star, 2);
        let st = gp.strip();
        assert!(st.lower < -1.8 && st.lower > -1.9);
        assert!(st.upper > 1.95 && st.upper < 2.0);
        assert_eq!(st.excluded.len(), 3);
    }

    #[test]
    fn rejects_q2_not_above_one() {
        let cp = CornerParams::new(1.0, -1.0, 0.5, 1, 3).unwrap();
        let sp = SymbolParams::new(cp, 0.6, 3.5).unwrap();
        assert!(matches!(GammaProduct::new(sp), Err(Error::Unsupported(_))));
    }

    #[test]
    fn pole_line_rejected() {
        let gp = GammaProduct::new(worked()).unwrap();
        let e = gp.strip().excluded[0];
        let r = gp.ln_v0(Complex64::new(e, 0.5), Complex64::new(1.0, 0.0), 20);
        assert!(matches!(r, Err(Error::PoleStripViolation { .. })));
    }
}
