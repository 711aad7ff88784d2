//! Special functions used by the symbol and spectral code.

use num_complex::Complex64;
use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Bernoulli numbers B_0..B_20 (B_1 = -1/2 convention).
const BERNOULLI: [f64; 21] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
];

pub fn bernoulli_number(n: usize) -> f64 {
    BERNOULLI[n]
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0;
    for j in 0..k {
        b *= (n - j) as f64 / (j + 1) as f64;
    }
    b
}

/// Bernoulli polynomial B_n(x) for complex x, n ≤ 20.
pub fn bernoulli_poly(n: usize, x: Complex64) -> Complex64 {
    // Horner over B_n(x) = Σ C(n,k) B_k x^{n-k}
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        acc = acc * x + binomial(n, k) * BERNOULLI[k];
    }
    acc
}

/// Principal-ish branch of ln Γ(z). Only exp(ln_gamma) is relied upon by callers,
/// so the imaginary part is determined up to multiples of 2π near the negative axis.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Γ(z)Γ(1−z) = π / sin(πz)
        let s = (PI * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(1.0 - z);
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 18.0 || w.re < 10.0 {
        shift += w.ln();
        w += 1.0;
    }
    stirling(w) - shift
}

fn stirling(w: Complex64) -> Complex64 {
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for j in 1..=10 {
        let b = BERNOULLI[2 * j];
        series += pow * (b / ((2 * j) * (2 * j - 1)) as f64);
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + LN_SQRT_2PI + series
}

/// ln Γ(Z + x) − (Z + x − ½) ln Z + Z − ½ ln 2π, the Stirling-normalized
/// log-gamma remainder. Tends to 0 as Z → +∞ for fixed x.
pub fn ln_gamma_remainder(big_z: f64, x: Complex64) -> Complex64 {
    ln_gamma(x + big_z) - (x + big_z - 0.5) * big_z.ln() + big_z - LN_SQRT_2PI
}

/// Coefficient a_k(x) of Z^{-k} in the asymptotic expansion of
/// [`ln_gamma_remainder`]: (−1)^{k+1} B_{k+1}(x) / (k(k+1)).
pub fn remainder_coeff(k: usize, x: Complex64) -> Complex64 {
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    bernoulli_poly(k + 1, x) * (sign / (k * (k + 1)) as f64)
}

/// Hurwitz zeta ζ(s, a) for real s > 1, a > 0 by Euler–Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    const M: usize = 12;
    let mut sum = 0.0;
    for k in 0..M {
        sum += (a + k as f64).powf(-s);
    }
    let b = a + M as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j−2) · b^{−s−2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut bp = b.powf(-s - 1.0);
    for j in 1..=8 {
        sum += BERNOULLI[2 * j] / fact * rising * bp;
        rising *= (s + (2 * j) as f64 - 1.0) * (s + (2 * j) as f64);
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
        bp /= b * b;
    }
    sum
}

/// Digamma ψ(x) for real x > 0 (recurrence up to x ≥ 10, then asymptotic series).
pub fn digamma(mut x: f64) -> f64 {
    assert!(x > 0.0, "digamma needs x > 0");
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut pow = inv2;
    let mut series = 0.0;
    for j in 1..=8 {
        series += BERNOULLI[2 * j] / (2 * j) as f64 * pow;
        pow *= inv2;
    }
    acc + x.ln() - 0.5 / x - series
}

/// Asymptotic form of [`ln_gamma_remainder`], Σ_{k≤K} a_k(x) Z^{-k}. Accurate once
/// Z ≫ |x|; avoids the cancellation of the direct form at large Z.
pub fn ln_gamma_remainder_series(big_z: f64, x: Complex64, terms: usize) -> Complex64 {
    let inv = 1.0 / big_z;
    let mut pow = inv;
    let mut out = Complex64::new(0.0, 0.0);
    for k in 1..=terms {
        out += remainder_coeff(k, x) * pow;
        pow *= inv;
    }
    out
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: Complex64,
    comp: Complex64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: Complex64) {
        self.sum.re = neumaier(&mut self.comp.re, self.sum.re, v.re);
        self.sum.im = neumaier(&mut self.comp.im, self.sum.im, v.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn neumaier(comp: &mut f64, sum: f64, v: f64) -> f64 {
    let t = sum + v;
    if sum.abs() >= v.abs() {
        *comp += (sum - t) + v;
    } else {
        *comp += (v - t) + sum;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ln_gamma_integers() {
        let mut f = 1.0f64;
        for n in 1..20 {
            let lg = ln_gamma(c(n as f64, 0.0));
            assert!((lg.re - f.ln()).abs() < 1e-13 * (1.0 + f.ln().abs()), "n={n}");
            assert!(lg.im.abs() < 1e-14);
            f *= n as f64;
        }
    }

    #[test]
    fn ln_gamma_half_and_recurrence() {
        let lg = ln_gamma(c(0.5, 0.0));
        assert!((lg.re - 0.5 * PI.ln()).abs() < 1e-14);
        for &z in &[c(0.3, 2.0), c(-3.7, 0.4), c(12.0, -35.0), c(0.01, 0.0)] {
            let lhs = (ln_gamma(z + 1.0) - ln_gamma(z) - z.ln()).exp();
            assert!((lhs - 1.0).norm() < 1e-13, "z={z}");
        }
    }

    #[test]
    fn ln_gamma_reference_values() {
        // mpmath.loggamma(1+1j), loggamma(3.5-20j)
        let a = ln_gamma(c(1.0, 1.0));
        assert!((a - c(-0.650_923_199_301_856_3, -0.301_640_320_467_533_2)).norm() < 1e-14);
        let b = ln_gamma(c(3.5, -20.0));
        let want = c(-21.498_922_066_996_628, -44.404_908_452_981_567);
        assert!(((b - want).exp() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn remainder_matches_asymptotics() {
        let x = c(0.3, 1.5);
        let z = 400.0;
        let direct = ln_gamma_remainder(z, x);
        let mut series = Complex64::new(0.0, 0.0);
        for k in 1..8 {
            series += remainder_coeff(k, x) / z.powi(k as i32);
        }
        assert!((direct - series).norm() < 1e-11);
    }

    #[test]
    fn hurwitz_against_riemann() {
        let z2 = PI * PI / 6.0;
        assert!((hurwitz_zeta(2.0, 1.0) - z2).abs() < 1e-14);
        // ζ(2, N+1) = ζ(2) − Σ_{n≤N} 1/n²
        let tail: f64 = z2 - (1..=100).map(|n| 1.0 / (n * n) as f64).sum::<f64>();
        assert!((hurwitz_zeta(2.0, 101.0) - tail).abs() < 1e-13);
        assert!((hurwitz_zeta(4.0, 1.0) - PI.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_poly_low_orders() {
        let x = c(0.7, -0.2);
        assert!((bernoulli_poly(2, x) - (x * x - x + 1.0 / 6.0)).norm() < 1e-15);
        assert!((bernoulli_poly(3, x) - (x * x * x - 1.5 * x * x + 0.5 * x)).norm() < 1e-15);
        // B_n(1−x) = (−1)^n B_n(x)
        for n in 1..12 {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((bernoulli_poly(n, 1.0 - x) - s * bernoulli_poly(n, x)).norm() < 1e-11);
        }
    }

    #[test]
    fn digamma_values() {
        let gamma = 0.5772156649015329;
        assert!((digamma(1.0) + gamma).abs() < 1e-14);
        assert!((digamma(0.5) + gamma + 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!((digamma(1234.5) - digamma(1233.5) - 1.0 / 1233.5).abs() < 1e-14);
    }

    #[test]
    fn remainder_series_agrees_at_large_z() {
        let x = Complex64::new(0.3, -4.0);
        let direct = ln_gamma_remainder(300.0, x);
        let series = ln_gamma_remainder_series(300.0, x, 12);
        assert!((direct - series).norm() < 1e-11, "{direct} vs {series}");
    }
}
