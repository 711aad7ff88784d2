//! Bracketed scalar root refinement.

use num_complex::Complex64;

/// Bisect `f` on `[a, b]` (sign change required) down to `xtol`, then take one
/// Newton step with `df` if it stays inside the final bracket and does not
/// increase |f|.
pub fn bisect_newton<F, D>(f: F, df: D, mut a: f64, mut b: f64, xtol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let d = df(x);
    if d != 0.0 && d.is_finite() {
        let xn = x - fx / d;
        let lo = a.min(b) - xtol;
        let hi = a.max(b) + xtol;
        if xn >= lo && xn <= hi && f(xn).abs() <= fx.abs() {
            return Some(xn);
        }
    }
    Some(x)
}

/// Every sign change of `f` on a uniform `samples`-point grid over `[a, b]`,
/// refined with [`bisect_newton`]. Grid points where `f` vanishes exactly are
/// returned as-is.
pub fn sign_change_roots<F, D>(f: &F, df: &D, a: f64, b: f64, samples: usize, xtol: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let h = (b - a) / samples as f64;
    let mut out = Vec::new();
    let mut x0 = a;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        out.push(x0);
    }
    for j in 1..=samples {
        let x1 = if j == samples { b } else { a + j as f64 * h };
        let f1 = f(x1);
        if f1 == 0.0 {
            out.push(x1);
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            if let Some(r) = bisect_newton(f, df, x0, x1, xtol) {
                out.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// All roots of Σ c[k] w^k by Aberth–Ehrlich iteration.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == Complex64::new(0.0, 0.0) {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let c: Vec<Complex64> = c.iter().map(|v| v / lead).collect();
    // Fujiwara-type radius for the starting circle.
    let mut r: f64 = 0.0;
    for (k, ck) in c.iter().enumerate().take(n) {
        r = r.max(ck.norm().powf(1.0 / (n - k) as f64));
    }
    let r = r.max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / n as f64 + 0.4))
        .collect();
    let eval = |x: Complex64| {
        let mut p = c[n];
        let mut dp = Complex64::new(0.0, 0.0);
        for k in (0..n).rev() {
            dp = dp * x + p;
            p = p * x + c[k];
        }
        (p, dp)
    };
    for _ in 0..1000 {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let w = ratio / (1.0 - ratio * s);
            z[i] -= w;
            max_step = max_step.max(w.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = bisect_newton(|x| x * x - 2.0, |x| 2.0 * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(bisect_newton(|x| x * x + 1.0, |x| 2.0 * x, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn endpoint_root_returned() {
        let r = bisect_newton(f64::sin, f64::cos, 0.0, 1.0, 1e-13).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn aberth_cubic() {
        // (w−1)(w+2)(w−i)
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let c = [2.0 * i, -2.0 - i, one + i * -1.0, one];
        let mut rs = poly_roots(&c);
        rs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let want = [Complex64::new(-2.0, 0.0), i, one];
        for (r, w) in rs.iter().zip(want.iter()) {
            assert!((r - w).norm() < 1e-12, "{r} vs {w}");
        }
    }

    #[test]
    fn scan_counts_sine_roots() {
        let rs = sign_change_roots(&f64::sin, &f64::cos, 0.5, 10.0, 200, 1e-13);
        assert_eq!(rs.len(), 3);
        for (r, k) in rs.iter().zip(1..) {
            assert!((r - k as f64 * std::f64::consts::PI).abs() < 1e-13);
        }
    }
}
