use super::{DomainSpec, Profile};
use crate::{Error, Result};
use nalgebra::{Matrix2, Vector2};

// 8-point Gauss–Legendre on [−1, 1]
const GL_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

fn gl(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    (0..4).map(|k| GL_W[k] * (f(c + h * GL_X[k]) + f(c - h * GL_X[k]))).sum::<f64>() * h
}

/// C² step: 0 for t ≤ 0, 1 for t ≥ 1.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn smoothstep_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C^∞ transition 0 → 1 on [0, 1].
fn transition(t: f64) -> f64 {
    let (a, b) = (bump(t), bump(1.0 - t));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

fn transition_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (a, b) = (bump(t), bump(1.0 - t));
    let (da, db) = (a / (t * t), -b / ((1.0 - t) * (1.0 - t)));
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Interface displacement 𝔰(ω) with its ω-derivative.
pub trait Displacement {
    fn eval(&self, omega: f64) -> (f64, f64);
    fn sup_abs(&self) -> f64;
}

pub struct ZeroDisplacement;

impl Displacement for ZeroDisplacement {
    fn eval(&self, _: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
    fn sup_abs(&self) -> f64 {
        0.0
    }
}

/// Closure-backed displacement; `sup` is supplied by the caller.
pub struct FnDisplacement<F: Fn(f64) -> (f64, f64)> {
    pub f: F,
    pub sup: f64,
}

impl<F: Fn(f64) -> (f64, f64)> Displacement for FnDisplacement<F> {
    fn eval(&self, omega: f64) -> (f64, f64) {
        (self.f)(omega)
    }
    fn sup_abs(&self) -> f64 {
        self.sup
    }
}

/// Natural cubic spline through (ωᵢ, 𝔰ᵢ); constant extension outside.
#[derive(Debug, Clone)]
pub struct SplineDisplacement {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl SplineDisplacement {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("spline needs ≥ 2 strictly increasing knots".into()));
        }
        // second derivatives by the Thomas algorithm
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Ok(SplineDisplacement { x, y, m })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }
}

impl Displacement for SplineDisplacement {
    fn eval(&self, w: f64) -> (f64, f64) {
        let n = self.x.len();
        if w < self.x[0] {
            return (self.y[0], 0.0);
        }
        if w > self.x[n - 1] {
            return (self.y[n - 1], 0.0);
        }
        let i = self.x.partition_point(|&v| v <= w).min(n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let (a, b) = ((self.x[i + 1] - w) / h, (w - self.x[i]) / h);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, d)
    }

    fn sup_abs(&self) -> f64 {
        let mut s = self.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for w in self.x.windows(2) {
            for k in 1..4 {
                s = s.max(self.eval(w[0] + (w[1] - w[0]) * k as f64 / 4.0).0.abs());
            }
        }
        s
    }
}

/// A point of the tube in interface coordinates: profile parameter u = y₂ on
/// Γ, arc length ω and transversal coordinate λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubePoint {
    pub u: f64,
    pub omega: f64,
    pub lambda: f64,
}

/// Arc-length chart of Γ, the transversal field 𝔩, the tube half-width 𝔟₀
/// and the cut-off χ.
#[derive(Debug, Clone)]
pub struct InterfaceChart {
    pub spec: DomainSpec,
    pub profile: Profile,
    pub length: f64,
    pub b0: f64,
    pub eps1: f64,
    /// max|χ′|·𝔟₀
    pub c0: f64,
    /// Largest |𝔰| accepted by the Hanzawa map.
    pub tube_limit: f64,
    panels: Vec<f64>,
    cum: Vec<f64>,
    samples: Vec<(f64, [f64; 2], [f64; 2])>,
}

const PANELS: usize = 256;

impl InterfaceChart {
    pub fn new(spec: &DomainSpec) -> Result<Self> {
        spec.validate()?;
        let profile = spec.interface()?;
        let a = spec.a;
        let panels: Vec<f64> = (0..=PANELS).map(|j| a * j as f64 / PANELS as f64).collect();
        let speed = |u: f64| profile.eval(u).1.hypot(1.0);
        let mut cum = vec![0.0];
        for w in panels.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + gl(speed, w[0], w[1]));
        }
        let length = *cum.last().unwrap();
        let mut chart = InterfaceChart {
            spec: *spec,
            profile,
            length,
            b0: 0.0,
            eps1: 0.0,
            c0: 0.0,
            tube_limit: 0.0,
            panels,
            cum,
            samples: Vec::new(),
        };
        let ns = 1024;
        chart.samples = (0..=ns)
            .map(|j| {
                let u = a * j as f64 / ns as f64;
                (u, chart.point_u(u), chart.l_field_u(u))
            })
            .collect();
        chart.b0 = chart.tube_half_width();
        chart.eps1 = (spec.eps / (4.0 * chart.b0)).min(0.5);
        let slope = (1..2000).map(|j| transition_deriv(j as f64 / 2000.0)).fold(0.0, f64::max);
        chart.c0 = slope / chart.eps1;
        chart.tube_limit = (0.25 * chart.b0).min(0.9 * chart.eps1 * chart.b0 / slope);
        Ok(chart)
    }

    // ---- parametrisation by u = y₂ ----

    pub fn point_u(&self, u: f64) -> [f64; 2] {
        [self.profile.eval(u).0, u]
    }

    /// dm/du = (g′, 1).
    pub fn dm_u(&self, u: f64) -> [f64; 2] {
        [self.profile.eval(u).1, 1.0]
    }

    pub fn speed(&self, u: f64) -> f64 {
        self.profile.eval(u).1.hypot(1.0)
    }

    pub fn tangent_u(&self, u: f64) -> [f64; 2] {
        let g1 = self.profile.eval(u).1;
        let s = g1.hypot(1.0);
        [g1 / s, 1.0 / s]
    }

    /// Unit normal directed into Ω₁.
    pub fn normal_u(&self, u: f64) -> [f64; 2] {
        let g1 = self.profile.eval(u).1;
        let s = g1.hypot(1.0);
        [1.0 / s, -g1 / s]
    }

    /// Blend weight toward n: 0 within ε of a corner, 1 beyond 2ε.
    pub fn blend_u(&self, u: f64) -> f64 {
        let p = self.point_u(u);
        let eps = self.spec.eps;
        let d0 = p[0].hypot(p[1]);
        let d1 = p[0].hypot(p[1] - self.spec.a);
        smoothstep((d0.min(d1) - eps) / eps)
    }

    pub fn l_field_u(&self, u: f64) -> [f64; 2] {
        let p = self.point_u(u);
        let corner = if p[1] < 0.5 * self.spec.a { [0.0, -1.0] } else { [0.0, 1.0] };
        let b = self.blend_u(u);
        if b == 0.0 {
            return corner;
        }
        let n = self.normal_u(u);
        if b == 1.0 {
            return n;
        }
        let v = [(1.0 - b) * corner[0] + b * n[0], (1.0 - b) * corner[1] + b * n[1]];
        let r = v[0].hypot(v[1]);
        [v[0] / r, v[1] / r]
    }

    pub fn dl_u(&self, u: f64) -> [f64; 2] {
        let p = self.point_u(u);
        let (_, g1, g2) = self.profile.eval(u);
        let eps = self.spec.eps;
        let (d0, d1) = (p[0].hypot(p[1]), p[0].hypot(p[1] - self.spec.a));
        let (d, q) = if d0 <= d1 { (d0, p) } else { (d1, [p[0], p[1] - self.spec.a]) };
        let t = (d - eps) / eps;
        if t <= 0.0 {
            return [0.0, 0.0];
        }
        let sigma = g1.hypot(1.0);
        let sig_u = g1 * g2 / sigma;
        let n = [1.0 / sigma, -g1 / sigma];
        let n_u = [-sig_u / (sigma * sigma), -g2 / sigma + g1 * sig_u / (sigma * sigma)];
        if t >= 1.0 {
            return n_u;
        }
        let corner = if p[1] < 0.5 * self.spec.a { [0.0, -1.0] } else { [0.0, 1.0] };
        let b = smoothstep(t);
        let b_u = smoothstep_deriv(t) / eps * (q[0] * g1 + q[1]) / d;
        let v = [(1.0 - b) * corner[0] + b * n[0], (1.0 - b) * corner[1] + b * n[1]];
        let v_u = [b_u * (n[0] - corner[0]) + b * n_u[0], b_u * (n[1] - corner[1]) + b * n_u[1]];
        let r = v[0].hypot(v[1]);
        let l = [v[0] / r, v[1] / r];
        let dot = l[0] * v_u[0] + l[1] * v_u[1];
        [(v_u[0] - l[0] * dot) / r, (v_u[1] - l[1] * dot) / r]
    }

    // ---- arc length ----

    pub fn omega_of_u(&self, u: f64) -> f64 {
        let a = self.spec.a;
        let j = ((u / a * PANELS as f64).floor() as isize).clamp(0, PANELS as isize - 1) as usize;
        self.cum[j] + gl(|t| self.speed(t), self.panels[j], u)
    }

    pub fn u_of_omega(&self, omega: f64) -> f64 {
        let j = self.cum.partition_point(|&c| c <= omega).clamp(1, PANELS) - 1;
        let (c0, c1) = (self.cum[j], self.cum[j + 1]);
        let (u0, u1) = (self.panels[j], self.panels[j + 1]);
        let mut u = u0 + (u1 - u0) * (omega - c0) / (c1 - c0);
        for _ in 0..30 {
            let du = (self.omega_of_u(u) - omega) / self.speed(u);
            u -= du;
            if du.abs() < 1e-15 * (1.0 + u.abs()) {
                break;
            }
        }
        u
    }

    pub fn m(&self, omega: f64) -> [f64; 2] {
        self.point_u(self.u_of_omega(omega))
    }

    pub fn normal(&self, omega: f64) -> [f64; 2] {
        self.normal_u(self.u_of_omega(omega))
    }

    pub fn transversal_field(&self, omega: f64) -> [f64; 2] {
        self.l_field_u(self.u_of_omega(omega))
    }

    /// χ(λ): 1 on |λ| < ε₁𝔟₀, 0 on |λ| > 2ε₁𝔟₀.
    pub fn cutoff(&self, lambda: f64) -> f64 {
        let w = self.eps1 * self.b0;
        1.0 - transition((lambda.abs() - w) / w)
    }

    pub fn cutoff_deriv(&self, lambda: f64) -> f64 {
        let w = self.eps1 * self.b0;
        -transition_deriv((lambda.abs() - w) / w) / w * lambda.signum()
    }

    /// Outer edge 2ε₁𝔟₀ of the cut-off support.
    pub fn support(&self) -> f64 {
        2.0 * self.eps1 * self.b0
    }

    fn tube_half_width(&self) -> f64 {
        let eps = self.spec.eps;
        let mut dist = f64::INFINITY;
        let mut curv = f64::INFINITY;
        let poly: Vec<[f64; 2]> = self.samples.iter().map(|s| s.1).collect();
        for (j, &(u, p, l)) in self.samples.iter().enumerate() {
            let mu = self.dm_u(u);
            let lu = self.dl_u(u);
            let num = cross(mu, l);
            let den = cross(lu, l);
            if den.abs() > 1e-14 {
                curv = curv.min((num / den).abs());
            }
            let d0 = p[0].hypot(p[1]);
            let d1 = p[0].hypot(p[1] - self.spec.a);
            if d0.min(d1) < eps {
                continue;
            }
            for dir in [l, [-l[0], -l[1]]] {
                dist = dist.min(self.ray_to_box(p, dir));
                for (k, seg) in poly.windows(2).enumerate() {
                    if k + 3 > j && k < j + 3 {
                        continue;
                    }
                    if let Some(t) = ray_segment(p, dir, seg[0], seg[1]) {
                        dist = dist.min(t);
                    }
                }
            }
        }
        0.4 * dist.min(curv)
    }

    fn ray_to_box(&self, p: [f64; 2], d: [f64; 2]) -> f64 {
        let s = &self.spec;
        let mut t = f64::INFINITY;
        if d[0] < 0.0 {
            t = t.min(-p[0] / d[0]);
        }
        if d[0] > 0.0 {
            t = t.min((s.width - p[0]) / d[0]);
        }
        if d[1] < 0.0 {
            t = t.min((-s.a2_len - p[1]) / d[1]);
        }
        if d[1] > 0.0 {
            t = t.min((s.a1 - p[1]) / d[1]);
        }
        t
    }

    // ---- tube coordinates ----

    /// Solve x = m(u) + λ𝔩(u); `None` when x is not on a transversal line
    /// with u ∈ [0, 𝔞] and |λ| < 2𝔟₀.
    pub fn tube_coords(&self, x: [f64; 2]) -> Option<TubePoint> {
        let reach = 2.0 * self.b0;
        let mut best: Option<(f64, f64, f64)> = None;
        for &(u, p, l) in &self.samples {
            let r = [x[0] - p[0], x[1] - p[1]];
            let lam = r[0] * l[0] + r[1] * l[1];
            if lam.abs() > reach + self.spec.a / 512.0 {
                continue;
            }
            let off = cross(r, l).abs();
            if best.map_or(true, |b| off < b.2) {
                best = Some((u, lam, off));
            }
        }
        let (mut u, mut lam, off) = best?;
        if off > 4.0 * self.spec.a / 1024.0 * (1.0 + self.profile.eval(u).1.abs()) {
            return None;
        }
        for _ in 0..40 {
            let p = self.point_u(u);
            let l = self.l_field_u(u);
            let f = [p[0] + lam * l[0] - x[0], p[1] + lam * l[1] - x[1]];
            let mu = self.dm_u(u);
            let lu = self.dl_u(u);
            let j = Matrix2::new(mu[0] + lam * lu[0], l[0], mu[1] + lam * lu[1], l[1]);
            let step = j.lu().solve(&Vector2::new(f[0], f[1]))?;
            u -= step[0];
            lam -= step[1];
            if step.norm() < 1e-15 * (1.0 + self.spec.a) {
                break;
            }
        }
        let a = self.spec.a;
        let tol = 1e-12 * a;
        if u < -tol || u > a + tol || lam.abs() >= reach {
            return None;
        }
        let u = u.clamp(0.0, a);
        Some(TubePoint { u, omega: self.omega_of_u(u), lambda: lam })
    }

    fn check_tube(&self, s: &dyn Displacement) -> Result<()> {
        let sup = s.sup_abs();
        if sup >= self.tube_limit {
            return Err(Error::TubeViolation { max_abs: sup, limit: self.tube_limit });
        }
        Ok(())
    }

    fn forward_at(&self, x: [f64; 2], tp: TubePoint, s: &dyn Displacement) -> [f64; 2] {
        let p = self.point_u(tp.u);
        let l = self.l_field_u(tp.u);
        let shift = self.cutoff(tp.lambda) * s.eval(tp.omega).0;
        if shift == 0.0 {
            return x;
        }
        let eta = tp.lambda + shift;
        [p[0] + eta * l[0], p[1] + eta * l[1]]
    }

    /// y = m(ω) + (λ + χ(λ)𝔰(ω))𝔩(ω) inside the χ-support, y = x elsewhere.
    pub fn hanzawa_forward(&self, x: [f64; 2], s: &dyn Displacement) -> Result<[f64; 2]> {
        self.check_tube(s)?;
        Ok(match self.tube_coords(x) {
            Some(tp) if tp.lambda.abs() < self.support() => self.forward_at(x, tp, s),
            _ => x,
        })
    }

    pub fn hanzawa_inverse(&self, y: [f64; 2], s: &dyn Displacement) -> Result<[f64; 2]> {
        self.check_tube(s)?;
        let Some(tp) = self.tube_coords(y) else { return Ok(y) };
        let sv = s.eval(tp.omega).0;
        let eta = tp.lambda;
        let w = self.support();
        if eta.abs() >= w + sv.abs() {
            return Ok(y);
        }
        // λ ↦ λ + χ(λ)𝔰 is increasing; bracket then Newton-polish
        let f = |lam: f64| lam + self.cutoff(lam) * sv - eta;
        let (mut lo, mut hi) = (-w - sv.abs() - 1e-12, w + sv.abs() + 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 * (1.0 + w) {
                break;
            }
        }
        let mut lam = 0.5 * (lo + hi);
        for _ in 0..3 {
            let d = 1.0 + self.cutoff_deriv(lam) * sv;
            lam -= f(lam) / d;
        }
        if lam.abs() >= w {
            return Ok(y);
        }
        let p = self.point_u(tp.u);
        let l = self.l_field_u(tp.u);
        Ok([p[0] + lam * l[0], p[1] + lam * l[1]])
    }

    /// Columns ∂x/∂u, ∂x/∂λ and ∂y/∂u, ∂y/∂λ at a tube point.
    fn frames(&self, tp: TubePoint, s: &dyn Displacement) -> (Matrix2<f64>, Matrix2<f64>) {
        let (u, lam) = (tp.u, tp.lambda);
        let mu = self.dm_u(u);
        let l = self.l_field_u(u);
        let lu = self.dl_u(u);
        let (sv, sd) = s.eval(tp.omega);
        let chi = self.cutoff(lam);
        let eta = lam + chi * sv;
        let sigma = self.speed(u);
        let dx = Matrix2::new(mu[0] + lam * lu[0], l[0], mu[1] + lam * lu[1], l[1]);
        let gu = |i: usize| mu[i] + eta * lu[i] + chi * sd * sigma * l[i];
        let dl = 1.0 + self.cutoff_deriv(lam) * sv;
        let dy = Matrix2::new(gu(0), dl * l[0], gu(1), dl * l[1]);
        (dx, dy)
    }

    /// J_𝔰 = ∂y/∂x.
    pub fn jacobian(&self, x: [f64; 2], s: &dyn Displacement) -> Result<Matrix2<f64>> {
        self.check_tube(s)?;
        match self.tube_coords(x) {
            Some(tp) if tp.lambda.abs() < self.support() => {
                let (dx, dy) = self.frames(tp, s);
                let inv = dx.try_inverse().ok_or_else(|| Error::Geometry("degenerate tube chart".into()))?;
                Ok(dy * inv)
            }
            _ => Ok(Matrix2::identity()),
        }
    }

    /// [∂y/∂ω, ∂y/∂λ] on Γ (λ = 0) for prescribed 𝔰, ∂𝔰/∂ω.
    pub fn interface_frame(&self, omega: f64, s_val: f64, s_deriv: f64) -> Result<[[f64; 2]; 2]> {
        let u = self.u_of_omega(omega);
        let field = FnDisplacement { f: |_| (s_val, s_deriv), sup: s_val.abs() };
        self.check_tube(&field)?;
        let (_, dy) = self.frames(TubePoint { u, omega, lambda: 0.0 }, &field);
        let sigma = self.speed(u);
        Ok([[dy[(0, 0)] / sigma, dy[(1, 0)] / sigma], [dy[(0, 1)], dy[(1, 1)]]])
    }

    /// (𝒮, 𝒮₁) = (|∇_𝔰λ|², ⟨∇_𝔰ω, ∇_𝔰λ⟩) on Γ (λ = 0) for prescribed 𝔰, ∂𝔰/∂ω.
    pub fn metric_coeffs(&self, omega: f64, s_val: f64, s_deriv: f64) -> Result<(f64, f64)> {
        let u = self.u_of_omega(omega);
        let field = FnDisplacement { f: |_| (s_val, s_deriv), sup: s_val.abs() };
        self.check_tube(&field)?;
        let (_, dy) = self.frames(TubePoint { u, omega, lambda: 0.0 }, &field);
        let inv = dy.try_inverse().ok_or(Error::SingularSystem("Hanzawa Jacobian".into()))?;
        // rows of (∂y/∂(u,λ))⁻¹ are ∇_y u and ∇_y λ; ∇ω = σ∇u
        let sigma = self.speed(u);
        let gu = [inv[(0, 0)] * sigma, inv[(0, 1)] * sigma];
        let gl = [inv[(1, 0)], inv[(1, 1)]];
        Ok((gl[0] * gl[0] + gl[1] * gl[1], gu[0] * gl[0] + gu[1] * gl[1]))
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn ray_segment(p: [f64; 2], d: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<f64> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let den = cross(d, e);
    if den.abs() < 1e-15 {
        return None;
    }
    let w = [a[0] - p[0], a[1] - p[1]];
    let t = cross(w, e) / den;
    let v = cross(w, d) / den;
    (t > 1e-12 && (0.0..=1.0).contains(&v)).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_length_of_flat_profile_limit() {
        let c = InterfaceChart::new(&DomainSpec::default()).unwrap();
        for u in [0.0, 0.13, 0.5, 0.91, 1.0] {
            assert!((c.u_of_omega(c.omega_of_u(u)) - u).abs() < 1e-13);
        }
        assert!(c.length > 1.0 && c.length < 1.2);
    }

    #[test]
    fn cutoff_plateau() {
        let c = InterfaceChart::new(&DomainSpec::default()).unwrap();
        let w = c.eps1 * c.b0;
        assert_eq!(c.cutoff(0.0), 1.0);
        assert_eq!(c.cutoff(0.99 * w), 1.0);
        assert_eq!(c.cutoff(2.01 * w), 0.0);
        assert!(c.eps1 * c.b0 < c.spec.eps / 2.0);
    }

    #[test]
    fn spline_reproduces_cubic_interior() {
        let x: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let y: Vec<f64> = x.iter().map(|t| (3.0 * t).sin()).collect();
        let s = SplineDisplacement::new(x, y).unwrap();
        let (v, d) = s.eval(0.51);
        assert!((v - 1.53f64.sin()).abs() < 1e-5 && (d - 3.0 * 1.53f64.cos()).abs() < 1e-3);
    }
}
