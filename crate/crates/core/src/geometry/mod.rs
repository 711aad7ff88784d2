//! Initial configuration: the lens Ω₂ between the wall segment Γ₂ and the
//! interface Γ, the outer phase Ω₁, the transversal field, the cut-off, the
//! Hanzawa map and a graded triangulation.

mod chart;
mod mesh;

pub use chart::{
    Displacement, FnDisplacement, InterfaceChart, SplineDisplacement, TubePoint, ZeroDisplacement,
};
pub use mesh::{Mesh, MeshParams, Phase, Tag};
pub(crate) use mesh::signed_area as signed_area_of;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

/// Shape of the interface y₁ = g(y₂), y₂ ∈ [0, 𝔞].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// Sine bump for equal angles, cubic Hermite otherwise.
    Auto,
    Sine,
    Hermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Corner separation 𝔞: A₀ = (0,0), A₁ = (0,𝔞).
    pub a: f64,
    /// Upper end 𝔞₁ of the wall.
    pub a1: f64,
    /// Length 𝔞₂ of the wall below A₀.
    pub a2_len: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub eps: f64,
    /// Outer wall y₁ = width.
    pub width: f64,
    pub profile: ProfileKind,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            a: 1.0,
            a1: 1.5,
            a2_len: 0.5,
            delta0: PI / 6.0,
            delta1: PI / 6.0,
            eps: 0.08,
            width: 1.0,
            profile: ProfileKind::Auto,
        }
    }
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let fin = [self.a, self.a1, self.a2_len, self.delta0, self.delta1, self.eps, self.width];
        if fin.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite domain parameter".into()));
        }
        if !(self.a > 0.0 && self.a < self.a1) {
            return Err(Error::Geometry(format!("need 0 < a < a1, got a={}, a1={}", self.a, self.a1)));
        }
        if self.a2_len <= 0.0 {
            return Err(Error::Geometry(format!("a2_len must be positive, got {}", self.a2_len)));
        }
        for (name, d) in [("delta0", self.delta0), ("delta1", self.delta1)] {
            if !(d > 0.0 && d < FRAC_PI_4) {
                return Err(Error::Geometry(format!("{name} = {d} outside (0, π/4)")));
            }
        }
        let cap = ((self.a1 - self.a) / 6.0).min(self.a / 6.0).min(self.a2_len / 6.0);
        if !(self.eps > 0.0 && self.eps < cap) {
            return Err(Error::Geometry(format!("eps = {} must lie in (0, {cap}) strictly", self.eps)));
        }
        let prof = self.interface()?;
        let gmax = prof.max_height();
        if gmax + 3.0 * self.eps >= self.width {
            return Err(Error::Geometry(format!(
                "interface reaches y1 = {gmax:.4}, too close to the outer wall y1 = {}",
                self.width
            )));
        }
        Ok(())
    }

    pub fn interface(&self) -> Result<Profile> {
        let (t0, t1) = (self.delta0.tan(), self.delta1.tan());
        match self.profile {
            ProfileKind::Sine if (self.delta0 - self.delta1).abs() > 1e-15 => {
                Err(Error::Geometry("sine profile needs equal contact angles".into()))
            }
            ProfileKind::Sine => Ok(Profile::Sine { a: self.a, slope: t0 }),
            ProfileKind::Auto if (self.delta0 - self.delta1).abs() <= 1e-15 => {
                Ok(Profile::Sine { a: self.a, slope: t0 })
            }
            _ => Ok(Profile::Hermite { a: self.a, t0, t1 }),
        }
    }

    pub fn corners(&self) -> [[f64; 2]; 2] {
        [[0.0, 0.0], [0.0, self.a]]
    }
}

/// Interface y₁ = g(y₂); g(0) = g(𝔞) = 0, g′(0) = tan δ₀, g′(𝔞) = −tan δ₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Sine { a: f64, slope: f64 },
    Hermite { a: f64, t0: f64, t1: f64 },
}

impl Profile {
    pub fn a(&self) -> f64 {
        match *self {
            Profile::Sine { a, .. } | Profile::Hermite { a, .. } => a,
        }
    }

    /// (g, g′, g″) at y₂ = u.
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Sine { a, slope } => {
                let w = PI / a;
                let (s, c) = (w * u).sin_cos();
                (slope * s / w, slope * c, -slope * w * s)
            }
            Profile::Hermite { a, t0, t1 } => {
                let t = u / a;
                let g = a * (t0 * t * (1.0 - t) * (1.0 - t) + t1 * t * t * (1.0 - t));
                let g1 = t0 * (1.0 - t) * (1.0 - 3.0 * t) + t1 * (2.0 * t - 3.0 * t * t);
                let g2 = (t0 * (6.0 * t - 4.0) + t1 * (2.0 - 6.0 * t)) / a;
                (g, g1, g2)
            }
        }
    }

    pub fn max_height(&self) -> f64 {
        let n = 2000;
        (0..=n).map(|j| self.eval(self.a() * j as f64 / n as f64).0).fold(0.0, f64::max)
    }

    /// Contact angles with the wall from the endpoint slopes.
    pub fn contact_angles(&self) -> [f64; 2] {
        let a = self.a();
        [self.eval(0.0).1.atan(), (-self.eval(a).1).atan()]
    }
}

/// (ln|y|, arg y) — maps a corner with vertex at the origin onto a strip.
pub fn log_polar(y: [f64; 2]) -> Result<[f64; 2]> {
    let r = y[0].hypot(y[1]);
    if r == 0.0 {
        return Err(Error::Geometry("log-polar map is undefined at the origin".into()));
    }
    Ok([r.ln(), y[1].atan2(y[0])])
}

pub fn log_polar_inverse(x: [f64; 2]) -> [f64; 2] {
    let r = x[0].exp();
    [r * x[1].cos(), r * x[1].sin()]
}

/// Discrete sup of r^{−s}|v| with r the distance to the nearer corner; points
/// at a corner are skipped.
pub fn weighted_sup_norm(points: &[[f64; 2]], values: &[f64], s: f64, corners: [[f64; 2]; 2]) -> f64 {
    points
        .iter()
        .zip(values)
        .filter_map(|(p, v)| {
            let r = corners.iter().map(|c| (p[0] - c[0]).hypot(p[1] - c[1])).fold(f64::INFINITY, f64::min);
            (r > 0.0).then(|| v.abs() / r.powf(s))
        })
        .fold(0.0, f64::max)
}
