//! P1 finite elements for the two-phase transmission problem
//!
//! Δ Wᵢ = φ₀,ᵢ in Ωᵢ,  W₁ − W₂ = φ₁ and k₁∂ₙW₁ = k₂∂ₙW₂ + φ₂ on Γ,
//! W₁ = φ₃ on Γ₁,  W₂ = φ₄ on Γ₂,
//!
//! with n pointing into Ω₁. The value jump is carried by a discrete lifting
//! in Ω₁; the flux jump enters weakly.

mod diagnostics;
mod linalg;

pub use diagnostics::*;
pub use linalg::{pcg, rcm, solve_spd, SolveMethod, SolveReport};

use crate::geometry::{DomainSpec, Mesh, Phase, Tag};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

pub type ScalarFn = Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
/// φ₂(x, n) with n the unit normal into Ω₁ of the boundary edge.
pub type FluxFn = Box<dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync>;

pub struct TransmissionProblem {
    pub k1: f64,
    pub k2: f64,
    /// φ₀,₁, φ₀,₂.
    pub source: [ScalarFn; 2],
    /// φ₁ = W₁ − W₂ on Γ.
    pub jump: ScalarFn,
    /// φ₂ = k₁∂ₙW₁ − k₂∂ₙW₂ on Γ.
    pub flux: FluxFn,
    /// φ₃ on Γ₁, φ₄ on Γ₂.
    pub dirichlet: [ScalarFn; 2],
}

fn zero() -> ScalarFn {
    Box::new(|_| 0.0)
}

impl TransmissionProblem {
    /// All data zero.
    pub fn homogeneous(k1: f64, k2: f64) -> Self {
        TransmissionProblem {
            k1,
            k2,
            source: [zero(), zero()],
            jump: zero(),
            flux: Box::new(|_, _| 0.0),
            dirichlet: [zero(), zero()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k2 > 0.0 && self.k1.is_finite() && self.k2.is_finite()) {
            return Err(Error::InvalidParams(format!("conductivities must be positive, got k1={}, k2={}", self.k1, self.k2)));
        }
        Ok(())
    }

    fn k(&self, ph: Phase) -> f64 {
        match ph {
            Phase::One => self.k1,
            Phase::Two => self.k2,
        }
    }
}

/// Values and one-sided derivatives on Γ, ordered from A₀ to A₁.
/// Index 0 of each pair is phase 1, index 1 phase 2.
#[derive(Debug, Clone, Serialize)]
pub struct InterfaceTrace {
    pub omega: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub normal: Vec<[f64; 2]>,
    pub tangent: Vec<[f64; 2]>,
    pub value: Vec<[f64; 2]>,
    pub grad: Vec<[[f64; 2]; 2]>,
    pub dn: Vec<[f64; 2]>,
    pub dtau: Vec<[f64; 2]>,
}

impl InterfaceTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance of each trace point to corner `c` (0 = A₀, 1 = A₁).
    pub fn radii(&self, corner: [f64; 2]) -> Vec<f64> {
        self.points.iter().map(|p| (p[0] - corner[0]).hypot(p[1] - corner[1])).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PressureField {
    pub mesh: Arc<Mesh>,
    /// Node positions the problem was solved on.
    pub nodes: Vec<[f64; 2]>,
    /// Per-node [W₁, W₂]; NaN where the node does not touch that phase.
    pub values: Vec<[f64; 2]>,
    pub trace: InterfaceTrace,
    pub k: [f64; 2],
    pub corners: [[f64; 2]; 2],
    pub report: SolveReport,
}

impl PressureField {
    pub fn k_ratio(&self) -> f64 {
        self.k[1] / self.k[0]
    }
}

/// P1 shape gradients and area of a triangle.
fn p1_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    (g, area)
}

/// Degree-5 rule on the reference triangle: (ξ, η, weight), weights sum to 1.
pub(crate) const TRI7: [(f64, f64, f64); 7] = {
    const A1: f64 = 0.059715871789770;
    const B1: f64 = 0.470142064105115;
    const W1: f64 = 0.132394152788506;
    const A2: f64 = 0.797426985353087;
    const B2: f64 = 0.101286507323456;
    const W2: f64 = 0.125939180544827;
    [
        (1.0 / 3.0, 1.0 / 3.0, 0.225),
        (A1, B1, W1),
        (B1, A1, W1),
        (B1, B1, W1),
        (A2, B2, W2),
        (B2, A2, W2),
        (B2, B2, W2),
    ]
};

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Unit normal into Ω₁ of the interface edge a → b (a nearer A₀).
pub(crate) fn edge_normal(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l = dx.hypot(dy);
    [dy / l, -dx / l]
}

pub fn solve_transmission(problem: &TransmissionProblem, mesh: &Arc<Mesh>) -> Result<PressureField> {
    solve_transmission_at(problem, mesh, &mesh.nodes)
}

/// Solve on the mesh connectivity with displaced node positions.
pub fn solve_transmission_at(problem: &TransmissionProblem, mesh: &Arc<Mesh>, nodes: &[[f64; 2]]) -> Result<PressureField> {
    problem.validate()?;
    let n = mesh.nodes.len();
    if nodes.len() != n {
        return Err(Error::InvalidParams(format!("{} node positions for a mesh of {n}", nodes.len())));
    }
    for (t, tri) in mesh.tris.iter().enumerate() {
        if crate::geometry::signed_area_of(nodes, tri) <= 0.0 {
            return Err(Error::Geometry(format!("triangle {t} inverted by the node displacement")));
        }
    }
    let is_iface: Vec<bool> = (0..n).map(|v| mesh.has(v, Tag::GAMMA)).collect();
    // lifting of the value jump, used in Ω₁ elements only
    let lift: Vec<f64> = (0..n).map(|v| if is_iface[v] { (problem.jump)(nodes[v]) } else { 0.0 }).collect();
    // Dirichlet value of the continuous unknown V
    let fixed: Vec<Option<f64>> = (0..n)
        .map(|v| {
            if mesh.has(v, Tag::GAMMA2) {
                Some((problem.dirichlet[1])(nodes[v]))
            } else if mesh.has(v, Tag::GAMMA1) {
                Some((problem.dirichlet[0])(nodes[v]) - lift[v])
            } else {
                None
            }
        })
        .collect();
    let mut dof = vec![usize::MAX; n];
    let mut nd = 0;
    for v in 0..n {
        if fixed[v].is_none() {
            dof[v] = nd;
            nd += 1;
        }
    }
    let mut trip = Vec::with_capacity(9 * mesh.tris.len());
    let mut rhs = vec![0.0; nd];
    for (tri, &ph) in mesh.tris.iter().zip(&mesh.phase) {
        let p = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
        let (g, area) = p1_gradients(p);
        let kk = problem.k(ph);
        let known: [f64; 3] = std::array::from_fn(|b| {
            let v = tri[b];
            fixed[v].unwrap_or(0.0) + if ph == Phase::One { lift[v] } else { 0.0 }
        });
        let src = &problem.source[if ph == Phase::One { 0 } else { 1 }];
        let mut load = [0.0; 3];
        for &(xi, eta, w) in &TRI7 {
            let lam = [1.0 - xi - eta, xi, eta];
            let x = [
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ];
            let f = src(x);
            for a in 0..3 {
                load[a] += w * area * f * lam[a];
            }
        }
        for a in 0..3 {
            let ia = dof[tri[a]];
            if ia == usize::MAX {
                continue;
            }
            rhs[ia] -= kk * load[a];
            for b in 0..3 {
                let kab = kk * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                let ib = dof[tri[b]];
                if ib == usize::MAX {
                    rhs[ia] -= kab * known[b];
                } else {
                    trip.push((ia, ib, kab));
                    rhs[ia] -= kab * if ph == Phase::One { lift[tri[b]] } else { 0.0 };
                }
            }
        }
    }
    // −∫_Γ φ₂ v over interface edges
    for w in mesh.interface.windows(2) {
        let (a, b) = (nodes[w[0]], nodes[w[1]]);
        let nrm = edge_normal(a, b);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        for &(t, wt) in &GAUSS3 {
            let s = 0.5 * (t + 1.0);
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let f = (problem.flux)(x, nrm) * 0.5 * wt * len;
            for (v, phi) in [(w[0], 1.0 - s), (w[1], s)] {
                if dof[v] != usize::MAX {
                    rhs[dof[v]] -= f * phi;
                }
            }
        }
    }
    let (sol, report) = solve_spd(nd, &trip, &rhs).map_err(|e| match e {
        Error::NotConverged { .. } => e,
        other => Error::SingularSystem(format!("{other} ({} dofs, {} triangles)", nd, mesh.tris.len())),
    })?;
    let v_all: Vec<f64> = (0..n).map(|v| fixed[v].unwrap_or_else(|| sol[dof[v]])).collect();
    let phases = mesh.node_phases();
    let values: Vec<[f64; 2]> = (0..n)
        .map(|v| {
            let w1 = if phases[v][0] { v_all[v] + lift[v] } else { f64::NAN };
            let w2 = if phases[v][1] { v_all[v] } else { f64::NAN };
            [w1, w2]
        })
        .collect();
    if values.iter().flatten().any(|x| x.is_infinite()) {
        return Err(Error::SingularSystem("non-finite nodal values".into()));
    }
    let trace = recover_trace(mesh, nodes, &values);
    Ok(PressureField {
        mesh: Arc::clone(mesh),
        nodes: nodes.to_vec(),
        values,
        trace,
        k: [problem.k1, problem.k2],
        corners: [nodes[mesh.interface[0]], nodes[*mesh.interface.last().unwrap()]],
        report,
    })
}

/// Unit tangents along the interface polyline from a three-point
/// nonuniform derivative in chord length (one-sided at the ends).
fn polyline_tangents(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let m = pts.len();
    let mut s = vec![0.0; m];
    for i in 1..m {
        s[i] = s[i - 1] + (pts[i][0] - pts[i - 1][0]).hypot(pts[i][1] - pts[i - 1][1]);
    }
    let deriv = |i: usize, j: [usize; 3]| -> [f64; 2] {
        // Lagrange derivative through three nodes at s[i]
        let (a, b, c) = (s[j[0]], s[j[1]], s[j[2]]);
        let x = s[i];
        let w = [
            ((x - b) + (x - c)) / ((a - b) * (a - c)),
            ((x - a) + (x - c)) / ((b - a) * (b - c)),
            ((x - a) + (x - b)) / ((c - a) * (c - b)),
        ];
        let d = [0, 1].map(|k| w[0] * pts[j[0]][k] + w[1] * pts[j[1]][k] + w[2] * pts[j[2]][k]);
        let l = d[0].hypot(d[1]);
        [d[0] / l, d[1] / l]
    };
    (0..m)
        .map(|i| {
            if m < 3 {
                let (a, b) = (pts[0], pts[m - 1]);
                let l = (b[0] - a[0]).hypot(b[1] - a[1]);
                [(b[0] - a[0]) / l, (b[1] - a[1]) / l]
            } else if i == 0 {
                deriv(0, [0, 1, 2])
            } else if i == m - 1 {
                deriv(i, [m - 3, m - 2, m - 1])
            } else {
                deriv(i, [i - 1, i, i + 1])
            }
        })
        .collect()
}

/// Least-squares gradient at `centre` from phase-restricted nodal values:
/// quadratic fit with the centre value fixed, linear if the patch is small.
fn patch_gradient(centre: [f64; 2], c_val: f64, pts: &[([f64; 2], f64)]) -> [f64; 2] {
    let h = pts.iter().map(|(p, _)| (p[0] - centre[0]).hypot(p[1] - centre[1])).fold(0.0, f64::max).max(1e-300);
    let quad = pts.len() >= 7;
    let ncol = if quad { 5 } else { 2 };
    let a = DMatrix::from_fn(pts.len(), ncol, |r, c| {
        let dx = (pts[r].0[0] - centre[0]) / h;
        let dy = (pts[r].0[1] - centre[1]) / h;
        [dx, dy, dx * dx, dx * dy, dy * dy][c]
    });
    let b = DVector::from_fn(pts.len(), |r, _| pts[r].1 - c_val);
    let svd = a.svd(true, true);
    match svd.solve(&b, 1e-13) {
        Ok(c) => [c[0] / h, c[1] / h],
        Err(_) => [f64::NAN, f64::NAN],
    }
}

fn recover_trace(mesh: &Mesh, nodes: &[[f64; 2]], values: &[[f64; 2]]) -> InterfaceTrace {
    let n = nodes.len();
    // node → elements, per phase
    let mut elems: Vec<[Vec<usize>; 2]> = vec![[Vec::new(), Vec::new()]; n];
    for (e, (t, ph)) in mesh.tris.iter().zip(&mesh.phase).enumerate() {
        let k = if *ph == Phase::One { 0 } else { 1 };
        for &v in t {
            elems[v][k].push(e);
        }
    }
    let pts: Vec<[f64; 2]> = mesh.interface.iter().map(|&v| nodes[v]).collect();
    let tangent = polyline_tangents(&pts);
    let normal: Vec<[f64; 2]> = tangent.iter().map(|t| [t[1], -t[0]]).collect();
    let mut grad = Vec::with_capacity(pts.len());
    for &v in &mesh.interface {
        let g: [[f64; 2]; 2] = std::array::from_fn(|k| {
            // two rings of same-phase elements
            let mut ring: Vec<usize> = vec![v];
            for _ in 0..2 {
                let mut next = ring.clone();
                for &w in &ring {
                    for &e in &elems[w][k] {
                        next.extend_from_slice(&mesh.tris[e]);
                    }
                }
                next.sort_unstable();
                next.dedup();
                ring = next;
            }
            let patch: Vec<([f64; 2], f64)> =
                ring.iter().filter(|&&w| w != v).map(|&w| (nodes[w], values[w][k])).collect();
            patch_gradient(nodes[v], values[v][k], &patch)
        });
        grad.push(g);
    }
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let dn = grad.iter().zip(&normal).map(|(g, nn)| [dot(g[0], *nn), dot(g[1], *nn)]).collect();
    let dtau = grad.iter().zip(&tangent).map(|(g, t)| [dot(g[0], *t), dot(g[1], *t)]).collect();
    InterfaceTrace {
        omega: mesh.interface_omega.clone(),
        points: pts,
        normal,
        tangent,
        value: mesh.interface.iter().map(|&v| values[v]).collect(),
        grad,
        dn,
        dtau,
    }
}

/// Dirichlet data p₁, p₂ = cᵢ(r₀r₁)^{s*}, positive on the open boundary
/// and vanishing at the corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct PressureData {
    pub c1: f64,
    pub c2: f64,
    pub s_star: f64,
}

impl Default for PressureData {
    fn default() -> Self {
        PressureData { c1: 1e-4, c2: 1.0, s_star: 3.5 }
    }
}

impl PressureData {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::InvalidParams(format!("pressure amplitudes must be positive, got c1={}, c2={}", self.c1, self.c2)));
        }
        if !(self.s_star > 0.0 && self.s_star.is_finite()) {
            return Err(Error::InvalidParams(format!("s_star must be positive, got {}", self.s_star)));
        }
        Ok(())
    }

    /// (p₁, p₂) at x for corner separation 𝔞.
    pub fn eval(&self, x: [f64; 2], a: f64) -> [f64; 2] {
        let w = (x[0].hypot(x[1]) * x[0].hypot(x[1] - a)).powf(self.s_star);
        [self.c1 * w, self.c2 * w]
    }
}

/// The zero-source, zero-jump instance with pressure data on Γ₁, Γ₂.
pub fn solve_initial_pressure(spec: &DomainSpec, mesh: &Arc<Mesh>, data: PressureData, k1: f64, k2: f64) -> Result<PressureField> {
    data.validate()?;
    let a = spec.a;
    let mut prob = TransmissionProblem::homogeneous(k1, k2);
    prob.dirichlet = [Box::new(move |x| data.eval(x, a)[0]), Box::new(move |x| data.eval(x, a)[1])];
    solve_transmission(&prob, mesh)
}

/// Constant pressures: p₁ ≡ c on Γ₁, p₂ ≡ c on Γ₂.
pub fn constant_problem(k1: f64, k2: f64, c: f64) -> TransmissionProblem {
    let mut prob = TransmissionProblem::homogeneous(k1, k2);
    prob.dirichlet = [Box::new(move |_| c), Box::new(move |_| c)];
    prob
}
