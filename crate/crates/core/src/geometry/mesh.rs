use super::{DomainSpec, InterfaceChart};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    One,
    Two,
}

/// Boundary tags; a node may carry several.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tag;

impl Tag {
    pub const GAMMA: u8 = 1;
    pub const GAMMA1: u8 = 2;
    pub const GAMMA2: u8 = 4;
    pub const CORNER0: u8 = 8;
    pub const CORNER1: u8 = 16;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    /// Rows across the lens, y₂ ∈ [0, 𝔞].
    pub rows: usize,
    /// Columns inside Ω₂.
    pub cols2: usize,
    /// Columns from Γ to the outer wall.
    pub cols1: usize,
    /// Grading exponent toward the corners and the interface.
    pub grading: f64,
    /// Each level doubles every count.
    pub level: u32,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams { rows: 32, cols2: 6, cols1: 24, grading: 2.0, level: 0 }
    }
}

impl MeshParams {
    pub fn refined(self, by: u32) -> Self {
        MeshParams { level: self.level + by, ..self }
    }
    fn scaled(&self, n: usize) -> usize {
        n << self.level
    }
}

/// Conforming P1 triangulation of Ω₁ ∪ Ω₂ with shared interface nodes.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub tris: Vec<[usize; 3]>,
    pub phase: Vec<Phase>,
    pub tags: Vec<u8>,
    /// Interface nodes ordered from A₀ to A₁ (corners included).
    pub interface: Vec<usize>,
    /// Profile parameter u = y₂ of each interface node.
    pub interface_u: Vec<f64>,
    pub interface_omega: Vec<f64>,
    pub params: MeshParams,
}

/// Symmetric grading of [0,1] toward both ends.
fn graded_sym(t: f64, g: f64) -> f64 {
    if t <= 0.5 {
        0.5 * (2.0 * t).powf(g)
    } else {
        1.0 - 0.5 * (2.0 * (1.0 - t)).powf(g)
    }
}

enum Row {
    /// y₂ ∉ (0, 𝔞): nodes from the wall to the outer boundary.
    Plain(Vec<usize>),
    /// Ω₂ nodes (wall … Γ) and Ω₁ nodes (after Γ … outer wall).
    Split(Vec<usize>, Vec<usize>),
}

impl Row {
    /// Nodes of the Ω₁ strip, starting on the wall (plain) or on Γ (split).
    fn outer(&self) -> Vec<usize> {
        match self {
            Row::Plain(v) => v.clone(),
            Row::Split(two, one) => std::iter::once(*two.last().unwrap()).chain(one.iter().copied()).collect(),
        }
    }
}

impl Mesh {
    pub fn build(chart: &InterfaceChart, mp: MeshParams) -> Result<Mesh> {
        if mp.rows < 4 || mp.cols1 < 2 || mp.cols2 < 1 || mp.grading < 1.0 {
            return Err(Error::InvalidParams("mesh needs rows ≥ 4, cols ≥ 2, grading ≥ 1".into()));
        }
        let spec: &DomainSpec = &chart.spec;
        let g = mp.grading;
        let rows = mp.scaled(mp.rows);
        let (n2, n1) = (mp.scaled(mp.cols2), mp.scaled(mp.cols1));
        let below = ((rows as f64 * spec.a2_len / spec.a).ceil() as usize).max(2);
        let above = ((rows as f64 * (spec.a1 - spec.a) / spec.a).ceil() as usize).max(2);

        let mut ys: Vec<f64> = (0..=below).rev().map(|j| -spec.a2_len * (j as f64 / below as f64).powf(g)).collect();
        ys.extend((1..rows).map(|j| spec.a * graded_sym(j as f64 / rows as f64, g)));
        ys.extend((0..=above).map(|j| spec.a + (spec.a1 - spec.a) * (j as f64 / above as f64).powf(g)));

        let mut mesh = Mesh {
            nodes: Vec::new(),
            tris: Vec::new(),
            phase: Vec::new(),
            tags: Vec::new(),
            interface: Vec::new(),
            interface_u: Vec::new(),
            interface_omega: Vec::new(),
            params: mp,
        };
        let top = ys.len() - 1;
        let mut rows_v = Vec::with_capacity(ys.len());
        for (ri, &y) in ys.iter().enumerate() {
            let edge = if ri == 0 || ri == top { Tag::GAMMA1 } else { 0 };
            let inside = y > 0.0 && y < spec.a;
            if inside {
                let gy = chart.profile.eval(y).0;
                let two: Vec<usize> = (0..=n2)
                    .map(|i| {
                        let mut tag = if i == 0 { Tag::GAMMA2 } else { 0 };
                        if i == n2 {
                            tag |= Tag::GAMMA;
                        }
                        mesh.push([gy * i as f64 / n2 as f64, y], tag)
                    })
                    .collect();
                let one: Vec<usize> = (1..=n1)
                    .map(|j| {
                        let x = gy + (spec.width - gy) * (j as f64 / n1 as f64).powf(g);
                        mesh.push([x, y], if j == n1 { Tag::GAMMA1 } else { 0 })
                    })
                    .collect();
                mesh.interface.push(*two.last().unwrap());
                mesh.interface_u.push(y);
                rows_v.push(Row::Split(two, one));
            } else {
                let corner = if y == 0.0 {
                    Tag::CORNER0
                } else if y == spec.a {
                    Tag::CORNER1
                } else {
                    0
                };
                let v: Vec<usize> = (0..=n1)
                    .map(|j| {
                        let x = spec.width * (j as f64 / n1 as f64).powf(g);
                        let mut tag = edge;
                        if j == 0 || j == n1 {
                            tag |= Tag::GAMMA1;
                        }
                        if j == 0 && corner != 0 {
                            tag |= corner | Tag::GAMMA | Tag::GAMMA2;
                        }
                        mesh.push([x, y], tag)
                    })
                    .collect();
                if corner == Tag::CORNER0 {
                    mesh.interface.insert(0, v[0]);
                    mesh.interface_u.insert(0, 0.0);
                } else if corner == Tag::CORNER1 {
                    mesh.interface.push(v[0]);
                    mesh.interface_u.push(spec.a);
                }
                rows_v.push(Row::Plain(v));
            }
        }
        for w in rows_v.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            mesh.strip(&lo.outer(), &hi.outer(), Phase::One);
            match (lo, hi) {
                (Row::Split(a, _), Row::Split(b, _)) => mesh.strip(a, b, Phase::Two),
                (Row::Plain(a), Row::Split(b, _)) => mesh.fan(a[0], b, Phase::Two),
                (Row::Split(a, _), Row::Plain(b)) => mesh.fan(b[0], a, Phase::Two),
                _ => {}
            }
        }
        mesh.interface_omega = mesh.interface_u.iter().map(|&u| chart.omega_of_u(u)).collect();
        if let Some(t) = mesh.tris.iter().position(|t| mesh.signed_area(t) <= 0.0) {
            return Err(Error::Geometry(format!("degenerate triangle {t}")));
        }
        Ok(mesh)
    }

    fn push(&mut self, p: [f64; 2], tag: u8) -> usize {
        self.nodes.push(p);
        self.tags.push(tag);
        self.nodes.len() - 1
    }

    fn add_tri(&mut self, mut t: [usize; 3], ph: Phase) {
        if self.signed_area(&t) < 0.0 {
            t.swap(1, 2);
        }
        self.tris.push(t);
        self.phase.push(ph);
    }

    fn strip(&mut self, lo: &[usize], hi: &[usize], ph: Phase) {
        for i in 0..lo.len() - 1 {
            self.add_tri([lo[i], lo[i + 1], hi[i + 1]], ph);
            self.add_tri([lo[i], hi[i + 1], hi[i]], ph);
        }
    }

    fn fan(&mut self, apex: usize, row: &[usize], ph: Phase) {
        for i in 0..row.len() - 1 {
            self.add_tri([apex, row[i], row[i + 1]], ph);
        }
    }

    pub fn signed_area(&self, t: &[usize; 3]) -> f64 {
        signed_area(&self.nodes, t)
    }

    pub fn has(&self, node: usize, tag: u8) -> bool {
        self.tags[node] & tag != 0
    }

    /// Node carries phase-i values (interface nodes carry both).
    pub fn node_phases(&self) -> Vec<[bool; 2]> {
        let mut out = vec![[false; 2]; self.nodes.len()];
        for (t, ph) in self.tris.iter().zip(&self.phase) {
            let k = if *ph == Phase::One { 0 } else { 1 };
            for &v in t {
                out[v][k] = true;
            }
        }
        out
    }

    pub fn max_diameter(&self) -> f64 {
        self.tris
            .iter()
            .map(|t| {
                let p = |i: usize| self.nodes[t[i]];
                let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
                d(p(0), p(1)).max(d(p(1), p(2))).max(d(p(0), p(2)))
            })
            .fold(0.0, f64::max)
    }

    /// Contact angles at A₀, A₁ measured on the given node positions: the
    /// angles of the first two interface chords, extrapolated linearly in
    /// chord length to zero.
    pub fn contact_angles(&self, nodes: &[[f64; 2]]) -> [f64; 2] {
        let n = self.interface.len();
        let at = |c: usize, k: [usize; 2], down: bool| {
            let a = nodes[self.interface[c]];
            let chord = |j: usize| {
                let p = nodes[self.interface[j]];
                let (dx, dy) = (p[0] - a[0], if down { a[1] - p[1] } else { p[1] - a[1] });
                (dx.atan2(dy), dx.hypot(dy))
            };
            let ((a1, r1), (a2, r2)) = (chord(k[0]), chord(k[1]));
            (a1 * r2 - a2 * r1) / (r2 - r1)
        };
        [at(0, [1, 2], false), at(n - 1, [n - 2, n - 3], true)]
    }

    /// Plain-text export: a header, then one record per line.
    pub fn export(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# muskat mesh v1");
        let _ = writeln!(s, "# node records: index x y tags (1=Γ 2=Γ₁ 4=Γ₂ 8=A₀ 16=A₁)");
        let _ = writeln!(s, "# triangle records: index n0 n1 n2 phase");
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for (i, (p, t)) in self.nodes.iter().zip(&self.tags).enumerate() {
            let _ = writeln!(s, "{i} {:.17e} {:.17e} {t}", p[0], p[1]);
        }
        let _ = writeln!(s, "triangles {}", self.tris.len());
        for (i, (t, ph)) in self.tris.iter().zip(&self.phase).enumerate() {
            let _ = writeln!(s, "{i} {} {} {} {}", t[0], t[1], t[2], if *ph == Phase::One { 1 } else { 2 });
        }
        s
    }
}

pub(crate) fn signed_area(nodes: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}
