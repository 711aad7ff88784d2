//! Explicit time stepping of the interface displacement 𝔰(ω, t).
//!
//! Each velocity evaluation maps the reference mesh through the Hanzawa
//! transform of the current 𝔰, re-solves the pressure problem with data
//! p∘e_𝔰, and applies 𝔰_t = −k₁[𝒮 ∂U₁/∂λ + 𝒮₁ ∂U₁/∂ω] on Γ.

use crate::elliptic::{
    corner_exponent_fit, solve_transmission_at, CornerFit, PressureData, PressureField, TransmissionProblem,
};
use crate::geometry::{Displacement, InterfaceChart, Mesh, SplineDisplacement, TubePoint};
use crate::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

pub type Pressure = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Scheme {
    Euler,
    Heun,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterfaceState {
    pub t: f64,
    pub s_values: Vec<f64>,
    pub s_deriv: Vec<f64>,
    /// Velocity evaluated at this state (k₁ branch).
    pub s_t: Vec<f64>,
    /// Accepted sup|𝔰| minus max|𝔰|.
    pub tube_margin: f64,
    pub contact_angles: [f64; 2],
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepDiagnostics {
    /// sup over interior ω of |k₁-branch − k₂-branch| of 𝔰_t.
    pub branch_residual: f64,
    /// branch_residual / sup|𝔰_t| over the same points.
    pub branch_relative: f64,
    pub corner_velocity: (f64, f64),
    pub dt_used: f64,
    /// max|one step − two half steps|.
    pub error_estimate: f64,
    pub roughness: f64,
    /// −max ∂ₙ𝒰₁ over interior interface nodes at the new state.
    pub h4_margin: f64,
    pub solver_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Velocity {
    pub k1_branch: Vec<f64>,
    pub k2_branch: Vec<f64>,
    pub branch_residual: f64,
    pub branch_relative: f64,
}

/// Both branches of 𝔰_t on Γ from a solved field, for the displacement
/// values and slopes the field was solved with.
pub fn kinematic_velocity(field: &PressureField, chart: &InterfaceChart, s: &[f64], s_deriv: &[f64]) -> Result<Velocity> {
    let tr = &field.trace;
    let m = tr.len();
    if s.len() != m || s_deriv.len() != m {
        return Err(Error::InvalidParams(format!("{} displacement values for {m} interface nodes", s.len())));
    }
    let mut b = [vec![0.0; m], vec![0.0; m]];
    for i in 0..m {
        let [e_w, e_l] = chart.interface_frame(tr.omega[i], s[i], s_deriv[i])?;
        // rows of [e_ω e_λ]⁻¹ are ∇ω and ∇λ
        let det = e_w[0] * e_l[1] - e_l[0] * e_w[1];
        let gw = [e_l[1] / det, -e_l[0] / det];
        let gl = [-e_w[1] / det, e_w[0] / det];
        let metric = gl[0] * gl[0] + gl[1] * gl[1];
        let metric1 = gw[0] * gl[0] + gw[1] * gl[1];
        for (k, kk) in [field.k[0], field.k[1]].into_iter().enumerate() {
            let g = tr.grad[i][k];
            let u_l = g[0] * e_l[0] + g[1] * e_l[1];
            let u_w = g[0] * e_w[0] + g[1] * e_w[1];
            b[k][i] = -kk * (metric * u_l + metric1 * u_w);
        }
    }
    if b.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DerivativeUnresolved { spread: f64::INFINITY });
    }
    let inner = 1..m.saturating_sub(1);
    let res = inner.clone().map(|i| (b[0][i] - b[1][i]).abs()).fold(0.0, f64::max);
    let sup = inner.map(|i| b[0][i].abs()).fold(0.0, f64::max);
    let [k1_branch, k2_branch] = b;
    Ok(Velocity { k1_branch, k2_branch, branch_residual: res, branch_relative: if sup > 0.0 { res / sup } else { 0.0 } })
}

/// 𝔰_t(·, 0) from the initial pressure.
pub fn initial_velocity(field: &PressureField, chart: &InterfaceChart) -> Result<Velocity> {
    let z = vec![0.0; field.trace.len()];
    kinematic_velocity(field, chart, &z, &z)
}

/// ρ(ω, t) = t·𝔰_t(ω, 0).
pub fn rho(t: f64, v0: f64) -> f64 {
    t * v0
}

pub fn rho_profile(t: f64, v0: &[f64]) -> Vec<f64> {
    v0.iter().map(|&v| rho(t, v)).collect()
}

/// max|Δ²𝔰| summed over the grid relative to the summed |Δ𝔰|: O(h) for
/// smooth profiles, O(1) for grid-scale oscillation.
pub fn roughness(s: &[f64]) -> f64 {
    let tv: f64 = s.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let curv: f64 = s.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).sum();
    if tv > 0.0 { curv / tv } else { 0.0 }
}

pub const ROUGHNESS_FLAG: f64 = 1.0;

/// Everything needed to re-solve the pressure for a given 𝔰.
pub struct Evolver {
    pub chart: InterfaceChart,
    pub mesh: Arc<Mesh>,
    pub k1: f64,
    pub k2: f64,
    pressure: [Pressure; 2],
    tube: Vec<Option<TubePoint>>,
}

impl Evolver {
    pub fn new(chart: &InterfaceChart, mesh: &Arc<Mesh>, data: PressureData, k1: f64, k2: f64) -> Result<Self> {
        data.validate()?;
        let a = chart.spec.a;
        Self::with_pressures(
            chart,
            mesh,
            k1,
            k2,
            [Arc::new(move |x| data.eval(x, a)[0]), Arc::new(move |x| data.eval(x, a)[1])],
        )
    }

    pub fn with_pressures(chart: &InterfaceChart, mesh: &Arc<Mesh>, k1: f64, k2: f64, pressure: [Pressure; 2]) -> Result<Self> {
        let mut tube: Vec<Option<TubePoint>> = mesh
            .nodes
            .iter()
            .map(|&x| chart.tube_coords(x).filter(|tp| tp.lambda.abs() < chart.support()))
            .collect();
        for (i, &v) in mesh.interface.iter().enumerate() {
            tube[v] = Some(TubePoint { u: mesh.interface_u[i], omega: mesh.interface_omega[i], lambda: 0.0 });
        }
        Ok(Evolver { chart: chart.clone(), mesh: Arc::clone(mesh), k1, k2, pressure, tube })
    }

    pub fn omega(&self) -> &[f64] {
        &self.mesh.interface_omega
    }

    fn spline(&self, s: &[f64]) -> Result<SplineDisplacement> {
        SplineDisplacement::new(self.mesh.interface_omega.clone(), s.to_vec())
    }

    /// Mesh node positions under the Hanzawa map of 𝔰.
    pub fn deform(&self, s: &SplineDisplacement) -> Result<Vec<[f64; 2]>> {
        let sup = s.sup_abs();
        if sup >= self.chart.tube_limit {
            return Err(Error::TubeViolation { max_abs: sup, limit: self.chart.tube_limit });
        }
        Ok(self
            .mesh
            .nodes
            .iter()
            .zip(&self.tube)
            .map(|(&x, tp)| match tp {
                Some(tp) => {
                    let shift = self.chart.cutoff(tp.lambda) * s.eval(tp.omega).0;
                    if shift == 0.0 {
                        return x;
                    }
                    let (p, l) = (self.chart.point_u(tp.u), self.chart.l_field_u(tp.u));
                    let eta = tp.lambda + shift;
                    [p[0] + eta * l[0], p[1] + eta * l[1]]
                }
                None => x,
            })
            .collect())
    }

    pub fn problem(&self) -> TransmissionProblem {
        let mut prob = TransmissionProblem::homogeneous(self.k1, self.k2);
        let (p1, p2) = (Arc::clone(&self.pressure[0]), Arc::clone(&self.pressure[1]));
        prob.dirichlet = [Box::new(move |x| p1(x)), Box::new(move |x| p2(x))];
        prob
    }

    /// Pressure on the deformed domain, its velocity, and 𝔰′.
    pub fn evaluate(&self, s: &[f64]) -> Result<(PressureField, Velocity, Vec<f64>)> {
        let sp = self.spline(s)?;
        let nodes = self.deform(&sp)?;
        let field = solve_transmission_at(&self.problem(), &self.mesh, &nodes)?;
        let sd: Vec<f64> = self.omega().iter().map(|&w| sp.eval(w).1).collect();
        let v = kinematic_velocity(&field, &self.chart, s, &sd)?;
        Ok((field, v, sd))
    }

    /// Contact angles of the interface displaced by 𝔰 (λ = 0, so χ = 1).
    pub fn contact_angles(&self, s: &[f64]) -> [f64; 2] {
        let mut nodes = self.mesh.nodes.clone();
        for (i, &v) in self.mesh.interface.iter().enumerate() {
            let u = self.mesh.interface_u[i];
            let (p, l) = (self.chart.point_u(u), self.chart.l_field_u(u));
            nodes[v] = [p[0] + s[i] * l[0], p[1] + s[i] * l[1]];
        }
        self.mesh.contact_angles(&nodes)
    }

    pub fn initial_state(&self) -> Result<(InterfaceState, PressureField, Velocity)> {
        let z = vec![0.0; self.omega().len()];
        let (field, v, sd) = self.evaluate(&z)?;
        let st = InterfaceState {
            t: 0.0,
            s_values: z.clone(),
            s_deriv: sd,
            s_t: v.k1_branch.clone(),
            tube_margin: self.chart.tube_limit,
            contact_angles: self.contact_angles(&z),
        };
        Ok((st, field, v))
    }

    pub fn dt_max(&self, v: &[f64]) -> f64 {
        let sup = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if sup > 0.0 { 0.25 * self.chart.b0 / sup } else { f64::INFINITY }
    }

    fn advance(&self, s: &[f64], v: &[f64], dt: f64, scheme: Scheme) -> Result<Vec<f64>> {
        let euler: Vec<f64> = s.iter().zip(v).map(|(a, b)| a + dt * b).collect();
        Ok(match scheme {
            Scheme::Euler => euler,
            Scheme::Heun => {
                let (_, vp, _) = self.evaluate(&euler)?;
                s.iter().zip(v).zip(&vp.k1_branch).map(|((a, b), c)| a + 0.5 * dt * (b + c)).collect()
            }
        })
    }

    /// One step of size dt ≤ dt_max with a step-doubling error estimate.
    pub fn step(&self, state: &InterfaceState, dt: f64, scheme: Scheme) -> Result<(InterfaceState, StepDiagnostics)> {
        let cap = self.dt_max(&state.s_t);
        if !(dt > 0.0 && dt <= cap * (1.0 + 1e-12)) {
            return Err(Error::InvalidParams(format!("time step {dt:e} outside (0, {cap:e}]")));
        }
        let full = self.advance(&state.s_values, &state.s_t, dt, scheme)?;
        let half = self.advance(&state.s_values, &state.s_t, 0.5 * dt, scheme)?;
        let (_, vh, _) = self.evaluate(&half)?;
        let two = self.advance(&half, &vh.k1_branch, 0.5 * dt, scheme)?;
        let error_estimate = full.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let max_abs = full.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if max_abs >= self.chart.tube_limit {
            return Err(Error::TubeViolation { max_abs, limit: self.chart.tube_limit });
        }
        let (field, v, sd) = self.evaluate(&full)?;
        let m = full.len();
        let h4_margin = -field.trace.dn[1..m - 1].iter().map(|d| d[0]).fold(f64::NEG_INFINITY, f64::max);
        let diag = StepDiagnostics {
            branch_residual: v.branch_residual,
            branch_relative: v.branch_relative,
            corner_velocity: (v.k1_branch[0], v.k1_branch[m - 1]),
            dt_used: dt,
            error_estimate,
            roughness: roughness(&full),
            h4_margin,
            solver_residual: field.report.relative_residual,
        };
        let st = InterfaceState {
            t: state.t + dt,
            contact_angles: self.contact_angles(&full),
            tube_margin: self.chart.tube_limit - max_abs,
            s_values: full,
            s_deriv: sd,
            s_t: v.k1_branch,
        };
        Ok((st, diag))
    }

    /// Steps to `t_end`; halts at the first tube violation and records the
    /// attained time as the empirical horizon.
    pub fn run(&self, ctl: &RunControl) -> Result<Trajectory> {
        if !(ctl.t_end > 0.0 && ctl.dt > 0.0) {
            return Err(Error::InvalidParams("t_end and dt must be positive".into()));
        }
        let (st, field, v0) = self.initial_state()?;
        let mut traj = Trajectory {
            omega: self.omega().to_vec(),
            points: field.trace.points.clone(),
            corners: field.corners,
            initial_branch_relative: v0.branch_relative,
            states: vec![st],
            diagnostics: Vec::new(),
            halted: None,
            horizon: 0.0,
            ill_posed: !(self.k2 / self.k1 > 0.0 && self.k2 / self.k1 < 1.0),
            noise_floor: 0.0,
            rough_flagged: false,
        };
        let mut noise = 0.0;
        let mut res = field.report.relative_residual.max(f64::EPSILON);
        while traj.horizon < ctl.t_end * (1.0 - 1e-12) {
            let cur = traj.states.last().unwrap();
            let dt = ctl.dt.min(self.dt_max(&cur.s_t)).min(ctl.t_end - cur.t);
            match self.step(cur, dt, ctl.scheme) {
                Ok((next, diag)) => {
                    let sup = cur.s_t.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    noise += dt * sup * res;
                    res = diag.solver_residual.max(f64::EPSILON);
                    traj.rough_flagged |= diag.roughness > ROUGHNESS_FLAG;
                    traj.horizon = next.t;
                    traj.states.push(next);
                    traj.diagnostics.push(diag);
                }
                Err(e @ Error::TubeViolation { .. }) => {
                    traj.halted = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        traj.noise_floor = noise.max(f64::EPSILON * self.chart.b0);
        Ok(traj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct RunControl {
    pub t_end: f64,
    /// Requested step; each step also respects dt_max.
    pub dt: f64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub omega: Vec<f64>,
    /// Reference interface points, A₀ → A₁.
    pub points: Vec<[f64; 2]>,
    pub corners: [[f64; 2]; 2],
    pub initial_branch_relative: f64,
    pub states: Vec<InterfaceState>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub halted: Option<String>,
    pub horizon: f64,
    pub ill_posed: bool,
    /// Displacement attributable to linear-solver round-off.
    pub noise_floor: f64,
    pub rough_flagged: bool,
}

impl Trajectory {
    /// Distances of the reference interface points to A₀ and A₁.
    pub fn radii(&self) -> [Vec<f64>; 2] {
        [0, 1].map(|c| {
            let q = self.corners[c];
            self.points.iter().map(|p| (p[0] - q[0]).hypot(p[1] - q[1])).collect()
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WaitingTimeReport {
    pub t: f64,
    pub corner_displacement: [f64; 2],
    pub noise_floor: f64,
    pub corners_pinned: bool,
    pub s_fit: [Option<CornerFit>; 2],
    pub velocity_fit: [Option<CornerFit>; 2],
    pub fit_errors: Vec<String>,
    /// (s_low + 1) − 0.3 when a window exists.
    pub exponent_target: Option<f64>,
    pub exponents_ok: Option<bool>,
    pub angle_drift: [f64; 2],
    pub angles_ok: bool,
    pub window_empty: bool,
}

pub const ANGLE_TOL: f64 = 1e-2;
pub const PIN_FACTOR: f64 = 10.0;

/// Corner displacement, decay exponents of |𝔰| and |𝔰_t| near each corner
/// over the decade ending at `r_hi`, and contact-angle drift, all at the
/// last state.
pub fn waiting_time_report(traj: &Trajectory, s_low: Option<f64>, deltas: [f64; 2], r_hi: f64) -> Result<WaitingTimeReport> {
    if traj.states.len() < 3 {
        return Err(Error::InsufficientData(format!("{} output times, need 3", traj.states.len())));
    }
    let last = traj.states.last().unwrap();
    let n = last.s_values.len();
    let corner_displacement = [last.s_values[0].abs(), last.s_values[n - 1].abs()];
    let radii = traj.radii();
    let mut fit_errors = Vec::new();
    let mut fit = |vals: &[f64], c: usize| -> Option<CornerFit> {
        let other = &radii[1 - c];
        let samples: Vec<(f64, f64)> =
            (0..n).filter(|&i| radii[c][i] > 0.0 && radii[c][i] <= other[i]).map(|i| (radii[c][i], vals[i])).collect();
        match corner_exponent_fit(&samples, (0.1 * r_hi, r_hi), traj.noise_floor) {
            Ok(f) => Some(f),
            Err(e) => {
                fit_errors.push(format!("corner A{c}: {e}"));
                None
            }
        }
    };
    let s_fit = [fit(&last.s_values, 0), fit(&last.s_values, 1)];
    let velocity_fit = [fit(&last.s_t, 0), fit(&last.s_t, 1)];
    let exponent_target = s_low.map(|s| s + 1.0 - 0.3);
    let exponents_ok = exponent_target.map(|t| velocity_fit.iter().all(|f| f.is_some_and(|f| f.exponent >= t)));
    let angle_drift = [0, 1].map(|c| traj.states.iter().map(|s| (s.contact_angles[c] - deltas[c]).abs()).fold(0.0, f64::max));
    let floor = traj.noise_floor;
    Ok(WaitingTimeReport {
        t: last.t,
        corner_displacement,
        noise_floor: floor,
        corners_pinned: corner_displacement.iter().all(|d| *d <= PIN_FACTOR * floor),
        s_fit,
        velocity_fit,
        fit_errors,
        exponent_target,
        exponents_ok,
        angle_drift,
        angles_ok: angle_drift.iter().all(|d| *d <= ANGLE_TOL),
        window_empty: s_low.is_none(),
    })
}
