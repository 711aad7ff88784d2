//! Ordered validators. Each step records a verdict with the numbers it was
//! decided on; a step whose inputs are unavailable is marked skipped rather
//! than guessed.

use crate::config::{AlphaSource, RunConfig};
use muskat_core::elliptic::{check_h4, check_k_ratio, extract_alpha, solve_initial_pressure, AlphaEstimate, Corner, H4Report, PressureField};
use muskat_core::geometry::{InterfaceChart, Mesh};
use muskat_core::spectral::{classify_q2, compute_quantities, find_zeros, Q2Classification};
use muskat_core::weights::{
    global_weights, limsup_weights, rational_angle, s_star_window, CaseTag, GlobalWeights, InterfaceAngle, LimsupWeights, WeightWindow,
};
use muskat_core::{CornerParams, Error, Kind, SpectralQuantities};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Geometry,
    Data,
    Solve,
    H4,
    Spectra,
    Windows,
    Weight,
}

impl Step {
    pub fn assumptions(self) -> &'static str {
        match self {
            Step::Geometry => "h1-h3",
            Step::Data => "h6",
            Step::Solve => "initial pressure",
            Step::H4 => "h4",
            Step::Spectra => "corner spectra and alpha",
            Step::Windows => "h5/h7",
            Step::Weight => "s admissibility",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Failed, but demoted to a warning by an override flag.
    Overridden,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Validation,
    Numerical,
}

impl FailureKind {
    pub fn of(e: &Error) -> Self {
        if e.is_validation() {
            FailureKind::Validation
        } else {
            FailureKind::Numerical
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            FailureKind::Validation => 2,
            FailureKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub step: Step,
    pub assumptions: &'static str,
    pub status: Status,
    pub failure: Option<FailureKind>,
    pub message: String,
    pub quantities: Value,
}

impl Verdict {
    fn new(step: Step, status: Status, failure: Option<FailureKind>, message: impl Into<String>, quantities: Value) -> Self {
        Verdict { step, assumptions: step.assumptions(), status, failure, message: message.into(), quantities }
    }

    fn pass(step: Step, message: impl Into<String>, q: Value) -> Self {
        Self::new(step, Status::Pass, None, message, q)
    }

    fn fail(step: Step, kind: FailureKind, message: impl Into<String>, q: Value) -> Self {
        Self::new(step, Status::Fail, Some(kind), message, q)
    }

    fn error(step: Step, e: &Error) -> Self {
        Self::fail(step, FailureKind::of(e), e.to_string(), Value::Null)
    }

    fn skipped(step: Step, why: impl Into<String>) -> Self {
        Self::new(step, Status::Skipped, None, why, Value::Null)
    }

    /// Fail, or overridden with the failure kept on record.
    fn fail_or_override(step: Step, overridden: bool, message: String, q: Value) -> Self {
        if overridden {
            Self::new(step, Status::Overridden, Some(FailureKind::Validation), format!("overridden: {message}"), q)
        } else {
            Self::fail(step, FailureKind::Validation, message, q)
        }
    }

    pub fn blocks(&self) -> bool {
        matches!(self.status, Status::Fail | Status::Skipped)
    }
}

/// One contact corner as seen by the spectral machinery.
#[derive(Debug, Clone, Serialize)]
pub struct ContactCorner {
    pub angle: InterfaceAngle,
    /// The angle is a rational approximant, not an exact recognition.
    pub approximate: bool,
    pub alpha: f64,
    pub params: CornerParams,
    pub quantities: SpectralQuantities,
    pub class: Q2Classification,
    pub zeros_minus: usize,
    pub zeros_plus_real: usize,
    pub zeros_plus_total: usize,
}

#[derive(Default)]
pub struct Pipeline {
    pub verdicts: Vec<Verdict>,
    pub chart: Option<InterfaceChart>,
    pub mesh: Option<Arc<Mesh>>,
    pub field: Option<PressureField>,
    pub h4: Option<H4Report>,
    pub alpha: [Option<AlphaEstimate>; 2],
    pub corners: Option<[ContactCorner; 2]>,
    pub global: Option<GlobalWeights>,
    pub limsup: Option<LimsupWeights>,
    /// Admissible window for s + 2.
    pub window: Option<WeightWindow>,
    pub s: Option<f64>,
    pub s_auto: bool,
}

/// Approximants used on the irrational-angle path.
pub const LIMSUP_LADDER: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

impl Pipeline {
    pub fn verdict(&self, step: Step) -> &Verdict {
        self.verdicts.iter().find(|v| v.step == step).expect("every step records a verdict")
    }

    fn passed(&self, step: Step) -> bool {
        self.verdicts.iter().any(|v| v.step == step && matches!(v.status, Status::Pass | Status::Overridden))
    }

    fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }
}

pub fn validate(cfg: &RunConfig) -> Pipeline {
    let mut p = Pipeline::default();
    geometry(&mut p, cfg);
    data(&mut p, cfg);
    solve(&mut p, cfg);
    h4(&mut p, cfg);
    spectra(&mut p, cfg);
    windows(&mut p, cfg);
    weight(&mut p, cfg);
    p
}

fn geometry(p: &mut Pipeline, cfg: &RunConfig) {
    let spec = &cfg.domain;
    if let Err(e) = spec.validate() {
        return p.push(Verdict::error(Step::Geometry, &e));
    }
    let built = InterfaceChart::new(spec).and_then(|c| Mesh::build(&c, cfg.mesh).map(|m| (c, m)));
    match built {
        Ok((chart, mesh)) => {
            let measured = mesh.contact_angles(&mesh.nodes);
            let cap = ((spec.a1 - spec.a) / 6.0).min(spec.a / 6.0).min(spec.a2_len / 6.0);
            let q = json!({
                "eps": spec.eps,
                "eps_cap": cap,
                "eps_margin": cap - spec.eps,
                "b0": chart.b0,
                "tube_limit": chart.tube_limit,
                "nodes": mesh.nodes.len(),
                "triangles": mesh.tris.len(),
                "interface_nodes": mesh.interface.len(),
                "max_diameter": mesh.max_diameter(),
                "measured_angles": measured,
                "angle_errors": [measured[0] - spec.delta0, measured[1] - spec.delta1],
            });
            p.push(Verdict::pass(Step::Geometry, "domain, interface and mesh are admissible", q));
            p.chart = Some(chart);
            p.mesh = Some(Arc::new(mesh));
        }
        Err(e) => p.push(Verdict::error(Step::Geometry, &e)),
    }
}

fn data(p: &mut Pipeline, cfg: &RunConfig) {
    if let Err(e) = cfg.data.validate() {
        return p.push(Verdict::error(Step::Data, &e));
    }
    let win = match s_star_window(cfg.domain.delta0, cfg.domain.delta1) {
        Ok(w) => w,
        Err(e) => return p.push(Verdict::error(Step::Data, &e)),
    };
    let s = cfg.data.s_star;
    let q = json!({
        "c1": cfg.data.c1,
        "c2": cfg.data.c2,
        "s_star": s,
        "s_star_window": win,
        "margin": (s - win.lower).min(win.upper - s),
    });
    if win.contains(s) {
        p.push(Verdict::pass(Step::Data, format!("s* = {s} lies in ({}, {})", win.lower, win.upper), q));
    } else {
        let msg = format!("s* = {s} outside ({}, {}) minus {:?}", win.lower, win.upper, win.excluded);
        p.push(Verdict::fail(Step::Data, FailureKind::Validation, msg, q));
    }
}

fn solve(p: &mut Pipeline, cfg: &RunConfig) {
    let Some(mesh) = p.mesh.clone() else {
        return p.push(Verdict::skipped(Step::Solve, "no mesh (geometry failed)"));
    };
    if let Err(e) = cfg.data.validate() {
        return p.push(Verdict::skipped(Step::Solve, format!("pressure data unusable: {e}")));
    }
    match solve_initial_pressure(&cfg.domain, &mesh, cfg.data, cfg.k1, cfg.k2) {
        Ok(field) => {
            let r = field.report;
            let q = serde_json::to_value(r).unwrap_or(Value::Null);
            if r.relative_residual <= cfg.tol.solver_residual {
                p.push(Verdict::pass(Step::Solve, format!("{} dofs, relative residual {:.2e}", r.dofs, r.relative_residual), q));
            } else {
                let msg = format!("relative residual {:.2e} above {:.0e}", r.relative_residual, cfg.tol.solver_residual);
                p.push(Verdict::fail(Step::Solve, FailureKind::Numerical, msg, q));
            }
            p.field = Some(field);
        }
        Err(e) => p.push(Verdict::error(Step::Solve, &e)),
    }
}

fn h4(p: &mut Pipeline, cfg: &RunConfig) {
    let rep = match &p.field {
        Some(f) if p.passed(Step::Solve) => check_h4(f),
        _ => check_k_ratio(cfg.k1, cfg.k2),
    };
    let q = serde_json::to_value(&rep).unwrap_or(Value::Null);
    let v = if !rep.k_in_range {
        let msg = format!("k = k2/k1 = {} outside (0, 1): ill-posed regime", rep.k);
        Verdict::fail_or_override(Step::H4, cfg.overrides.h4, msg, q)
    } else if !rep.solved {
        Verdict::new(Step::H4, Status::Skipped, None, format!("k = {} in (0, 1); normal derivatives unavailable", rep.k), q)
    } else if rep.pass {
        Verdict::pass(Step::H4, format!("k = {}, margin {:.3e}", rep.k, rep.margin), q)
    } else {
        let msg = format!(
            "normal derivative not strictly negative at {} of {} interface nodes (out to r = {:.3}); max ∂ₙU = {:?}",
            rep.violations, rep.samples, rep.violation_radius, rep.max_dn
        );
        Verdict::fail_or_override(Step::H4, cfg.overrides.h4, msg, q)
    };
    p.h4 = Some(rep);
    p.push(v);
}

fn interface_angle(delta: f64, cfg: &RunConfig) -> Option<InterfaceAngle> {
    rational_angle(delta, cfg.tol.rational_angle).ok().filter(|a| a.p <= cfg.tol.max_denominator)
}

fn spectra(p: &mut Pipeline, cfg: &RunConfig) {
    let k = cfg.k_ratio();
    if !(k > 0.0 && k < 1.0) {
        return p.push(Verdict::skipped(Step::Spectra, format!("needs k in (0, 1), got {k}")));
    }
    let deltas = [cfg.domain.delta0, cfg.domain.delta1];
    let mut alpha = [0.0; 2];
    for (i, src) in cfg.alpha.iter().enumerate() {
        alpha[i] = match *src {
            AlphaSource::Fixed(a) => a,
            AlphaSource::Measured => {
                let Some(field) = p.field.as_ref().filter(|_| p.passed(Step::Solve)) else {
                    return p.push(Verdict::skipped(Step::Spectra, "alpha is measured but the initial pressure is unavailable"));
                };
                let corner = if i == 0 { Corner::A0 } else { Corner::A1 };
                match extract_alpha(field, corner) {
                    Ok(est) => {
                        p.alpha[i] = Some(est);
                        est.value
                    }
                    Err(e) => {
                        let msg = format!("alpha{i}: {e}");
                        return p.push(Verdict::fail(Step::Spectra, FailureKind::of(&e), msg, Value::Null));
                    }
                }
            }
        };
    }
    let mut out = Vec::new();
    for i in 0..2 {
        let (angle, approximate) = match interface_angle(deltas[i], cfg) {
            Some(a) => (a, false),
            None => match rational_angle(deltas[i], *LIMSUP_LADDER.last().unwrap()) {
                Ok(a) => (a, true),
                Err(e) => return p.push(Verdict::error(Step::Spectra, &e)),
            },
        };
        let corner = (|| -> muskat_core::Result<ContactCorner> {
            let params = angle.corner_params(alpha[i], k)?;
            let quantities = compute_quantities(&params)?;
            let class = classify_q2(&params)?;
            let zm = find_zeros(Kind::Minus, &quantities)?;
            let zp = find_zeros(Kind::Plus, &quantities)?;
            Ok(ContactCorner {
                angle,
                approximate,
                alpha: alpha[i],
                params,
                quantities,
                class,
                zeros_minus: zm.total_count(),
                zeros_plus_real: zp.count(),
                zeros_plus_total: zp.total_count(),
            })
        })();
        match corner {
            Ok(c) => out.push(c),
            Err(e) => return p.push(Verdict::error(Step::Spectra, &e).with_message(format!("corner A{i}: {e}"))),
        }
    }
    let corners: [ContactCorner; 2] = [out[0].clone(), out[1].clone()];
    let q = json!({ "corners": corners, "alpha_estimates": p.alpha });
    let msg = format!(
        "alpha = ({:.4}, {:.4}); q2 = ({:.4}, {:.4})",
        corners[0].alpha, corners[1].alpha, corners[0].quantities.q2, corners[1].quantities.q2
    );
    p.corners = Some(corners);
    p.push(Verdict::pass(Step::Spectra, msg, q));
}

impl Verdict {
    fn with_message(mut self, m: String) -> Self {
        self.message = m;
        self
    }
}

fn windows(p: &mut Pipeline, cfg: &RunConfig) {
    let (d0, d1) = (cfg.domain.delta0, cfg.domain.delta1);
    for (i, d) in [d0, d1].into_iter().enumerate() {
        if !(d > 0.0 && d < FRAC_PI_4) {
            let msg = format!("precondition: delta{i} = {d} outside (0, π/4)");
            return p.push(Verdict::fail(Step::Windows, FailureKind::Validation, msg, json!({ "delta": [d0, d1] })));
        }
    }
    let Some(corners) = p.corners.as_ref() else {
        return p.push(Verdict::skipped(Step::Windows, "corner spectra unavailable"));
    };
    let alpha = [corners[0].alpha, corners[1].alpha];
    let (k, s_star) = (cfg.k_ratio(), cfg.data.s_star);
    let upper = 3f64.min(2.0 * PI / (PI - 2.0 * d0)).min(2.0 * PI / (PI - 2.0 * d1));
    let (win, q, extra) = match (interface_angle(d0, cfg), interface_angle(d1, cfg)) {
        (Some(a0), Some(a1)) => match global_weights(a0, a1, alpha, k, s_star) {
            Ok(g) => {
                let q = json!({ "path": "rational", "angles": [a0, a1], "q": g.q, "q_is_one": g.q_is_one, "h_star": g.h_star, "f_star": g.f_star });
                let w = g.h7.clone();
                p.global = Some(g);
                (w, q, None)
            }
            Err(e) => return p.push(Verdict::error(Step::Windows, &e)),
        },
        _ => match limsup_weights(d0, d1, alpha, k, s_star, &LIMSUP_LADDER, cfg.tol.limsup_spread) {
            Ok(l) => {
                let lower = 2f64.max(l.h_star).max(l.f_star);
                let w = WeightWindow::new(lower, upper, vec![PI / (2.0 * d0), PI / (2.0 * d1)], CaseTag::H7Generic);
                let q = json!({ "path": "irrational limit", "h_star": l.h_star, "f_star": l.f_star, "spread": l.spread, "converged": l.converged });
                let extra = (!l.converged).then(|| format!("limit weights did not settle (tail spread {:?})", l.spread));
                p.limsup = Some(l);
                (w, q, extra)
            }
            Err(e) => return p.push(Verdict::error(Step::Windows, &e)),
        },
    };
    let mut q = q;
    q["window_s_plus_2"] = serde_json::to_value(&win).unwrap_or(Value::Null);
    q["window_s"] = json!([win.lower - 2.0, win.upper - 2.0]);
    let v = match (win.empty, extra) {
        (false, None) => Verdict::pass(Step::Windows, format!("s + 2 ∈ ({:.6}, {:.6})", win.lower, win.upper), q),
        (true, _) => {
            let msg = format!("(h7) window for s + 2 is empty: lower {:.6} ≥ upper {:.6}", win.lower, win.upper);
            Verdict::fail_or_override(Step::Windows, cfg.overrides.h7, msg, q)
        }
        (false, Some(m)) => Verdict::fail_or_override(Step::Windows, cfg.overrides.h7, m, q),
    };
    p.window = Some(win);
    p.push(v);
}

fn weight(p: &mut Pipeline, cfg: &RunConfig) {
    let Some(win) = p.window.as_ref() else {
        return p.push(Verdict::skipped(Step::Weight, "no weight window"));
    };
    let (s, auto) = match cfg.s {
        Some(s) => (Some(s), false),
        None => (win.midpoint().map(|m| m - 2.0), true),
    };
    p.s = s;
    p.s_auto = auto;
    let q = json!({ "s": s, "auto": auto, "window_s": [win.lower - 2.0, win.upper - 2.0], "excluded_s": win.excluded.iter().map(|x| x - 2.0).collect::<Vec<_>>() });
    let v = match s {
        Some(s) if win.contains(s + 2.0) => {
            let how = if auto { "auto-picked at the window midpoint" } else { "requested" };
            Verdict::pass(Step::Weight, format!("s = {s:.6} ({how})"), q)
        }
        Some(s) => Verdict::fail_or_override(Step::Weight, cfg.overrides.h7, format!("s = {s} not admissible"), q),
        None => Verdict::fail_or_override(Step::Weight, cfg.overrides.h7, "window empty: no admissible s".into(), q),
    };
    p.push(v);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> RunConfig {
        let base = "[domain]\ndelta0 = pi/6\ndelta1 = pi/6\n[physics]\nk1 = 1\nk2 = 0.5\ns_star = 3.5\n";
        RunConfig::parse(&format!("{base}{extra}")).unwrap()
    }

    #[test]
    fn verdicts_come_in_dependency_order() {
        let p = validate(&cfg(""));
        let steps: Vec<Step> = p.verdicts.iter().map(|v| v.step).collect();
        assert_eq!(steps, [Step::Geometry, Step::Data, Step::Solve, Step::H4, Step::Spectra, Step::Windows, Step::Weight]);
        assert_eq!(p.verdict(Step::Geometry).status, Status::Pass);
        assert_eq!(p.verdict(Step::Solve).status, Status::Pass);
    }

    #[test]
    fn swapped_conductivities_fail_h4_with_k() {
        let c = RunConfig { k1: 0.5, k2: 1.0, ..cfg("") };
        let p = validate(&c);
        let v = p.verdict(Step::H4);
        assert_eq!((v.status, v.failure), (Status::Fail, Some(FailureKind::Validation)));
        assert!(v.message.contains("k = k2/k1 = 2"), "{}", v.message);
        assert_eq!(p.verdict(Step::Spectra).status, Status::Skipped);
    }

    #[test]
    fn wide_angle_fails_window_precondition() {
        let c = cfg("");
        let c = RunConfig { domain: muskat_core::geometry::DomainSpec { delta0: 0.3 * PI, ..c.domain }, ..c };
        let p = validate(&c);
        assert_eq!(p.verdict(Step::Geometry).status, Status::Fail);
        let w = p.verdict(Step::Windows);
        assert_eq!(w.status, Status::Fail);
        assert!(w.message.starts_with("precondition"), "{}", w.message);
    }

    #[test]
    fn fixed_alpha_matches_weights_module() {
        let p = validate(&cfg("alpha0 = 0\nalpha1 = 0\n"));
        let a = InterfaceAngle { q: 1, p: 3 };
        let g = global_weights(a, a, [0.0, 0.0], 0.5, 3.5).unwrap();
        assert_eq!(p.window.as_ref().unwrap(), &g.h7);
        assert!(p.alpha.iter().all(|a| a.is_none()));
    }

    #[test]
    fn override_demotes_window_failure() {
        let p = validate(&cfg("alpha0 = 0\nalpha1 = 0\n[overrides]\nh7 = true\n"));
        assert!(p.window.as_ref().unwrap().empty);
        assert_eq!(p.verdict(Step::Windows).status, Status::Overridden);
        assert_eq!(p.verdict(Step::Weight).status, Status::Overridden);
        assert!(p.s.is_none());
    }

    #[test]
    fn requested_s_is_checked_against_the_window() {
        // Q₀ = Q₁ = 1 (α = −cot δ/k) gives the window (2, 3) for s + 2
        let c = cfg("");
        let c = RunConfig { alpha: [AlphaSource::Fixed(-3f64.sqrt() / 0.5); 2], ..c };
        let p = validate(&RunConfig { s: Some(0.5), ..c.clone() });
        assert_eq!(p.verdict(Step::Windows).status, Status::Pass, "{}", p.verdict(Step::Windows).message);
        assert_eq!(p.verdict(Step::Weight).status, Status::Pass);
        let p = validate(&RunConfig { s: Some(1.5), ..c.clone() });
        assert_eq!(p.verdict(Step::Weight).status, Status::Fail);
        let p = validate(&c);
        assert!(p.s_auto && (p.s.unwrap() - 0.5).abs() < 1e-12);
    }
}
