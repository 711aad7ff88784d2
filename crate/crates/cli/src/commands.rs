//! The six subcommands. Each writes its files into the output directory and
//! returns a JSON summary for the manifest; nothing here decides exit codes
//! beyond classifying its own errors.

use crate::config::RunConfig;
use crate::pipeline::{FailureKind, Pipeline, Step};
use muskat_core::elliptic::{
    a0_corner_fit, linearized_coeffs, max_principle, pressure_corner_fit, Branch, Corner, CornerFit, PressureField,
};
use muskat_core::evolution::{waiting_time_report, Evolver};
use muskat_core::spectral::{classify_q2, compute_quantities, count_zeros_oracle, find_zeros, strip_rect};
use muskat_core::symbol::{eval_g_nu, g_via_s, g_zero_closed_form, write_residual_csv, GammaProduct, ResidualRow, SymbolParams};
use muskat_core::weights::{model_corner_weights, s_star_window};
use muskat_core::{Complex64, CornerParams, Error, Kind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 1,
        }
    }
}

impl From<FailureKind> for ErrorKind {
    fn from(k: FailureKind) -> Self {
        match k {
            FailureKind::Validation => ErrorKind::Validation,
            FailureKind::Numerical => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CmdError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CmdError {
    pub fn validation(m: impl Into<String>) -> Self {
        CmdError { kind: ErrorKind::Validation, message: m.into() }
    }

    pub fn numerical(m: impl Into<String>) -> Self {
        CmdError { kind: ErrorKind::Numerical, message: m.into() }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError { kind: FailureKind::of(&e).into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError { kind: ErrorKind::Io, message: e.to_string() }
    }
}

impl From<csv::Error> for CmdError {
    fn from(e: csv::Error) -> Self {
        CmdError { kind: ErrorKind::Io, message: e.to_string() }
    }
}

impl From<serde_json::Error> for CmdError {
    fn from(e: serde_json::Error) -> Self {
        CmdError { kind: ErrorKind::Io, message: e.to_string() }
    }
}

pub type CmdResult<T> = Result<T, CmdError>;

/// Where a subcommand writes, and what it wrote.
pub struct Sink {
    pub dir: PathBuf,
    pub files: Vec<String>,
    /// Deterministic work counters (solves, steps, zero sets, ...).
    pub work: BTreeMap<String, u64>,
}

impl Sink {
    pub fn new(dir: &Path) -> CmdResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf(), files: Vec::new(), work: BTreeMap::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn json(&mut self, name: &str, v: &impl Serialize) -> CmdResult<()> {
        let p = self.path(name);
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        fs::write(p, text)?;
        Ok(())
    }

    fn text(&mut self, name: &str, s: &str) -> CmdResult<()> {
        let p = self.path(name);
        fs::write(p, s)?;
        Ok(())
    }

    fn csv(&mut self, name: &str) -> CmdResult<csv::Writer<BufWriter<fs::File>>> {
        let p = self.path(name);
        Ok(csv::Writer::from_writer(BufWriter::new(fs::File::create(p)?)))
    }

    fn raw(&mut self, name: &str) -> CmdResult<BufWriter<fs::File>> {
        let p = self.path(name);
        Ok(BufWriter::new(fs::File::create(p)?))
    }

    fn count(&mut self, key: &str, n: u64) {
        *self.work.entry(key.to_string()).or_default() += n;
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.17e}")
    } else {
        String::new()
    }
}

fn corner_of(i: usize) -> Corner {
    if i == 0 {
        Corner::A0
    } else {
        Corner::A1
    }
}

/// Corners the spectral subcommands act on: the explicit model corner if
/// configured, otherwise the two contact corners.
fn spectral_targets(cfg: &RunConfig, p: &Pipeline) -> CmdResult<Vec<(String, CornerParams)>> {
    if let Some(cp) = cfg.corner {
        return Ok(vec![("model".into(), cp)]);
    }
    let cs = p.corners.as_ref().ok_or_else(|| CmdError::validation(format!("corner spectra unavailable: {}", p.verdict(Step::Spectra).message)))?;
    Ok(cs.iter().enumerate().map(|(i, c)| (format!("A{i}"), c.params)).collect())
}

pub fn spectrum(cfg: &RunConfig, p: &Pipeline, sink: &mut Sink) -> CmdResult<Value> {
    let mut corners = Vec::new();
    let mut mismatches = Vec::new();
    for (label, cp) in spectral_targets(cfg, p)? {
        let sq = compute_quantities(&cp)?;
        let class = classify_q2(&cp)?;
        let mut sets = serde_json::Map::new();
        for kind in [Kind::Minus, Kind::Plus] {
            let zs = find_zeros(kind, &sq)?;
            zs.write_csv(sink.raw(&format!("zeros_{label}_{}.csv", kind.name()))?)?;
            let oracle = count_zeros_oracle(kind, &sq, strip_rect(kind, &sq))?;
            sink.count("zero_sets", 1);
            let ok = oracle == zs.total_count() as i64;
            if !ok {
                mismatches.push(format!("{label} {}: {} zeros found, argument principle counts {oracle}", kind.name(), zs.total_count()));
            }
            sets.insert(
                kind.name().into(),
                json!({
                    "real_count": zs.count(),
                    "total_count": zs.total_count(),
                    "locations": zs.locations(),
                    "off_axis": zs.off_axis.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "argument_principle_count": oracle,
                    "counts_agree": ok,
                }),
            );
        }
        corners.push(json!({ "corner": label, "params": cp, "quantities": sq, "classification": class, "zeros": sets }));
    }
    let summary = json!({ "corners": corners, "count_mismatches": mismatches });
    sink.json("spectrum.json", &summary)?;
    if !mismatches.is_empty() {
        return Err(CmdError::numerical(mismatches.join("; ")));
    }
    Ok(summary)
}

pub fn weights(cfg: &RunConfig, p: &Pipeline, sink: &mut Sink) -> CmdResult<Value> {
    let s_star = cfg.data.s_star;
    let win = p.window.as_ref().ok_or_else(|| CmdError::validation(format!("no weight window: {}", p.verdict(Step::Windows).message)))?;
    let shift = |x: f64| x - 2.0;
    let admissible = p.s.map(|s| win.contains(s + 2.0));
    let model = match cfg.corner {
        Some(cp) => Some(model_corner_weights(&cp, s_star)?),
        None => None,
    };
    let summary = json!({
        "s_star": s_star,
        "s_star_window": s_star_window(cfg.domain.delta0, cfg.domain.delta1)?,
        "contact_corners": p.corners,
        "global": p.global,
        "limsup": p.limsup,
        "window_s_plus_2": win,
        "window_s": {
            "lower": shift(win.lower),
            "upper": shift(win.upper),
            "excluded": win.excluded.iter().copied().map(shift).collect::<Vec<_>>(),
            "empty": win.empty,
        },
        "s": { "value": p.s, "auto": p.s_auto, "admissible": admissible },
        "model_corner": model,
    });
    sink.json("weights.json", &summary)?;
    Ok(summary)
}

/// Sample ν with ν and ν + 1 both inside the pole-free strip, and μ near
/// the unit circle.
fn draw_point(rng: &mut ChaCha8Rng, gp: &GammaProduct) -> Option<(Complex64, Complex64)> {
    let st = gp.strip();
    for _ in 0..10_000 {
        let nu = Complex64::new(rng.gen_range(st.lower..st.upper - 1.0), rng.gen_range(-3.0..3.0));
        if st.admits(nu.re, 0.05) && st.admits(nu.re + 1.0, 0.05) {
            return Some((nu, Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0))));
        }
    }
    None
}

pub fn symbol(cfg: &RunConfig, p: &Pipeline, seed: u64, sink: &mut Sink) -> CmdResult<Value> {
    let (label, cp) = spectral_targets(cfg, p)?.remove(0);
    let ctl = cfg.symbol;
    let sp = SymbolParams::new(cp, ctl.s, cfg.data.s_star)?;
    let sq = compute_quantities(&cp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // 𝒢 from its definition against the S± representation
    let mut identity = 0f64;
    let mut identity_points = 0;
    while identity_points < 64 {
        let nu = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-5.0..5.0));
        let (Ok(a), Ok(b)) = (eval_g_nu(nu, &sp), g_via_s(nu, &sp, &sq)) else { continue };
        identity = identity.max((a - b).norm() / b.norm().max(1.0));
        identity_points += 1;
    }
    let g0 = eval_g_nu(Complex64::new(0.0, 0.0), &sp)?;
    let g0_closed = g_zero_closed_form(&sp, &sq);
    let mut summary = json!({
        "corner": label,
        "params": cp,
        "s": ctl.s,
        "s_star": cfg.data.s_star,
        "seed": seed,
        "g_identity": { "points": identity_points, "max_relative_difference": identity },
        "g_at_zero": { "value": [g0.re, g0.im], "closed_form": g0_closed, "difference": (g0 - g0_closed).norm() },
    });

    let gp = match GammaProduct::new(sp) {
        Ok(gp) => gp,
        Err(e) => {
            summary["v0"] = json!({ "available": false, "reason": e.to_string() });
            sink.json("symbol.json", &summary)?;
            return Err(e.into());
        }
    };
    let n = ctl.truncation;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for _ in 0..ctl.points {
        let (nu, mu) = draw_point(&mut rng, &gp).ok_or_else(|| CmdError::numerical("pole-free strip too narrow to sample"))?;
        let mut by_n = Vec::new();
        for m in [n, 2 * n] {
            let corrected = gp.functional_residual(nu, mu, m)?;
            let plain = gp.functional_residual_with(nu, mu, m, false)?;
            let tail = gp.ln_v0(nu, mu, m)?.tail.norm();
            sink.count("v0_evaluations", 4);
            rows.push(ResidualRow { nu_re: nu.re, nu_im: nu.im, mu_re: mu.re, mu_im: mu.im, residual: corrected, truncation: m, tail_estimate: tail });
            by_n.push(json!({ "truncation": m, "residual": corrected, "uncorrected_residual": plain, "tail_estimate": tail }));
        }
        points.push(json!({ "nu": [nu.re, nu.im], "mu": [mu.re, mu.im], "results": by_n }));
    }
    write_residual_csv(&rows, sink.raw("symbol_residuals.csv")?)?;

    let st = gp.strip();
    let x0 = if st.admits(0.3, 0.05) { 0.3 } else { 0.5 * (st.lower + st.upper.min(st.lower + 2.0)) };
    let upper: Vec<f64> = (0..16).map(|j| 10.0 + 2.0 * j as f64).collect();
    let lower: Vec<f64> = upper.iter().map(|y| -y).collect();
    let mu = Complex64::new(1.0, 0.0);
    let fit = |ims: &[f64]| gp.decay_fit(x0, ims, mu, n).map_err(CmdError::from);
    let (up, down) = (fit(&upper)?, fit(&lower)?);
    sink.count("v0_evaluations", 2 * upper.len() as u64);
    summary["v0"] = json!({
        "available": true,
        "strip": st,
        "truncation": n,
        "max_residual": rows.iter().filter(|r| r.truncation == n).map(|r| r.residual).fold(0.0, f64::max),
        "points": points,
        "decay": { "x0": x0, "upper_half": up, "lower_half": down },
    });
    sink.json("symbol.json", &summary)?;
    Ok(summary)
}

fn fit_json(f: &Result<CornerFit, Error>, target: f64) -> Value {
    match f {
        Ok(f) => json!({ "fit": f, "target": target, "ok": f.exponent >= target }),
        Err(e) => json!({ "error": e.to_string(), "target": target, "ok": false }),
    }
}

fn write_nodes(field: &PressureField, sink: &mut Sink) -> CmdResult<()> {
    let mut w = sink.csv("nodes.csv")?;
    w.write_record(["index", "x", "y", "phase", "w1", "w2"])?;
    for (i, (x, v)) in field.nodes.iter().zip(&field.values).enumerate() {
        let phase = format!("{:?}", field.mesh.phase[i]).to_lowercase();
        w.write_record([i.to_string(), num(x[0]), num(x[1]), phase, num(v[0]), num(v[1])])?;
    }
    w.flush()?;
    let tr = &field.trace;
    let mut w = sink.csv("interface.csv")?;
    w.write_record(["index", "omega", "x", "y", "u1", "u2", "dn1", "dn2", "dtau1", "dtau2"])?;
    for i in 0..tr.len() {
        let p = tr.points[i];
        w.write_record([
            i.to_string(),
            num(tr.omega[i]),
            num(p[0]),
            num(p[1]),
            num(tr.value[i][0]),
            num(tr.value[i][1]),
            num(tr.dn[i][0]),
            num(tr.dn[i][1]),
            num(tr.dtau[i][0]),
            num(tr.dtau[i][1]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn solve_initial(cfg: &RunConfig, p: &Pipeline, sink: &mut Sink) -> CmdResult<Value> {
    let field = p.field.as_ref().ok_or_else(|| CmdError::validation(format!("no initial pressure: {}", p.verdict(Step::Solve).message)))?;
    let chart = p.chart.as_ref().expect("a solved field implies a chart");
    sink.count("linear_solves", 1);
    sink.count("dofs", field.report.dofs as u64);
    write_nodes(field, sink)?;
    sink.text("mesh.txt", &field.mesh.export())?;

    let target = cfg.data.s_star - cfg.tol.exponent_slack;
    let r_hi = cfg.tol.fit_radius;
    let pressure_fits: Vec<Value> = (0..2).map(|i| fit_json(&pressure_corner_fit(field, corner_of(i), r_hi), target)).collect();
    let coeffs = match linearized_coeffs(field, chart) {
        Ok(c) => {
            let mut w = sink.csv("coefficients.csv")?;
            w.write_record(["omega", "x", "y", "r", "branch", "a0", "a1", "a2", "a3"])?;
            for s in &c.samples {
                let branch = match s.branch {
                    Branch::Near(c) => format!("near_{c:?}"),
                    Branch::Blend(c) => format!("blend_{c:?}"),
                    Branch::Far => "far".into(),
                };
                w.write_record([num(s.omega), num(s.point[0]), num(s.point[1]), num(s.r), branch, num(s.a[0]), num(s.a[1]), num(s.a[2]), num(s.a[3])])?;
            }
            w.flush()?;
            let seam_worst = c.seams.iter().map(|s| s.rel).fold(0.0, f64::max);
            let a0_fits: Vec<Value> = (0..2).map(|i| fit_json(&a0_corner_fit(field, &c, corner_of(i), r_hi), target - 1.0)).collect();
            json!({
                "samples": c.samples.len(),
                "sign_violations": c.sign_violations,
                "seams": c.seams,
                "seam_worst_relative": seam_worst,
                "seams_ok": seam_worst <= cfg.tol.seam,
                "a0_corner_fits": a0_fits,
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let summary = json!({
        "solve": field.report,
        "k": field.k_ratio(),
        "h4": p.h4,
        "alpha": p.alpha,
        "max_principle": max_principle(field),
        "pressure_corner_fits": pressure_fits,
        "fit_radius": r_hi,
        "linearized_coefficients": coeffs,
    });
    sink.json("solve_initial.json", &summary)?;
    Ok(summary)
}

pub fn evolve(cfg: &RunConfig, p: &Pipeline, sink: &mut Sink) -> CmdResult<Value> {
    let (Some(chart), Some(mesh)) = (p.chart.as_ref(), p.mesh.as_ref()) else {
        return Err(CmdError::validation(format!("no initial configuration: {}", p.verdict(Step::Geometry).message)));
    };
    let ev = Evolver::new(chart, mesh, cfg.data, cfg.k1, cfg.k2)?;
    let (_, _, v0) = ev.initial_state()?;
    let traj = ev.run(&cfg.time)?;
    sink.count("steps", traj.diagnostics.len() as u64);
    sink.count("output_states", traj.states.len() as u64);

    let mut w = sink.csv("trajectory.csv")?;
    w.write_record(["t", "node", "omega", "s", "s_t", "branch_residual"])?;
    for (j, st) in traj.states.iter().enumerate() {
        let br = if j == 0 { v0.branch_residual } else { traj.diagnostics[j - 1].branch_residual };
        for i in 0..traj.omega.len() {
            w.write_record([num(st.t), i.to_string(), num(traj.omega[i]), num(st.s_values[i]), num(st.s_t[i]), num(br)])?;
        }
    }
    w.flush()?;
    let mut w = sink.csv("steps.csv")?;
    w.write_record(["t", "dt", "branch_residual", "branch_relative", "corner_velocity0", "corner_velocity1", "error_estimate", "roughness", "solver_residual", "contact_angle0", "contact_angle1"])?;
    for (d, st) in traj.diagnostics.iter().zip(&traj.states[1..]) {
        w.write_record([
            num(st.t),
            num(d.dt_used),
            num(d.branch_residual),
            num(d.branch_relative),
            num(d.corner_velocity.0),
            num(d.corner_velocity.1),
            num(d.error_estimate),
            num(d.roughness),
            num(d.solver_residual),
            num(st.contact_angles[0]),
            num(st.contact_angles[1]),
        ])?;
    }
    w.flush()?;

    let deltas = [cfg.domain.delta0, cfg.domain.delta1];
    let s_low = p.window.as_ref().filter(|w| !w.empty).map(|w| w.lower - 2.0);
    let branch_max = traj.diagnostics.iter().map(|d| d.branch_relative).fold(traj.initial_branch_relative, f64::max);
    let wt = waiting_time_report(&traj, s_low, deltas, cfg.tol.fit_radius);
    let checks = match &wt {
        Ok(r) => {
            let target = s_low.map(|s| s + 1.0 - cfg.tol.exponent_slack);
            json!({
                "corners_pinned": r.corner_displacement.iter().all(|d| *d <= cfg.tol.pin_factor * r.noise_floor),
                "pin_threshold": cfg.tol.pin_factor * r.noise_floor,
                "velocity_exponent_target": target,
                "velocity_exponents_ok": target.map(|t| r.velocity_fit.iter().all(|f| f.is_some_and(|f| f.exponent >= t))),
                "angles_ok": r.angle_drift.iter().all(|d| *d <= cfg.tol.angle_drift),
                "branch_ok": branch_max <= cfg.tol.branch_relative,
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let summary = json!({
        "t_end": cfg.time.t_end,
        "horizon": traj.horizon,
        "halted": traj.halted,
        "ill_posed": traj.ill_posed,
        "rough_flagged": traj.rough_flagged,
        "noise_floor": traj.noise_floor,
        "initial_branch_relative": traj.initial_branch_relative,
        "max_branch_relative": branch_max,
        "steps": traj.diagnostics.len(),
        "s_low": s_low,
        "waiting_time": wt.as_ref().ok(),
        "checks": checks,
    });
    sink.json("evolve.json", &summary)?;
    if let Some(why) = &traj.halted {
        return Err(CmdError::numerical(format!("run halted at t = {:.4} before t_end = {}: {why}", traj.horizon, cfg.time.t_end)));
    }
    Ok(summary)
}

/// Collects every `*.json` in the output directory except the report's own
/// files, keyed by file name, so repeated runs produce identical bytes.
pub fn report(sink: &mut Sink) -> CmdResult<Value> {
    let mut names: Vec<String> = fs::read_dir(&sink.dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json") && !n.starts_with("report."))
        .collect();
    names.sort();
    let mut files = BTreeMap::new();
    let mut outcomes = BTreeMap::new();
    for n in &names {
        let v: Value = serde_json::from_str(&fs::read_to_string(sink.dir.join(n))?)?;
        if let Some(stem) = n.strip_suffix(".manifest.json") {
            outcomes.insert(stem.to_string(), json!({ "outcome": v["outcome"], "exit_code": v["exit_code"], "forced": v["forced"] }));
        }
        files.insert(n.clone(), v);
    }
    let summary = json!({ "runs": outcomes, "files": files });
    sink.json("report.json", &summary)?;
    Ok(json!({ "runs": outcomes, "sources": names }))
}
