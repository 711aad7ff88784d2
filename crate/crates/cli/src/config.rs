//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers. `#` starts a comment. Reals accept `pi` forms such as `pi/6` or
//! `2*pi/7` so rational angles can be written exactly.

use muskat_core::elliptic::PressureData;
use muskat_core::evolution::{RunControl, Scheme};
use muskat_core::geometry::{DomainSpec, MeshParams, ProfileKind};
use muskat_core::CornerParams;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// One precise problem with the configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    /// `section.key`, or the offending line for syntax errors.
    pub key: String,
    pub expected: String,
    pub found: Option<String>,
    pub line: Option<usize>,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.found, self.line) {
            (None, _) => write!(f, "missing key `{}` (expected {})", self.key, self.expected),
            (Some(v), Some(l)) => write!(f, "line {l}: `{}` = `{v}`: expected {}", self.key, self.expected),
            (Some(v), None) => write!(f, "`{}` = `{v}`: expected {}", self.key, self.expected),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigError(pub Vec<ConfigIssue>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    /// Extracted from the solved initial pressure.
    Measured,
    Fixed(f64),
}

/// Decision thresholds used by the validators and the report; every one of
/// them is echoed into the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// |δ − π(1/2 − q/p)| accepted when recognising a rational angle (h5).
    pub rational_angle: f64,
    /// Largest denominator p accepted as "rational" (h5).
    pub max_denominator: u32,
    /// Tail spread accepted on the irrational-angle limit path.
    pub limsup_spread: f64,
    /// Relative residual above which a linear solve counts as failed.
    pub solver_residual: f64,
    /// Upper end r of the decade (r/10, r) used for corner power-law fits.
    pub fit_radius: f64,
    /// Slack subtracted from the predicted corner exponents.
    pub exponent_slack: f64,
    /// Relative continuity required of A₀…A₃ across the branch seams.
    pub seam: f64,
    /// Allowed k₁/k₂ branch discrepancy of 𝔰_t, relative to sup|𝔰_t|.
    pub branch_relative: f64,
    /// Allowed contact-angle drift over a run, radians.
    pub angle_drift: f64,
    /// Corner displacement allowed, in units of the solver noise floor.
    pub pin_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rational_angle: 1e-12,
            max_denominator: 10_000,
            limsup_spread: 0.05,
            solver_residual: 1e-8,
            fit_radius: 0.1,
            exponent_slack: 0.3,
            seam: 0.05,
            branch_relative: 0.02,
            angle_drift: 1e-2,
            pin_factor: 10.0,
        }
    }
}

/// Demote a failed verdict to a warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Overrides {
    pub h4: bool,
    pub h7: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolControl {
    /// Hölder weight s of the model-corner symbol.
    pub s: f64,
    pub truncation: usize,
    /// Random (ν, μ) draws for the residual table.
    pub points: usize,
}

impl Default for SymbolControl {
    fn default() -> Self {
        SymbolControl { s: 0.6, truncation: 1000, points: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub k1: f64,
    pub k2: f64,
    pub data: PressureData,
    /// Requested weight s; None picks the middle of the admissible window.
    pub s: Option<f64>,
    pub alpha: [AlphaSource; 2],
    /// Explicit model corner for `spectrum` and `symbol`; None uses the
    /// contact corners.
    pub corner: Option<CornerParams>,
    pub mesh: MeshParams,
    pub time: RunControl,
    pub symbol: SymbolControl,
    pub out_dir: PathBuf,
    pub tol: Tolerances,
    pub overrides: Overrides,
}

impl RunConfig {
    pub fn k_ratio(&self) -> f64 {
        self.k2 / self.k1
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError(vec![ConfigIssue {
                key: path.display().to_string(),
                expected: format!("a readable config file ({e})"),
                found: Some(String::new()),
                line: None,
            }])
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut r = Reader::new(text);
        let d = DomainSpec::default();
        let domain = DomainSpec {
            a: r.real("domain.a", d.a),
            a1: r.real("domain.a1", d.a1),
            a2_len: r.real("domain.a2_len", d.a2_len),
            delta0: r.req_real("domain.delta0"),
            delta1: r.req_real("domain.delta1"),
            eps: r.real("domain.eps", d.eps),
            width: r.real("domain.width", d.width),
            profile: r.choice("domain.profile", ProfileKind::Auto, &[
                ("auto", ProfileKind::Auto),
                ("sine", ProfileKind::Sine),
                ("hermite", ProfileKind::Hermite),
            ]),
        };
        let pd = PressureData::default();
        let k1 = r.req_real("physics.k1");
        let k2 = r.req_real("physics.k2");
        let data = PressureData { c1: r.real("physics.c1", pd.c1), c2: r.real("physics.c2", pd.c2), s_star: r.req_real("physics.s_star") };
        let s = r.opt_real("physics.s");
        let alpha = [r.alpha("physics.alpha0"), r.alpha("physics.alpha1")];

        let corner = if r.has_section("corner") {
            let (a2, a3, k) = (r.req_real("corner.a2"), r.real("corner.a3", 0.0), r.req_real("corner.k"));
            let (q, p) = (r.req_uint("corner.q"), r.req_uint("corner.p"));
            Some(CornerParams { a2, a3, k, q, p })
        } else {
            None
        };

        let mp = MeshParams::default();
        let mesh = MeshParams {
            rows: r.uint("mesh.rows", mp.rows as u32) as usize,
            cols2: r.uint("mesh.cols2", mp.cols2 as u32) as usize,
            cols1: r.uint("mesh.cols1", mp.cols1 as u32) as usize,
            grading: r.real("mesh.grading", mp.grading),
            level: r.uint("mesh.level", mp.level),
        };
        let time = RunControl {
            t_end: r.real("time.t_end", 1.0),
            dt: r.real("time.dt", 0.01),
            scheme: r.choice("time.scheme", Scheme::Euler, &[("euler", Scheme::Euler), ("heun", Scheme::Heun)]),
        };
        let sc = SymbolControl::default();
        let symbol = SymbolControl {
            s: r.real("symbol.s", sc.s),
            truncation: r.uint("symbol.truncation", sc.truncation as u32) as usize,
            points: r.uint("symbol.points", sc.points as u32) as usize,
        };
        let out_dir = PathBuf::from(r.string("output.dir", "out"));
        let t = Tolerances::default();
        let tol = Tolerances {
            rational_angle: r.real("tolerances.rational_angle", t.rational_angle),
            max_denominator: r.uint("tolerances.max_denominator", t.max_denominator),
            limsup_spread: r.real("tolerances.limsup_spread", t.limsup_spread),
            solver_residual: r.real("tolerances.solver_residual", t.solver_residual),
            fit_radius: r.real("tolerances.fit_radius", t.fit_radius),
            exponent_slack: r.real("tolerances.exponent_slack", t.exponent_slack),
            seam: r.real("tolerances.seam", t.seam),
            branch_relative: r.real("tolerances.branch_relative", t.branch_relative),
            angle_drift: r.real("tolerances.angle_drift", t.angle_drift),
            pin_factor: r.real("tolerances.pin_factor", t.pin_factor),
        };
        let overrides = Overrides { h4: r.boolean("overrides.h4", false), h7: r.boolean("overrides.h7", false) };

        let cfg = RunConfig { domain, k1, k2, data, s, alpha, corner, mesh, time, symbol, out_dir, tol, overrides };
        r.finish()?;
        cfg.check_types()?;
        Ok(cfg)
    }

    /// Shape checks that make the record usable at all; modelling
    /// assumptions are left to the validators.
    fn check_types(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        let mut need = |key: &str, ok: bool, expected: &str, v: String| {
            if !ok {
                bad.push(ConfigIssue { key: key.into(), expected: expected.into(), found: Some(v), line: None });
            }
        };
        need("physics.k1", self.k1 > 0.0, "a positive real", self.k1.to_string());
        need("physics.k2", self.k2 > 0.0, "a positive real", self.k2.to_string());
        need("physics.s_star", self.data.s_star > 2.0, "a real > 2", self.data.s_star.to_string());
        need("time.t_end", self.time.t_end > 0.0, "a positive real", self.time.t_end.to_string());
        need("time.dt", self.time.dt > 0.0, "a positive real", self.time.dt.to_string());
        need("symbol.truncation", self.symbol.truncation >= 10, "an integer ≥ 10", self.symbol.truncation.to_string());
        for (k, v) in [
            ("tolerances.rational_angle", self.tol.rational_angle),
            ("tolerances.limsup_spread", self.tol.limsup_spread),
            ("tolerances.solver_residual", self.tol.solver_residual),
            ("tolerances.fit_radius", self.tol.fit_radius),
            ("tolerances.seam", self.tol.seam),
            ("tolerances.branch_relative", self.tol.branch_relative),
            ("tolerances.angle_drift", self.tol.angle_drift),
            ("tolerances.pin_factor", self.tol.pin_factor),
        ] {
            need(k, v > 0.0, "a positive real", v.to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(bad))
        }
    }

    /// Canonical `section.key = value` listing of every setting, defaults
    /// included, for the manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        let d = &self.domain;
        put("domain.a", d.a.to_string());
        put("domain.a1", d.a1.to_string());
        put("domain.a2_len", d.a2_len.to_string());
        put("domain.delta0", d.delta0.to_string());
        put("domain.delta1", d.delta1.to_string());
        put("domain.eps", d.eps.to_string());
        put("domain.width", d.width.to_string());
        put("domain.profile", format!("{:?}", d.profile).to_lowercase());
        put("physics.k1", self.k1.to_string());
        put("physics.k2", self.k2.to_string());
        put("physics.c1", self.data.c1.to_string());
        put("physics.c2", self.data.c2.to_string());
        put("physics.s_star", self.data.s_star.to_string());
        put("physics.s", self.s.map_or("auto".into(), |s| s.to_string()));
        for (i, a) in self.alpha.iter().enumerate() {
            put(&format!("physics.alpha{i}"), match a {
                AlphaSource::Measured => "measured".into(),
                AlphaSource::Fixed(v) => v.to_string(),
            });
        }
        if let Some(c) = &self.corner {
            put("corner.a2", c.a2.to_string());
            put("corner.a3", c.a3.to_string());
            put("corner.k", c.k.to_string());
            put("corner.q", c.q.to_string());
            put("corner.p", c.p.to_string());
        }
        put("mesh.rows", self.mesh.rows.to_string());
        put("mesh.cols2", self.mesh.cols2.to_string());
        put("mesh.cols1", self.mesh.cols1.to_string());
        put("mesh.grading", self.mesh.grading.to_string());
        put("mesh.level", self.mesh.level.to_string());
        put("time.t_end", self.time.t_end.to_string());
        put("time.dt", self.time.dt.to_string());
        put("time.scheme", format!("{:?}", self.time.scheme).to_lowercase());
        put("symbol.s", self.symbol.s.to_string());
        put("symbol.truncation", self.symbol.truncation.to_string());
        put("symbol.points", self.symbol.points.to_string());
        put("output.dir", self.out_dir.display().to_string());
        let t = &self.tol;
        put("tolerances.rational_angle", t.rational_angle.to_string());
        put("tolerances.max_denominator", t.max_denominator.to_string());
        put("tolerances.limsup_spread", t.limsup_spread.to_string());
        put("tolerances.solver_residual", t.solver_residual.to_string());
        put("tolerances.fit_radius", t.fit_radius.to_string());
        put("tolerances.exponent_slack", t.exponent_slack.to_string());
        put("tolerances.seam", t.seam.to_string());
        put("tolerances.branch_relative", t.branch_relative.to_string());
        put("tolerances.angle_drift", t.angle_drift.to_string());
        put("tolerances.pin_factor", t.pin_factor.to_string());
        put("overrides.h4", self.overrides.h4.to_string());
        put("overrides.h7", self.overrides.h7.to_string());
        m
    }
}

/// Parses `1.5`, `pi`, `pi/6`, `2*pi/7`, `-pi/4`.
pub fn parse_real(s: &str) -> Option<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = t.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.as_str()),
    };
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, Some(b.parse::<f64>().ok()?)),
        None => (t, None),
    };
    let coef = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(c) => c.strip_suffix('*')?.parse::<f64>().ok()?,
        None => return None,
    };
    let v = coef * std::f64::consts::PI / den.unwrap_or(1.0);
    let v = if neg { -v } else { v };
    v.is_finite().then_some(v)
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Collects entries and issues; every accessor marks its key as used so
/// leftovers can be reported as unknown.
struct Reader {
    entries: BTreeMap<String, Entry>,
    sections: Vec<String>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn new(text: &str) -> Self {
        let mut r = Reader { entries: BTreeMap::new(), sections: Vec::new(), issues: Vec::new() };
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                r.sections.push(section.clone());
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !section.is_empty() && !k.trim().is_empty() => {
                    let key = format!("{section}.{}", k.trim());
                    let prev = r.entries.insert(key.clone(), Entry { value: v.trim().to_string(), line: i + 1, used: false });
                    if prev.is_some() {
                        r.issues.push(ConfigIssue { key, expected: "a single definition".into(), found: Some(v.trim().into()), line: Some(i + 1) });
                    }
                }
                _ => r.issues.push(ConfigIssue {
                    key: raw.trim().to_string(),
                    expected: "`[section]` or `key = value` inside a section".into(),
                    found: Some(raw.trim().into()),
                    line: Some(i + 1),
                }),
            }
        }
        r
    }

    fn has_section(&self, name: &str) -> bool {
        self.sections.iter().any(|s| s == name)
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn typed<T>(&mut self, key: &str, expected: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let (v, line) = self.take(key)?;
        let out = parse(&v);
        if out.is_none() {
            self.issues.push(ConfigIssue { key: key.into(), expected: expected.into(), found: Some(v), line: Some(line) });
        }
        out
    }

    fn missing(&mut self, key: &str, expected: &str) {
        self.issues.push(ConfigIssue { key: key.into(), expected: expected.into(), found: None, line: None });
    }

    fn real(&mut self, key: &str, default: f64) -> f64 {
        self.typed(key, "a real number", parse_real).unwrap_or(default)
    }

    fn opt_real(&mut self, key: &str) -> Option<f64> {
        let (v, line) = self.take(key)?;
        if v == "auto" {
            return None;
        }
        let out = parse_real(&v);
        if out.is_none() {
            self.issues.push(ConfigIssue { key: key.into(), expected: "a real number or `auto`".into(), found: Some(v), line: Some(line) });
        }
        out
    }

    fn req_real(&mut self, key: &str) -> f64 {
        if self.entries.contains_key(key) {
            self.typed(key, "a real number", parse_real).unwrap_or(f64::NAN)
        } else {
            self.missing(key, "a real number");
            f64::NAN
        }
    }

    fn uint(&mut self, key: &str, default: u32) -> u32 {
        self.typed(key, "a non-negative integer", |s| s.parse::<u32>().ok()).unwrap_or(default)
    }

    fn req_uint(&mut self, key: &str) -> u32 {
        if self.entries.contains_key(key) {
            self.typed(key, "a positive integer", |s| s.parse::<u32>().ok().filter(|&v| v > 0)).unwrap_or(0)
        } else {
            self.missing(key, "a positive integer");
            0
        }
    }

    fn boolean(&mut self, key: &str, default: bool) -> bool {
        self.typed(key, "`true` or `false`", |s| s.parse::<bool>().ok()).unwrap_or(default)
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.take(key).map_or(default.to_string(), |(v, _)| v)
    }

    fn choice<T: Copy>(&mut self, key: &str, default: T, options: &[(&str, T)]) -> T {
        let names: Vec<&str> = options.iter().map(|o| o.0).collect();
        let expected = format!("one of {}", names.join(" | "));
        self.typed(key, &expected, |s| options.iter().find(|o| o.0 == s).map(|o| o.1)).unwrap_or(default)
    }

    fn alpha(&mut self, key: &str) -> AlphaSource {
        self.typed(key, "`measured` or a real number", |s| {
            if s == "measured" {
                Some(AlphaSource::Measured)
            } else {
                parse_real(s).map(AlphaSource::Fixed)
            }
        })
        .unwrap_or(AlphaSource::Measured)
    }

    fn finish(mut self) -> Result<(), ConfigError> {
        for (k, e) in &self.entries {
            if !e.used {
                self.issues.push(ConfigIssue { key: k.clone(), expected: "a known key".into(), found: Some(e.value.clone()), line: Some(e.line) });
            }
        }
        if self.issues.is_empty() {
            Ok(())
        } else {
            self.issues.sort_by_key(|i| i.line.unwrap_or(0));
            Err(ConfigError(self.issues))
        }
    }
}
