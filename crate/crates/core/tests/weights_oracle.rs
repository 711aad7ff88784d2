use muskat_core::spectral::{compute_quantities, find_zeros, CornerParams, Kind};
use muskat_core::weights::*;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Independent re-evaluation by plain enumeration: full-strip zeros, d₀ on a grid.
struct Oracle {
    i_star: usize,
    cap_minus: i64,
    cap_plus: i64,
    minus: Vec<i64>,
    plus: Vec<i64>,
    z_under: f64,
    z_over: f64,
}

fn d0_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    let mut g: Vec<f64> = (0..=n).map(|j| j as f64 * step).collect();
    g.push(0.0);
    g.push(1.0);
    g
}

fn oracle(zm: &[f64], zp: &[f64], s_star: f64, denom: f64, bound: f64, d0s: &[f64]) -> Oracle {
    let mut i_star = 0;
    for i in 1..zp.len() {
        if zp[i - 1] / denom < bound && bound <= zp[i] / denom {
            i_star = i;
            break;
        }
    }
    assert!(i_star > 0);
    let g = s_star - 2.0;
    let cap = |x: f64| {
        let mut best = -1i64;
        let mut m = 0i64;
        while (m as f64) < 1.0 + x {
            best = m;
            m += 1;
        }
        best
    };
    let cap_minus = cap((zp[i_star] + zm[i_star + 2]) / (denom * g));
    let cap_plus = cap((zp[i_star - 1] - zm[1]) / (denom * g));
    let minus: Vec<i64> = (0..=cap_minus)
        .filter(|&m| {
            (1..=i_star + 2).any(|i| d0s.iter().any(|&d| -zm[i] / denom + g * (m as f64 - d) < bound))
        })
        .collect();
    let plus: Vec<i64> = (0..=cap_plus)
        .filter(|&m| (0..i_star).any(|i| zp[i] / denom - g * (m as f64 - 1.0) < bound))
        .collect();
    let mut z_under = f64::NEG_INFINITY;
    for &m in &minus {
        for i in 1..=i_star + 2 {
            for &d in d0s {
                z_under = z_under.max(-zm[i] / denom + g * (m as f64 - d));
            }
        }
    }
    let mut z_over = f64::NEG_INFINITY;
    for &m in &plus {
        for i in 0..i_star {
            z_over = z_over.max(zp[i] / denom - g * (m as f64 - 1.0));
        }
    }
    Oracle { i_star, cap_minus, cap_plus, minus, plus, z_under, z_over }
}

fn strip_zeros(cp: &CornerParams) -> (Vec<f64>, Vec<f64>) {
    let sq = compute_quantities(cp).unwrap();
    let zm = find_zeros(Kind::Minus, &sq).unwrap().locations();
    let zp = find_zeros(Kind::Plus, &sq).unwrap().locations();
    (zm, zp)
}

fn assert_matches(cw: &CornerWeights, o: &Oracle) {
    assert_eq!(cw.i_star, o.i_star);
    assert_eq!(cw.sets.cap_minus, o.cap_minus);
    assert_eq!(cw.sets.cap_plus, o.cap_plus);
    assert_eq!(cw.sets.members_minus, o.minus);
    assert_eq!(cw.sets.members_plus, o.plus);
    assert!((cw.z.z_under - o.z_under).abs() <= 1e-10, "{} vs {}", cw.z.z_under, o.z_under);
    if o.z_over.is_finite() {
        assert!((cw.z.z_over - o.z_over).abs() <= 1e-10);
    } else {
        assert_eq!(cw.z.z_over, f64::NEG_INFINITY);
    }
}

#[test]
fn worked_config_matches_enumeration() {
    let a = InterfaceAngle { q: 1, p: 3 };
    let g = global_weights(a, a, [0.0, 0.0], 0.5, 3.5).unwrap();
    let cp = a.corner_params(0.0, 0.5).unwrap();
    let (zm, zp) = strip_zeros(&cp);
    let o = oracle(&zm, &zp, 3.5, PI - 2.0 * a.radians(), 3.0, &d0_grid(1e-4));
    for c in g.corners.iter() {
        assert_matches(c.as_ref().unwrap(), &o);
    }
    let star = o.z_under.max(o.z_over);
    assert!((g.h_star - star).abs() <= 1e-10 && (g.f_star - star).abs() <= 1e-10);
    let lower = 2f64.max(star);
    assert_eq!(g.h7.case_tag, CaseTag::H7Generic);
    assert!((g.h7.lower - lower).abs() <= 1e-10);
    assert_eq!(g.h7.upper, 3.0);
    assert_eq!(g.h7.empty, lower >= 3.0);
}

#[test]
fn model_corner_windows_match_formulas() {
    let cp = CornerParams::new(3f64.sqrt(), 0.0, 0.5, 1, 3).unwrap();
    let (zm, zp) = strip_zeros(&cp);
    let delta = PI / 3.0;
    let mw = model_corner_weights(&cp, 3.5).unwrap();
    let grid = d0_grid(1e-3);
    let o1 = oracle(&zm, &zp, 3.5, 2.0 * delta, 3.0, &grid);
    let o2 = oracle(&zm, &zp, 3.5, 2.0 * delta, 3f64.min(PI / delta), &grid);
    assert_matches(&mw.j1, &o1);
    assert_matches(&mw.j2, &o2);
    let z2 = o2.z_under.max(o2.z_over);
    assert!((mw.h9.lower - 2f64.max(z2)).abs() <= 1e-10);
    assert!((mw.h9.upper - 3.0).abs() <= 1e-15);
    let thm = 3f64.min(PI / delta).min(2.0 * 1.5 + zm[1] / (2.0 * delta));
    assert!((mw.thm43.upper - thm).abs() <= 1e-12 && mw.thm43.lower == 2.0);
}

#[test]
fn universal_reading_is_never_larger() {
    let a = InterfaceAngle { q: 1, p: 3 };
    let g = global_weights(a, a, [0.0, 0.0], 0.5, 3.5).unwrap();
    let c = g.corners[0].as_ref().unwrap();
    assert!(c.sets.members_minus_universal.iter().all(|m| c.sets.members_minus.contains(m)));
    assert!(c.z.z_under_universal <= c.z.z_under);
}

#[test]
fn rational_limit_is_constant() {
    let l = limsup_weights(PI / 6.0, PI / 6.0, [0.0, 0.0], 0.5, 3.5, &[1e-3, 1e-6, 1e-9, 1e-12], 1e-12).unwrap();
    assert!(l.steps.iter().all(|s| s.angles == [InterfaceAngle { q: 1, p: 3 }; 2]));
    assert!(l.converged && l.spread == [0.0, 0.0]);
}

#[test]
fn limsup_tails_are_self_consistent() {
    let d = PI * (2f64.sqrt() - 1.0) / 2.0;
    let short = limsup_weights(d, 0.6, [0.2, 0.0], 0.5, 3.5, &[1e-2, 1e-3, 1e-4], 1.0).unwrap();
    let long = limsup_weights(d, 0.6, [0.2, 0.0], 0.5, 3.5, &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7], 1.0).unwrap();
    let tol = short.spread[0].max(long.spread[0]).max(1e-3);
    assert!((short.h_star - long.h_star).abs() <= tol + 0.05, "{} vs {}", short.h_star, long.h_star);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_corners_match_enumeration(
        a2 in 0.2f64..4.0,
        a3 in -3.0f64..3.0,
        k in 0.1f64..0.9,
        s_star in 2.3f64..4.0,
        qp in prop::sample::select(vec![(1u32, 3u32), (1, 4), (2, 5), (1, 5), (3, 7)]),
    ) {
        let cp = CornerParams::new(a2, a3, k, qp.0, qp.1).unwrap();
        let sq = compute_quantities(&cp).unwrap();
        prop_assume!((sq.q2 - 1.0).abs() > 1e-6);
        let (zm, zp) = strip_zeros(&cp);
        let denom = 2.0 * cp.delta();
        prop_assume!(zp.iter().any(|&z| z / denom >= 3.0) && zp[0] / denom < 3.0);
        prop_assume!(zp.iter().all(|&z| (z / denom - 3.0).abs() > 1e-9));
        let cw = corner_weights(&zm, &zp, s_star, denom, 3.0);
        prop_assume!(cw.is_ok());
        let cw = cw.unwrap();
        let o = oracle(&zm, &zp, s_star, denom, 3.0, &d0_grid(1e-3));
        assert_matches(&cw, &o);
    }

    #[test]
    fn caps_nonincreasing_in_s_star(a2 in 0.2f64..4.0, a3 in 0.0f64..3.0, k in 0.1f64..0.9) {
        let cp = CornerParams::new(a2, a3, k, 1, 3).unwrap();
        let (zm, zp) = strip_zeros(&cp);
        let denom = 2.0 * cp.delta();
        let ladder = [2.2, 2.5, 3.0, 3.5, 4.0];
        let caps: Vec<_> = ladder
            .iter()
            .filter_map(|&s| corner_weights(&zm, &zp, s, denom, 3.0).ok())
            .map(|c| (c.sets.cap_minus, c.sets.cap_plus))
            .collect();
        for w in caps.windows(2) {
            prop_assert!(w[1].0 <= w[0].0 && w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn h7_dispatch_is_exclusive(q0 in any::<bool>(), q1 in any::<bool>()) {
        let a = InterfaceAngle { q: 1, p: 3 };
        let cot = 1.0 / a.radians().tan();
        let alpha = |one: bool| if one { -cot / 0.5 } else { 0.0 };
        let g = global_weights(a, a, [alpha(q0), alpha(q1)], 0.5, 3.5).unwrap();
        let want = match (q0, q1) {
            (false, false) => CaseTag::H7Generic,
            (true, false) => CaseTag::H7Q0Eq1,
            (false, true) => CaseTag::H7Q1Eq1,
            (true, true) => CaseTag::H7BothEq1,
        };
        prop_assert_eq!(g.h7.case_tag, want);
        prop_assert_eq!(g.q_is_one, [q0, q1]);
    }
}
