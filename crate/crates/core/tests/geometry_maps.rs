use muskat_core::geometry::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn chart() -> InterfaceChart {
    InterfaceChart::new(&DomainSpec::default()).unwrap()
}

/// A smooth displacement of prescribed amplitude, vanishing at neither end.
fn wave(c: &InterfaceChart, amp: f64, k: f64, phase: f64) -> FnDisplacement<impl Fn(f64) -> (f64, f64)> {
    let l = c.length;
    FnDisplacement {
        f: move |w: f64| {
            let t = k * PI * w / l + phase;
            (amp * t.sin(), amp * k * PI / l * t.cos())
        },
        sup: amp,
    }
}

fn tube_sample(c: &InterfaceChart, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let u = rng.gen_range(0.0..c.spec.a);
    let lam = rng.gen_range(-0.95..0.95) * c.support();
    let (p, l) = (c.point_u(u), c.l_field_u(u));
    [p[0] + lam * l[0], p[1] + lam * l[1]]
}

#[test]
fn default_mesh_angles_and_refinement() {
    let c = chart();
    let m0 = Mesh::build(&c, MeshParams::default()).unwrap();
    let m1 = Mesh::build(&c, MeshParams::default().refined(1)).unwrap();
    for a in m0.contact_angles(&m0.nodes) {
        assert!((a - PI / 6.0).abs() < 1e-3, "angle {a}");
    }
    let ratio = m1.max_diameter() / m0.max_diameter();
    assert!((ratio - 0.5).abs() < 0.05, "diameter ratio {ratio}");
    let growth = m1.nodes.len() as f64 / m0.nodes.len() as f64;
    assert!((growth - 4.0).abs() < 0.3, "node growth {growth}");
    assert_eq!(m0.interface.len(), 33);
    assert!(m0.has(m0.interface[0], Tag::CORNER0) && m0.has(*m0.interface.last().unwrap(), Tag::CORNER1));
}

#[test]
fn eps_equal_to_a_over_six_rejected() {
    let spec = DomainSpec { a1: 3.0, a2_len: 2.0, eps: 1.0 / 6.0, ..Default::default() };
    assert!(spec.validate().is_err());
    let spec = DomainSpec { eps: spec.eps * 0.999, ..spec };
    assert!(spec.validate().is_ok());
}

#[test]
fn transversal_field_branches() {
    let c = chart();
    assert_eq!(c.transversal_field(0.0), [0.0, -1.0]);
    assert_eq!(c.transversal_field(c.length), [0.0, 1.0]);
    let eps = c.spec.eps;
    for j in 0..=400 {
        let u = j as f64 / 400.0;
        let p = c.point_u(u);
        let l = c.l_field_u(u);
        assert!((l[0].hypot(l[1]) - 1.0).abs() < 1e-14);
        let r = p[0].hypot(p[1]).min(p[0].hypot(p[1] - 1.0));
        if r > 2.0 * eps {
            let n = c.normal_u(u);
            assert!((l[0] - n[0]).abs() < 1e-12 && (l[1] - n[1]).abs() < 1e-12);
        }
        // transversality: 𝔩 points into Ω₁
        let n = c.normal_u(u);
        assert!(l[0] * n[0] + l[1] * n[1] > 0.0);
    }
}

#[test]
fn cutoff_properties() {
    let c = chart();
    let w = c.eps1 * c.b0;
    assert_eq!(c.cutoff(0.0), 1.0);
    assert_eq!(c.cutoff(3.0 * w), 0.0);
    assert_eq!(c.cutoff(-3.0 * w), 0.0);
    assert!(w < c.spec.eps / 2.0);
    let mut slope: f64 = 0.0;
    for j in 0..=4000 {
        let lam = -3.0 * w + 6.0 * w * j as f64 / 4000.0;
        let x = c.cutoff(lam);
        assert!((0.0..=1.0).contains(&x));
        slope = slope.max(c.cutoff_deriv(lam).abs());
    }
    assert!(slope * c.b0 <= c.c0 * (1.0 + 1e-9), "C₀ = {}", c.c0);
}

#[test]
fn zero_displacement_is_identity() {
    let c = chart();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let x = tube_sample(&c, &mut rng);
        assert_eq!(c.hanzawa_forward(x, &ZeroDisplacement).unwrap(), x);
        let j = c.jacobian(x, &ZeroDisplacement).unwrap();
        assert!((j - nalgebra::Matrix2::identity()).abs().max() < 1e-12);
    }
}

#[test]
fn identity_outside_tube() {
    let c = chart();
    let s = wave(&c, c.b0 / 8.0, 3.0, 0.3);
    for x in [[0.9, 0.5], [0.5, -0.4], [0.05, 1.4], [0.6, 1.2]] {
        assert_eq!(c.hanzawa_forward(x, &s).unwrap(), x);
    }
}

#[test]
fn round_trip_and_diffeomorphism() {
    let c = chart();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..10 {
        let s = wave(&c, c.b0 / 8.0, rng.gen_range(1.0..5.0), rng.gen_range(0.0..6.0));
        for _ in 0..100 {
            let x = tube_sample(&c, &mut rng);
            let y = c.hanzawa_forward(x, &s).unwrap();
            let back = c.hanzawa_inverse(y, &s).unwrap();
            let err = (back[0] - x[0]).hypot(back[1] - x[1]);
            assert!(err < 1e-10, "trial {trial}: x={x:?} err={err:e}");
            assert!(c.jacobian(x, &s).unwrap().determinant() > 0.0);
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let c = chart();
    let s = wave(&c, c.b0 / 8.0, 2.0, 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for _ in 0..50 {
        let x = tube_sample(&c, &mut rng);
        let j = c.jacobian(x, &s).unwrap();
        for col in 0..2 {
            // fourth-order central stencil: χ varies on the short scale ε₁𝔟₀
            let at = |t: f64| {
                let mut z = x;
                z[col] += t * h;
                c.hanzawa_forward(z, &s).unwrap()
            };
            let (a, b, d, e) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
            for row in 0..2 {
                let fd = (a[row] - 8.0 * b[row] + 8.0 * d[row] - e[row]) / (12.0 * h);
                assert!((fd - j[(row, col)]).abs() < 1e-6, "entry ({row},{col}): {fd} vs {}", j[(row, col)]);
            }
        }
    }
}

#[test]
fn tube_violation_reported() {
    let c = chart();
    let s = wave(&c, c.tube_limit * 1.01, 1.0, 0.5);
    assert!(matches!(c.hanzawa_forward([0.1, 0.5], &s), Err(muskat_core::Error::TubeViolation { .. })));
}

#[test]
fn corner_displacement_along_wall() {
    let c = chart();
    let s = wave(&c, c.b0 / 8.0, 2.0, 0.9);
    let (s0, _) = (s.f)(0.0);
    let y0 = c.hanzawa_forward([0.0, 0.0], &s).unwrap();
    assert!(y0[0].abs() < 1e-15 && (y0[1] + s0).abs() < 1e-14);
    let (s1, _) = (s.f)(c.length);
    let y1 = c.hanzawa_forward([0.0, 1.0], &s).unwrap();
    assert!(y1[0].abs() < 1e-15 && (y1[1] - 1.0 - s1).abs() < 1e-12);
}

#[test]
fn metric_on_orthonormal_and_corner_charts() {
    let c = chart();
    let mid = 0.5 * c.length;
    let (sm, s1) = c.metric_coeffs(mid, 0.0, 0.0).unwrap();
    assert!((sm - 1.0).abs() < 1e-12 && s1.abs() < 1e-12);
    // near A₀ with 𝔩 = (0,−1): λ = φ₀(x₁) − x₂, so |∇λ|² = 1 + φ₀′²
    let w = 0.5 * c.spec.eps;
    let u = c.u_of_omega(w);
    let g1 = c.profile.eval(u).1;
    let (sm, _) = c.metric_coeffs(w, 0.0, 0.0).unwrap();
    assert!((sm - (1.0 + 1.0 / (g1 * g1))).abs() < 1e-10);
    // away from the corners ∂𝒮₁/∂𝔰′ = −1
    let (_, a) = c.metric_coeffs(mid, 0.0, 1e-4).unwrap();
    assert!((a / 1e-4 + 1.0).abs() < 1e-6);
}

#[test]
fn weighted_norm_of_pure_power_is_one() {
    let c = chart();
    let m = Mesh::build(&c, MeshParams::default()).unwrap();
    let corners = c.spec.corners();
    let r: Vec<f64> = m
        .nodes
        .iter()
        .map(|p| corners.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
        .collect();
    let v: Vec<f64> = r.iter().map(|r| r.powf(3.5)).collect();
    assert!((weighted_sup_norm(&m.nodes, &v, 3.5, corners) - 1.0).abs() < 1e-12);
}

#[test]
fn mesh_export_has_header_and_counts() {
    let c = chart();
    let m = Mesh::build(&c, MeshParams { rows: 8, cols2: 2, cols1: 4, ..Default::default() }).unwrap();
    let text = m.export();
    assert!(text.starts_with("# muskat mesh v1"));
    assert!(text.contains(&format!("nodes {}", m.nodes.len())));
    assert!(text.contains(&format!("triangles {}", m.tris.len())));
    assert_eq!(text.lines().count(), 5 + m.nodes.len() + m.tris.len());
}

#[test]
fn unequal_angles_use_hermite_profile() {
    let spec = DomainSpec { delta0: 0.35, delta1: 0.6, ..Default::default() };
    let c = InterfaceChart::new(&spec).unwrap();
    let m = Mesh::build(&c, MeshParams::default()).unwrap();
    let [a0, a1] = m.contact_angles(&m.nodes);
    assert!((a0 - 0.35).abs() < 1e-3 && (a1 - 0.6).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_polar_round_trip(r in 1e-3f64..10.0, th in 0.0f64..PI / 4.0) {
        let y = [r * th.cos(), r * th.sin()];
        let x = log_polar(y).unwrap();
        let z = log_polar_inverse(x);
        prop_assert!((z[0] - y[0]).abs() <= 1e-12 * r && (z[1] - y[1]).abs() <= 1e-12 * r);
        prop_assert!((x[1] - th).abs() < 1e-14);
    }

    #[test]
    fn hanzawa_round_trip(u in 0.0f64..1.0, t in -0.95f64..0.95, k in 1.0f64..6.0, ph in 0.0f64..6.3) {
        let c = chart();
        let s = wave(&c, c.b0 / 8.0, k, ph);
        let (p, l) = (c.point_u(u), c.l_field_u(u));
        let lam = t * c.support();
        let x = [p[0] + lam * l[0], p[1] + lam * l[1]];
        let back = c.hanzawa_inverse(c.hanzawa_forward(x, &s).unwrap(), &s).unwrap();
        prop_assert!((back[0] - x[0]).hypot(back[1] - x[1]) < 1e-10);
    }
}
