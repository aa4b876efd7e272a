use collapse_core::affine::*;
use collapse_core::dust::{trajectory_with_g, DustData, DustOptions};
use collapse_core::Matrix3;
use proptest::prelude::*;

fn mat(v: [f64; 9]) -> Matrix3 {
    Matrix3::from_flat(&v)
}

fn energy(a: &Matrix3, adot: &Matrix3, delta: f64, gamma: f64) -> f64 {
    let kinetic: f64 = adot.to_flat().iter().map(|v| v * v).sum::<f64>() / 2.0;
    kinetic + delta / (gamma - 1.0) * a.det().powf(1.0 - gamma)
}

proptest! {
    // The energy is conserved by the vector field: its derivative along the
    // flow, taken by central differences, vanishes to discretization error.
    #[test]
    fn energy_is_a_first_integral(
        a in prop::array::uniform9(-0.4f64..0.4),
        b in prop::array::uniform9(-1.0f64..1.0),
        gamma in 1.05f64..2.0,
        delta in 0.1f64..3.0,
    ) {
        let a = Matrix3::identity() + mat(a);
        prop_assume!(a.det() > 0.1);
        let adot = mat(b);
        let acc = sideris_rhs(&a, delta, gamma).unwrap();
        let h = 1e-5;
        let plus = energy(&(a + adot.scale(h)), &(adot + acc.scale(h)), delta, gamma);
        let minus = energy(&(a - adot.scale(h)), &(adot - acc.scale(h)), delta, gamma);
        let scale = energy(&a, &adot, delta, gamma) + adot.frobenius_sq() + acc.frobenius_sq();
        prop_assert!(((plus - minus) / (2.0 * h)).abs() < 1e-7 * scale);
        let rate = energy_rate(&AffineState { a, adot, delta }, gamma).unwrap();
        prop_assert!(rate.abs() < 1e-12 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn sideris_energy_is_conserved_to_one_hundred(
        a in prop::array::uniform9(-0.3f64..0.3),
        b in prop::array::uniform9(-1.0f64..1.0),
        gamma in 1.1f64..1.67,
        delta in 0.1f64..2.0,
    ) {
        let a = Matrix3::identity() + mat(a);
        prop_assume!(a.det() > 0.2);
        let run = sideris_evolve(AffineState { a, adot: mat(b), delta }, gamma, 100.0, &SiderisOptions::default()).unwrap();
        prop_assert!(run.energy_drift <= 1e-8, "drift {}", run.energy_drift);
        prop_assert!(run.samples.iter().all(|s| s.det > 0.0));
    }
}

#[test]
fn isotropic_data_stay_isotropic_and_match_the_scalar_reduction() {
    for (gamma, mode) in [(1.4, RadialMode::SimpleAffine { gamma: 1.4 }), (4.0 / 3.0, RadialMode::Gw)] {
        let run = sideris_evolve(AffineState::isotropic(1.0, 0.3, 1.0), gamma, 50.0, &SiderisOptions::default()).unwrap();
        let radial = radial_scale_evolve(
            RadialScale { lambda: 1.0, lambdadot: 0.3, delta: 1.0, mode },
            50.0,
            &RadialOptions { n_out: 201, ..Default::default() },
        )
        .unwrap();
        for (s, r) in run.samples.iter().zip(&radial.samples).step_by(20) {
            assert_eq!(s.t, r.t);
            for (k, v) in s.a.iter().enumerate() {
                if k % 4 == 0 {
                    assert!((v - s.a[0]).abs() <= 1e-14 * v.abs());
                    assert!((v - r.lambda).abs() <= 1e-9 * r.lambda, "t = {}: {} vs {}", s.t, v, r.lambda);
                } else {
                    assert!(v.abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn sideris_flow_expands_linearly() {
    let a = mat([1.2, 0.1, 0.0, -0.2, 0.9, 0.3, 0.0, 0.1, 1.1]);
    let adot = mat([0.0, 0.2, 0.0, 0.0, 0.5, 0.0, 0.1, 0.0, -0.3]);
    let run = sideris_evolve(AffineState { a, adot, delta: 1.0 }, 1.4, 1e3, &SiderisOptions::default()).unwrap();
    let n = run.samples.len();
    let (p, q) = (run.samples[n / 10].singular_over_t, run.samples[n - 1].singular_over_t);
    for k in 0..3 {
        assert!(q[k] > 0.0);
        assert!((q[k] - p[k]).abs() < 0.05 * q[k], "{p:?} vs {q:?}");
    }
}

#[test]
fn simple_affine_scale_grows_linearly() {
    let s = RadialScale { lambda: 1.0, lambdadot: 0.0, delta: 1.0, mode: RadialMode::SimpleAffine { gamma: 1.4 } };
    let run = radial_scale_evolve(s, 1e5, &RadialOptions::default()).unwrap();
    let RadialOutcome::Expanding { rate, rate_change, exponent } = run.outcome else { panic!("{:?}", run.outcome) };
    assert!(rate > 0.0);
    assert!(rate_change < 1e-3, "{rate_change}");
    assert!((exponent - 1.0).abs() < 1e-3);
    // lambda'(inf)² / 2 = E(0)
    assert!((rate - (2.0 * run.energy0).sqrt()).abs() < 1e-2 * rate);
}

#[test]
fn gw_energy_is_constant() {
    let s = RadialScale { lambda: 1.0, lambdadot: 0.0, delta: 1.0, mode: RadialMode::Gw };
    assert_eq!(radial_energy(&s), 1.0);
    let run = radial_scale_evolve(s, 100.0, &RadialOptions::default()).unwrap();
    assert!(run.samples.iter().all(|p| (p.energy - 1.0).abs() < 1e-10));
    assert!(run.energy_drift < 1e-10);
}

#[test]
fn gw_collapse_matches_constant_mass_dust() {
    let (delta, l1) = (-1.0, -0.5);
    let s = RadialScale { lambda: 1.0, lambdadot: l1, delta, mode: RadialMode::Gw };
    let run = radial_scale_evolve(s, 10.0, &RadialOptions::default()).unwrap();
    let RadialOutcome::Collapsing { t_star, turning_point, exponent, expected_exponent } = run.outcome else { panic!() };
    assert_eq!(turning_point, None);
    assert!((exponent - 2.0 / 3.0).abs() < 0.01, "{exponent}");
    assert!((expected_exponent - 2.0 / 3.0).abs() < 1e-15);
    let dust = trajectory_with_g(0.5, -delta, 0.0, DustData::uniform(1.0, l1), &DustOptions::default()).unwrap();
    assert!((t_star - dust.t_star_quadrature).abs() < 1e-8 * t_star, "{t_star} vs {}", dust.t_star_quadrature);
    assert!(run.energy_drift < 1e-9);
}

#[test]
fn gw_dichotomy_follows_the_energy_sign() {
    for i in 0..=16 {
        let l1 = -2.0 + 0.25 * i as f64;
        let s = RadialScale { lambda: 1.0, lambdadot: l1, delta: -1.0, mode: RadialMode::Gw };
        let e = 0.5 * l1 * l1 - 1.0;
        let run = radial_scale_evolve(s, 200.0, &RadialOptions::default()).unwrap();
        match run.outcome {
            RadialOutcome::Expanding { exponent, .. } => {
                assert!(e >= 0.0 && l1 > 0.0, "l1 = {l1}");
                assert!(exponent > 0.6);
            }
            RadialOutcome::Collapsing { turning_point, .. } => {
                assert!(e < 0.0 || l1 < 0.0, "l1 = {l1}");
                assert_eq!(turning_point.is_some(), l1 > 0.0);
            }
        }
    }
}

#[test]
fn errors_on_invalid_data() {
    let bad = AffineState { a: Matrix3::diag([1.0, 1.0, -1.0]), adot: Matrix3::zero(), delta: 1.0 };
    assert!(matches!(sideris_evolve(bad, 1.4, 1.0, &SiderisOptions::default()), Err(AffineError::NonPositiveDet(_))));
    let neg = AffineState::isotropic(1.0, 0.0, -1.0);
    assert!(matches!(sideris_evolve(neg, 1.4, 1.0, &SiderisOptions::default()), Err(AffineError::NonPositiveDelta(_))));
    let s = RadialScale { lambda: 0.0, lambdadot: 0.0, delta: 1.0, mode: RadialMode::Gw };
    assert!(matches!(radial_scale_evolve(s, 1.0, &RadialOptions::default()), Err(AffineError::NonPositiveLambda(_))));
    assert!(matches!(lane_emden_shoot(-1.0, &LaneEmdenOptions::default()), Err(AffineError::NegativeDelta(_))));
    let narrow = LaneEmdenOptions { bracket: Some((1.0, 2.0)), ..Default::default() };
    assert!(matches!(lane_emden_shoot(0.0, &narrow), Err(AffineError::NoSignChange { .. })));
}

// Fixed-step RK4 from the same series start, with the classical first zero
// of the index-3 Lane–Emden function as the reference.
fn rk4_w_at_one(w0: f64, delta: f64) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    let f = |r: f64, y: [f64; 2]| [y[1], -2.0 * y[1] / r - pi * y[0].powi(3) - 0.75 * delta];
    let r0 = 1e-3;
    let c = pi * w0.powi(3) + 0.75 * delta;
    let mut y = [w0 - c * r0 * r0 / 6.0, -c * r0 / 3.0];
    let n = 200_000;
    let h = (1.0 - r0) / n as f64;
    for i in 0..n {
        let r = r0 + i as f64 * h;
        let k1 = f(r, y);
        let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    (y[0], y[1])
}

#[test]
fn lane_emden_without_source_is_the_scaled_polytrope() {
    let p = lane_emden_shoot(0.0, &LaneEmdenOptions::default()).unwrap();
    let xi1 = 6.896_848_619_376_96;
    assert!((p.w0 - xi1 / std::f64::consts::PI.sqrt()).abs() < 1e-8, "w0 = {}", p.w0);
    assert!(p.w_at_1.abs() <= 1e-10);
    assert!(p.w_prime_at_1 < 0.0);
    let (w1, dw1) = rk4_w_at_one(p.w0, 0.0);
    assert!(w1.abs() < 1e-8 && (dw1 - p.w_prime_at_1).abs() < 1e-8);
    assert!(p.w[..p.w.len() - 1].iter().all(|&w| w > 0.0));
    assert!(p.vacuum_ratio.0 > 0.0 && p.vacuum_ratio.1.is_finite());
}

#[test]
fn lane_emden_with_source_has_a_physical_vacuum() {
    for delta in [0.1, 1.0, 3.0] {
        let p = lane_emden_shoot(delta, &LaneEmdenOptions::default()).unwrap();
        assert!(p.w_at_1.abs() <= 1e-10);
        assert!(p.w_prime_at_1 < 0.0);
        assert!(p.w[..p.w.len() - 1].iter().all(|&w| w > 0.0));
        let (lo, hi) = p.vacuum_ratio;
        assert!(lo > 0.0 && hi < 10.0 * lo, "{lo} {hi}");
        assert!(rk4_w_at_one(p.w0, delta).0.abs() < 1e-8);
    }
}

#[test]
fn weak_source_branch_is_nearly_quadratic() {
    let delta = 1e-3;
    let p = lane_emden_shoot(delta, &LaneEmdenOptions { branch: LaneEmdenBranch::Source, ..Default::default() }).unwrap();
    assert_eq!(p.roots_seen.len(), 2);
    assert!((p.w0 - delta / 8.0).abs() < 1e-6 * delta);
    for (r, w) in p.r.iter().zip(&p.w) {
        assert!((w - delta / 8.0 * (1.0 - r * r)).abs() < 1e-6 * delta);
    }
}

#[test]
fn sideris_enthalpy_vanishes_linearly() {
    let (delta, gamma) = (1.0, 1.4);
    let (w, dw) = sideris_enthalpy(delta, gamma, 1.0);
    assert_eq!(w, 0.0);
    assert!((dw + delta * (gamma - 1.0) / gamma).abs() < 1e-15);
    let (w0, _) = sideris_enthalpy(delta, gamma, 0.0);
    assert!((w0 - delta * (gamma - 1.0) / (2.0 * gamma)).abs() < 1e-15);
}
