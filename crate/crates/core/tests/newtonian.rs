use collapse_core::newtonian::*;
use proptest::prelude::*;
use std::f64::consts::PI;

const GAMMAS: [f64; 4] = [1.0, 1.1, 1.2, 1.3];

fn params(g: f64) -> GammaParams {
    GammaParams::new(g).unwrap()
}

// Un-rescaled right-hand side written out from h and G directly, for any γ.
fn physical_rhs(g: f64, y: f64, rho: f64, w: f64) -> [f64; 2] {
    let h = 2.0 * w * w + (g - 1.0) * w - 4.0 * PI * rho * w / (4.0 - 3.0 * g) + (g - 1.0) * (2.0 - g);
    let den = g * rho.powf(g - 1.0) - y * y * w * w;
    [y * rho * h / den, (4.0 - 3.0 * g - 3.0 * w) / y - y * w * h / den]
}

proptest! {
    #[test]
    fn friedmann_is_a_fixed_point(gi in 0usize..4, y in 0.01f64..1.5) {
        let p = params(GAMMAS[gi]);
        let (rho, omega) = p.friedmann();
        let r = rhs_newtonian(NewtState { y, rho, omega }, p).unwrap();
        prop_assert!(r[0].abs() < 1e-12 * rho && r[1].abs() < 1e-12);
    }

    #[test]
    fn far_field_solves_the_system(gi in 0usize..4, y in 1.0f64..1e3) {
        let p = params(GAMMAS[gi]);
        let (rho, omega) = p.far_field(y);
        let r = rhs_newtonian(NewtState { y, rho, omega }, p).unwrap();
        let exact = p.tail_exponent() * rho / y;
        prop_assert!((r[0] - exact).abs() <= 1e-12 * exact.abs(), "{} vs {}", r[0], exact);
        prop_assert!(r[1].abs() <= 1e-12 / y);
    }

    #[test]
    fn rhs_agrees_with_the_unrescaled_form(gi in 1usize..4, y in 0.1f64..10.0, rho in 0.01f64..1.0, w in 0.05f64..1.0) {
        let g = GAMMAS[gi];
        let p = params(g);
        let r = rhs_newtonian(NewtState { y, rho, omega: w }, p);
        prop_assume!(r.is_ok());
        let r = r.unwrap();
        let q = physical_rhs(g, y, rho, w);
        for i in 0..2 {
            prop_assert!((r[i] - q[i]).abs() <= 1e-10 * (1.0 + q[i].abs()));
        }
    }

    #[test]
    fn sonic_state_annihilates_denominator_and_numerator(gi in 0usize..4, y in 2.0f64..3.0) {
        let p = params(GAMMAS[gi]);
        let e = sonic_taylor(y, Branch::Type1, p, 8).unwrap();
        let s = e.local_eval(y).unwrap().0;
        prop_assert_eq!(e.rho[0], s.rho);
        prop_assert!(denominator(s, p).abs() < 1e-12);
        let sys = NewtonianSystem::new(p);
        use collapse_core::numerics::SingularSystem;
        prop_assert!(sys.num_u(&y, &s.rho, &s.omega).abs() < 1e-12);
    }
}

#[test]
fn isothermal_low_order_coefficients() {
    let p = GammaParams::isothermal();
    let e = sonic_taylor(2.5, Branch::Type1, p, 4).unwrap();
    assert_eq!((e.rho[0], e.omega[0]), (0.4, 0.4));
    assert!((e.rho[1] + 0.16).abs() < 1e-15);
    // positive: omega increases through the sonic point on this branch
    assert!((e.omega[1] - 0.08).abs() < 1e-15);
    let h = sonic_taylor(2.5, Branch::Type2, p, 4).unwrap();
    assert!((h.rho[1] + 0.08).abs() < 1e-15);
    assert_eq!(h.omega[1], 0.0);
}

#[test]
fn explicit_recursion_matches_generic_series_method() {
    let p = GammaParams::isothermal();
    for &y in &[2.1, 2.5, 2.9] {
        let e = sonic_taylor(y, Branch::Type1, p, 25).unwrap();
        let (rho, omega) = sonic_taylor_generic(y, Branch::Type1, p, 25).unwrap();
        for k in 0..=25 {
            let scale = 1.0 + e.rho[k].abs();
            assert!((e.rho[k] - rho[k]).abs() < 1e-9 * scale, "rho_{k} at {y}");
            assert!((e.omega[k] - omega[k]).abs() < 1e-9 * (1.0 + e.omega[k].abs()), "omega_{k} at {y}");
        }
    }
}

#[test]
fn coefficients_obey_the_growth_bound() {
    let e = sonic_taylor(2.5, Branch::Type1, GammaParams::isothermal(), 40).unwrap();
    let c = e.growth_constant;
    assert!(c.is_finite() && c > 0.0);
    for n in 2..=40 {
        let bound = c.powi(n as i32) / (n * n) as f64;
        assert!(e.rho[n].abs() <= bound * (1.0 + 1e-12), "rho_{n}");
        assert!(e.omega[n].abs() <= bound * (1.0 + 1e-12), "omega_{n}");
    }
}

#[test]
fn truncations_agree_within_tail_estimate() {
    let p = GammaParams::isothermal();
    let a = sonic_taylor(2.5, Branch::Type1, p, 40).unwrap();
    let b = sonic_taylor(2.5, Branch::Type1, p, 39).unwrap();
    let y = 2.5 - a.delta_trust / 2.0;
    let (sa, tail) = a.local_eval(y).unwrap();
    let (sb, _) = b.local_eval(y).unwrap();
    assert!((sa.rho - sb.rho).abs() <= tail.max(1e-16));
    assert!((sa.omega - sb.omega).abs() <= tail.max(1e-16));
    assert!(matches!(a.local_eval(2.5 - 2.0 * a.delta_trust), Err(NewtonianError::OutsideTrustRadius { .. })));
}

#[test]
fn series_matches_integrated_continuation() {
    use collapse_core::numerics::{integrate_ivp, IvpOptions};
    for &g in &GAMMAS {
        let p = params(g);
        let e = sonic_taylor(2.5, Branch::Type1, p, 40).unwrap();
        let d = e.delta_trust;
        let f = |y: f64, s: &[f64; 2]| rhs_newtonian(NewtState { y, rho: s[0], omega: s[1] }, p).unwrap_or([f64::NAN; 2]);
        for (from, to) in [(2.5 - d, 2.5 - d / 2.0), (2.5 + d, 2.5 + d / 2.0)] {
            let s = e.eval_unchecked(from);
            let r = integrate_ivp(f, from, [s.rho, s.omega], to, &IvpOptions::with_tol(1e-13, 1e-15), &[]).unwrap();
            let t = e.eval_unchecked(to);
            let u = r.y_final();
            assert!((u[0] - t.rho).abs() < 1e-8 && (u[1] - t.omega).abs() < 1e-8, "γ={g} {from}→{to}");
        }
    }
}

#[test]
fn larson_penston_profile() {
    let sol = assemble_lp(GammaParams::isothermal(), &ShootOptions::default(), 1e4).unwrap();
    let d = &sol.diagnostics;
    // independent first-order shooter (scipy DOP853, start 1e-3·y* from the sonic point) gives 2.34119
    assert!((d.y_star - 2.34119).abs() < 2e-4, "{}", d.y_star);
    assert!((d.omega_origin - 1.0 / 3.0).abs() < 1e-6);
    // classical LP values: central density 1.667/(4π) and far-field 8.86/(4π) y^-2, here times 2π
    assert!((d.rho_origin - 1.667 / 2.0).abs() < 5e-3 * 0.8335);
    assert!((sol.tail_fit.prefactor - 8.86 / 2.0).abs() < 5e-3 * 4.43);
    assert!((d.tail_exponent + 2.0).abs() < 0.02);
    assert!(d.omega_at_y_max > 0.99 && d.omega_at_y_max < 1.0);
    assert_eq!(d.sonic_points, 1);
    assert!(d.denominator_pattern && d.rho_gt_omega_left && d.omega_gt_rho_right);
    assert!(d.omega_monotone_left && d.trapped_right && d.absorbing_left);
    assert!(d.max_residual <= 1e-8);
    assert!(d.series_tail < 1e-10);
    let pts = &sol.profile.points;
    assert!(pts.windows(2).all(|w| w[1].y > w[0].y));
    assert_eq!(pts[sol.profile.sonic_index].y, d.y_star);
}

#[test]
fn yahil_profiles() {
    for &g in &GAMMAS[1..] {
        let p = params(g);
        let sol = assemble_lp(p, &ShootOptions::default(), 1e4).unwrap();
        let d = &sol.diagnostics;
        assert!((d.tail_exponent / p.tail_exponent() - 1.0).abs() < 0.01, "γ={g}: {}", d.tail_exponent);
        assert!((d.omega_origin - (4.0 - 3.0 * g) / 3.0).abs() < 2e-3);
        assert!(d.rho_origin > 0.0);
        assert_eq!(d.sonic_points, 1);
        assert!(d.denominator_pattern);
    }
}

#[test]
fn dipping_candidates_never_return() {
    let p = GammaParams::isothermal();
    let o = ShootOptions::default();
    for &y in &[2.4, 2.6, 2.8] {
        assert!(classify(y, p, &o).unwrap().dips());
    }
    for &y in &[2.05, 2.2, 2.3] {
        assert!(!classify(y, p, &o).unwrap().dips());
    }
}

#[test]
fn narrow_window_without_transition_is_reported() {
    let o = ShootOptions { window: Some((2.5, 3.0)), ..Default::default() };
    let err = shoot_friedmann(GammaParams::isothermal(), &o).unwrap_err();
    match err {
        NewtonianError::WindowNotStraddling { class_a, class_b, .. } => {
            assert!(class_a.starts_with("dips") && class_b.starts_with("dips"));
        }
        e => panic!("{e}"),
    }
}

#[test]
fn scaling_symmetry_preserves_the_profile() {
    let sol = assemble_lp(params(1.2), &ShootOptions::default(), 1e3).unwrap();
    let flow = SelfSimilarFlow::new(&sol.profile, 0.7);
    let scaled = flow.scaled(2.0);
    for p in sol.profile.points.iter().step_by(37) {
        let (rho, omega) = scaled.rederive(-0.3, p.y).unwrap();
        assert!((rho - p.rho).abs() <= 1e-9 * p.rho, "{} {} {}", p.y, rho, p.rho);
        assert!((omega - p.omega).abs() <= 1e-9 * p.omega.abs().max(1.0));
    }
}
