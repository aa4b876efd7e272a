use collapse_core::dust::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn flat() -> DustModel {
    DustModel::flat(1.0, 20).unwrap()
}

fn opts() -> DustOptions {
    DustOptions::default()
}

#[test]
fn explicit_solution_is_reproduced_up_to_late_times() {
    let m = flat();
    for &r in &[0.0, 0.25, 0.5, 0.95, 1.0] {
        let g = m.g(r);
        let tr = dust_trajectory(&m, r, DustData::explicit(&m, r), &opts()).unwrap();
        for i in 0..=99 {
            let t = 0.99 * i as f64 / 99.0 / g;
            let chi = tr.at(t).unwrap()[0];
            assert!((chi - (1.0 - g * t).powf(2.0 / 3.0)).abs() < 1e-6, "r={r} t={t}");
        }
        assert!((tr.t_star_quadrature - 1.0 / g).abs() < 1e-8 / g);
        assert!((tr.t_star_ode - tr.t_star_quadrature).abs() < 1e-8 * tr.t_star_quadrature);
        assert!((blowup_exponent(&tr).unwrap().exponent - 2.0 / 3.0).abs() < 1e-3);
    }
}

#[test]
fn homogeneous_cloud_collapses_at_once() {
    let rho = 0.7;
    let m = DustModel::homogeneous(rho).unwrap();
    let map = collapse_map(&m, &[0.0, 0.3, 0.6, 1.0], &opts()).unwrap();
    for p in &map {
        assert!((p.g - (6.0 * PI * rho).sqrt()).abs() < 1e-14);
        assert!((p.t_star - map[0].t_star).abs() < 1e-12);
    }
    let field = eulerian_density(&m, 0.5 / map[0].g, &[0.1, 0.4, 0.8], &opts()).unwrap();
    for s in &field {
        assert!((s.density - field[0].density).abs() < 1e-9 * field[0].density);
    }
}

#[test]
fn collapse_order_follows_the_density() {
    let custom = DustModel::custom(|r| (1.0 - r * r).powi(2) + 0.1 * (1.0 - r)).unwrap();
    for m in [DustModel::flat(1.0, 4).unwrap(), custom] {
        let labels: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let map = collapse_map(&m, &labels, &opts()).unwrap();
        assert!(map.windows(2).all(|w| w[1].t_star > w[0].t_star));
    }
}

#[test]
fn jacobian_matches_the_closed_form() {
    let m = DustModel::flat(1.0, 4).unwrap();
    let labels: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let t = 0.9 / m.g(0.0);
    for s in eulerian_density(&m, t, &labels, &opts()).unwrap() {
        let g = m.g(s.r);
        let a = 1.0 - g * t;
        let exact = a * a * (1.0 - 2.0 / 3.0 * t * s.r * m.g_prime(s.r) / a);
        assert!((s.jacobian - exact).abs() < 1e-6 * exact, "r={}", s.r);
        assert!(s.jacobian > 0.0);
        assert!((s.density - m.rho0(s.r) / exact).abs() <= 1e-6 * s.density);
    }
}

#[test]
fn central_density_diverges_at_first_collapse() {
    let m = flat();
    let t = 0.9999 / m.g(0.0);
    let s = eulerian_density(&m, t, &[0.0], &opts()).unwrap()[0];
    assert!(s.density > 1e6 * m.rho0(0.0));
    let late = eulerian_density(&m, 1.0001 / m.g(0.0), &[0.0], &opts());
    assert!(matches!(late, Err(DustError::LabelPastCollapse { .. })));
}

#[test]
fn no_gravity_or_escaping_data_do_not_collapse() {
    let d = DustData::uniform(1.0, -0.5);
    assert!(matches!(trajectory_with_g(0.5, 0.0, 0.0, d, &opts()), Err(DustError::NoCollapse { .. })));
    let m = flat();
    let escape = (2.0 * m.big_g(0.5)).sqrt() * 1.01;
    let up = DustData::uniform(1.0, escape);
    assert!(matches!(dust_trajectory(&m, 0.5, up, &opts()), Err(DustError::NoCollapse { .. })));
    assert!(matches!(dust_trajectory(&m, 0.5, DustData::uniform(0.0, -1.0), &opts()), Err(DustError::NonPositiveChi0(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn universal_blowup_exponent(r in 0.0f64..1.0, chi0 in 0.2f64..3.0, chi1 in -3.0f64..-0.01) {
        let m = flat();
        let tr = dust_trajectory(&m, r, DustData::uniform(chi0, chi1), &opts()).unwrap();
        let fit = blowup_exponent(&tr).unwrap();
        prop_assert!((fit.exponent - 2.0 / 3.0).abs() < 0.01, "p = {}", fit.exponent);
        prop_assert!((tr.t_star_ode - tr.t_star_quadrature).abs() < 1e-8 * tr.t_star_quadrature);
        prop_assert!(tr.energy_drift() <= 10.0 * opts().rtol, "drift {}", tr.energy_drift());
        let s = tr.samples();
        prop_assert!(s.windows(2).all(|w| w[1].chi < w[0].chi));
    }

    #[test]
    fn average_density_is_decreasing(a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let m = DustModel::custom(|r| (1.0 - r).powi(3)).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-3);
        prop_assert!(m.big_g(hi) < m.big_g(lo));
    }
}

#[test]
fn near_dust_gain_exponent() {
    let run = NearDustRun::new(1.2, 20).unwrap();
    assert_eq!(run.delta(), 1.0 / 6.0);
    assert!(matches!(NearDustRun::new(1.3, 10), Err(DustError::NoGain { .. })));
}

#[test]
fn homogeneous_basis_solves_the_operator() {
    let (a, b) = indicial_roots();
    for tau in [1e-6, 1e-3, 0.1, 1.0] {
        // relative to the size of either term of the operator
        for s in [a, b] {
            assert!(homogeneous_residual(s, tau).abs() <= 1e-12 * 4.0 / 9.0 * tau.powf(s - 2.0));
        }
    }
}

#[test]
fn first_corrector_gains_delta() {
    let run = NearDustRun::new(1.2, 20).unwrap();
    let rep = neardust_phi1(&run, &NearDustGrid::standard(1e-6, 40), leading_source(1.2, 20), run.source_exponent()).unwrap();
    assert!(rep.sup_gain_ratio.is_finite() && rep.sup_gain_ratio > 0.0);
    // bounded uniformly: the ratio stops growing as tau decreases
    let last = rep.sup_by_decade.last().unwrap().1;
    let worst = rep.sup_by_decade.iter().map(|d| d.1).fold(0.0, f64::max);
    assert!(last <= worst && worst < 10.0);
    assert!(rep.sup_derivative_ratios.iter().all(|d| d.is_finite() && *d < 10.0));
    assert_eq!(rep.anchors, (Anchor::Origin, Anchor::TauMax));
}

#[test]
fn first_corrector_solves_its_equation() {
    let run = NearDustRun::new(1.2, 20).unwrap();
    let p = leading_source(1.2, 20);
    for &(tau, r) in &[(0.3, 0.9), (1e-3, 0.7), (0.05, 0.85)] {
        let h = 1e-3 * tau;
        let grid = NearDustGrid { taus: vec![tau - h, tau, tau + h, 1.0], rs: vec![r], strict_origin: false };
        let rep = neardust_phi1(&run, &grid, p, run.source_exponent()).unwrap();
        let v: Vec<f64> = rep.samples.iter().map(|s| s.phi1).collect();
        let second = (v[0] - 2.0 * v[1] + v[2]) / (h * h);
        let lhs = second - 4.0 / (9.0 * tau * tau) * v[1];
        let rhs = -p(tau, r);
        assert!((lhs - rhs).abs() < 1e-5 * rhs.abs().max(4.0 / (9.0 * tau * tau) * v[1].abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn first_corrector_is_linear_in_the_source() {
    let run = NearDustRun::new(1.2, 20).unwrap();
    let grid = NearDustGrid::standard(1e-4, 8);
    let p = leading_source(1.2, 20);
    let a = neardust_phi1(&run, &grid, p, run.source_exponent()).unwrap();
    let b = neardust_phi1(&run, &grid, |t, r| -3.5 * p(t, r), run.source_exponent()).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((y.phi1 + 3.5 * x.phi1).abs() <= 1e-12 * x.phi1.abs().max(1e-300));
    }
}

#[test]
fn origin_anchoring_is_refused_for_a_non_integrable_source() {
    let run = NearDustRun::new(1.2, 20).unwrap();
    let grid = NearDustGrid { strict_origin: true, ..NearDustGrid::standard(1e-3, 4) };
    let res = neardust_phi1(&run, &grid, leading_source(1.2, 20), run.source_exponent());
    assert!(matches!(res, Err(DustError::NonIntegrableSource(_))));
}
