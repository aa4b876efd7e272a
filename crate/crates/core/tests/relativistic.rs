use collapse_core::newtonian::{assemble_lp, GammaParams, ShootOptions};
use collapse_core::relativistic::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn params(eps: f64) -> EpsParams {
    EpsParams::new(eps).unwrap()
}

fn solve(eps: f64) -> RlpSolution {
    assemble_rlp(params(eps), &RelShootOptions::default(), 1e4).unwrap()
}

fn at_one_percent() -> &'static RlpSolution {
    static S: OnceLock<RlpSolution> = OnceLock::new();
    S.get_or_init(|| solve(0.01))
}

fn extension() -> &'static UpperExtension {
    static E: OnceLock<UpperExtension> = OnceLock::new();
    E.get_or_init(|| extend_upper(at_one_percent(), &ExtensionOptions::default()).unwrap())
}

// B written out from its definition, independent of the solver's helpers.
fn denominator_by_hand(eps: f64, x: f64, d: f64, w: f64) -> (f64, f64) {
    let q = (w + eps).powi(2) - eps * (w - 1.0).powi(2) + 4.0 * eps * d * w;
    let dp = d.powf(-2.0 * eps / (1.0 - eps));
    (dp - q * x * x, dp + q.abs() * x * x)
}

proptest! {
    #[test]
    fn denominator_factorizes(eps in 0.0f64..0.05, x in 0.01f64..100.0, d in 1e-3f64..10.0, w in 0.01f64..5.0) {
        let f = sonic_factorization(EulerianStateRel { x, d, w }, params(eps));
        let (b, scale) = denominator_by_hand(eps, x, d, w);
        let product = (1.0 - eps) * (f.j - x * w) * (f.h + x * w);
        prop_assert!((b - product).abs() <= 1e-13 * scale, "{} vs {}", b, product);
        prop_assert!((f.b - b).abs() <= 1e-14 * scale);
        prop_assert!(f.identity_residual <= 1e-13);
        prop_assert_eq!(f.f, f.j - x * d);
    }

    #[test]
    fn friedmann_is_a_fixed_point(eps in 0.0f64..0.05, x in 0.01f64..1.5) {
        let (d, w) = params(eps).friedmann();
        let r = rhs_rel_eulerian(EulerianStateRel { x, d, w }, params(eps)).unwrap();
        prop_assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
    }

    #[test]
    fn far_field_solves_the_system(eps in 0.0f64..0.05, x in 5.0f64..1e3) {
        let p = params(eps);
        let (d, w) = p.far_field(x);
        let r = rhs_rel_eulerian(EulerianStateRel { x, d, w }, p).unwrap();
        let exact = p.tail_exponent() * d / x;
        prop_assert!((r[0] - exact).abs() <= 1e-12 * exact.abs(), "{} vs {}", r[0], exact);
        prop_assert!(r[1].abs() <= 1e-12 / x);
    }
}

#[test]
fn zero_eps_has_the_newtonian_denominator() {
    for &(x, d, w) in &[(0.5, 0.8, 0.3), (2.4, 0.4, 0.4), (7.0, 0.01, 0.9)] {
        let f = sonic_factorization(EulerianStateRel { x, d, w }, params(0.0));
        assert_eq!(f.j, 1.0);
        assert_eq!(f.h, 1.0);
        assert!((f.b - (1.0 - x * x * w * w)).abs() < 1e-14 * (1.0 + x * x * w * w));
    }
}

fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    assert!(g(a) * g(b) < 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn factor_vanishes_at_a_friedmann_sonic_point() {
    let p = params(0.02);
    let (d, w) = p.friedmann();
    let x = bisect(|x| sonic_denominator(EulerianStateRel { x, d, w }, p), 1.0, 4.0);
    let f = sonic_factorization(EulerianStateRel { x, d, w }, p);
    assert!((f.j - x * w).abs() < 1e-12);
}

#[test]
fn zero_eps_reproduces_the_isothermal_profile() {
    let rel = solve(0.0);
    let newt = assemble_lp(GammaParams::new(1.0).unwrap(), &ShootOptions::default(), 1e4).unwrap();
    assert!((rel.diagnostics.x_star - newt.shoot.y_star_bar).abs() < 1e-12);
    // the two runs carry different state vectors, so their step sequences differ
    let tol = 1e5 * RelShootOptions::default().rtol;
    let mut compared = 0;
    for p in &rel.profile.points {
        let other = match p.source {
            RelPointSource::Left => newt.shoot.left.eval(p.x),
            RelPointSource::Right => newt.right.eval(p.x),
            RelPointSource::Bridge => continue,
        };
        // below this the centre's singular mode amplifies step-size differences
        let Some(s) = other.filter(|_| p.x >= 0.025) else { continue };
        assert!((p.d - s[0]).abs() <= tol * s[0], "D at x={}: {} vs {}", p.x, p.d, s[0]);
        assert!((p.w - s[1]).abs() <= tol * s[1].abs().max(1.0), "W at x={}: {} vs {}", p.x, p.w, s[1]);
        compared += 1;
    }
    assert!(compared > 100);
    // no pressure: e^(2mu) is constant
    assert!(rel.profile.points.iter().all(|p| p.mu == rel.profile.points[0].mu));
}

#[test]
fn small_eps_sonic_point_stays_near_the_isothermal_one() {
    let newt = assemble_lp(GammaParams::new(1.0).unwrap(), &ShootOptions::default(), 1e4).unwrap();
    let rel = shoot_rel(params(1e-3), &RelShootOptions::default()).unwrap();
    assert!((rel.x_star_bar - newt.shoot.y_star_bar).abs() <= 0.05);
    assert!(rel.x_star_bar > newt.shoot.y_star_bar);
}

#[test]
fn profile_at_one_percent_has_the_expected_boundary_data() {
    let d = &at_one_percent().diagnostics;
    assert!((d.w_origin - 1.0 / 3.0).abs() < 2e-3, "W(0) = {}", d.w_origin);
    assert!(d.d_origin > 0.0);
    assert!((d.w_at_x_max - 1.0).abs() < 1e-3);
    assert!(((d.tail_exponent - d.tail_exponent_target) / d.tail_exponent_target).abs() < 1e-2);
    assert!(((d.mu_exponent - d.mu_exponent_target) / d.mu_exponent_target).abs() < 2e-2);
    assert!(d.max_constraint_residual <= 1e-6, "constraint residual {}", d.max_constraint_residual);
    assert!(d.max_factorization_residual <= 1e-13);
    assert!(d.sonic_metric_residual.abs() < 1e-12);
    assert!(d.series_tail < 1e-12);
}

#[test]
fn denominator_and_sandwich_signs() {
    let s = at_one_percent();
    let d = &s.diagnostics;
    assert_eq!(d.sonic_points, 1);
    assert!(d.denominator_pattern);
    assert_eq!(d.sandwich_left, None);
    // the mirrored relations hold on an interval right of the sonic point only
    let fail = d.sandwich_right.unwrap();
    assert!(fail > d.x_star * 1.1);
    for p in s.profile.points.iter().filter(|p| p.x > d.x_star && p.x < fail) {
        assert!(p.x * p.w > p.x * p.d && p.x * p.d > p.j);
    }
    for p in s.profile.points.iter().filter(|p| p.x < d.x_star) {
        assert!(p.f > 0.0 && p.w < p.d);
    }
}

#[test]
fn comoving_coordinate_is_monotone() {
    let pts = &at_one_percent().profile.points;
    assert!(pts.windows(2).all(|w| w[1].x > w[0].x && w[1].y > w[0].y));
    let s = &pts[at_one_percent().profile.sonic_index];
    assert!((s.y - s.x).abs() < 1e-14);
}

#[test]
fn profiles_vary_continuously_with_eps() {
    let a = solve(5e-3);
    let b = at_one_percent();
    assert!(b.diagnostics.x_star > a.diagnostics.x_star);
    assert!((b.diagnostics.x_star - a.diagnostics.x_star).abs() < 0.02);
    for x in [0.2, 1.0, 2.0, 5.0, 50.0] {
        let (p, q) = (a.profile.interpolate(x).unwrap(), b.profile.interpolate(x).unwrap());
        assert!((p[0] - q[0]).abs() < 0.1 * q[0], "D at {x}");
        assert!((p[1] - q[1]).abs() < 0.05, "W at {x}");
    }
}

#[test]
fn window_too_narrow_is_reported() {
    let opts = RelShootOptions { window: Some((2.5, 3.0)), ..Default::default() };
    assert!(matches!(shoot_rel(params(0.01), &opts), Err(RelativisticError::WindowNotStraddling { .. })));
    assert!(matches!(EpsParams::new(0.06), Err(RelativisticError::AboveCap { .. })));
    assert!(matches!(EpsParams::new(-0.1), Err(RelativisticError::EpsOutOfRange(_))));
}

#[test]
fn extension_starts_from_the_far_field_and_blows_up() {
    let e = extension();
    assert!(e.tail.misfit < 1e-5);
    assert_eq!(e.tail.eval(0.0)[1], 1.0);
    assert_eq!(e.tail.eval(0.0)[0], 0.0);
    assert!(e.big_y_ms.is_finite() && e.big_y_ms < 0.0);
    let [d, w, chi] = e.final_state;
    assert!(d > 1e6 && w >= 1e8 && 1.0 / chi > 1e5);
    assert!((e.divergence_rate + 1.0).abs() < 1e-2, "rate {}", e.divergence_rate);
    assert!(e.sandwich_c > 0.0 && e.sandwich_max < 1.0);
    assert!(e.points.iter().all(|p| p.d / p.w >= e.sandwich_c && p.d / p.w < 1.0));
}

#[test]
fn simple_radial_null_geodesics() {
    let e = extension();
    let r = rng_roots(e, &GeodesicOptions::default()).unwrap();
    assert!(r.f_at_extremes.0 > 1e3 && r.f_at_extremes.1 > 1e3, "{:?}", r.f_at_extremes);
    assert!(r.dip.1 < 0.0);
    assert!(r.roots.len() >= 2);
    assert!(r.roots.windows(2).all(|w| w[0] < w[1]));
    for &y in &r.roots {
        assert!(y < 0.0 && y > e.points[0].y && y < e.y_ms);
        assert!(geodesic_function(e, y).unwrap().abs() < 1e-6);
    }
}
