use fput_core::scaling::{alpha_limit, delta_of, dxi_domega, relative_residual, shape_for_speed, solve_scaling};
use fput_core::shape_ode::{solve_shape, ShapeQuantity};
use proptest::prelude::*;

#[test]
fn m2_reference_values() {
    let (s, p) = shape_for_speed(2.0, 10.0, 1e-11).unwrap();
    let tip = p.depth() * s.eval(p.xi, ShapeQuantity::Y).unwrap();
    assert!((tip - 0.5).abs() <= 0.025, "{tip}");
    assert!((alpha_limit(2.0) - (4.0f64 / 6.0).sqrt()).abs() < 1e-15);
}

#[test]
fn xi_grows_and_alpha_converges() {
    for m in [2.0, 4.0] {
        let shape = solve_shape(m, 2000.0, 1e-11).unwrap();
        let ps: Vec<_> = [10.0, 20.0, 40.0, 80.0].iter().map(|&w| solve_scaling(w, &shape).unwrap()).collect();
        for w in ps.windows(2) {
            assert!(w[1].xi > w[0].xi);
            assert!((w[1].alpha - alpha_limit(m)).abs() < (w[0].alpha - alpha_limit(m)).abs());
        }
    }
}

/// Centred differences of `ξ(ω)` against the implicit-function derivative.
#[test]
fn xi_derivative_matches_differences() {
    let shape = solve_shape(2.0, 2000.0, 1e-12).unwrap();
    for w in [20.0, 60.0] {
        let p = solve_scaling(w, &shape).unwrap();
        let h = 1e-3 * w;
        let fd = (solve_scaling(w + h, &shape).unwrap().xi - solve_scaling(w - h, &shape).unwrap().xi) / (2.0 * h);
        let d = dxi_domega(&p, &shape).unwrap();
        assert!((fd / d - 1.0).abs() < 1e-6, "{fd} {d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn definitional_identities(m in prop_oneof![Just(2.0), Just(3.0), Just(4.0), Just(6.0)], omega in 8.0f64..400.0) {
        let (shape, p) = shape_for_speed(m, omega, 1e-11).unwrap();
        prop_assert_eq!(p.delta, delta_of(omega, m));
        prop_assert!((p.delta - omega.powf(-2.0 / m)).abs() <= 1e-15 * p.delta);
        prop_assert!((p.beta * p.beta / p.alpha.powf(m + 2.0) - 1.0).abs() <= 1e-13);
        prop_assert!((p.xi * 2.0 * p.delta * p.beta - 1.0).abs() <= 1e-13);
        prop_assert!(p.xi >= 1.0);
        prop_assert!(relative_residual(&p, &shape).unwrap() <= 1e-10);
    }
}
