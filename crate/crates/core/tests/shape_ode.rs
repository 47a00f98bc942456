use fput_core::shape_ode::{slope_at_infinity, solve_shape, ShapeError, ShapeQuantity as Q};
use proptest::prelude::*;

#[test]
fn m2_closed_form_values() {
    let s = solve_shape(2.0, 200.0, 1e-11).unwrap();
    assert!((s.eval(1.0, Q::Y).unwrap() - 15f64.sqrt() / 3.0).abs() < 1e-9);
    assert!((s.eval(1.0, Q::Te).unwrap() - 1.0 / 15f64.sqrt()).abs() < 1e-9);
    assert!((s.eval(-1.0, Q::To).unwrap() + 3.0 / 15f64.sqrt()).abs() < 1e-9);
    assert!((s.yp_inf - 2.0 / 6f64.sqrt()).abs() < 1e-7);
    assert!(s.yflat_inf.abs() < 1e-6);
}

#[test]
fn rejects_bad_input() {
    assert!(solve_shape(1.0, 100.0, 1e-10).is_err());
    assert!(solve_shape(2.0, -1.0, 1e-10).is_err());
    let s = solve_shape(2.0, 10.0, 1e-10).unwrap();
    assert!(matches!(s.eval(11.0, Q::Y), Err(ShapeError::OutOfRange { .. })));
}

/// `|Y' - Y'(∞)| x^m` stays bounded and does not depend on the domain length.
#[test]
fn slope_decay_is_stable_under_domain_doubling() {
    for m in [2.0, 4.0] {
        let a = solve_shape(m, 100.0, 1e-11).unwrap();
        let b = solve_shape(m, 200.0, 1e-11).unwrap();
        let lim = slope_at_infinity(m);
        let bound = |s: &fput_core::ShapeSolution, x: f64| (s.eval(x, Q::Yp).unwrap() - lim).abs() * x.powf(m);
        for x in [10.0, 30.0, 60.0] {
            let (ba, bb) = (bound(&a, x), bound(&b, x));
            assert!((ba - bb).abs() <= 1e-6 * ba.max(1e-3), "m={m} x={x}: {ba} {bb}");
            assert!(ba < 10.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn structural_invariants(m in 1.3f64..8.0) {
        let tol = 1e-10;
        let s = solve_shape(m, 100.0, tol).unwrap();
        prop_assert_eq!(s.y[0], 1.0);
        prop_assert_eq!(s.yp[0], 0.0);
        prop_assert_eq!(s.te[0], 1.0);
        prop_assert_eq!(s.top[0], 1.0);
        for i in 0..s.grid.len() {
            prop_assert!(s.y[i] > 0.0);
            prop_assert!(s.energy_defect(i).abs() <= 1e-9);
            prop_assert!(s.wronskian_defect(i).abs() <= 1e-8);
            if i > 0 {
                prop_assert!(s.yp[i] > s.yp[i - 1], "Y' not increasing at {}", s.grid[i]);
            }
        }
    }

    /// Parity and the closed combinations of `Y` that solve the linearized equation.
    #[test]
    fn parity_and_reconstruction(m in 1.3f64..8.0, x in 0.0f64..90.0) {
        let tol = 1e-10;
        let s = solve_shape(m, 100.0, tol).unwrap();
        for q in [Q::Y, Q::Te, Q::Yflat] {
            prop_assert_eq!(s.eval(-x, q).unwrap(), s.eval(x, q).unwrap());
        }
        prop_assert_eq!(s.eval(-x, Q::To).unwrap(), -s.eval(x, Q::To).unwrap());
        let y = s.eval(x, Q::Y).unwrap();
        let yp = s.eval(x, Q::Yp).unwrap();
        let flat = x * yp - y;
        prop_assert!((s.eval(x, Q::Yflat).unwrap() - flat).abs() <= 1e-9 * (1.0 + x));
        let te = -0.5 * m * y - (0.5 * m + 1.0) * flat;
        let to = 0.5 * (m + 1.0) * yp;
        let scale = 1.0 + x;
        prop_assert!((s.eval(x, Q::Te).unwrap() - te).abs() <= 10.0 * tol * scale * 10.0);
        prop_assert!((s.eval(x, Q::To).unwrap() - to).abs() <= 10.0 * tol * scale * 10.0);
    }
}
