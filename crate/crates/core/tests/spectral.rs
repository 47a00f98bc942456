use fput_core::scaling::shape_for_speed;
use fput_core::spectral::{
    constant_coefficient_gap, distance_to_curves, essential_band, essential_branch, essential_spectrum, jordan_modes, point_spectrum_scan,
    symplectic_product, Derivative, Mesh, Operator, SpectralConfig, SpectralError, SpectralGrid, Verdict,
};
use fput_core::wave::{solve_exact, WaveOptions};
use fput_core::{Potential, WaveProfile};
use proptest::prelude::*;

fn wave(m: f64, omega: f64) -> WaveProfile {
    let pot = Potential::inverse_monomial(m).unwrap();
    let (shape, p) = shape_for_speed(m, omega, 1e-12).unwrap();
    solve_exact(&p, &shape, &pot, &WaveOptions::default()).unwrap()
}

#[test]
fn essential_curve_reference_value() {
    let plus = essential_branch(10.0, 1.0, 1.0, 0.0, 1.0);
    let minus = essential_branch(10.0, 1.0, 1.0, 0.0, -1.0);
    assert!((plus[0] + 1.0 - 0.2 * 0.5f64.sinh()).abs() < 1e-14);
    assert!((minus[0] + 1.0 + 0.2 * 0.5f64.sinh()).abs() < 1e-14);
    assert!((plus[0] + 1.0 - 0.104219).abs() < 1e-6);
    assert!(plus[1].abs() < 1e-15);
}

#[test]
fn curves_collapse_onto_the_weight_line() {
    let spread = |omega: f64| essential_spectrum(omega, 1.0, 1.0, 201).iter().map(|p| (p.plus[0] + 1.0).abs()).fold(0.0, f64::max);
    assert!(spread(1e3) < spread(1e2) && spread(1e2) < spread(1e1));
    assert!(spread(1e7) < 1e-6);
}

#[test]
fn constant_coefficient_operator_has_no_point_spectrum() {
    let g = SpectralGrid::uniform(0.05, 5.0, Derivative::Fourier).unwrap();
    let d = constant_coefficient_gap(10.0, 1.0, 1.0, &g).unwrap();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn grid_errors() {
    assert!(matches!(SpectralGrid::uniform(0.03, 4.0, Derivative::Fourier), Err(SpectralError::GridMismatch { .. })));
    let w = wave(2.0, 20.0);
    let g = SpectralGrid::for_wave(&w, 3.0, 16);
    assert!(matches!(Operator::assemble(&w, 2.0 * w.tail_rate, &g), Err(SpectralError::WeightTooLarge { .. })));
}

/// The dense matrix and the matrix-free action agree.
#[test]
fn dense_matches_apply() {
    let w = wave(2.0, 20.0);
    let op = Operator::assemble(&w, 1.0, &SpectralGrid::for_wave(&w, 2.0, 12)).unwrap();
    let n = op.mesh.len();
    let s: Vec<f64> = (0..n).map(|j| (0.37 * j as f64).sin()).collect();
    let v: Vec<f64> = (0..n).map(|j| (0.11 * j as f64 + 1.0).cos()).collect();
    let (ls, lw) = op.apply(&s, &v);
    let a = op.dense();
    for i in 0..2 * n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[(i, j)] * s[j] + a[(i, n + j)] * v[j];
        }
        let want = if i < n { ls[i] } else { lw[i - n] };
        assert!((acc - want).abs() <= 1e-9 * (1.0 + want.abs()), "row {i}: {acc} {want}");
    }
}

#[test]
fn shift_mode_has_zero_self_product() {
    let w = wave(2.0, 40.0);
    let g = SpectralGrid::for_wave(&w, 4.0, 256);
    let j = jordan_modes(&w, 1.0, &g).unwrap();
    assert!(j.sigma_star_star.abs() <= 1e-10 * j.sigma_star_sharp.abs(), "{j:?}");
    assert!(j.residual_sharp / j.scale_sharp < 1e-4);
}

#[test]
fn scan_finds_only_the_jordan_cluster() {
    let w = wave(2.0, 40.0);
    let r = point_spectrum_scan(&w, &SpectralConfig::for_wave(&w, 1.0)).unwrap();
    assert_eq!(r.verdict, Verdict::NoUnstableModes);
    assert_eq!((r.cluster.geometric, r.cluster.algebraic), (1, 2));
    assert_eq!(r.cluster.eigenvalues.len(), 2);
    // the 2πi-shifted strip reproduces the zero cluster
    assert!(r.shifted_zero_gap < 1e-2, "{}", r.shifted_zero_gap);
    for e in r.computed_eigs.iter().filter(|e| e.accepted) {
        assert!(e.re <= -0.9 || (e.re.hypot(e.im) < 0.05), "{e:?}");
    }
}

fn bump(x: f64, c: f64, s: f64) -> f64 {
    let t = (x - c) / s;
    -t / s * (-0.5 * t * t).exp()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// `max_κ |Re λ + a| = 2 ω⁻¹ √c sinh(a/2)`, attained at `κ = 0`.
    #[test]
    fn band_width(omega in 2.0f64..200.0, a in 0.05f64..3.0, c in 0.1f64..3.0) {
        let band = essential_band(omega, a, c);
        let worst = essential_spectrum(omega, a, c, 401).iter().map(|p| (p.plus[0] + a).abs().max((p.minus[0] + a).abs())).fold(0.0, f64::max);
        prop_assert!(worst <= band * (1.0 + 1e-12));
        prop_assert!(worst >= band * (1.0 - 1e-12));
        let p = essential_branch(omega, a, c, 0.7, 1.0);
        prop_assert!(distance_to_curves(omega, a, c, p) < 1e-9);
    }

    /// `σ(U, V) + σ(V, U)` pairs each field with the unit-period sum of the
    /// other, which is exponentially small for smooth wide zero-mean fields.
    #[test]
    fn symplectic_antisymmetry(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, s1 in 1.0f64..1.5, s2 in 1.0f64..1.5) {
        let mesh = Mesh::new(&SpectralGrid::uniform(0.025, 12.0, Derivative::Fourier).unwrap()).unwrap();
        let f = |c: f64, s: f64| mesh.x.iter().map(|&x| bump(x, c, s)).collect::<Vec<f64>>();
        let (u1, u2) = (f(c1, s1), f(c1 + 0.2, s2));
        let (v1, v2) = (f(c2, s2), f(c2 - 0.3, s1));
        let a = symplectic_product(&mesh, (&u1, &u2), (&v1, &v2));
        let b = symplectic_product(&mesh, (&v1, &v2), (&u1, &u2));
        prop_assert!((a + b).abs() <= 1e-7 * (1.0 + a.abs()), "{} {}", a, b);
    }
}
