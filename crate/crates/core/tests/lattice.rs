use fput_core::cli_io::{shape_for_ladder, tracking_ladder};
use fput_core::lattice::{launch_wave, simulate, step, ChainState, LatticeError, Perturbation, SimOptions, StepOptions};
use fput_core::scaling::shape_for_speed;
use fput_core::wave::{solve_exact, WaveOptions};
use fput_core::Potential;
use proptest::prelude::*;

fn bump_state(n: usize, amp: f64) -> ChainState {
    let mut s = ChainState::zeros(n);
    let c = n as f64 / 2.0;
    for j in 0..n - 1 {
        s.r[j] = amp * (-((j as f64 - c) / 3.0).powi(2)).exp();
    }
    for j in 0..n {
        s.v[j] = 0.5 * amp * (-((j as f64 - c + 2.0) / 4.0).powi(2)).exp();
    }
    s
}

/// Linear chain `r' = v_{j+1} - v_j`, `v' = c(r_j - r_{j-1})` with free ends, by classical RK4.
fn linear_reference(s0: &ChainState, c: f64, t: f64, steps: usize) -> ChainState {
    let n = s0.len();
    let rhs = |r: &[f64], v: &[f64]| {
        let mut dr = vec![0.0; n];
        let mut dv = vec![0.0; n];
        for j in 0..n - 1 {
            dr[j] = v[j + 1] - v[j];
        }
        let f = |j: usize| if j + 1 < n { c * r[j] } else { 0.0 };
        for (j, d) in dv.iter_mut().enumerate() {
            *d = f(j) - if j > 0 { f(j - 1) } else { 0.0 };
        }
        (dr, dv)
    };
    let h = t / steps as f64;
    let (mut r, mut v) = (s0.r.clone(), s0.v.clone());
    let axpy = |x: &[f64], a: f64, y: &[f64]| x.iter().zip(y).map(|(p, q)| p + a * q).collect::<Vec<f64>>();
    for _ in 0..steps {
        let (k1r, k1v) = rhs(&r, &v);
        let (k2r, k2v) = rhs(&axpy(&r, 0.5 * h, &k1r), &axpy(&v, 0.5 * h, &k1v));
        let (k3r, k3v) = rhs(&axpy(&r, 0.5 * h, &k2r), &axpy(&v, 0.5 * h, &k2v));
        let (k4r, k4v) = rhs(&axpy(&r, h, &k3r), &axpy(&v, h, &k3v));
        for j in 0..n {
            r[j] += h / 6.0 * (k1r[j] + 2.0 * k2r[j] + 2.0 * k3r[j] + k4r[j]);
            v[j] += h / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]);
        }
    }
    ChainState { r, v, t, offset: 0 }
}

fn run(s: &mut ChainState, dt: f64, steps: usize, pot: &Potential, opts: &StepOptions) {
    for _ in 0..steps {
        step(s, dt, pot, opts).unwrap();
    }
}

fn distance(a: &ChainState, b: &ChainState) -> f64 {
    a.r.iter().zip(&b.r).chain(a.v.iter().zip(&b.v)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn harmonic_regime_is_second_order() {
    let pot = Potential::inverse_monomial(2.0).unwrap();
    let amp = 1e-7;
    let s0 = bump_state(40, amp);
    let t = 2.0;
    let exact = linear_reference(&s0, pot.curvature(), t, 4000);
    let err = |dt: f64| {
        let mut s = s0.clone();
        run(&mut s, dt, (t / dt).round() as usize, &pot, &StepOptions::default());
        distance(&s, &exact) / amp
    };
    let (e1, e2) = (err(0.1), err(0.05));
    let ratio = e1 / e2;
    assert!((3.6..4.4).contains(&ratio), "{e1} {e2} {ratio}");
}

#[test]
fn energy_drift_is_small() {
    let pot = Potential::inverse_monomial(2.0).unwrap();
    let mut s = bump_state(64, -0.3);
    let e0 = s.energy(&pot);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        run(&mut s, 1e-3, 100, &pot, &StepOptions::default());
        worst = worst.max(((s.energy(&pot) - e0) / e0).abs());
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn time_reversal() {
    let pot = Potential::lennard_jones(2.0).unwrap();
    let s0 = bump_state(48, -0.3);
    let mut s = s0.clone();
    let opts = StepOptions::default();
    run(&mut s, 1e-3, 2000, &pot, &opts);
    s.v.iter_mut().for_each(|v| *v = -*v);
    run(&mut s, 1e-3, 2000, &pot, &opts);
    s.v.iter_mut().for_each(|v| *v = -*v);
    assert!(distance(&s, &s0) <= 1e-8, "{}", distance(&s, &s0));
}

#[test]
fn exact_wave_is_transported() {
    let omega = 40.0;
    let pot = Potential::inverse_monomial(2.0).unwrap();
    let (shape, p) = shape_for_speed(2.0, omega, 1e-12).unwrap();
    let w = solve_exact(&p, &shape, &pot, &WaveOptions::default()).unwrap();
    let tau0 = 20.0;
    let mut s = launch_wave(&w, 60, tau0, Perturbation::None).unwrap();
    let t = 5.0 / omega;
    let dt = 0.02 / omega;
    run(&mut s, dt, (t / dt).round() as usize, &pot, &StepOptions::default());
    let tau = tau0 + omega * t;
    let mut e2 = 0.0;
    for j in 0..s.len() {
        let x = j as f64 - tau;
        e2 += (s.v[j] - w.v_at(x)).powi(2);
        if j + 1 < s.len() {
            e2 += (s.r[j] - w.r_at(x + 0.5)).powi(2);
        }
    }
    assert!(e2.sqrt() <= 1e-4, "{}", e2.sqrt());
}

#[test]
fn short_domain_is_rejected() {
    let pot = Potential::inverse_monomial(2.0).unwrap();
    let (shape, p) = shape_for_speed(2.0, 40.0, 1e-12).unwrap();
    let w = solve_exact(&p, &shape, &pot, &WaveOptions::default()).unwrap();
    assert!(matches!(launch_wave(&w, 10, 1.5, Perturbation::None), Err(LatticeError::DomainTooSmall { .. })));
    let mut s = ChainState::zeros(4);
    s.v = vec![0.0, 0.0, -50.0, 0.0];
    s.v[1] = 50.0;
    assert!(matches!(step(&mut s, 0.1, &pot, &StepOptions { theta: 10.0, max_depth: 0 }), Err(LatticeError::Collision { .. })));
}

#[test]
fn tracker_on_the_exact_wave() {
    let omega = 20.0;
    let pot = Potential::inverse_monomial(2.0).unwrap();
    let shape = shape_for_ladder(2.0, &[omega * 1.02], 1e-12).unwrap();
    let ladder = tracking_ladder(&pot, omega, &shape, &WaveOptions::default()).unwrap();
    let res = simulate(ladder, &SimOptions::new(0.5)).unwrap();
    let tr = &res.track;
    assert!(tr.omega_fit.iter().all(|w| (w / omega - 1.0).abs() <= 1e-3), "{:?}", tr.omega_fit);
    let n = tr.times.len() - 1;
    let speed = (tr.tau[n] - tr.tau[0]) / (tr.times[n] - tr.times[0]);
    assert!((speed / omega - 1.0).abs() <= 1e-3, "{speed}");
    assert!(tr.weighted_err.iter().all(|&e| e <= 1e-4), "{:?}", tr.weighted_err);
    assert!(res.summary.momentum_drift <= 1e-10);
}

/// The normalized velocity approaches the indicator of [-1/2, 1/2] away from the jumps.
#[test]
fn velocity_approaches_indicator() {
    let pot = Potential::inverse_monomial(2.0).unwrap();
    let mut prev = f64::INFINITY;
    for omega in [40.0, 80.0, 160.0, 320.0] {
        let (shape, p) = shape_for_speed(2.0, omega, 1e-12).unwrap();
        let w = solve_exact(&p, &shape, &pot, &WaveOptions::default()).unwrap();
        let band = 5.0 * p.delta;
        let d = (0..=3000)
            .map(|i| -1.5 + 3.0 * i as f64 / 3000.0)
            .filter(|x: &f64| (x.abs() - 0.5).abs() > band)
            .map(|x| (w.v_at(x) / omega - if x.abs() <= 0.5 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        assert!(d < prev, "omega {omega}: {d} >= {prev}");
        prev = d;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn momentum_is_conserved(seed in proptest::collection::vec((-0.4f64..0.4, -1.0f64..1.0), 8..40)) {
        let pot = Potential::inverse_monomial(3.0).unwrap();
        let n = seed.len();
        let mut s = ChainState::zeros(n);
        for (j, &(r, v)) in seed.iter().enumerate() {
            if j + 1 < n {
                s.r[j] = r;
            }
            s.v[j] = v;
        }
        let p0 = s.momentum();
        run(&mut s, 1e-3, 50, &pot, &StepOptions::default());
        prop_assert!((s.momentum() - p0).abs() <= 1e-12 * n as f64);
    }
}
