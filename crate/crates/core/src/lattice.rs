//! Direct simulation of the chain `ṙ_j = v_{j+1} − v_j`, `v̇_j = Φ'(r_j) − Φ'(r_{j−1})`
//! and tracking of the wave it carries.
//!
//! Particles `0..N` carry `v_j`; bond `j` joins particles `j` and `j+1`, so the
//! last bond is absent and `r_{N−1}` stays 0 (free ends).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potentials::Potential;
use crate::wave::{WaveError, WaveProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("collision at bond {site}, t = {t}")]
    Collision { site: usize, t: f64 },
    #[error("substep depth limit reached at t = {t}")]
    SubstepLimit { t: f64 },
    #[error("chain too short: profile is {tail:e} at the ends")]
    DomainTooSmall { tail: f64 },
    #[error("lost the wave at t = {t}")]
    TrackLost { t: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Wave(#[from] WaveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    /// Lattice index of array slot 0; grows when the window is recentred.
    pub offset: i64,
}

impl ChainState {
    pub fn zeros(n: usize) -> Self {
        ChainState { r: vec![0.0; n], v: vec![0.0; n], t: 0.0, offset: 0 }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn energy(&self, pot: &Potential) -> f64 {
        self.v.iter().map(|v| 0.5 * v * v).sum::<f64>() + self.r.iter().map(|&r| pot.phi(r)).sum::<f64>()
    }

    pub fn momentum(&self) -> f64 {
        self.v.iter().sum()
    }

    /// Drops `s` sites on the left and appends rest on the right.
    pub fn recentre(&mut self, s: usize) {
        let s = s.min(self.len());
        self.r.drain(..s);
        self.v.drain(..s);
        self.r.resize(self.v.len() + s, 0.0);
        self.v.resize(self.r.len(), 0.0);
        self.offset += s as i64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// A step is halved when some bond changes by more than `theta·(1 + r_j)`.
    pub theta: f64,
    pub max_depth: u32,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { theta: 1e-3, max_depth: 12 }
    }
}

const COLLISION_GAP: f64 = 1e-10;

enum Reject {
    Collision(usize),
    Coarse,
}

fn drift(r: &mut [f64], v: &[f64], h: f64, theta: f64) -> Result<(), Reject> {
    let n = v.len();
    for j in 0..n.saturating_sub(1) {
        let dr = h * (v[j + 1] - v[j]);
        let nr = r[j] + dr;
        if !(1.0 + nr > COLLISION_GAP) {
            return Err(Reject::Collision(j));
        }
        if dr.abs() > theta * (1.0 + r[j]) {
            return Err(Reject::Coarse);
        }
        r[j] = nr;
    }
    Ok(())
}

fn kick(r: &[f64], v: &mut [f64], dt: f64, pot: &Potential, force: &mut Vec<f64>) {
    force.clear();
    force.extend(r.iter().map(|&x| pot.d1(x)));
    let n = v.len();
    if n == 0 {
        return;
    }
    let last = n - 1;
    let mut prev = 0.0;
    for j in 0..n {
        let f = if j == last { 0.0 } else { force[j] };
        v[j] += dt * (f - prev);
        prev = f;
    }
}

/// Position-Verlet step; returns `Err` without touching `state` on rejection.
fn try_step(state: &ChainState, dt: f64, pot: &Potential, theta: f64, buf: &mut Vec<f64>) -> Result<(Vec<f64>, Vec<f64>), Reject> {
    let mut r = state.r.clone();
    let mut v = state.v.clone();
    drift(&mut r, &v, 0.5 * dt, theta)?;
    kick(&r, &mut v, dt, pot, buf);
    drift(&mut r, &v, 0.5 * dt, theta)?;
    Ok((r, v))
}

fn step_rec(state: &mut ChainState, dt: f64, pot: &Potential, opts: &StepOptions, depth: u32, buf: &mut Vec<f64>) -> Result<usize, LatticeError> {
    match try_step(state, dt, pot, opts.theta, buf) {
        Ok((r, v)) => {
            state.r = r;
            state.v = v;
            state.t += dt;
            Ok(1)
        }
        Err(why) => {
            if depth >= opts.max_depth {
                return Err(match why {
                    Reject::Collision(site) => LatticeError::Collision { site, t: state.t },
                    Reject::Coarse => LatticeError::SubstepLimit { t: state.t },
                });
            }
            let a = step_rec(state, 0.5 * dt, pot, opts, depth + 1, buf)?;
            let b = step_rec(state, 0.5 * dt, pot, opts, depth + 1, buf)?;
            Ok(a + b)
        }
    }
}

/// Advances `state` by `dt`; returns the number of substeps taken.
pub fn step(state: &mut ChainState, dt: f64, pot: &Potential, opts: &StepOptions) -> Result<usize, LatticeError> {
    if !(dt > 0.0) {
        return Err(LatticeError::InvalidParameter(format!("dt = {dt}")));
    }
    let mut buf = Vec::with_capacity(state.len());
    step_rec(state, dt, pot, opts, 0, &mut buf)
}

/// `dt = 0.1/ω`.
pub fn default_dt(omega: f64) -> f64 {
    0.1 / omega
}

/// `N = 40 + 6ωT`.
pub fn default_sites(omega: f64, t_end: f64) -> usize {
    40 + (6.0 * omega * t_end).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    /// `η exp(−((j − j₀)/w)²/2)` added to `v`.
    VelocityBump { eta: f64, offset: f64, width: f64 },
    /// `η cos²(π(j − j₀)/(2w))` on `|j − j₀| < w`, added to `r`.
    DistanceBump { eta: f64, offset: f64, width: f64 },
    /// Long-wave packet moving left at the sound speed.
    Packet { eta: f64, offset: f64, width: f64 },
}

impl Perturbation {
    pub fn eta(&self) -> f64 {
        match *self {
            Perturbation::None => 0.0,
            Perturbation::VelocityBump { eta, .. } | Perturbation::DistanceBump { eta, .. } | Perturbation::Packet { eta, .. } => eta,
        }
    }
}

/// Largest `|x|` at which the profiles can be nonzero, in lattice units.
fn support(wave: &WaveProfile) -> f64 {
    wave.half_length() * wave.scaling.unit() + 1.0
}

fn r_profile(wave: &WaveProfile, x: f64, supp: f64) -> f64 {
    if x.abs() > supp {
        0.0
    } else {
        wave.r_at(x)
    }
}

fn v_profile(wave: &WaveProfile, x: f64, supp: f64) -> f64 {
    if x.abs() > supp {
        0.0
    } else {
        wave.v_at(x)
    }
}

/// Samples `r_j = R(j + ½ − τ₀)`, `v_j = V(j − τ₀)` and adds the perturbation
/// at `τ₀ + offset`.
pub fn launch_wave(wave: &WaveProfile, sites: usize, tau0: f64, perturbation: Perturbation) -> Result<ChainState, LatticeError> {
    if sites < 4 {
        return Err(LatticeError::InvalidParameter(format!("sites = {sites}")));
    }
    let supp = support(wave);
    let mut s = ChainState::zeros(sites);
    for j in 0..sites {
        let x = j as f64 - tau0;
        s.v[j] = v_profile(wave, x, supp);
        if j + 1 < sites {
            s.r[j] = r_profile(wave, x + 0.5, supp);
        }
    }
    let ends = [
        s.r[0].abs(),
        s.v[0].abs() / wave.scaling.omega,
        s.r[sites - 2].abs(),
        r_profile(wave, sites as f64 - 0.5 - tau0, supp).abs(),
        s.v[sites - 1].abs() / wave.scaling.omega,
    ];
    let tail = ends.iter().cloned().fold(0.0, f64::max);
    if tail >= 1e-8 {
        return Err(LatticeError::DomainTooSmall { tail });
    }
    let c = wave.potential.curvature();
    for j in 0..sites {
        let jf = j as f64;
        match perturbation {
            Perturbation::None => {}
            Perturbation::VelocityBump { eta, offset, width } => {
                let z = (jf - tau0 - offset) / width;
                s.v[j] += eta * (-0.5 * z * z).exp();
            }
            Perturbation::DistanceBump { eta, offset, width } => {
                let z = jf + 0.5 - tau0 - offset;
                if z.abs() < width && j + 1 < sites {
                    s.r[j] += eta * (0.5 * std::f64::consts::PI * z / width).cos().powi(2);
                }
            }
            Perturbation::Packet { eta, offset, width } => {
                let g = |x: f64| eta * (-0.5 * ((x - tau0 - offset) / width).powi(2)).exp();
                if j + 1 < sites {
                    s.r[j] += g(jf + 0.5);
                }
                s.v[j] += c.sqrt() * g(jf);
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Weight exponent for `‖e^{a(·−τ)}(u − U)‖`.
    pub a: f64,
    /// Sites on either side of `τ` used for the speed fit.
    pub window: usize,
    /// Cone speed for errors on `j ≥ σt`; `None` uses the midpoint of `(1, ω₀)`.
    pub cone: Option<f64>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions { a: 1.0, window: 4, cone: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub tau: f64,
    pub omega: f64,
    pub weighted_err: f64,
    pub l2_err: f64,
    pub cone_err: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrack {
    pub times: Vec<f64>,
    pub tau: Vec<f64>,
    pub omega_fit: Vec<f64>,
    pub weighted_err: Vec<f64>,
    pub l2_err: Vec<f64>,
    pub cone_err: Vec<f64>,
}

impl OrbitTrack {
    pub fn push(&mut self, o: &Observation) {
        self.times.push(o.t);
        self.tau.push(o.tau);
        self.omega_fit.push(o.omega);
        self.weighted_err.push(o.weighted_err);
        self.l2_err.push(o.l2_err);
        self.cone_err.push(o.cone_err);
    }

    /// Decay rate `b₀` from a least-squares fit of `ln weighted_err` against
    /// `t` over the transient: from the first sample until the error first
    /// falls below twice the floor (median of the second half).
    pub fn decay_rate(&self) -> f64 {
        let n = self.weighted_err.len();
        if n < 4 {
            return f64::NAN;
        }
        let mut tail: Vec<f64> = self.weighted_err[n / 2..].to_vec();
        tail.sort_by(|a, b| a.total_cmp(b));
        let floor = tail[tail.len() / 2];
        let end = self.weighted_err.iter().position(|&e| e <= 2.0 * floor).unwrap_or(n - 1).max(2);
        let pts: Vec<(f64, f64)> = (0..=end)
            .filter(|&i| self.weighted_err[i] > 0.0)
            .map(|i| (self.times[i], self.weighted_err[i].ln()))
            .collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        -crate::wave::slope(&pts)
    }

    /// Mean fitted speed over the last quarter of the samples.
    pub fn omega_inf(&self) -> f64 {
        let k = (self.omega_fit.len() * 3) / 4;
        let tail = &self.omega_fit[k..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    /// Spread `max − min` of the fitted speed over the last quarter.
    pub fn omega_spread(&self) -> f64 {
        let k = (self.omega_fit.len() * 3) / 4;
        let tail = &self.omega_fit[k..];
        tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_l2(&self) -> f64 {
        self.l2_err.iter().cloned().fold(0.0, f64::max)
    }
}

/// Fits position and speed of the wave in a chain state against a ladder of
/// profiles with neighbouring speeds.
pub struct Tracker {
    ladder: Vec<WaveProfile>,
    supp: Vec<f64>,
    opts: TrackOptions,
    omega0: f64,
    tau0: f64,
}

fn golden(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

impl Tracker {
    /// `ladder` must be sorted by speed and contain the launch speed `omega0`.
    /// `tau0` is the launch position, used as origin of the cone.
    pub fn new(ladder: Vec<WaveProfile>, omega0: f64, tau0: f64, opts: TrackOptions) -> Result<Self, LatticeError> {
        if ladder.len() < 3 {
            return Err(LatticeError::InvalidParameter("ladder needs at least three speeds".into()));
        }
        if ladder.windows(2).any(|w| w[1].scaling.omega <= w[0].scaling.omega) {
            return Err(LatticeError::InvalidParameter("ladder must increase".into()));
        }
        let supp = ladder.iter().map(support).collect();
        Ok(Tracker { ladder, supp, opts, omega0, tau0 })
    }

    fn cone_speed(&self) -> f64 {
        self.opts.cone.unwrap_or(0.5 * (1.0 + self.omega0))
    }

    /// `(R(x+½), V(x))` at speed `omega`, interpolated linearly across the ladder.
    fn profile(&self, omega: f64, x: f64) -> (f64, f64) {
        let n = self.ladder.len();
        let om = |i: usize| self.ladder[i].scaling.omega;
        let j = (0..n - 1).find(|&i| omega <= om(i + 1)).unwrap_or(n - 2);
        let lam = ((omega - om(j)) / (om(j + 1) - om(j))).clamp(0.0, 1.0);
        let eval = |i: usize| (r_profile(&self.ladder[i], x + 0.5, self.supp[i]), v_profile(&self.ladder[i], x, self.supp[i]));
        if lam == 0.0 {
            return eval(j);
        }
        if lam == 1.0 {
            return eval(j + 1);
        }
        let (a, b) = (eval(j), eval(j + 1));
        ((1.0 - lam) * a.0 + lam * b.0, (1.0 - lam) * a.1 + lam * b.1)
    }

    /// `Σ_j (r_j − R(j+½−τ))² + ω⁻²(v_j − V(j−τ))²` over the window around `τ`.
    fn misfit(&self, omega: f64, s: &ChainState, tau: f64) -> f64 {
        let iw = 1.0 / omega;
        let centre = tau - s.offset as f64;
        let lo = (centre - self.opts.window as f64).floor().max(0.0) as usize;
        let hi = ((centre + self.opts.window as f64).ceil().max(0.0) as usize).min(s.len() - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            let (rr, vv) = self.profile(omega, (j as i64 + s.offset) as f64 - tau);
            let dr = if j + 1 < s.len() { s.r[j] - rr } else { 0.0 };
            let dv = (s.v[j] - vv) * iw;
            acc += dr * dr + dv * dv;
        }
        acc
    }

    /// Coarse `τ`: the best of a scan of the misfit around the velocity peak.
    fn coarse_tau(&self, s: &ChainState) -> Result<f64, LatticeError> {
        let (jmax, vmax) = s.v.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (j, &v)| if v > a.1 { (j, v) } else { a });
        if !(vmax > 0.25 * self.omega0) {
            return Err(LatticeError::TrackLost { t: s.t });
        }
        let steps = 60;
        let base = (jmax as i64 + s.offset) as f64 - 1.5;
        let h = 3.0 / steps as f64;
        let (imax, _) = (0..=steps)
            .map(|i| self.misfit(self.omega0, s, base + i as f64 * h))
            .enumerate()
            .fold((0, f64::INFINITY), |a, (i, c)| if c < a.1 { (i, c) } else { a });
        Ok(base + imax as f64 * h)
    }

    /// Fitted `(τ, ω)` and the errors against the fitted wave.
    pub fn observe(&self, s: &ChainState) -> Result<Observation, LatticeError> {
        let mut tau = self.coarse_tau(s)?;
        let (lo, hi) = (self.ladder[0].scaling.omega, self.ladder[self.ladder.len() - 1].scaling.omega);
        let mut omega = self.omega0;
        let mut width = 0.1;
        for _ in 0..4 {
            tau = golden(tau - width, tau + width, 50, |t| self.misfit(omega, s, t));
            omega = golden(lo, hi, 50, |w| self.misfit(w, s, tau));
            width *= 0.25;
        }
        tau = golden(tau - width, tau + width, 50, |t| self.misfit(omega, s, t));
        if self.misfit(self.omega0, s, tau) <= self.misfit(omega, s, tau) {
            omega = self.omega0;
        }
        let profile = |x: f64| self.profile(omega, x);

        let cone_from = self.tau0 + self.cone_speed() * s.t;
        let (mut w2, mut l2, mut c2) = (0.0, 0.0, 0.0);
        for i in 0..s.len() {
            let jx = (i as i64 + s.offset) as f64;
            let (rr, vv) = profile(jx - tau);
            let dr = if i + 1 < s.len() { s.r[i] - rr } else { 0.0 };
            let dv = s.v[i] - vv;
            let e2 = dr * dr + dv * dv;
            l2 += e2;
            if e2 > 0.0 {
                w2 += (e2.ln() + 2.0 * self.opts.a * (jx - tau)).exp();
            }
            if jx >= cone_from {
                c2 += e2;
            }
        }
        Ok(Observation { t: s.t, tau, omega, weighted_err: w2.sqrt(), l2_err: l2.sqrt(), cone_err: c2.sqrt() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub t_end: f64,
    /// Defaults to `0.1/ω`.
    pub dt: Option<f64>,
    /// Defaults to `40 + 6ωT`.
    pub sites: Option<usize>,
    pub tau0: f64,
    /// Time between tracker samples.
    pub sample_every: f64,
    pub perturbation: Perturbation,
    pub step: StepOptions,
    pub track: TrackOptions,
    /// Shift the window when the wave passes three quarters of it.
    pub recentre: bool,
}

impl SimOptions {
    pub fn new(t_end: f64) -> Self {
        SimOptions {
            t_end,
            dt: None,
            sites: None,
            tau0: 20.0,
            sample_every: t_end / 80.0,
            perturbation: Perturbation::None,
            step: StepOptions::default(),
            track: TrackOptions::default(),
            recentre: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSummary {
    pub omega0: f64,
    pub eta: f64,
    pub b0_fit: f64,
    pub omega_inf: f64,
    pub omega_spread: f64,
    pub tau_inf: f64,
    pub max_l2_err: f64,
    pub final_weighted_err: f64,
    pub energy_drift: f64,
    pub momentum_drift: f64,
    pub substeps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimResult {
    pub track: OrbitTrack,
    pub summary: SimSummary,
    /// States at the sample times.
    pub snapshots: Vec<ChainState>,
}

/// Launches the middle member of `ladder` and tracks it until `t_end`.
pub fn simulate(ladder: Vec<WaveProfile>, opts: &SimOptions) -> Result<SimResult, LatticeError> {
    if !(opts.t_end > 0.0) || !(opts.sample_every > 0.0) {
        return Err(LatticeError::InvalidParameter("t_end and sample_every must be positive".into()));
    }
    let wave = ladder[ladder.len() / 2].clone();
    let pot = wave.potential;
    let omega0 = wave.scaling.omega;
    let dt = opts.dt.unwrap_or_else(|| default_dt(omega0));
    let sites = opts.sites.unwrap_or_else(|| default_sites(omega0, opts.t_end));
    let mut state = launch_wave(&wave, sites, opts.tau0, opts.perturbation)?;
    let tracker = Tracker::new(ladder, omega0, opts.tau0, opts.track)?;
    let e0 = state.energy(&pot);
    let p0 = state.momentum();

    let mut track = OrbitTrack::default();
    let mut snapshots = vec![state.clone()];
    let first = tracker.observe(&state)?;
    track.push(&first);
    let mut substeps = 0;
    let samples = (opts.t_end / opts.sample_every).round().max(1.0) as usize;
    for k in 1..=samples {
        let target = opts.t_end * k as f64 / samples as f64;
        while state.t < target - 1e-12 * target {
            let h = dt.min(target - state.t);
            substeps += step(&mut state, h, &pot, &opts.step)?;
        }
        let obs = tracker.observe(&state)?;
        track.push(&obs);
        if opts.recentre {
            let local = obs.tau - state.offset as f64;
            if local > 0.75 * state.len() as f64 {
                state.recentre((local - 0.25 * state.len() as f64) as usize);
            }
        }
        snapshots.push(state.clone());
    }
    let summary = SimSummary {
        omega0,
        eta: opts.perturbation.eta(),
        b0_fit: track.decay_rate(),
        omega_inf: track.omega_inf(),
        omega_spread: track.omega_spread(),
        tau_inf: track.tau.last().copied().unwrap_or(f64::NAN) - track.omega_inf() * opts.t_end,
        max_l2_err: track.max_l2(),
        final_weighted_err: track.weighted_err.last().copied().unwrap_or(f64::NAN),
        energy_drift: (state.energy(&pot) - e0).abs() / e0.abs().max(f64::MIN_POSITIVE),
        momentum_drift: (state.momentum() - p0).abs(),
        substeps,
    };
    Ok(SimResult { track, summary, snapshots })
}
