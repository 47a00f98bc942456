//! Linearization about a traveling wave in the weighted space `L²_a`.
//!
//! Conjugating `L(S, W) = (S' + ω⁻¹∇W, W' + ω⁻¹∇(pS))`, `p = Φ''(R)`, with
//! `e^{ax}` turns `∂_x` into `∂_x − a` and `∇y = y(·+½) − y(·−½)` into
//! `∇_a y = e^{−a/2}y(·+½) − e^{a/2}y(·−½)`. The conjugated operator is
//! translation invariant away from the wave, so it is closed periodically on
//! `[−X, X)`.
//!
//! The mesh repeats one node pattern in every half unit, so the shifts by
//! `±½` are exact index shifts. Inside each half unit the nodes may cluster
//! at the half-integers through a smooth periodic map `x = X(z)`, which
//! resolves the wave tip at `x = 0` and its images at `±½, ±1, …`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::wave::WaveProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid spacing {h} does not divide 1/2 or half-width {x} is not a multiple of 1/2")]
    GridMismatch { h: f64, x: f64 },
    #[error("weight a = {a} must lie in (0, {tail_rate})")]
    WeightTooLarge { a: f64, tail_rate: f64 },
    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivative {
    /// Periodic trigonometric interpolation in the computational coordinate.
    Fourier,
    /// Periodic central differences of order 4, 6 or 8.
    FiniteDifference { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    /// `X`; a multiple of ½.
    pub half_width: f64,
    /// Nodes per half unit.
    pub per_half: usize,
    /// Target spacing at the half-integers; `None` keeps the mesh uniform.
    pub centre_spacing: Option<f64>,
    pub derivative: Derivative,
}

impl SpectralGrid {
    /// Uniform mesh with spacing `h` on `[−X, X)`.
    pub fn uniform(h: f64, x: f64, derivative: Derivative) -> Result<Self, SpectralError> {
        let per = 0.5 / h;
        let halves = 2.0 * x;
        if !(h > 0.0) || (per - per.round()).abs() > 1e-9 || (halves - halves.round()).abs() > 1e-9 || x <= 0.0 {
            return Err(SpectralError::GridMismatch { h, x });
        }
        Ok(SpectralGrid { half_width: x, per_half: per.round() as usize, centre_spacing: None, derivative })
    }

    /// Graded mesh resolving the tip width `δβ` of `wave` with about 8 nodes.
    pub fn for_wave(wave: &WaveProfile, x: f64, per_half: usize) -> Self {
        SpectralGrid {
            half_width: x,
            per_half,
            centre_spacing: Some(wave.scaling.unit() / 8.0),
            derivative: Derivative::Fourier,
        }
    }

    pub fn nodes(&self) -> usize {
        (4.0 * self.half_width).round() as usize * self.per_half
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub a: f64,
    /// Mesh for the dense eigensolve.
    pub grid: SpectralGrid,
    /// Finer mesh for residuals and symplectic products.
    pub residual_grid: SpectralGrid,
    /// Eigenvalues with `Re λ > −a + margin·a` are examined.
    pub margin: f64,
    pub residual_threshold: f64,
    pub mass_fraction: f64,
    pub mass_radius: f64,
    pub cluster_radius: f64,
}

impl SpectralConfig {
    pub fn for_wave(wave: &WaveProfile, a: f64) -> Self {
        SpectralConfig {
            a,
            grid: SpectralGrid::for_wave(wave, 4.0, 48),
            residual_grid: SpectralGrid {
                centre_spacing: Some(wave.scaling.unit() / 16.0),
                ..SpectralGrid::for_wave(wave, 4.0, 512)
            },
            margin: 0.1,
            residual_threshold: 1e-6,
            mass_fraction: 0.9,
            mass_radius: 3.0,
            cluster_radius: 0.05,
        }
    }

    /// Same scan on a longer and finer eigen mesh.
    pub fn refined(&self) -> Self {
        let mut c = *self;
        c.grid.half_width += 1.0;
        c.grid.per_half = c.grid.per_half * 4 / 3;
        c
    }
}

fn periodic_map(per_half: usize, centre: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let m = per_half;
    let uniform = (vec_range(m).map(|k| 0.5 * k as f64 / m as f64).collect(), vec![0.5; m]);
    let Some(target) = centre else { return uniform };
    if 0.5 / m as f64 <= target {
        return uniform;
    }
    let eps = 6.0 / m as f64;
    let psi = |z: f64| ((eps * eps + ((PI * z).sin() / PI).powi(2)).sqrt()) - eps;
    let norm = |amp: f64| {
        let q = 4096;
        (0..q).map(|i| (amp * psi(i as f64 / q as f64)).exp()).sum::<f64>() / q as f64
    };
    let want = 0.5 / (m as f64 * target);
    let (mut lo, mut hi) = (0.0, 1.0);
    while norm(hi) < want {
        hi *= 2.0;
        if hi > 1e3 {
            break;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if norm(mid) < want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let amp = 0.5 * (lo + hi);
    let nrm = norm(amp);
    let g = |z: f64| (amp * psi(z)).exp() / nrm;
    let mut x = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    let mut acc = 0.0;
    let sub = 64;
    for k in 0..m {
        x.push(0.5 * acc);
        d.push(0.5 * g(k as f64 / m as f64));
        // Simpson over [k/m, (k+1)/m]
        let (a, b) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
        let hh = (b - a) / sub as f64;
        let mut s = g(a) + g(b);
        for i in 1..sub {
            s += g(a + i as f64 * hh) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc += s * hh / 3.0;
    }
    (x, d)
}

fn vec_range(n: usize) -> std::ops::Range<usize> {
    0..n
}

#[derive(Debug, Clone)]
enum DerivOp {
    /// `c[d]` multiplies `u_{j−d}`.
    Fourier(Vec<f64>),
    /// `c_k` multiplies `u_{j+k} − u_{j−k}`, already divided by `Δz`.
    Fd(Vec<f64>),
}

/// Nodes of a periodic mesh on `[−X, X)`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub x: Vec<f64>,
    /// `dx/dz` with `Δz = 1/per_half`.
    pub dxdz: Vec<f64>,
    /// Quadrature weights (`Σ w_j f_j ≈ ∫ f dx`).
    pub weight: Vec<f64>,
    pub per_half: usize,
    deriv: DerivOp,
}

impl Mesh {
    pub fn new(grid: &SpectralGrid) -> Result<Self, SpectralError> {
        let halves = 4.0 * grid.half_width;
        if (halves - halves.round()).abs() > 1e-9 || grid.half_width <= 0.0 || grid.per_half < 2 {
            return Err(SpectralError::GridMismatch { h: 0.5 / grid.per_half as f64, x: grid.half_width });
        }
        let m = grid.per_half;
        let (loc, d) = periodic_map(m, grid.centre_spacing);
        let n = grid.nodes();
        let mut x = Vec::with_capacity(n);
        let mut dxdz = Vec::with_capacity(n);
        for j in 0..n {
            let (c, k) = (j / m, j % m);
            x.push(-grid.half_width + 0.5 * c as f64 + loc[k]);
            dxdz.push(d[k]);
        }
        let weight = dxdz.iter().map(|v| v / m as f64).collect();
        let deriv = match grid.derivative {
            Derivative::Fourier => {
                let period = n as f64 / m as f64;
                let mut c = vec![0.0; n];
                for (dd, cd) in c.iter_mut().enumerate().skip(1) {
                    let sign = if dd % 2 == 0 { 1.0 } else { -1.0 };
                    *cd = PI / period * sign / (PI * dd as f64 / n as f64).tan();
                }
                DerivOp::Fourier(c)
            }
            Derivative::FiniteDifference { order } => {
                let c: Vec<f64> = match order {
                    4 => vec![2.0 / 3.0, -1.0 / 12.0],
                    6 => vec![3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
                    8 => vec![4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
                    o => return Err(SpectralError::InvalidParameter(format!("difference order {o}"))),
                };
                DerivOp::Fd(c.into_iter().map(|v| v * m as f64).collect())
            }
        };
        Ok(Mesh { x, dxdz, weight, per_half: m, deriv })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `du/dx` at every node.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        match &self.deriv {
            DerivOp::Fourier(c) => {
                crate::parallel::fill_indexed(&mut out, |j| {
                    let mut s = 0.0;
                    for (k, uk) in u.iter().enumerate() {
                        let d = (j + n - k) % n;
                        s += c[d] * uk;
                    }
                    s / self.dxdz[j]
                });
            }
            DerivOp::Fd(c) => {
                for (j, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (k, ck) in c.iter().enumerate() {
                        let k = k + 1;
                        s += ck * (u[(j + k) % n] - u[(j + n - k) % n]);
                    }
                    *o = s / self.dxdz[j];
                }
            }
        }
        out
    }

    /// Dense `d/dx` matrix entry `(j, k)`.
    fn derivative_entry(&self, j: usize, k: usize) -> f64 {
        let n = self.len();
        let v = match &self.deriv {
            DerivOp::Fourier(c) => c[(j + n - k) % n],
            DerivOp::Fd(c) => {
                let d = (k + n - j) % n;
                let mut s = 0.0;
                for (i, ci) in c.iter().enumerate() {
                    let kk = i + 1;
                    if d == kk {
                        s += ci;
                    }
                    if d == n - kk {
                        s -= ci;
                    }
                }
                s
            }
        };
        v / self.dxdz[j]
    }

    #[inline]
    pub fn shift(&self, j: usize, halves: isize) -> usize {
        let n = self.len() as isize;
        (j as isize + halves * self.per_half as isize).rem_euclid(n) as usize
    }

    /// Discrete `L²` norm of a pair.
    pub fn norm(&self, s: &[f64], w: &[f64]) -> f64 {
        self.weight.iter().zip(s.iter().zip(w)).map(|(q, (a, b))| q * (a * a + b * b)).sum::<f64>().sqrt()
    }

    /// `∫ f g dx`.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weight.iter().zip(f.iter().zip(g)).map(|(q, (a, b))| q * a * b).sum()
    }

    /// `∇⁻¹F(x) = Σ_{k≥0} F(x − ½ − k)`, the inverse in `L²_{−a}`.
    pub fn inverse_nabla(&self, f: &[f64]) -> Vec<f64> {
        let m = self.per_half;
        (0..self.len())
            .map(|j| {
                let mut i = j as isize - m as isize;
                let mut s = 0.0;
                while i >= 0 {
                    s += f[i as usize];
                    i -= 2 * m as isize;
                }
                s
            })
            .collect()
    }
}

/// The conjugated operator on a mesh.
#[derive(Debug, Clone)]
pub struct Operator {
    pub mesh: Mesh,
    pub a: f64,
    pub omega: f64,
    /// `Φ''(R)` at the nodes.
    pub p: Vec<f64>,
}

impl Operator {
    /// Discretizes the linearization about `wave` on `grid`.
    pub fn assemble(wave: &WaveProfile, a: f64, grid: &SpectralGrid) -> Result<Self, SpectralError> {
        if !(a > 0.0) || a >= wave.tail_rate {
            return Err(SpectralError::WeightTooLarge { a, tail_rate: wave.tail_rate });
        }
        let mesh = Mesh::new(grid)?;
        let mut p = vec![0.0; mesh.len()];
        crate::parallel::fill_indexed(&mut p, |j| wave.potential.d2(wave.r_at(mesh.x[j])));
        Ok(Operator { mesh, a, omega: wave.scaling.omega, p })
    }

    /// Constant coefficient `p ≡ c`.
    pub fn constant(omega: f64, c: f64, a: f64, grid: &SpectralGrid) -> Result<Self, SpectralError> {
        let mesh = Mesh::new(grid)?;
        let p = vec![c; mesh.len()];
        Ok(Operator { mesh, a, omega, p })
    }

    pub fn unknowns(&self) -> usize {
        2 * self.mesh.len()
    }

    fn nabla(&self, y: &[f64]) -> Vec<f64> {
        let (ep, em) = ((-0.5 * self.a).exp(), (0.5 * self.a).exp());
        (0..y.len()).map(|j| ep * y[self.mesh.shift(j, 1)] - em * y[self.mesh.shift(j, -1)]).collect()
    }

    /// Action on a conjugated pair `(e^{ax}S, e^{ax}W)`.
    pub fn apply(&self, s: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let io = 1.0 / self.omega;
        let ds = self.mesh.derivative(s);
        let dw = self.mesh.derivative(w);
        let nw = self.nabla(w);
        let ps: Vec<f64> = s.iter().zip(&self.p).map(|(a, b)| a * b).collect();
        let nps = self.nabla(&ps);
        let ls = (0..s.len()).map(|j| ds[j] - self.a * s[j] + io * nw[j]).collect();
        let lw = (0..s.len()).map(|j| dw[j] - self.a * w[j] + io * nps[j]).collect();
        (ls, lw)
    }

    /// Dense matrix in the ordering `(S, W)`.
    pub fn dense(&self) -> Mat<f64> {
        let n = self.mesh.len();
        let io = 1.0 / self.omega;
        let (ep, em) = ((-0.5 * self.a).exp(), (0.5 * self.a).exp());
        let mut a = Mat::<f64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                let d = self.mesh.derivative_entry(j, k);
                a[(j, k)] = d;
                a[(n + j, n + k)] = d;
            }
            a[(j, j)] -= self.a;
            a[(n + j, n + j)] -= self.a;
            let (up, dn) = (self.mesh.shift(j, 1), self.mesh.shift(j, -1));
            a[(j, n + up)] += io * ep;
            a[(j, n + dn)] -= io * em;
            a[(n + j, up)] += io * ep * self.p[up];
            a[(n + j, dn)] -= io * em * self.p[dn];
        }
        a
    }

    /// `e^{ax} f(x)` at the nodes.
    pub fn conjugate(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.len()];
        crate::parallel::fill_indexed(&mut out, |j| {
            let x = self.mesh.x[j];
            (self.a * x).exp() * f(x)
        });
        out
    }
}

/// One point of each essential-spectrum branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssentialPoint {
    pub kappa: f64,
    pub plus: [f64; 2],
    pub minus: [f64; 2],
}

/// `λ±(κ) = −iκ − a ± 2ω⁻¹√c sinh(iκ/2 + a/2)`.
pub fn essential_branch(omega: f64, a: f64, c: f64, kappa: f64, sign: f64) -> [f64; 2] {
    let amp = 2.0 * c.sqrt() / omega;
    let (x, y) = (0.5 * a, 0.5 * kappa);
    let (sr, si) = (x.sinh() * y.cos(), x.cosh() * y.sin());
    [-a + sign * amp * sr, -kappa + sign * amp * si]
}

/// Samples both branches on `κ ∈ [−2π, 2π]`.
pub fn essential_spectrum(omega: f64, a: f64, c: f64, samples: usize) -> Vec<EssentialPoint> {
    (0..samples)
        .map(|i| {
            let kappa = -2.0 * PI + 4.0 * PI * i as f64 / (samples - 1).max(1) as f64;
            EssentialPoint {
                kappa,
                plus: essential_branch(omega, a, c, kappa, 1.0),
                minus: essential_branch(omega, a, c, kappa, -1.0),
            }
        })
        .collect()
}

/// `max_κ |Re λ(κ) + a| = 2ω⁻¹√c sinh(a/2)`.
pub fn essential_band(omega: f64, a: f64, c: f64) -> f64 {
    2.0 * c.sqrt() / omega * (0.5 * a).sinh()
}

/// Distance from `z` to the nearest point of either branch.
pub fn distance_to_curves(omega: f64, a: f64, c: f64, z: [f64; 2]) -> f64 {
    let d = |k: f64, s: f64| {
        let p = essential_branch(omega, a, c, k, s);
        ((p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2)).sqrt()
    };
    // Im λ ≈ −κ, so search a window around κ = −Im z
    let centre = -z[1];
    let width = 2.0 + 4.0 * c.sqrt() / omega * (0.5 * a).cosh();
    let mut best = f64::INFINITY;
    for s in [1.0, -1.0] {
        let n = 2000;
        let mut arg = centre;
        let mut bv = f64::INFINITY;
        for i in 0..=n {
            let k = centre - width + 2.0 * width * i as f64 / n as f64;
            let v = d(k, s);
            if v < bv {
                bv = v;
                arg = k;
            }
        }
        let step = 2.0 * width / n as f64;
        let (mut lo, mut hi) = (arg - step, arg + step);
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if d(m1, s) < d(m2, s) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(bv).min(d(0.5 * (lo + hi), s));
    }
    best
}

/// `σ(U₊, U₋) = ⟨S₊, ∇⁻¹W₋⟩ + ⟨W₊, ∇⁻¹S₋⟩` for unweighted samples on `mesh`.
pub fn symplectic_product(mesh: &Mesh, plus: (&[f64], &[f64]), minus: (&[f64], &[f64])) -> f64 {
    mesh.dot(plus.0, &mesh.inverse_nabla(minus.1)) + mesh.dot(plus.1, &mesh.inverse_nabla(minus.0))
}

/// Shift and acceleration modes with their residuals and symplectic products.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JordanReport {
    /// `‖L U_*‖` in the weighted discrete norm.
    pub residual_star: f64,
    /// `‖L U_# − (m/(2δ)) U_*‖`.
    pub residual_sharp: f64,
    /// `‖(m/(2δ)) U_*‖`.
    pub scale_sharp: f64,
    pub sigma_star_sharp: f64,
    pub sigma_star_star: f64,
    /// `δ^(m/2+1) σ(U_*, U_#)`.
    pub normalized_sigma: f64,
    /// `ω σ(U_*, U_#)`.
    pub omega_sigma: f64,
}

/// Weighted samples of `U_*` and `U_#` on the operator's mesh.
pub struct JordanVectors {
    pub star: (Vec<f64>, Vec<f64>),
    pub sharp: (Vec<f64>, Vec<f64>),
}

pub fn jordan_vectors(op: &Operator, wave: &WaveProfile) -> JordanVectors {
    JordanVectors {
        star: (op.conjugate(|x| wave.dr_dx(x)), op.conjugate(|x| wave.dv_dx(x))),
        sharp: (op.conjugate(|x| wave.dr_ddelta(x)), op.conjugate(|x| wave.dv_ddelta(x))),
    }
}

/// Residuals of the Jordan identities and symplectic products on `grid`.
pub fn jordan_modes(wave: &WaveProfile, a: f64, grid: &SpectralGrid) -> Result<JordanReport, SpectralError> {
    let op = Operator::assemble(wave, a, grid)?;
    let v = jordan_vectors(&op, wave);
    let mesh = &op.mesh;
    let (ls, lw) = op.apply(&v.star.0, &v.star.1);
    let residual_star = mesh.norm(&ls, &lw);
    let k = wave.scaling.m / (2.0 * wave.scaling.delta);
    let (ms, mw) = op.apply(&v.sharp.0, &v.sharp.1);
    let ds: Vec<f64> = ms.iter().zip(&v.star.0).map(|(a, b)| a - k * b).collect();
    let dw: Vec<f64> = mw.iter().zip(&v.star.1).map(|(a, b)| a - k * b).collect();
    let residual_sharp = mesh.norm(&ds, &dw);
    let scale_sharp = k * mesh.norm(&v.star.0, &v.star.1);

    let unweighted = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { mesh.x.iter().map(|&x| f(x)).collect() };
    let ss = unweighted(&|x| wave.dr_dx(x));
    let sw = unweighted(&|x| wave.dv_dx(x));
    let hs = unweighted(&|x| wave.dr_ddelta(x));
    let hw = unweighted(&|x| wave.dv_ddelta(x));
    let sigma_star_sharp = symplectic_product(mesh, (&ss, &sw), (&hs, &hw));
    let sigma_star_star = symplectic_product(mesh, (&ss, &sw), (&ss, &sw));
    let (m, d) = (wave.scaling.m, wave.scaling.delta);
    Ok(JordanReport {
        residual_star,
        residual_sharp,
        scale_sharp,
        sigma_star_sharp,
        sigma_star_star,
        normalized_sigma: d.powf(0.5 * m + 1.0) * sigma_star_sharp,
        omega_sigma: wave.scaling.omega * sigma_star_sharp,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComputedEig {
    pub re: f64,
    pub im: f64,
    /// `‖(A − λ)u‖ / ‖u‖` in the weighted discrete norm.
    pub residual: f64,
    /// Weighted mass fraction inside `|x| ≤ mass_radius`.
    pub mass_inside: f64,
    /// Relative distance of the mode to `span{U_*, U_#}`.
    pub jordan_defect: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    /// Eigenvalues within `cluster_radius` of 0.
    pub eigenvalues: Vec<[f64; 2]>,
    /// Three smallest singular values of the discrete operator and its square.
    pub sv_l: [f64; 3],
    pub sv_l2: [f64; 3],
    pub geometric: usize,
    pub algebraic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "modes", rename_all = "snake_case")]
pub enum Verdict {
    NoUnstableModes,
    SuspectModes(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub omega: f64,
    pub a: f64,
    pub m: f64,
    pub grid: SpectralGrid,
    pub unknowns: usize,
    pub essential_curves: Vec<EssentialPoint>,
    pub jordan: JordanReport,
    pub computed_eigs: Vec<ComputedEig>,
    pub cluster: ClusterDiagnostics,
    /// Distance from `2πi` to the nearest computed eigenvalue.
    pub shifted_zero_gap: f64,
    pub verdict: Verdict,
}

fn smallest_singular_values(lu: &PartialPivLu<f64>, n: usize, power: usize) -> [f64; 3] {
    let k = 3;
    let mut q = Mat::<f64>::from_fn(n, k, |i, j| (((i * 7919 + j * 104729) % 1009) as f64 / 1009.0) - 0.5);
    let inv = |q: &Mat<f64>| {
        let mut z = q.clone();
        for _ in 0..power {
            lu.solve_in_place(z.as_mut());
        }
        z
    };
    let inv_t = |q: &Mat<f64>| {
        let mut z = q.clone();
        for _ in 0..power {
            lu.solve_transpose_in_place(z.as_mut());
        }
        z
    };
    for _ in 0..25 {
        q = orthonormalize(inv_t(&inv(&q)));
    }
    let z = inv(&q);
    let sv = z.singular_values().unwrap_or_else(|_| vec![f64::NAN; k]);
    let mut out = [0.0; 3];
    for i in 0..k {
        out[i] = 1.0 / sv[i];
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

fn orthonormalize(mut q: Mat<f64>) -> Mat<f64> {
    let (n, k) = (q.nrows(), q.ncols());
    for j in 0..k {
        for i in 0..j {
            let d: f64 = (0..n).map(|r| q[(r, i)] * q[(r, j)]).sum();
            for r in 0..n {
                q[(r, j)] -= d * q[(r, i)];
            }
        }
        let nrm: f64 = (0..n).map(|r| q[(r, j)].powi(2)).sum::<f64>().sqrt();
        for r in 0..n {
            q[(r, j)] /= nrm;
        }
    }
    q
}

/// Eigenvector of a real matrix at a computed eigenvalue by shifted inverse iteration.
fn eigenvector(a: &Mat<f64>, lam: c64) -> Vec<c64> {
    let n = a.nrows();
    let shift = lam + c64::new(1e-9 * (1.0 + lam.norm()), 0.0);
    let b = Mat::<c64>::from_fn(n, n, |i, j| {
        let v = c64::new(a[(i, j)], 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = b.partial_piv_lu();
    let mut v = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.1));
    for _ in 0..3 {
        lu.solve_in_place(v.as_mut());
        let nrm: f64 = (0..n).map(|i| v[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            v[(i, 0)] /= nrm;
        }
    }
    (0..n).map(|i| v[(i, 0)]).collect()
}

/// Dense eigensolve and classification in the half strip
/// `{Re λ > −a + margin·a, |Im λ| ≤ π}`.
pub fn point_spectrum_scan(wave: &WaveProfile, cfg: &SpectralConfig) -> Result<SpectralReport, SpectralError> {
    let op = Operator::assemble(wave, cfg.a, &cfg.grid)?;
    let jordan = jordan_modes(wave, cfg.a, &cfg.residual_grid)?;
    let a_mat = op.dense();
    let n = a_mat.nrows();
    let eigs = a_mat.eigenvalues().map_err(|e| SpectralError::EigensolverFailure(format!("{e:?}")))?;
    let floor = -cfg.a + cfg.margin * cfg.a;
    let mut region: Vec<c64> = eigs.iter().copied().filter(|l| l.re > floor && l.im.abs() <= PI).collect();
    region.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    let shifted_zero_gap = eigs.iter().map(|l| (l - c64::new(0.0, 2.0 * PI)).norm()).fold(f64::INFINITY, f64::min);

    let mesh = &op.mesh;
    let nn = mesh.len();
    let jv = jordan_vectors(&op, wave);
    let basis = [jv.star.0.iter().chain(&jv.star.1).copied().collect::<Vec<f64>>(),
        jv.sharp.0.iter().chain(&jv.sharp.1).copied().collect::<Vec<f64>>()];
    let wts: Vec<f64> = mesh.weight.iter().chain(&mesh.weight).copied().collect();
    let wnorm = |u: &[c64]| u.iter().zip(&wts).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt();

    let mut computed = Vec::new();
    for &lam in region.iter().take(24) {
        let u = eigenvector(&a_mat, lam);
        let mut r = vec![c64::new(0.0, 0.0); n];
        for (i, ri) in r.iter_mut().enumerate() {
            let mut s = c64::new(0.0, 0.0);
            for (j, uj) in u.iter().enumerate() {
                s += uj * a_mat[(i, j)];
            }
            *ri = s - lam * u[i];
        }
        let un = wnorm(&u);
        let residual = wnorm(&r) / un;
        let inside: f64 = (0..n)
            .filter(|&i| mesh.x[i % nn].abs() <= cfg.mass_radius)
            .map(|i| wts[i] * u[i].norm_sqr())
            .sum();
        let mass_inside = inside / (un * un);
        let jordan_defect = projection_defect(&u, &basis, &wts);
        let accepted = residual <= cfg.residual_threshold && mass_inside >= cfg.mass_fraction;
        computed.push(ComputedEig { re: lam.re, im: lam.im, residual, mass_inside, jordan_defect, accepted });
    }

    let lu = a_mat.partial_piv_lu();
    let sv_l = smallest_singular_values(&lu, n, 1);
    let sv_l2 = smallest_singular_values(&lu, n, 2);
    let gap = 1e-2;
    let geometric = if sv_l[0] < gap * sv_l[1] { 1 + usize::from(sv_l[1] < gap * sv_l[2]) } else { 0 };
    let algebraic = if sv_l2[0] < gap * sv_l2[2] { 1 + usize::from(sv_l2[1] < gap * sv_l2[2]) } else { 0 };
    let cluster_eigs: Vec<[f64; 2]> = computed
        .iter()
        .filter(|e| e.accepted && (e.re * e.re + e.im * e.im).sqrt() <= cfg.cluster_radius)
        .map(|e| [e.re, e.im])
        .collect();
    let suspects: Vec<[f64; 2]> = computed
        .iter()
        .filter(|e| e.accepted && (e.re * e.re + e.im * e.im).sqrt() > cfg.cluster_radius)
        .map(|e| [e.re, e.im])
        .collect();
    let verdict = if suspects.is_empty() && cluster_eigs.len() == 2 && geometric == 1 && algebraic == 2 {
        Verdict::NoUnstableModes
    } else {
        let mut s = suspects;
        if cluster_eigs.len() != 2 || geometric != 1 || algebraic != 2 {
            s.extend(cluster_eigs.iter().copied());
        }
        Verdict::SuspectModes(s)
    };
    Ok(SpectralReport {
        omega: wave.scaling.omega,
        a: cfg.a,
        m: wave.scaling.m,
        grid: cfg.grid,
        unknowns: n,
        essential_curves: essential_spectrum(wave.scaling.omega, cfg.a, wave.potential.curvature(), 257),
        jordan,
        computed_eigs: computed,
        cluster: ClusterDiagnostics { eigenvalues: cluster_eigs, sv_l, sv_l2, geometric, algebraic },
        shifted_zero_gap,
        verdict,
    })
}

/// `‖u − Πu‖ / ‖u‖` with `Π` the weighted orthogonal projection onto `span(basis)`.
fn projection_defect(u: &[c64], basis: &[Vec<f64>; 2], w: &[f64]) -> f64 {
    let ip = |x: &[f64], y: &[f64]| x.iter().zip(y).zip(w).map(|((a, b), q)| a * b * q).sum::<f64>();
    let g = [[ip(&basis[0], &basis[0]), ip(&basis[0], &basis[1])], [ip(&basis[1], &basis[0]), ip(&basis[1], &basis[1])]];
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let rhs: Vec<c64> = basis
        .iter()
        .map(|b| u.iter().zip(b).zip(w).fold(c64::new(0.0, 0.0), |acc, ((z, bi), q)| acc + z * (bi * q)))
        .collect();
    let c0 = (rhs[0] * g[1][1] - rhs[1] * g[0][1]) / det;
    let c1 = (rhs[1] * g[0][0] - rhs[0] * g[1][0]) / det;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..u.len() {
        let r = u[i] - c0 * basis[0][i] - c1 * basis[1][i];
        num += w[i] * r.norm_sqr();
        den += w[i] * u[i].norm_sqr();
    }
    (num / den).sqrt()
}

/// Largest distance from a computed eigenvalue of the constant-coefficient
/// operator in `|Im λ| ≤ π` to the essential curves.
pub fn constant_coefficient_gap(omega: f64, c: f64, a: f64, grid: &SpectralGrid) -> Result<f64, SpectralError> {
    let op = Operator::constant(omega, c, a, grid)?;
    let eigs = op.dense().eigenvalues().map_err(|e| SpectralError::EigensolverFailure(format!("{e:?}")))?;
    Ok(eigs
        .iter()
        .filter(|l| l.im.abs() <= PI)
        .map(|l| distance_to_curves(omega, a, c, [l.re, l.im]))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn essential_example_value() {
        let p = essential_branch(10.0, 1.0, 1.0, 0.0, 1.0);
        assert!((p[0] + 1.0 - 0.2 * 0.5f64.sinh()).abs() < 1e-15);
        assert!((0.2 * 0.5f64.sinh() - 0.104219).abs() < 1e-6);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn band_is_attained() {
        let pts = essential_spectrum(7.0, 1.3, 0.4, 4001);
        let max = pts.iter().flat_map(|p| [p.plus[0], p.minus[0]]).map(|r| (r + 1.3).abs()).fold(0.0, f64::max);
        assert!((max - essential_band(7.0, 1.3, 0.4)).abs() < 1e-12);
    }

    #[test]
    fn fourier_derivative_on_graded_mesh() {
        let g = SpectralGrid { half_width: 3.0, per_half: 32, centre_spacing: Some(0.002), derivative: Derivative::Fourier };
        let mesh = Mesh::new(&g).unwrap();
        let f: Vec<f64> = mesh.x.iter().map(|x| (-x * x * 4.0).exp()).collect();
        let d = mesh.derivative(&f);
        let err = mesh.x.iter().zip(&d).map(|(x, d)| (d + 8.0 * x * (-x * x * 4.0).exp()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        let total: f64 = mesh.weight.iter().sum();
        assert!((total - 6.0).abs() < 1e-12);
        // nodes at half-integers are exact
        assert!(mesh.x.contains(&0.0));
    }

    #[test]
    fn inverse_nabla_inverts() {
        let g = SpectralGrid::uniform(0.05, 6.0, Derivative::Fourier).unwrap();
        let mesh = Mesh::new(&g).unwrap();
        let f: Vec<f64> = mesh.x.iter().map(|x| (-x * x).exp() * x).collect();
        let gi = mesh.inverse_nabla(&f);
        for j in 40..mesh.len() - 40 {
            let back = gi[mesh.shift(j, 1)] - gi[mesh.shift(j, -1)];
            assert!((back - f[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_mismatch() {
        assert!(matches!(SpectralGrid::uniform(0.3, 4.0, Derivative::Fourier), Err(SpectralError::GridMismatch { .. })));
    }
}
