//! Run configuration, pipelines and file output shared by the command line
//! tool. Every run writes CSV tables and a JSON manifest listing each file
//! with its SHA-256; nothing depends on the clock or the environment, so a
//! repeated run reproduces the same bytes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::lattice::{self, LatticeError, Perturbation, SimOptions, SimResult};
use crate::potentials::{Potential, PotentialError, PotentialKind};
use crate::scaling::{shape_for_speed, solve_scaling, ScalingError, ScalingParams};
use crate::shape_ode::{default_x_max, solve_shape, ShapeError, ShapeSolution};
use crate::spectral::{self, SpectralConfig, SpectralError, SpectralReport};
use crate::wave::{self, WaveError, WaveOptions, WaveProfile};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl IoError {
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::Config(_) => "config",
            IoError::Io { .. } => "io",
            IoError::Json(_) => "json",
            IoError::Potential(_) => "potential",
            IoError::Shape(_) => "shape_ode",
            IoError::Scaling(_) => "scaling",
            IoError::Wave(_) => "wave",
            IoError::Spectral(_) => "spectral",
            IoError::Lattice(_) => "lattice",
        }
    }

    /// `{"error": kind, "message": ...}` for machine consumers.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() })
    }
}

fn io_err(path: &Path, e: std::io::Error) -> IoError {
    IoError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// `printf("%.17g", x)`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let e = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = e.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_g17(x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub files: Vec<FileRecord>,
    pub diagnostics: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects written files for the manifest.
pub struct OutputDir {
    root: PathBuf,
    manifest: String,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, manifest: &str) -> Result<Self, IoError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(OutputDir { root, manifest: manifest.to_string(), files: Vec::new() })
    }

    /// Output rooted at the parent of `file`; the manifest sits next to it.
    pub fn for_file(file: &Path) -> Result<(Self, String), IoError> {
        let name = file
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| IoError::Config(format!("bad output path {}", file.display())))?
            .to_string();
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("out").to_string();
        let root = file.parent().filter(|p| !p.as_os_str().is_empty()).map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok((Self::create(root, &format!("{stem}.manifest.json"))?, name))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), IoError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.files.push(FileRecord { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<(), IoError> {
        self.write_bytes(name, table.to_csv().as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), IoError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| IoError::Json(e.to_string()))?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    pub fn finish(self, command: &str, parameters: serde_json::Value, diagnostics: BTreeMap<String, f64>) -> Result<Manifest, IoError> {
        let m = Manifest {
            tool: "fput".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
            files: self.files,
            diagnostics,
        };
        let path = self.root.join(&self.manifest);
        let mut s = serde_json::to_string_pretty(&m).map_err(|e| IoError::Json(e.to_string()))?;
        s.push('\n');
        fs::write(&path, s).map_err(|e| io_err(&path, e))?;
        Ok(m)
    }
}

/// Parses `inverse:M`, `lj:N` or `two-term:M,K`.
pub fn parse_potential(s: &str) -> Result<Potential, IoError> {
    let (name, args) = s.split_once(':').ok_or_else(|| IoError::Config(format!("potential '{s}' needs the form kind:params")))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|_| IoError::Config(format!("bad number '{a}' in potential '{s}'"))))
        .collect::<Result<_, _>>()?;
    let kind = match (name.trim(), nums.as_slice()) {
        ("inverse" | "inverse-monomial", [m]) => PotentialKind::InverseMonomial { m: *m },
        ("lj" | "lennard-jones", [n]) => PotentialKind::LennardJonesType { n: *n },
        ("two-term", [m, k]) => PotentialKind::TwoTerm { m: *m, k: *k },
        _ => return Err(IoError::Config(format!("unknown potential '{s}'"))),
    };
    Ok(Potential::new(kind)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ShapeOde,
    Scaling,
    Wave,
    Spectrum,
    Simulate,
    Sweep,
    ReproFigures,
}

/// Options for any pipeline. Unused fields are ignored by the selected one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Defaults to the inverse monomial of order `m`.
    pub potential: Option<PotentialKind>,
    pub m: f64,
    /// One speed, or the ladder for `sweep`.
    pub omegas: Vec<f64>,
    pub a: f64,
    pub tol: f64,
    pub x_max: f64,
    /// Wave grid spacing bound in `x̃`.
    pub h_max: Option<f64>,
    /// `(h, X)`: nominal spacing and half-width of the eigen mesh.
    pub spectral_grid: Option<(f64, f64)>,
    pub eta: f64,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::Wave,
            potential: None,
            m: 2.0,
            omegas: vec![40.0],
            a: 1.0,
            tol: 1e-10,
            x_max: 100.0,
            h_max: None,
            spectral_grid: None,
            eta: 0.0,
            t_end: 2.0,
            dt: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))
    }

    pub fn potential(&self) -> Result<Potential, IoError> {
        match self.potential {
            Some(kind) => Ok(Potential::new(kind)?),
            None => Ok(Potential::inverse_monomial(self.m)?),
        }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let pot = self.potential()?;
        if self.potential.is_some() && (pot.m() - self.m).abs() > 1e-12 && self.m != RunConfig::default().m {
            return Err(IoError::Config(format!("m = {} conflicts with the potential (m = {})", self.m, pot.m())));
        }
        if self.omegas.is_empty() {
            return Err(IoError::Config("omega ladder is empty".into()));
        }
        if self.omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(IoError::Config("speeds must be positive".into()));
        }
        if self.omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IoError::Config("omega ladder must be strictly increasing".into()));
        }
        let positive = [("tol", self.tol), ("x_max", self.x_max), ("a", self.a), ("t_end", self.t_end)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(IoError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(h) = self.h_max {
            if !(h > 0.0) {
                return Err(IoError::Config(format!("h_max must be positive, got {h}")));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(IoError::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.eta >= 0.0) {
            return Err(IoError::Config(format!("eta must be non-negative, got {}", self.eta)));
        }
        Ok(())
    }

    fn wave_options(&self) -> WaveOptions {
        WaveOptions { h_max: self.h_max, ..WaveOptions::default() }
    }
}

/// `x, Y, Yp, Te, Tep, To, Top` at the integrator's nodes.
pub fn shape_table(shape: &ShapeSolution) -> Table {
    let mut t = Table::new(&["x", "Y", "Yp", "Te", "Tep", "To", "Top"]);
    for i in 0..shape.grid.len() {
        t.push(vec![shape.grid[i], shape.y[i], shape.yp[i], shape.te[i], shape.tep[i], shape.to[i], shape.top[i]]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSummary {
    pub omega: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub energy: f64,
    pub tail_rate: f64,
    pub residual: f64,
    #[serde(rename = "err_inf_R")]
    pub err_inf_r: f64,
    #[serde(rename = "err_inf_V")]
    pub err_inf_v: f64,
    #[serde(rename = "err_local_R")]
    pub err_local_r: f64,
}

/// Shape solution long enough for every speed in `omegas`.
pub fn shape_for_ladder(m: f64, omegas: &[f64], tol: f64) -> Result<ShapeSolution, IoError> {
    let top = omegas.iter().cloned().fold(0.0, f64::max);
    let (shape, _) = shape_for_speed(m, top, tol)?;
    Ok(shape)
}

pub fn wave_summary(w: &WaveProfile, shape: &ShapeSolution) -> Result<WaveSummary, IoError> {
    let e = w.approximation_errors(shape)?;
    let p = &w.scaling;
    Ok(WaveSummary {
        omega: p.omega,
        delta: p.delta,
        alpha: p.alpha,
        beta: p.beta,
        xi: p.xi,
        energy: w.energy,
        tail_rate: w.tail_rate,
        residual: w.residual,
        err_inf_r: e.r_inf,
        err_inf_v: e.v_inf,
        err_local_r: e.r_local,
    })
}

/// `x_tilde, x, R, V, Q` at the wave nodes.
pub fn wave_table(w: &WaveProfile) -> Table {
    let mut t = Table::new(&["x_tilde", "x", "R", "V", "Q"]);
    for i in 0..w.x.len() {
        t.push(vec![w.x[i], w.scaling.from_tilde(w.x[i]), w.r[i], w.v[i], w.q[i]]);
    }
    t
}

pub fn solve_wave(pot: &Potential, omega: f64, shape: &ShapeSolution, opts: &WaveOptions) -> Result<WaveProfile, IoError> {
    let p = solve_scaling(omega, shape)?;
    Ok(wave::solve_exact(&p, shape, pot, opts)?)
}

pub fn spectrum_tables(r: &SpectralReport) -> (Table, Table) {
    let mut curves = Table::new(&["kappa", "plus_re", "plus_im", "minus_re", "minus_im"]);
    for p in &r.essential_curves {
        curves.push(vec![p.kappa, p.plus[0], p.plus[1], p.minus[0], p.minus[1]]);
    }
    let mut eigs = Table::new(&["re", "im", "residual", "mass_inside", "jordan_defect", "accepted"]);
    for e in &r.computed_eigs {
        eigs.push(vec![e.re, e.im, e.residual, e.mass_inside, e.jordan_defect, if e.accepted { 1.0 } else { 0.0 }]);
    }
    (curves, eigs)
}

pub fn spectral_config(w: &WaveProfile, a: f64, grid: Option<(f64, f64)>) -> Result<SpectralConfig, IoError> {
    let mut cfg = SpectralConfig::for_wave(w, a);
    if let Some((h, x)) = grid {
        let per = 0.5 / h;
        if !(h > 0.0) || (per - per.round()).abs() > 1e-9 {
            return Err(SpectralError::GridMismatch { h, x }.into());
        }
        cfg.grid.per_half = per.round() as usize;
        cfg.grid.half_width = x;
    }
    Ok(cfg)
}

/// Ladder `ω₀(1 + k·step)`, `k = −2..=2`, for the orbit tracker.
pub fn tracking_ladder(pot: &Potential, omega0: f64, shape: &ShapeSolution, opts: &WaveOptions) -> Result<Vec<WaveProfile>, IoError> {
    let om: Vec<f64> = (-2..=2).map(|k| omega0 * (1.0 + 0.01 * k as f64)).collect();
    wave::solve_ladder(&om, shape, pot, opts).into_iter().map(|r| r.map_err(IoError::from)).collect()
}

pub fn track_table(r: &SimResult) -> Table {
    let tr = &r.track;
    let mut t = Table::new(&["t", "tau", "omega", "weighted_err", "l2_err", "cone_err"]);
    for i in 0..tr.times.len() {
        t.push(vec![tr.times[i], tr.tau[i], tr.omega_fit[i], tr.weighted_err[i], tr.l2_err[i], tr.cone_err[i]]);
    }
    t
}

/// Every fourth snapshot, all sites.
pub fn states_table(r: &SimResult) -> Table {
    let mut t = Table::new(&["t", "j", "r", "v"]);
    for s in r.snapshots.iter().step_by(4) {
        for j in 0..s.len() {
            t.push(vec![s.t, (j as i64 + s.offset) as f64, s.r[j], s.v[j]]);
        }
    }
    t
}

fn params_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

/// Runs the selected pipeline and writes its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<Manifest, IoError> {
    cfg.validate()?;
    let pot = cfg.potential()?;
    let m = pot.m();
    let mut diag = BTreeMap::new();
    match cfg.experiment {
        Experiment::ShapeOde => {
            let shape = solve_shape(m, cfg.x_max, cfg.tol)?;
            let (mut out, name) = OutputDir::for_file(&cfg.out)?;
            out.write_csv(&name, &shape_table(&shape))?;
            diag.insert("yp_inf".into(), shape.yp_inf);
            diag.insert("yflat_inf".into(), shape.yflat_inf);
            let sup = (0..shape.grid.len()).map(|i| shape.energy_defect(i).abs()).fold(0.0, f64::max);
            diag.insert("energy_defect_sup".into(), sup);
            out.finish("shape-ode", params_json(cfg), diag)
        }
        Experiment::Scaling => {
            let shape = shape_for_ladder(m, &cfg.omegas, cfg.tol)?;
            let reports: Vec<ScalingParams> = cfg.omegas.iter().map(|&w| solve_scaling(w, &shape)).collect::<Result<_, _>>()?;
            let mut out = OutputDir::create(&cfg.out, "manifest.json")?;
            out.write_json("scaling.json", &reports)?;
            out.finish("scaling", params_json(cfg), diag)
        }
        Experiment::Wave => {
            let omega = cfg.omegas[0];
            let shape = shape_for_ladder(m, &cfg.omegas, cfg.tol)?;
            let w = solve_wave(&pot, omega, &shape, &cfg.wave_options())?;
            let summary = wave_summary(&w, &shape)?;
            let (mut out, name) = OutputDir::for_file(&cfg.out)?;
            out.write_csv(&name, &wave_table(&w))?;
            let stem = Path::new(&name).file_stem().and_then(|s| s.to_str()).unwrap_or("wave").to_string();
            out.write_json(&format!("{stem}.json"), &summary)?;
            diag.insert("residual".into(), w.residual);
            diag.insert("q_residual".into(), w.q_residual);
            out.finish("wave", params_json(cfg), diag)
        }
        Experiment::Spectrum => {
            let omega = cfg.omegas[0];
            let shape = shape_for_ladder(m, &cfg.omegas, cfg.tol)?;
            let w = solve_wave(&pot, omega, &shape, &cfg.wave_options())?;
            let sc = spectral_config(&w, cfg.a, cfg.spectral_grid)?;
            let report = spectral::point_spectrum_scan(&w, &sc)?;
            let (curves, eigs) = spectrum_tables(&report);
            let mut out = OutputDir::create(&cfg.out, "manifest.json")?;
            out.write_json("report.json", &report)?;
            out.write_csv("essential_curves.csv", &curves)?;
            out.write_csv("eigenvalues.csv", &eigs)?;
            diag.insert("residual_star".into(), report.jordan.residual_star);
            diag.insert("omega_sigma".into(), report.jordan.omega_sigma);
            out.finish("spectrum", params_json(cfg), diag)
        }
        Experiment::Simulate => {
            let omega = cfg.omegas[0];
            let shape = shape_for_ladder(m, &[omega * 1.02], cfg.tol)?;
            let ladder = tracking_ladder(&pot, omega, &shape, &cfg.wave_options())?;
            let mut opts = SimOptions::new(cfg.t_end);
            opts.dt = cfg.dt;
            opts.track.a = cfg.a;
            if cfg.eta > 0.0 {
                opts.perturbation = Perturbation::VelocityBump { eta: cfg.eta, offset: -1.5, width: 1.0 };
            }
            let res = lattice::simulate(ladder, &opts)?;
            let mut out = OutputDir::create(&cfg.out, "manifest.json")?;
            out.write_csv("states.csv", &states_table(&res))?;
            out.write_csv("track.csv", &track_table(&res))?;
            out.write_json("summary.json", &res.summary)?;
            diag.insert("energy_drift".into(), res.summary.energy_drift);
            out.finish("simulate", params_json(cfg), diag)
        }
        Experiment::Sweep => {
            let shape = shape_for_ladder(m, &cfg.omegas, cfg.tol)?;
            let opts = cfg.wave_options();
            let waves = crate::parallel::map_indexed(cfg.omegas.len(), |i| solve_wave(&pot, cfg.omegas[i], &shape, &opts));
            let mut t = Table::new(&[
                "omega", "delta", "xi", "alpha", "beta", "energy", "tail_rate", "residual", "err_inf_R", "err_local_R", "err_inf_V", "V0_over_omega",
            ]);
            for w in waves {
                let w = w?;
                let s = wave_summary(&w, &shape)?;
                t.push(vec![
                    s.omega, s.delta, s.xi, s.alpha, s.beta, s.energy, s.tail_rate, s.residual, s.err_inf_r, s.err_local_r, s.err_inf_v,
                    w.v[0] / s.omega,
                ]);
            }
            let mut out = OutputDir::create(&cfg.out, "manifest.json")?;
            out.write_csv("sweep.csv", &t)?;
            out.finish("sweep", params_json(cfg), diag)
        }
        Experiment::ReproFigures => repro_figures(&cfg.out),
    }
}

/// Speeds of the profile figures.
pub const FIGURE_LADDER: [f64; 4] = [20.0, 40.0, 80.0, 160.0];

/// Tables behind the profile, error, derivative, shape and spectrum figures.
pub fn repro_figures(root: &Path) -> Result<Manifest, IoError> {
    let pot = Potential::lennard_jones(2.0)?;
    let m = pot.m();
    let shape = shape_for_ladder(m, &FIGURE_LADDER, 1e-11)?;
    let opts = WaveOptions::default();
    let waves: Vec<WaveProfile> = wave::solve_ladder(&FIGURE_LADDER, &shape, &pot, &opts).into_iter().collect::<Result<_, _>>()?;

    let xs: Vec<f64> = (0..=600).map(|i| -1.5 + 3.0 * i as f64 / 600.0).collect();
    let mut dist = Table::new(&["omega", "x", "R_exact", "R_breve", "R_infty"]);
    let mut vel = Table::new(&["omega", "x", "V_hat", "V_hat_infty"]);
    let mut deriv = Table::new(&["omega", "x", "dR_ddelta"]);
    let mut err = Table::new(&["omega", "delta", "err_inf_R", "err_local_R", "err_inf_V"]);
    for w in &waves {
        let p = &w.scaling;
        for &x in &xs {
            let xt = p.to_tilde(x);
            let rb = wave::approx_distance_at(p, &shape, xt)?;
            dist.push(vec![p.omega, x, w.r_at(x), rb, (x.abs() - 1.0).min(0.0)]);
            vel.push(vec![p.omega, x, w.v_at(x) / p.omega, if x.abs() <= 0.5 { 1.0 } else { 0.0 }]);
            deriv.push(vec![p.omega, x, w.dr_ddelta(x)]);
        }
        let s = wave_summary(w, &shape)?;
        err.push(vec![p.omega, p.delta, s.err_inf_r, s.err_local_r, s.err_inf_v]);
    }

    let mut odes = Table::new(&["m", "x", "Y", "Yp", "Te", "To"]);
    for mm in [2.0, 4.0] {
        let s = solve_shape(mm, default_x_max(1.0), 1e-11)?;
        for (i, &x) in s.grid.iter().enumerate() {
            if x <= 20.0 {
                odes.push(vec![mm, x, s.y[i], s.yp[i], s.te[i], s.to[i]]);
            }
        }
    }

    let w40 = &waves[1];
    let report = spectral::point_spectrum_scan(w40, &SpectralConfig::for_wave(w40, 1.0))?;
    let (curves, eigs) = spectrum_tables(&report);

    let mut out = OutputDir::create(root, "manifest.json")?;
    out.write_csv("fig_distance_profiles.csv", &dist)?;
    out.write_csv("fig_velocity_profiles.csv", &vel)?;
    out.write_csv("fig_approximation_error.csv", &err)?;
    out.write_csv("fig_parameter_derivative.csv", &deriv)?;
    out.write_csv("fig_shape_ode.csv", &odes)?;
    out.write_csv("fig_spectrum_curves.csv", &curves)?;
    out.write_csv("fig_spectrum_eigenvalues.csv", &eigs)?;
    let mut diag = BTreeMap::new();
    diag.insert("spectrum_omega_sigma".into(), report.jordan.omega_sigma);
    diag.insert("spectrum_residual_star".into(), report.jordan.residual_star);
    let params = serde_json::json!({ "potential": pot, "ladder": FIGURE_LADDER, "spectrum_omega": 40.0, "a": 1.0 });
    out.finish("repro-figures", params, diag)
}
