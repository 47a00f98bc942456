use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fput_core::cli_io::{self, parse_potential, Experiment, IoError, RunConfig};
use fput_core::scaling::{shape_for_speed, solve_scaling};

#[derive(Parser)]
#[command(name = "fput", version, about = "Traveling waves in FPUT chains with singular potentials")]
struct Cli {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Order of the singularity (inverse monomial unless --potential is given).
    #[arg(long)]
    m: Option<f64>,
    /// `inverse:M`, `lj:N` or `two-term:M,K`.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the asymptotic shape equation.
    ShapeOde {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the scaling parameters for one or more speeds.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        omega: Vec<f64>,
        /// Also write scaling.json and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the exact traveling wave.
    Wave {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        h_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectrum of the linearization in the weighted space.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        /// `h,X`: mesh spacing and half-width.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        h_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Launch the wave on the lattice and track it.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wave diagnostics over a ladder of speeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        omega: Vec<f64>,
        #[arg(long)]
        h_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the tables behind every figure.
    ReproFigures {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply_common(cfg: &mut RunConfig, c: &Common) -> Result<(), IoError> {
    if let Some(m) = c.m {
        cfg.m = m;
    }
    if let Some(p) = &c.potential {
        let pot = parse_potential(p)?;
        cfg.potential = Some(pot.kind());
        if c.m.is_none() {
            cfg.m = pot.m();
        }
    }
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    Ok(())
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_grid(s: &str) -> Result<(f64, f64), IoError> {
    let bad = || IoError::Config(format!("--grid expects h,X, got '{s}'"));
    let (h, x) = s.split_once(',').ok_or_else(bad)?;
    Ok((h.trim().parse().map_err(|_| bad())?, x.trim().parse().map_err(|_| bad())?))
}

fn build(cli: Cli) -> Result<(RunConfig, bool), IoError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| IoError::Io { path: p.display().to_string(), message: e.to_string() })?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    let mut print_scaling = false;
    match cli.command {
        Command::ShapeOde { common, xmax, out } => {
            cfg.experiment = Experiment::ShapeOde;
            apply_common(&mut cfg, &common)?;
            set(&mut cfg.x_max, xmax);
            if cli.config.is_none() && out.is_none() {
                cfg.out = PathBuf::from("shape.csv");
            }
            set(&mut cfg.out, out);
        }
        Command::Scaling { common, omega, out } => {
            cfg.experiment = Experiment::Scaling;
            apply_common(&mut cfg, &common)?;
            if !omega.is_empty() {
                cfg.omegas = omega;
            }
            print_scaling = out.is_none();
            set(&mut cfg.out, out);
        }
        Command::Wave { common, omega, h_max, out } => {
            cfg.experiment = Experiment::Wave;
            apply_common(&mut cfg, &common)?;
            if let Some(w) = omega {
                cfg.omegas = vec![w];
            }
            if h_max.is_some() {
                cfg.h_max = h_max;
            }
            if cli.config.is_none() && out.is_none() {
                cfg.out = PathBuf::from("wave.csv");
            }
            set(&mut cfg.out, out);
        }
        Command::Spectrum { common, omega, a, grid, h_max, out } => {
            cfg.experiment = Experiment::Spectrum;
            apply_common(&mut cfg, &common)?;
            if let Some(w) = omega {
                cfg.omegas = vec![w];
            }
            set(&mut cfg.a, a);
            if let Some(g) = grid {
                cfg.spectral_grid = Some(parse_grid(&g)?);
            }
            if h_max.is_some() {
                cfg.h_max = h_max;
            }
            set(&mut cfg.out, out);
        }
        Command::Simulate { common, omega, eta, t_end, dt, a, out } => {
            cfg.experiment = Experiment::Simulate;
            apply_common(&mut cfg, &common)?;
            if let Some(w) = omega {
                cfg.omegas = vec![w];
            }
            set(&mut cfg.eta, eta);
            set(&mut cfg.t_end, t_end);
            if dt.is_some() {
                cfg.dt = dt;
            }
            set(&mut cfg.a, a);
            set(&mut cfg.out, out);
        }
        Command::Sweep { common, omega, h_max, out } => {
            cfg.experiment = Experiment::Sweep;
            apply_common(&mut cfg, &common)?;
            if !omega.is_empty() {
                cfg.omegas = omega;
            }
            if h_max.is_some() {
                cfg.h_max = h_max;
            }
            set(&mut cfg.out, out);
        }
        Command::ReproFigures { out } => {
            cfg.experiment = Experiment::ReproFigures;
            if cli.config.is_none() && out.is_none() {
                cfg.out = PathBuf::from("figures");
            }
            set(&mut cfg.out, out);
        }
    }
    Ok((cfg, print_scaling))
}

fn print_scaling(cfg: &RunConfig) -> Result<(), IoError> {
    cfg.validate()?;
    let top = cfg.omegas.iter().cloned().fold(0.0, f64::max);
    let (shape, _) = shape_for_speed(cfg.potential()?.m(), top, cfg.tol)?;
    let mut out = Vec::new();
    for &w in &cfg.omegas {
        let p = solve_scaling(w, &shape)?;
        out.push(serde_json::json!({ "omega": p.omega, "delta": p.delta, "xi": p.xi, "alpha": p.alpha, "beta": p.beta }));
    }
    let value = if out.len() == 1 { out.remove(0) } else { serde_json::Value::Array(out) };
    println!("{}", serde_json::to_string_pretty(&value).map_err(|e| IoError::Json(e.to_string()))?);
    Ok(())
}

fn execute(cli: Cli) -> Result<(), IoError> {
    let (cfg, to_stdout) = build(cli)?;
    if to_stdout {
        return print_scaling(&cfg);
    }
    let manifest = cli_io::run(&cfg)?;
    for f in &manifest.files {
        eprintln!("wrote {} ({} bytes)", f.path, f.bytes);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
