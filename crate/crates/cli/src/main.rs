//! `starpulse`: build polytropic equilibria, solve their radial pulsation
//! spectra, evolve the nonlinear oscillation equations, and run the
//! verification experiments.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod cache;
mod config;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use starpulse_core::equilibrium::ProfileRecord;
use starpulse_core::evolution::Evolver;
use starpulse_core::lane_emden::{self, GasParams, LaneEmdenRecord};
use starpulse_core::spectral::{self, ModesRecord};
use starpulse_core::validation::{self, ExperimentReport};
use std::path::{Path, PathBuf};

use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] starpulse_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

macro_rules! from_core_error {
    ($($ty:path),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
from_core_error!(
    starpulse_core::lane_emden::LaneEmdenError,
    starpulse_core::equilibrium::EquilibriumError,
    starpulse_core::spectral::SpectralError,
    starpulse_core::evolution::EvolutionError
);

impl cache::HasSchema for LaneEmdenRecord<f64> {
    fn schema(&self) -> u32 {
        self.schema
    }
}
impl cache::HasSchema for ProfileRecord<f64> {
    fn schema(&self) -> u32 {
        self.schema
    }
}
impl cache::HasSchema for ModesRecord<f64> {
    fn schema(&self) -> u32 {
        self.schema
    }
}

#[derive(Parser)]
#[command(name = "starpulse", version, about = "Polytropic stellar pulsation laboratory")]
struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// cache directory (overrides STARPULSE_CACHE and the config file)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the dimensionless equilibrium and locate the vacuum zero
    LaneEmden {
        /// adiabatic exponent (2, 1.5, 4/3 or 1.25; fractions accepted)
        #[arg(long)]
        gamma: Option<String>,
        /// relative integration tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// write the versioned JSON record here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the dimensional equilibrium star and its coefficient tables
    Equilibrium {
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        rho_c: Option<f64>,
        /// spectral node count (= basis size)
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the radial pulsation eigenproblem
    Modes {
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        rho_c: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        /// number of modes
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Method::Galerkin)]
        method: Method,
        /// JSON output path
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV export path (mode index, eigenvalues, nodal samples)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evolve a single-mode seed through the nonlinear equations
    Evolve {
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        rho_c: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        /// seed amplitude
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// seeded mode index (1 = fundamental)
        #[arg(long, default_value_t = 1)]
        mode: usize,
        /// number of linear periods to integrate
        #[arg(long)]
        periods: Option<f64>,
        /// time step as a fraction of the stability limit
        #[arg(long)]
        dt_factor: Option<f64>,
        /// initial phase (default pi/2: start at maximum displacement)
        #[arg(long)]
        theta0: Option<f64>,
        /// trajectory CSV path
        #[arg(long)]
        out: Option<PathBuf>,
        /// keep every k-th diagnostic row in the CSV
        #[arg(long, default_value_t = 1)]
        csv_stride: usize,
        /// write strided full-field snapshots as JSON
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Evolve general small initial data (JSON arrays of nodal values)
    Cauchy {
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        rho_c: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        /// JSON array with the initial displacement at the nodes
        #[arg(long)]
        psi0: PathBuf,
        /// JSON array with the initial velocity at the nodes
        #[arg(long)]
        psi1: PathBuf,
        /// integration horizon
        #[arg(long, value_name = "T")]
        t_end: f64,
        #[arg(long)]
        dt_factor: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        csv_stride: usize,
    },
    /// Run the verification experiments and write one CSV + JSON per report
    Verify {
        #[arg(value_enum)]
        what: VerifyTarget,
        /// report directory
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Galerkin,
    Shoot,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyTarget {
    All,
    LambdaSign,
    Eps,
    Vacuum,
    Ritter,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                CliError::Config(_) => 2,
                _ => 3,
            };
            std::process::exit(code);
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Ok(env_dir) = std::env::var("STARPULSE_CACHE") {
        cfg.cache_dir = PathBuf::from(env_dir);
    }
    if let Some(dir) = &cli.cache_dir {
        cfg.cache_dir = dir.clone();
    }
    Ok(cfg)
}

fn gamma_of(cfg: &Config, flag: &Option<String>) -> Result<f64, CliError> {
    match flag {
        Some(raw) => config::parse_gamma(raw),
        None => Ok(cfg.gamma),
    }
}

fn params_for(gamma: f64, rho_c: f64) -> Result<GasParams<f64>, CliError> {
    Ok(GasParams::new(gamma)?.with_rho_c(rho_c)?)
}

fn hit_str(hit: bool) -> &'static str {
    if hit {
        "cache hit"
    } else {
        "computed"
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    match &cli.cmd {
        Command::LaneEmden { gamma, tol, out } => {
            let gamma = gamma_of(&cfg, gamma)?;
            let tol = tol.unwrap_or(cfg.tol_ode);
            let params = GasParams::new(gamma)?;
            let key = format!("gamma={}|tol={}", report::full(params.gamma()), report::full(tol));
            let (doc, hit) = cache::cached(&cfg.cache_dir, "lane-emden", &key, || {
                let sol = lane_emden::integrate(&params, tol)?;
                Ok(sol.record(params.gamma()))
            })?;
            println!(
                "lane-emden: gamma={} xi1={} mu1={} grid={} ({})",
                report::human(gamma),
                report::human(doc.xi1),
                report::human(doc.mu1),
                doc.grid.len(),
                hit_str(hit)
            );
            if let Some(path) = out {
                report::write_json(path, &doc)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Equilibrium {
            gamma,
            rho_c,
            nodes,
            out,
        } => {
            let gamma = gamma_of(&cfg, gamma)?;
            let rho_c = rho_c.unwrap_or(cfg.rho_c);
            let nodes = nodes.unwrap_or(cfg.nodes);
            let params = params_for(gamma, rho_c)?;
            let key = format!(
                "gamma={}|rho_c={}|nodes={nodes}|tol={}",
                report::full(params.gamma()),
                report::full(rho_c),
                report::full(cfg.tol_ode)
            );
            let (doc, hit) = cache::cached(&cfg.cache_dir, "equilibrium", &key, || {
                let profile = starpulse_core::build_profile(params, cfg.tol_ode, nodes)?;
                Ok(profile.record())
            })?;
            println!(
                "equilibrium: gamma={} rho_c={} R={} M={} kappa={} xi_plus={} ({})",
                report::human(gamma),
                report::human(rho_c),
                report::human(doc.r_big),
                report::human(doc.mass_total),
                report::human(doc.kappa),
                report::human(doc.xi_plus),
                hit_str(hit)
            );
            if let Some(path) = out {
                report::write_json(path, &doc)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Modes {
            gamma,
            rho_c,
            nodes,
            count,
            method,
            out,
            csv,
        } => {
            let gamma = gamma_of(&cfg, gamma)?;
            let rho_c = rho_c.unwrap_or(cfg.rho_c);
            let nodes = nodes.unwrap_or(cfg.nodes);
            let params = params_for(gamma, rho_c)?;
            let key = format!(
                "gamma={}|rho_c={}|nodes={nodes}|count={count}|tols={}/{}",
                report::full(params.gamma()),
                report::full(rho_c),
                report::full(cfg.tol_ode),
                report::full(cfg.tol_eig)
            );
            let (doc, hit) = cache::cached(&cfg.cache_dir, "modes", &key, || {
                let profile = starpulse_core::build_profile(params, cfg.tol_ode, nodes)?;
                let modes = spectral::solve_modes(&profile, *count, cfg.tol_eig)?;
                Ok(ModesRecord {
                    schema: validation::SCHEMA_VERSION,
                    gamma: params.gamma(),
                    rho_c,
                    basis: nodes,
                    x_nodes: profile.x_nodes.clone(),
                    modes,
                })
            })?;
            println!("modes: gamma={} ({})", report::human(gamma), hit_str(hit));
            let needs_shoot = matches!(method, Method::Shoot | Method::Both);
            let shoot_profile = if needs_shoot {
                Some(starpulse_core::build_profile(params, cfg.tol_ode, nodes)?)
            } else {
                None
            };
            for mode in &doc.modes {
                let mut line = format!(
                    "  n={} lambda={} lambda_phys={}",
                    mode.index,
                    report::human(mode.lambda),
                    report::human(mode.lambda_phys)
                );
                if mode.lambda_phys > 0.0 {
                    let period = 2.0 * std::f64::consts::PI / mode.lambda_phys.sqrt();
                    line.push_str(&format!(" period={}", report::human(period)));
                }
                if let Some(profile) = &shoot_profile {
                    let refined = spectral::shoot_eigenvalue(profile, mode.lambda_phys)?;
                    line.push_str(&format!(" shoot={}", report::human(refined)));
                    if *method == Method::Both {
                        let rel = ((refined - mode.lambda_phys)
                            / mode.lambda_phys.abs().max(1e-300))
                        .abs();
                        line.push_str(&format!(" agreement={}", report::human(rel)));
                    }
                }
                println!("{line}");
            }
            if let Some(path) = out {
                report::write_json(path, &doc)?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = csv {
                report::write_modes_csv(path, &doc.x_nodes, &doc.modes)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Evolve {
            gamma,
            rho_c,
            nodes,
            eps,
            mode,
            periods,
            dt_factor,
            theta0,
            out,
            csv_stride,
            snapshots,
        } => {
            let gamma = gamma_of(&cfg, gamma)?;
            let rho_c = rho_c.unwrap_or(cfg.rho_c);
            let nodes = nodes.unwrap_or(cfg.nodes);
            let periods = periods.unwrap_or(cfg.periods);
            let dt_factor = dt_factor.unwrap_or(cfg.dt_factor);
            let theta0 = theta0.unwrap_or(std::f64::consts::FRAC_PI_2);
            let params = params_for(gamma, rho_c)?;
            let profile = starpulse_core::build_profile(params, cfg.tol_ode, nodes)?;
            let modes = spectral::solve_modes(&profile, *mode, cfg.tol_eig)?;
            let seed = &modes[*mode - 1];
            let evolver = Evolver::new(&profile)?;
            let snapshot_stride = 32;
            let traj = evolver.evolve_seed(seed, *eps, theta0, periods, dt_factor, snapshot_stride)?;
            let last = traj.diagnostics.last().unwrap();
            let e0 = traj.diagnostics[0].energy;
            println!(
                "evolve: gamma={} eps={} mode={} steps={} dt={} final sup|y|={} energy drift={}",
                report::human(gamma),
                report::human(*eps),
                mode,
                traj.diagnostics.len() - 1,
                report::human(traj.dt),
                report::human(last.sup_y),
                report::human(((last.energy - e0) / e0.abs().max(1e-300)).abs()),
            );
            if let Some(path) = out {
                report::write_trajectory_csv(path, &traj, *csv_stride)?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = snapshots {
                report::write_json(path, &traj.snapshots)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Cauchy {
            gamma,
            rho_c,
            nodes,
            psi0,
            psi1,
            t_end,
            dt_factor,
            out,
            csv_stride,
        } => {
            let gamma = gamma_of(&cfg, gamma)?;
            let rho_c = rho_c.unwrap_or(cfg.rho_c);
            let nodes = nodes.unwrap_or(cfg.nodes);
            let dt_factor = dt_factor.unwrap_or(cfg.dt_factor);
            let params = params_for(gamma, rho_c)?;
            let read_field = |path: &Path| -> Result<Vec<f64>, CliError> {
                let bytes = std::fs::read(path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                let values: Vec<f64> = serde_json::from_slice(&bytes).map_err(|e| {
                    CliError::Config(format!("{} is not a JSON array: {e}", path.display()))
                })?;
                if values.len() != nodes {
                    return Err(CliError::Config(format!(
                        "{}: expected {nodes} nodal values, got {}",
                        path.display(),
                        values.len()
                    )));
                }
                Ok(values)
            };
            let psi0 = read_field(psi0)?;
            let psi1 = read_field(psi1)?;
            let profile = starpulse_core::build_profile(params, cfg.tol_ode, nodes)?;
            let evolver = Evolver::new(&profile)?;
            let traj = evolver.evolve_cauchy(psi0, psi1, *t_end, dt_factor, 32)?;
            let last = traj.diagnostics.last().unwrap();
            println!(
                "cauchy: gamma={} T={} steps={} final sup|y|={} final R_F={}",
                report::human(gamma),
                report::human(*t_end),
                traj.diagnostics.len() - 1,
                report::human(last.sup_y),
                report::human(last.r_free),
            );
            if let Some(path) = out {
                report::write_trajectory_csv(path, &traj, *csv_stride)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Verify {
            what,
            out,
            gamma,
            nodes,
        } => {
            let gamma = gamma_of(&cfg, gamma)?;
            let nodes = nodes.unwrap_or(cfg.nodes);
            let out_dir = out.clone().unwrap_or_else(|| cfg.out_dir.clone());
            std::fs::create_dir_all(&out_dir)?;

            let mut reports: Vec<ExperimentReport> = Vec::new();
            let want = |target: VerifyTarget, toggle: bool| {
                *what == target || (*what == VerifyTarget::All && toggle)
            };
            if want(VerifyTarget::LambdaSign, cfg.verify_lambda_sign) {
                reports.push(validation::lambda_sign_map(
                    &[1.25, 4.0 / 3.0, 1.5, 2.0],
                    nodes.max(120),
                )?);
            }
            let oscillatory = gamma > 4.0 / 3.0 + 1e-12;
            if want(VerifyTarget::Eps, cfg.verify_eps) {
                if !oscillatory {
                    return Err(CliError::Config(format!(
                        "the eps experiment needs gamma > 4/3 (an oscillatory fundamental); got {gamma}"
                    )));
                }
                reports.push(validation::epsilon_convergence(
                    gamma,
                    &[1e-2, 5e-3, 2.5e-3],
                    3.0,
                    nodes,
                    0.2,
                )?);
            }
            if want(VerifyTarget::Vacuum, cfg.verify_vacuum) {
                if !oscillatory {
                    return Err(CliError::Config(format!(
                        "the vacuum experiment needs gamma > 4/3; got {gamma}"
                    )));
                }
                reports.push(validation::vacuum_exponent(gamma, nodes, 1e-3, (1e-3, 1e-2))?);
            }
            if want(VerifyTarget::Ritter, cfg.verify_ritter) {
                if !oscillatory {
                    return Err(CliError::Config(format!(
                        "the ritter experiment needs gamma > 4/3; got {gamma}"
                    )));
                }
                reports.push(validation::ritter_eddington(gamma, &[0.5, 1.0, 2.0], nodes)?);
            }

            let mut all_pass = true;
            for rep in &reports {
                let verdict = report::verdict_str(rep);
                println!("experiment {}: {}", rep.name, verdict);
                all_pass &= rep.passed();
                report::write_report_csv(&out_dir.join(format!("{}.csv", rep.name)), rep)?;
                report::write_json(&out_dir.join(format!("{}.json", rep.name)), rep)?;
            }
            println!(
                "wrote {} report pair(s) to {}",
                reports.len(),
                out_dir.display()
            );
            if !all_pass {
                return Err(CliError::Core(starpulse_core::Error::Spectral(
                    spectral::SpectralError::ConvergenceFailure(
                        "one or more verification experiments failed".into(),
                    ),
                )));
            }
            Ok(())
        }
    }
}
