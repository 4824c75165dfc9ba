//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a solve diverges or hits the iteration
//! cap, 2 for bad arguments or unreadable inputs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::diagnostics::{
    initial_convergence_rate, power_law_fit, resolution_sweep, DiskScene, SweepParams,
    DEFAULT_RATE_WINDOW, DEFAULT_SCENE_SEED,
};
use crate::error::{Error, Result};
use crate::io::{read_image, read_run_log, read_scribbles, write_matte, write_run_log, RunHeader, RunLog};
use crate::laplacian::{levin_laplacian, EpsilonScaling};
use crate::model_problems::{analytic_eigenpair, condition_number_estimate, laplace_1d};
use crate::relaxation::{iteration_matrix, smoother_spectral_radius, SmootherKind};
use crate::solvers::{solve, SolverConfig, SolverKind, DEFAULT_TOLERANCE};
use crate::system::{assemble, Termination, DEFAULT_GAMMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mgmatte", version, about = "Multigrid solvers for image matting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Cg,
    Vcycle,
    Mggd,
    Mgcg,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Cg => SolverKind::Cg,
            SolverArg::Vcycle => SolverKind::Vcycle,
            SolverArg::Mggd => SolverKind::Mggd,
            SolverArg::Mgcg => SolverKind::Mgcg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Literal,
    PerWindow,
}

impl From<ScalingArg> for EpsilonScaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Literal => EpsilonScaling::Literal,
            ScalingArg::PerWindow => EpsilonScaling::PerWindow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneArg {
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmootherArg {
    Jacobi,
    Damped,
    Gs,
}

impl From<SmootherArg> for SmootherKind {
    fn from(s: SmootherArg) -> Self {
        match s {
            SmootherArg::Jacobi => SmootherKind::Jacobi,
            SmootherArg::Damped => SmootherKind::default_damped(),
            SmootherArg::Gs => SmootherKind::GaussSeidel,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the matte of one image.
    Solve {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        scribbles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "mgcg")]
        solver: SolverArg,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "literal")]
        scaling: ScalingArg,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Leave wall-clock times out of the log.
        #[arg(long)]
        deterministic: bool,
    },
    /// Solve a synthetic scene at several resolutions and tabulate the results.
    Bench {
        #[arg(long, value_enum, default_value = "disk")]
        scene: SceneArg,
        #[arg(long, value_delimiter = ',', required = true)]
        resolutions: Vec<usize>,
        #[arg(long, value_enum, default_value = "mgcg")]
        solver: SolverArg,
        #[arg(long)]
        out: PathBuf,
        /// Also write one run log per resolution into this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SCENE_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Summarize run logs, optionally fitting iterations against size.
    Analyze {
        #[arg(long, num_args = 1.., required = true)]
        log: Vec<PathBuf>,
        #[arg(long)]
        fit_power: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smoother analysis on the 1D Dirichlet model problem.
    Model1d {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "gs")]
        smoother: SmootherArg,
        /// Print the per-mode contraction for every eigenvector.
        #[arg(long)]
        report_spectrum: bool,
    },
}

enum Failure {
    Input(Error),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            EXIT_SOLVER
        }
    }
}

fn execute(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Solve {
            image,
            scribbles,
            out,
            solver,
            tol,
            gamma,
            epsilon,
            scaling,
            max_iter,
            log,
            threads,
            deterministic,
        } => {
            let img = read_image(&image)?;
            let map = read_scribbles(&scribbles, (img.width(), img.height()))?;
            for w in map.warnings() {
                eprintln!("warning: {w}");
            }
            let cfg = SolverConfig {
                tolerance: tol,
                max_iterations: max_iter,
                threads,
                ..SolverConfig::default()
            };
            cfg.validate()?;
            let lap = levin_laplacian(&img, epsilon, 1, scaling.into())?;
            let sys = assemble(&lap, &map, gamma)?;
            let kind = SolverKind::from(solver);
            let report = solve(&sys, kind, &cfg)?;
            write_matte(&report.alpha, &out)?;
            if let Some(path) = log {
                let header = RunHeader {
                    solver: kind,
                    width: img.width(),
                    height: img.height(),
                    epsilon,
                    gamma,
                    scaling: scaling.into(),
                    config: cfg,
                    image: Some(image.display().to_string()),
                    scribbles: Some(scribbles.display().to_string()),
                    scene: None,
                    seed: None,
                };
                let rho0 = rate(&report.trace, report.iterations);
                write_run_log(&path, &RunLog::from_report(header, &report, rho0), deterministic)?;
            }
            eprintln!(
                "{kind}: {} after {} iterations, residual {:.3e}",
                report.terminated,
                report.iterations,
                report.trace.last()
            );
            match report.terminated {
                Termination::Converged => Ok(()),
                t => Err(Failure::Solver(format!("solve {t}"))),
            }
        }
        Command::Bench {
            scene: SceneArg::Disk,
            resolutions,
            solver,
            out,
            log_dir,
            seed,
            tol,
            max_iter,
            threads,
        } => {
            let cfg = SolverConfig {
                tolerance: tol,
                max_iterations: max_iter,
                threads,
                ..SolverConfig::default()
            };
            let params = SweepParams::default();
            let kind = SolverKind::from(solver);
            let scene = DiskScene::new(seed);
            let rows = resolution_sweep(&scene, &resolutions, kind, &cfg, &params)?;
            if let Some(dir) = &log_dir {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let mut csv = String::from(
                "solver,resolution,pixels,iterations,terminated,rho0,smoothing_per_iter,total_work_per_iter\n",
            );
            let mut flagged = Vec::new();
            for row in &rows {
                let step = row.mean_step_work.unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "{kind},{},{},{},{},{},{},{}",
                    row.resolution,
                    row.pixels,
                    row.iterations,
                    row.terminated,
                    row.rho0.map(|r| format!("{r:.6}")).unwrap_or_default(),
                    step.smoothing,
                    step.total()
                );
                if row.flagged {
                    flagged.push(row.resolution);
                }
                if let Some(dir) = &log_dir {
                    let header = RunHeader {
                        solver: kind,
                        width: row.resolution,
                        height: row.resolution,
                        epsilon: params.epsilon,
                        gamma: params.gamma,
                        scaling: params.scaling,
                        config: cfg,
                        image: None,
                        scribbles: None,
                        scene: Some("disk".into()),
                        seed: Some(seed),
                    };
                    let path = dir.join(format!("{kind}_{}.jsonl", row.resolution));
                    write_run_log(&path, &RunLog::from_report(header, &row.report, row.rho0), true)?;
                }
            }
            write_text(&out, &csv)?;
            if flagged.is_empty() {
                Ok(())
            } else {
                Err(Failure::Solver(format!(
                    "{kind} did not converge at resolutions {flagged:?}"
                )))
            }
        }
        Command::Analyze {
            log,
            fit_power,
            out,
        } => {
            let logs = log
                .iter()
                .map(read_run_log)
                .collect::<Result<Vec<_>>>()?;
            let csv = if fit_power {
                fit_table(&logs)?
            } else {
                let mut csv = String::from("log,solver,pixels,iterations,terminated,rho0\n");
                for (path, l) in log.iter().zip(&logs) {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        path.display(),
                        l.header.solver,
                        l.pixels(),
                        l.iterations,
                        l.terminated,
                        l.rho0.map(|r| format!("{r:.6}")).unwrap_or_default()
                    );
                }
                csv
            };
            write_text(&out, &csv)?;
            Ok(())
        }
        Command::Model1d {
            n,
            smoother,
            report_spectrum,
        } => {
            let problem = laplace_1d(n)?;
            let kind = SmootherKind::from(smoother);
            let radius = smoother_spectral_radius(&problem.a, kind)?;
            println!("n={n} smoother={smoother:?} spectral_radius={radius:.6}");
            println!("condition_number={:.6e}", condition_number_estimate(n));
            if report_spectrum {
                let r = iteration_matrix(&problem.a, kind)?;
                println!("mode,eigenvalue,contraction");
                for i in 1..=n {
                    let (lambda, v) = analytic_eigenpair(n, i)?;
                    let v = nalgebra::DVector::from_column_slice(v.values());
                    let factor = (&r * &v).norm() / v.norm();
                    println!("{i},{lambda:.6},{factor:.6}");
                }
            }
            Ok(())
        }
    }
}

fn rate(trace: &crate::diagnostics::ConvergenceTrace, iterations: usize) -> Option<f64> {
    let k = iterations.min(DEFAULT_RATE_WINDOW);
    (k >= 1).then(|| initial_convergence_rate(trace, k).ok()).flatten()
}

/// One row per solver: `iterations ~ a * Mpx^p`.
fn fit_table(logs: &[RunLog]) -> Result<String> {
    let mut groups: BTreeMap<&'static str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for l in logs {
        let g = groups.entry(l.header.solver.name()).or_default();
        g.0.push(l.pixels() as f64 / 1e6);
        g.1.push(l.iterations as f64);
    }
    let mut csv = String::from("solver,points,a_per_mpx,p,r_squared\n");
    for (solver, (sizes, iters)) in groups {
        let fit = power_law_fit(&sizes, &iters)?;
        let _ = writeln!(
            csv,
            "{solver},{},{:.6},{:.6},{:.6}",
            sizes.len(),
            fit.a,
            fit.p,
            fit.r_squared
        );
    }
    Ok(csv)
}
