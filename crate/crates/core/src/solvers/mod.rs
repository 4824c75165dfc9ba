//! Iterative solvers for assembled matting systems.
//!
//! Every solver starts from `alpha = 0` (or a caller-supplied guess), runs
//! one [`Iteration`] per step, and stops once the normalized residual
//! `||f - A alpha|| / ||f||` drops below the configured tolerance.

mod cg;
mod mgcg;
mod mggd;
mod multigrid;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cg::ConjugateGradient;
pub use mgcg::MultigridCg;
pub use mggd::MultigridGradient;
pub use multigrid::{nested_iteration, vcycle, CoarseSolver, Multigrid, VCycle};

use crate::diagnostics::ConvergenceTrace;
use crate::error::{Error, Result};
use crate::relaxation::SmootherKind;
use crate::sparse::GridField;
use crate::system::{MattingSystem, SolveReport, Termination};
use crate::transfer::{EdgeRule, DEFAULT_COARSE_THRESHOLD};
use crate::work::Work;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MGCG_EPSILON: f64 = 1e-3;
/// Coarsest-level size for MGGD and MGCG, which need no coarse solve and so
/// coarsen down to a handful of pixels.
pub const DEFAULT_DESCENT_THRESHOLD: usize = 4;
/// Normalized residual above which a solve is declared diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseSolverKind {
    /// Dense Cholesky factorization of the coarsest operator.
    DenseDirect,
    /// A fixed number of Gauss-Seidel sweeps from the incoming guess.
    GaussSeidel { sweeps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub smoother: SmootherKind,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    /// Coarsening stops once a level has at most this many pixels (v-cycle).
    pub coarse_threshold: usize,
    /// Same, for the hierarchies of MGGD and MGCG.
    #[serde(default = "default_descent_threshold")]
    pub descent_coarse_threshold: usize,
    /// Transfer treatment of the trailing line of even-length axes.
    #[serde(default)]
    pub edge_rule: EdgeRule,
    pub coarse_solver: CoarseSolverKind,
    /// Dependence threshold of the MGCG direction update.
    pub mgcg_restart_epsilon: f64,
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 1000,
            smoother: SmootherKind::GaussSeidel,
            pre_sweeps: 1,
            post_sweeps: 1,
            coarse_threshold: DEFAULT_COARSE_THRESHOLD,
            descent_coarse_threshold: DEFAULT_DESCENT_THRESHOLD,
            edge_rule: EdgeRule::Fold,
            coarse_solver: CoarseSolverKind::DenseDirect,
            mgcg_restart_epsilon: DEFAULT_MGCG_EPSILON,
            threads: 1,
        }
    }
}

fn default_descent_threshold() -> usize {
    DEFAULT_DESCENT_THRESHOLD
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        if self.coarse_threshold == 0 || self.descent_coarse_threshold == 0 {
            return Err(Error::InvalidArgument("coarse threshold must be >= 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Cg,
    Vcycle,
    Mggd,
    Mgcg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Cg,
        SolverKind::Vcycle,
        SolverKind::Mggd,
        SolverKind::Mgcg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Cg => "cg",
            SolverKind::Vcycle => "vcycle",
            SolverKind::Mggd => "mggd",
            SolverKind::Mgcg => "mgcg",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver {s:?}")))
    }
}

/// Outcome of a single solver step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    /// A non-positive curvature was met; the operator is not SPD.
    Breakdown,
}

/// One step of an iterative method.
pub trait Iteration {
    /// Advances `x` given its current residual `r = f - A x`.
    fn step(&mut self, x: &mut GridField, r: &GridField, work: &mut Work) -> Result<Step>;
}

/// Runs `iteration` from `initial` until convergence, divergence, or the
/// iteration cap, recording the trace.
pub fn drive(
    sys: &MattingSystem,
    cfg: &SolverConfig,
    initial: GridField,
    iteration: &mut dyn Iteration,
) -> Result<SolveReport> {
    cfg.validate()?;
    initial.check_dims(sys.dims())?;
    let norm_f = sys.f.norm2();
    if norm_f == 0.0 {
        return Err(Error::ZeroRhs);
    }
    let start = Instant::now();
    let mut work = Work::default();
    let mut x = initial;
    let mut r = sys.a.residual_counted(&x, &sys.f, &mut work)?;
    work.vector += r.len() as u64;
    let mut trace = ConvergenceTrace::new(r.norm2() / norm_f, work, 0.0);

    let mut terminated = Termination::MaxIterations;
    let mut iterations = 0;
    if trace.last() < cfg.tolerance {
        terminated = Termination::Converged;
    } else {
        for k in 1..=cfg.max_iterations {
            let status = iteration.step(&mut x, &r, &mut work)?;
            r = sys.a.residual_counted(&x, &sys.f, &mut work)?;
            work.vector += r.len() as u64;
            let res = r.norm2() / norm_f;
            trace.push(res, work, start.elapsed().as_secs_f64());
            iterations = k;
            if !res.is_finite() || res > DIVERGENCE_THRESHOLD || status == Step::Breakdown {
                terminated = Termination::Diverged;
                break;
            }
            if res < cfg.tolerance {
                terminated = Termination::Converged;
                break;
            }
        }
    }
    Ok(SolveReport {
        alpha: x,
        iterations,
        terminated,
        trace,
    })
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Solves `sys` with `kind` starting from `initial`.
pub fn solve_from(
    sys: &MattingSystem,
    kind: SolverKind,
    cfg: &SolverConfig,
    initial: GridField,
) -> Result<SolveReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || match kind {
        SolverKind::Cg => drive(sys, cfg, initial, &mut ConjugateGradient::new(&sys.a)),
        SolverKind::Vcycle => {
            let mg = Multigrid::new(&sys.a, cfg)?;
            drive(sys, cfg, initial, &mut VCycle::new(&mg))
        }
        SolverKind::Mggd => {
            let mg = Multigrid::without_coarse_solver(&sys.a, cfg)?;
            drive(sys, cfg, initial, &mut MultigridGradient::new(mg.hierarchy()))
        }
        SolverKind::Mgcg => {
            let mg = Multigrid::without_coarse_solver(&sys.a, cfg)?;
            drive(
                sys,
                cfg,
                initial,
                &mut MultigridCg::new(mg.hierarchy(), cfg.mgcg_restart_epsilon),
            )
        }
    })
}

/// Solves `sys` with `kind` from `alpha = 0`.
pub fn solve(sys: &MattingSystem, kind: SolverKind, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_from(sys, kind, cfg, GridField::zeros(sys.width(), sys.height()))
}

pub fn cg_solve(sys: &MattingSystem, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(sys, SolverKind::Cg, cfg)
}

pub fn vcycle_solve(sys: &MattingSystem, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(sys, SolverKind::Vcycle, cfg)
}

pub fn mg_gradient_solve(sys: &MattingSystem, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(sys, SolverKind::Mggd, cfg)
}

pub fn mgcg_solve(sys: &MattingSystem, cfg: &SolverConfig) -> Result<SolveReport> {
    solve(sys, SolverKind::Mgcg, cfg)
}
