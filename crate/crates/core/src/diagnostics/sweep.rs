use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::{levin_laplacian, EpsilonScaling};
use crate::solvers::{solve, SolverConfig, SolverKind};
use crate::system::{assemble, SolveReport, Termination, DEFAULT_GAMMA};
use crate::work::Work;

use super::scene::DiskScene;
use super::trace::{initial_convergence_rate, DEFAULT_RATE_WINDOW};

/// Laplacian and assembly settings for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub scaling: EpsilonScaling,
    pub parallel_rows: bool,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            epsilon: 1e-3,
            gamma: DEFAULT_GAMMA,
            scaling: EpsilonScaling::Literal,
            parallel_rows: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub resolution: usize,
    pub pixels: usize,
    pub iterations: usize,
    /// Residual reduction of the first step.
    pub rho0: Option<f64>,
    pub mean_step_work: Option<Work>,
    pub terminated: Termination,
    /// Set when the solve did not converge.
    pub flagged: bool,
    pub report: SolveReport,
}

/// Builds scene, Laplacian, system and solver at each resolution and
/// solves to tolerance.
pub fn resolution_sweep(
    scene: &DiskScene,
    resolutions: &[usize],
    solver: SolverKind,
    cfg: &SolverConfig,
    params: &SweepParams,
) -> Result<Vec<SweepRow>> {
    if resolutions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "resolutions must be strictly ascending".into(),
        ));
    }
    let run = |&n: &usize| -> Result<SweepRow> {
        let rendered = scene.render(n)?;
        let lap = levin_laplacian(&rendered.image, params.epsilon, 1, params.scaling)?;
        let sys = assemble(&lap, &rendered.scribbles, params.gamma)?;
        let report = solve(&sys, solver, cfg)?;
        let k = report.iterations.min(DEFAULT_RATE_WINDOW);
        let rho0 = if k >= 1 {
            initial_convergence_rate(&report.trace, k).ok()
        } else {
            None
        };
        Ok(SweepRow {
            resolution: n,
            pixels: n * n,
            iterations: report.iterations,
            rho0,
            mean_step_work: report.trace.mean_step_work(),
            terminated: report.terminated,
            flagged: report.terminated != Termination::Converged,
            report,
        })
    };
    if params.parallel_rows {
        resolutions.par_iter().map(run).collect()
    } else {
        resolutions.iter().map(run).collect()
    }
}
