use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::work::Work;

/// Window for [`initial_convergence_rate`] used by reports: the reduction
/// achieved by the first step alone.
pub const DEFAULT_RATE_WINDOW: usize = 1;

/// Normalized residual per iteration with cumulative work and wall time.
///
/// Entry 0 describes the initial guess; entry `k` the iterate after `k`
/// steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub residuals: Vec<f64>,
    pub work: Vec<Work>,
    pub seconds: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn new(initial_residual: f64, work: Work, seconds: f64) -> Self {
        ConvergenceTrace {
            residuals: vec![initial_residual],
            work: vec![work],
            seconds: vec![seconds],
        }
    }

    pub fn push(&mut self, residual: f64, work: Work, seconds: f64) {
        self.residuals.push(residual);
        self.work.push(work);
        self.seconds.push(seconds);
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len() - 1
    }

    pub fn last(&self) -> f64 {
        *self.residuals.last().unwrap()
    }

    /// Cumulative total multiply counts.
    pub fn work_units(&self) -> Vec<u64> {
        self.work.iter().map(Work::total).collect()
    }

    /// Work spent in step `k` (1-based).
    pub fn step_work(&self, k: usize) -> Work {
        self.work[k] - self.work[k - 1]
    }

    /// Mean work per step over the whole trace.
    pub fn mean_step_work(&self) -> Option<Work> {
        let n = self.iterations() as u64;
        if n == 0 {
            return None;
        }
        let total = *self.work.last().unwrap() - self.work[0];
        Some(Work {
            smoothing: total.smoothing / n,
            spmv: total.spmv / n,
            transfer: total.transfer / n,
            coarse_solve: total.coarse_solve / n,
            vector: total.vector / n,
        })
    }
}

/// Geometric-mean residual reduction per step over the first `k` steps.
pub fn initial_convergence_rate(trace: &ConvergenceTrace, k: usize) -> Result<f64> {
    if k == 0 || trace.len() <= k {
        return Err(Error::InvalidArgument(format!(
            "need more than {k} trace entries (and k >= 1), have {}",
            trace.len()
        )));
    }
    Ok((trace.residuals[k] / trace.residuals[0]).powf(1.0 / k as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(n: usize, ratio: f64) -> ConvergenceTrace {
        let mut t = ConvergenceTrace::new(1.0, Work::default(), 0.0);
        for k in 1..=n {
            t.push(ratio.powi(k as i32), Work::default(), 0.0);
        }
        t
    }

    #[test]
    fn geometric_trace_rate() {
        let t = geometric(6, 0.1);
        for k in 1..=6 {
            assert!((initial_convergence_rate(&t, k).unwrap() - 0.1).abs() < 1e-12);
        }
        assert!(initial_convergence_rate(&t, 7).is_err());
        assert!(initial_convergence_rate(&t, 0).is_err());
    }

    #[test]
    fn step_work_differences() {
        let mut t = ConvergenceTrace::new(1.0, Work { spmv: 10, ..Work::default() }, 0.0);
        t.push(0.5, Work { spmv: 30, smoothing: 5, ..Work::default() }, 0.1);
        t.push(0.2, Work { spmv: 50, smoothing: 10, ..Work::default() }, 0.2);
        assert_eq!(t.step_work(2).spmv, 20);
        assert_eq!(t.mean_step_work().unwrap().smoothing, 5);
        assert_eq!(t.work_units(), vec![10, 35, 60]);
        assert_eq!(t.iterations(), 2);
    }
}
