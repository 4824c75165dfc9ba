//! Scalar-multiply accounting.
//!
//! Every kernel that touches a grid reports the number of multiplies it
//! actually performed, split by category, so that solver cost claims can be
//! checked by counting rather than by timing.

use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Work {
    /// Relaxation sweeps (Jacobi, Gauss-Seidel) on any level.
    pub smoothing: u64,
    /// Matrix-vector products, including residual evaluations.
    pub spmv: u64,
    /// Restriction and prolongation.
    pub transfer: u64,
    /// Exact solves on the coarsest level.
    pub coarse_solve: u64,
    /// Dot products, axpys and scalings.
    pub vector: u64,
}

impl Work {
    pub fn total(&self) -> u64 {
        self.smoothing + self.spmv + self.transfer + self.coarse_solve + self.vector
    }
}

impl Add for Work {
    type Output = Work;

    fn add(self, rhs: Work) -> Work {
        Work {
            smoothing: self.smoothing + rhs.smoothing,
            spmv: self.spmv + rhs.spmv,
            transfer: self.transfer + rhs.transfer,
            coarse_solve: self.coarse_solve + rhs.coarse_solve,
            vector: self.vector + rhs.vector,
        }
    }
}

impl AddAssign for Work {
    fn add_assign(&mut self, rhs: Work) {
        *self = *self + rhs;
    }
}

impl Sub for Work {
    type Output = Work;

    fn sub(self, rhs: Work) -> Work {
        Work {
            smoothing: self.smoothing - rhs.smoothing,
            spmv: self.spmv - rhs.spmv,
            transfer: self.transfer - rhs.transfer,
            coarse_solve: self.coarse_solve - rhs.coarse_solve,
            vector: self.vector - rhs.vector,
        }
    }
}
