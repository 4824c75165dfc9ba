use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::relaxation::Smoother;
use crate::sparse::{GridField, StencilMatrix};
use crate::transfer::{build_hierarchy_with, GridHierarchy};
use crate::work::Work;

use super::{CoarseSolverKind, Iteration, SolverConfig, Step};

/// Exact (or fallback iterative) solver for the coarsest level.
pub enum CoarseSolver {
    Direct(Cholesky<f64, Dyn>),
    GaussSeidel(usize),
    /// Hierarchies used only for MGGD/MGCG never solve on the coarsest level.
    None,
}

impl std::fmt::Debug for CoarseSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoarseSolver::Direct(c) => write!(f, "Direct({}x{})", c.l_dirty().nrows(), c.l_dirty().ncols()),
            CoarseSolver::GaussSeidel(s) => write!(f, "GaussSeidel({s})"),
            CoarseSolver::None => f.write_str("None"),
        }
    }
}

/// A Galerkin hierarchy plus the smoothing and coarse-solve settings that
/// the v-cycle and nested iteration need.
#[derive(Debug)]
pub struct Multigrid {
    hierarchy: GridHierarchy,
    coarse: CoarseSolver,
    pre: Smoother,
    post: Smoother,
}

impl Multigrid {
    pub fn new(a: &StencilMatrix, cfg: &SolverConfig) -> Result<Self> {
        let hierarchy = build_hierarchy_with(a, cfg.coarse_threshold, cfg.edge_rule)?;
        Self::from_hierarchy(hierarchy, cfg)
    }

    pub fn from_hierarchy(hierarchy: GridHierarchy, cfg: &SolverConfig) -> Result<Self> {
        let coarse = match cfg.coarse_solver {
            CoarseSolverKind::DenseDirect => {
                let dense = hierarchy.coarsest().to_dense()?;
                CoarseSolver::Direct(Cholesky::new(dense).ok_or(Error::NotPositiveDefinite)?)
            }
            CoarseSolverKind::GaussSeidel { sweeps } => CoarseSolver::GaussSeidel(sweeps),
        };
        Ok(Multigrid {
            hierarchy,
            coarse,
            pre: Smoother {
                kind: cfg.smoother,
                sweeps: cfg.pre_sweeps,
            },
            post: Smoother {
                kind: cfg.smoother,
                sweeps: cfg.post_sweeps,
            },
        })
    }

    /// Hierarchy only, coarsened to `descent_coarse_threshold`.
    pub(crate) fn without_coarse_solver(a: &StencilMatrix, cfg: &SolverConfig) -> Result<Self> {
        Ok(Multigrid {
            hierarchy: build_hierarchy_with(a, cfg.descent_coarse_threshold, cfg.edge_rule)?,
            coarse: CoarseSolver::None,
            pre: Smoother::default(),
            post: Smoother::default(),
        })
    }

    pub fn hierarchy(&self) -> &GridHierarchy {
        &self.hierarchy
    }

    fn coarse_solve(&self, u: &mut GridField, f: &GridField, work: &mut Work) -> Result<()> {
        let a = self.hierarchy.coarsest();
        match &self.coarse {
            CoarseSolver::Direct(chol) => {
                let n = f.len();
                let x = chol.solve(&DVector::from_column_slice(f.values()));
                u.values_mut().copy_from_slice(x.as_slice());
                work.coarse_solve += (n * n) as u64;
            }
            CoarseSolver::GaussSeidel(sweeps) => {
                Smoother {
                    kind: crate::relaxation::SmootherKind::GaussSeidel,
                    sweeps: *sweeps,
                }
                .apply(a, u, f, work)?;
            }
            CoarseSolver::None => {
                return Err(Error::InvalidArgument(
                    "hierarchy was built without a coarse solver".into(),
                ))
            }
        }
        Ok(())
    }

    fn vcycle_level(
        &self,
        level: usize,
        u: &mut GridField,
        f: &GridField,
        work: &mut Work,
    ) -> Result<()> {
        if level + 1 == self.hierarchy.depth() {
            return self.coarse_solve(u, f, work);
        }
        let a = self.hierarchy.operator(level);
        let transfer = &self.hierarchy.transfers()[level];
        self.pre.apply(a, u, f, work)?;
        let r = a.residual_counted(u, f, work)?;
        let rc = transfer.restrict(&r, work)?;
        let (cw, ch) = transfer.coarse_dims();
        let mut ec = GridField::zeros(cw, ch);
        self.vcycle_level(level + 1, &mut ec, &rc, work)?;
        transfer.prolong_add(&ec, u, work)?;
        self.post.apply(a, u, f, work)?;
        Ok(())
    }

    fn nested_level(
        &self,
        level: usize,
        u: &mut GridField,
        f: &GridField,
        work: &mut Work,
    ) -> Result<()> {
        if level + 1 == self.hierarchy.depth() {
            return self.coarse_solve(u, f, work);
        }
        let a = self.hierarchy.operator(level);
        let transfer = &self.hierarchy.transfers()[level];
        let r = a.residual_counted(u, f, work)?;
        let rc = transfer.restrict(&r, work)?;
        let (cw, ch) = transfer.coarse_dims();
        let mut ec = GridField::zeros(cw, ch);
        self.nested_level(level + 1, &mut ec, &rc, work)?;
        transfer.prolong_add(&ec, u, work)
    }

    /// One v-cycle on the finest level.
    pub fn vcycle(&self, u: &mut GridField, f: &GridField, work: &mut Work) -> Result<()> {
        u.check_dims(self.hierarchy.finest().dims())?;
        f.check_dims(self.hierarchy.finest().dims())?;
        self.vcycle_level(0, u, f, work)
    }

    /// Coarse-grid correction without smoothing: restrict the residual,
    /// estimate the coarse error recursively from zero, prolong and add.
    pub fn nested_iteration(&self, u: &mut GridField, f: &GridField, work: &mut Work) -> Result<()> {
        u.check_dims(self.hierarchy.finest().dims())?;
        f.check_dims(self.hierarchy.finest().dims())?;
        self.nested_level(0, u, f, work)
    }
}

/// One nested-iteration correction of `u` (free-function form).
pub fn nested_iteration(mg: &Multigrid, u: &GridField, f: &GridField) -> Result<GridField> {
    let mut out = u.clone();
    mg.nested_iteration(&mut out, f, &mut Work::default())?;
    Ok(out)
}

/// One v-cycle applied to `u` (free-function form).
pub fn vcycle(mg: &Multigrid, u: &GridField, f: &GridField) -> Result<GridField> {
    let mut out = u.clone();
    mg.vcycle(&mut out, f, &mut Work::default())?;
    Ok(out)
}

/// V-cycle as an [`Iteration`]: solves `A e = r` with one cycle from
/// `e = 0` and adds the correction.
pub struct VCycle<'a> {
    mg: &'a Multigrid,
}

impl<'a> VCycle<'a> {
    pub fn new(mg: &'a Multigrid) -> Self {
        VCycle { mg }
    }
}

impl Iteration for VCycle<'_> {
    fn step(&mut self, x: &mut GridField, r: &GridField, work: &mut Work) -> Result<Step> {
        let mut e = GridField::zeros(x.width(), x.height());
        self.mg.vcycle(&mut e, r, work)?;
        x.axpy(1.0, &e);
        work.vector += x.len() as u64;
        Ok(Step::Continue)
    }
}
