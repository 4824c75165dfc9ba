//! Multigrid gradient descent.
//!
//! Each step searches the multi-level residuum space spanned by the fine
//! residual and its restrictions to every coarser level. The basis is
//! A-orthonormalized from coarse to fine, with every inner product taken at
//! the coarser of the two resolutions through the Galerkin operators, so a
//! step costs a constant multiple of the fine-level work.
//!
//! Level index 0 is the finest grid here; the loops run from the coarsest
//! level (`depth - 1`) up.

use crate::error::Result;
use crate::sparse::GridField;
use crate::transfer::GridHierarchy;
use crate::work::Work;

use super::{Iteration, Step};

/// Directions whose A-norm falls below this fraction of the norm they
/// started with are dropped for the current step.
pub(super) const DEGENERATE_RATIO: f64 = 1e-12;

/// Restrictions of `v` (living on `level`) to every coarser level;
/// `out[j]` is set for `j > level`.
pub(super) fn restrict_down(
    hier: &GridHierarchy,
    level: usize,
    v: GridField,
    out: &mut [Option<GridField>],
    work: &mut Work,
) -> Result<()> {
    let mut current = v;
    for j in level..hier.depth() - 1 {
        let next = hier.transfers()[j].restrict(&current, work)?;
        out[j + 1] = Some(next.clone());
        current = next;
    }
    Ok(())
}

/// Sum `sum_j P_{level<-j} (c_j v_j)` for coarser levels `j`, evaluated by
/// accumulating at the coarsest level and prolonging one level at a time.
pub(super) fn combine_up(
    hier: &GridHierarchy,
    level: usize,
    mut term: impl FnMut(usize, &mut GridField, &mut Work),
    work: &mut Work,
) -> Result<GridField> {
    let last = hier.depth() - 1;
    let (w, h) = hier.operator(last).dims();
    let mut s = GridField::zeros(w, h);
    for j in (level + 1..=last).rev() {
        term(j, &mut s, work);
        s = hier.transfers()[j - 1].prolong(&s, work)?;
    }
    Ok(s)
}

/// A-normalizes `d` on `level`; returns false (and zeroes `d`) when the
/// direction has collapsed relative to `reference_energy`.
pub(super) fn normalize(
    hier: &GridHierarchy,
    level: usize,
    d: &mut GridField,
    reference_energy: f64,
    work: &mut Work,
) -> Result<bool> {
    let k = hier.operator(level).spmv_counted(d, work)?;
    let energy = k.dot(d);
    work.vector += d.len() as u64;
    if !(energy > DEGENERATE_RATIO * reference_energy) || !(energy > 0.0) {
        d.scale(0.0);
        return Ok(false);
    }
    d.scale(energy.sqrt().recip());
    work.vector += d.len() as u64;
    Ok(true)
}

/// Residual restricted to every level, finest first.
pub(super) fn residual_levels(
    hier: &GridHierarchy,
    r: &GridField,
    work: &mut Work,
) -> Result<Vec<GridField>> {
    let mut levels = vec![r.clone()];
    for t in hier.transfers() {
        let next = t.restrict(levels.last().unwrap(), work)?;
        levels.push(next);
    }
    Ok(levels)
}

/// Assembles `s = sum_i P_{0<-i} d_i (d_i . r_i)` on the finest level.
pub(super) fn combined_correction(
    hier: &GridHierarchy,
    dirs: &[GridField],
    residuals: &[GridField],
    work: &mut Work,
) -> Result<GridField> {
    let last = hier.depth() - 1;
    let mut s = GridField::zeros(dirs[last].width(), dirs[last].height());
    for i in (0..=last).rev() {
        if i < last {
            s = hier.transfers()[i].prolong(&s, work)?;
        }
        let c = dirs[i].dot(&residuals[i]);
        s.axpy(c, &dirs[i]);
        work.vector += 2 * s.len() as u64;
    }
    Ok(s)
}

/// Builds the A-orthonormal basis of the residuum space, coarse to fine.
pub(super) fn orthonormal_basis(
    hier: &GridHierarchy,
    residuals: &[GridField],
    work: &mut Work,
) -> Result<Vec<GridField>> {
    let depth = hier.depth();
    let mut dirs: Vec<GridField> = residuals.to_vec();
    for i in (0..depth).rev() {
        let k = hier.operator(i).spmv_counted(&dirs[i], work)?;
        let start_energy = k.dot(&dirs[i]);
        work.vector += k.len() as u64;
        if i + 1 < depth {
            let mut ks = vec![None; depth];
            restrict_down(hier, i, k, &mut ks, work)?;
            let s = combine_up(
                hier,
                i,
                |j, s, work| {
                    let kj = ks[j].as_ref().unwrap();
                    s.axpy(kj.dot(&dirs[j]), &dirs[j]);
                    work.vector += 2 * s.len() as u64;
                },
                work,
            )?;
            dirs[i].axpy(-1.0, &s);
            work.vector += s.len() as u64;
        }
        normalize(hier, i, &mut dirs[i], start_energy, work)?;
    }
    Ok(dirs)
}

/// Multigrid gradient descent as an [`Iteration`].
pub struct MultigridGradient<'a> {
    hier: &'a GridHierarchy,
    last_directions: Option<Vec<GridField>>,
}

impl<'a> MultigridGradient<'a> {
    pub fn new(hier: &'a GridHierarchy) -> Self {
        MultigridGradient {
            hier,
            last_directions: None,
        }
    }

    /// Per-level directions (level resolution) used by the latest step.
    pub fn directions(&self) -> Option<&[GridField]> {
        self.last_directions.as_deref()
    }

    pub(super) fn take_directions(&mut self) -> Option<Vec<GridField>> {
        self.last_directions.take()
    }
}

impl Iteration for MultigridGradient<'_> {
    fn step(&mut self, x: &mut GridField, r: &GridField, work: &mut Work) -> Result<Step> {
        let residuals = residual_levels(self.hier, r, work)?;
        let dirs = orthonormal_basis(self.hier, &residuals, work)?;
        let s = combined_correction(self.hier, &dirs, &residuals, work)?;
        x.axpy(1.0, &s);
        work.vector += x.len() as u64;
        self.last_directions = Some(dirs);
        Ok(Step::Continue)
    }
}
