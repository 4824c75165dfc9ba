//! Multigrid conjugate gradient.
//!
//! The first step is one multigrid gradient step. Afterwards each step keeps
//! the previous per-level directions `d_i` next to the new residuum
//! directions `d_i^new`, and processes levels from coarse to fine:
//!
//! 1. the old `d_i` is A-orthogonalized against the coarser new directions
//!    and renormalized;
//! 2. `d_i^new` is A-orthogonalized against the coarser new and old
//!    directions, then against `d_i` itself;
//! 3. if what remains is negligible next to `d_i^new` (in max norm, relative
//!    to `epsilon`), the old direction is recycled in its place.
//!
//! The correction is then assembled from the new directions alone, exactly
//! as in the gradient variant. On a single level this is classic CG.

use crate::error::Result;
use crate::sparse::GridField;
use crate::transfer::GridHierarchy;
use crate::work::Work;

use super::mggd::{
    combine_up, combined_correction, normalize, residual_levels, restrict_down, MultigridGradient,
};
use super::{Iteration, Step};

pub struct MultigridCg<'a> {
    hier: &'a GridHierarchy,
    epsilon: f64,
    directions: Option<Vec<GridField>>,
}

impl<'a> MultigridCg<'a> {
    pub fn new(hier: &'a GridHierarchy, epsilon: f64) -> Self {
        MultigridCg {
            hier,
            epsilon,
            directions: None,
        }
    }

    /// Per-level directions used by the latest step.
    pub fn directions(&self) -> Option<&[GridField]> {
        self.directions.as_deref()
    }

    fn conjugate_step(
        &mut self,
        mut old: Vec<GridField>,
        x: &mut GridField,
        r: &GridField,
        work: &mut Work,
    ) -> Result<()> {
        let hier = self.hier;
        let depth = hier.depth();
        let residuals = residual_levels(hier, r, work)?;
        let mut new = residuals.clone();

        for i in (0..depth).rev() {
            let a = hier.operator(i);

            // Old direction against the coarser new directions.
            if old[i].norm_inf() > 0.0 {
                let k = a.spmv_counted(&old[i], work)?;
                let start_energy = k.dot(&old[i]);
                work.vector += k.len() as u64;
                if i + 1 < depth {
                    let mut ks = vec![None; depth];
                    restrict_down(hier, i, k, &mut ks, work)?;
                    let s = combine_up(
                        hier,
                        i,
                        |j, s, work| {
                            let kj = ks[j].as_ref().unwrap();
                            s.axpy(kj.dot(&new[j]), &new[j]);
                            work.vector += 2 * s.len() as u64;
                        },
                        work,
                    )?;
                    old[i].axpy(-1.0, &s);
                    work.vector += s.len() as u64;
                }
                normalize(hier, i, &mut old[i], start_energy, work)?;
            }

            // New direction against coarser new and old directions.
            let k = a.spmv_counted(&new[i], work)?;
            let start_energy = k.dot(&new[i]);
            work.vector += k.len() as u64;
            if i + 1 < depth {
                let mut ks = vec![None; depth];
                restrict_down(hier, i, k.clone(), &mut ks, work)?;
                let s = combine_up(
                    hier,
                    i,
                    |j, s, work| {
                        let kj = ks[j].as_ref().unwrap();
                        s.axpy(kj.dot(&new[j]), &new[j]);
                        s.axpy(kj.dot(&old[j]), &old[j]);
                        work.vector += 4 * s.len() as u64;
                    },
                    work,
                )?;
                new[i].axpy(-1.0, &s);
                work.vector += s.len() as u64;
            }

            // Against the old direction on the same level.
            let mut candidate = new[i].clone();
            candidate.axpy(-k.dot(&old[i]), &old[i]);
            work.vector += 2 * k.len() as u64;
            if candidate.norm_inf() > self.epsilon * new[i].norm_inf() {
                new[i] = candidate;
            } else {
                new[i] = std::mem::replace(&mut old[i], GridField::zeros(k.width(), k.height()));
            }
            normalize(hier, i, &mut new[i], start_energy, work)?;
        }

        let s = combined_correction(hier, &new, &residuals, work)?;
        x.axpy(1.0, &s);
        work.vector += x.len() as u64;
        self.directions = Some(new);
        Ok(())
    }
}

impl Iteration for MultigridCg<'_> {
    fn step(&mut self, x: &mut GridField, r: &GridField, work: &mut Work) -> Result<Step> {
        match self.directions.take() {
            None => {
                let mut first = MultigridGradient::new(self.hier);
                first.step(x, r, work)?;
                self.directions = first.take_directions();
            }
            Some(old) => self.conjugate_step(old, x, r, work)?,
        }
        Ok(Step::Continue)
    }
}
