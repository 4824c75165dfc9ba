use crate::error::Result;
use crate::sparse::{GridField, StencilMatrix};
use crate::work::Work;

use super::{Iteration, Step};

/// Classic conjugate gradient.
///
/// The residual is supplied fresh by the driver each step, so the search
/// direction is updated from the true residual rather than a recurrence.
pub struct ConjugateGradient<'a> {
    a: &'a StencilMatrix,
    direction: Option<GridField>,
    rr_prev: f64,
}

impl<'a> ConjugateGradient<'a> {
    pub fn new(a: &'a StencilMatrix) -> Self {
        ConjugateGradient {
            a,
            direction: None,
            rr_prev: 0.0,
        }
    }
}

impl Iteration for ConjugateGradient<'_> {
    fn step(&mut self, x: &mut GridField, r: &GridField, work: &mut Work) -> Result<Step> {
        let n = r.len() as u64;
        let rr = r.dot(r);
        let d = match self.direction.take() {
            None => r.clone(),
            Some(mut d) => {
                let beta = rr / self.rr_prev;
                d.scale(beta);
                d.axpy(1.0, r);
                work.vector += 2 * n;
                d
            }
        };
        let ad = self.a.spmv_counted(&d, work)?;
        let curvature = d.dot(&ad);
        work.vector += 2 * n;
        if !(curvature > 0.0) {
            return Ok(Step::Breakdown);
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &d);
        work.vector += n;
        self.rr_prev = rr;
        self.direction = Some(d);
        Ok(Step::Continue)
    }
}
