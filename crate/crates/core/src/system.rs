//! The constrained system `(L + gamma C) alpha = gamma g`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::ConvergenceTrace;
use crate::error::{Error, Result};
use crate::sparse::{GridField, StencilMatrix};
use crate::work::Work;

/// Default constraint weight.
pub const DEFAULT_GAMMA: f64 = 1.0;

/// Per-pixel hard constraints: the diagonal of `C` and the targets `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMap {
    width: usize,
    height: usize,
    constrained: Vec<bool>,
    target: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintWarning {
    /// Nothing is constrained; `L` alone is singular.
    Empty,
    /// Some targets are neither 0 nor 1.
    FractionalTargets,
    /// No pixel is pinned to 1.
    NoForeground,
    /// No pixel is pinned to 0.
    NoBackground,
}

impl std::fmt::Display for ConstraintWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            ConstraintWarning::Empty => "no constrained pixels; the system is singular",
            ConstraintWarning::FractionalTargets => "scribble targets outside {0, 1}",
            ConstraintWarning::NoForeground => "no foreground (alpha = 1) scribbles",
            ConstraintWarning::NoBackground => "no background (alpha = 0) scribbles",
        };
        f.write_str(msg)
    }
}

impl ConstraintMap {
    pub fn new(width: usize, height: usize) -> Self {
        ConstraintMap {
            width,
            height,
            constrained: vec![false; width * height],
            target: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn constrain(&mut self, x: usize, y: usize, target: f64) {
        let p = y * self.width + x;
        self.constrained[p] = true;
        self.target[p] = target;
    }

    pub fn release(&mut self, x: usize, y: usize) {
        let p = y * self.width + x;
        self.constrained[p] = false;
        self.target[p] = 0.0;
    }

    pub fn is_constrained(&self, p: usize) -> bool {
        self.constrained[p]
    }

    /// Target of pixel `p` when constrained.
    pub fn target(&self, p: usize) -> Option<f64> {
        self.constrained[p].then_some(self.target[p])
    }

    pub fn mask(&self) -> &[bool] {
        &self.constrained
    }

    pub fn count(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    pub fn warnings(&self) -> Vec<ConstraintWarning> {
        let mut out = Vec::new();
        if self.count() == 0 {
            out.push(ConstraintWarning::Empty);
            return out;
        }
        let targets = || {
            self.constrained
                .iter()
                .zip(&self.target)
                .filter(|(c, _)| **c)
                .map(|(_, t)| *t)
        };
        if targets().any(|t| t != 0.0 && t != 1.0) {
            out.push(ConstraintWarning::FractionalTargets);
        }
        if !targets().any(|t| t == 1.0) {
            out.push(ConstraintWarning::NoForeground);
        }
        if !targets().any(|t| t == 0.0) {
            out.push(ConstraintWarning::NoBackground);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MattingSystem {
    pub a: StencilMatrix,
    pub f: GridField,
    pub gamma: f64,
}

impl MattingSystem {
    pub fn dims(&self) -> (usize, usize) {
        self.a.dims()
    }

    pub fn width(&self) -> usize {
        self.a.width()
    }

    pub fn height(&self) -> usize {
        self.a.height()
    }

    /// `||f - A alpha|| / ||f||`.
    pub fn normalized_residual(&self, alpha: &GridField) -> Result<f64> {
        self.normalized_residual_counted(alpha, &mut Work::default())
    }

    pub(crate) fn normalized_residual_counted(
        &self,
        alpha: &GridField,
        work: &mut Work,
    ) -> Result<f64> {
        let norm_f = self.f.norm2();
        if norm_f == 0.0 {
            return Err(Error::ZeroRhs);
        }
        let r = self.a.residual_counted(alpha, &self.f, work)?;
        work.vector += r.len() as u64;
        Ok(r.norm2() / norm_f)
    }
}

/// `A = L + gamma C`, `f = gamma g`. Fails when nothing is constrained.
pub fn assemble(
    lap: &StencilMatrix,
    constraints: &ConstraintMap,
    gamma: f64,
) -> Result<MattingSystem> {
    if constraints.count() == 0 {
        return Err(Error::Unconstrained);
    }
    assemble_allow_singular(lap, constraints, gamma)
}

/// Same as [`assemble`] but accepts an empty constraint map.
pub fn assemble_allow_singular(
    lap: &StencilMatrix,
    constraints: &ConstraintMap,
    gamma: f64,
) -> Result<MattingSystem> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if lap.dims() != constraints.dims() {
        return Err(Error::DimensionMismatch {
            expected: lap.dims(),
            actual: constraints.dims(),
        });
    }
    let mut a = lap.clone();
    a.add_to_diagonal(constraints.mask(), gamma);
    let (w, h) = lap.dims();
    let f = GridField::from_fn(w, h, |x, y| {
        constraints.target(y * w + x).map_or(0.0, |t| gamma * t)
    });
    Ok(MattingSystem { a, f, gamma })
}

/// `||f - A alpha|| / ||f||` (free-function form).
pub fn normalized_residual(sys: &MattingSystem, alpha: &GridField) -> Result<f64> {
    sys.normalized_residual(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Diverged,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub alpha: GridField,
    pub iterations: usize,
    pub terminated: Termination,
    pub trace: ConvergenceTrace,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::poisson_laplacian;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn empty_constraints() {
        let l = poisson_laplacian(4, 4).unwrap();
        let c = ConstraintMap::new(4, 4);
        assert!(matches!(assemble(&l, &c, 1.0), Err(Error::Unconstrained)));
        let sys = assemble_allow_singular(&l, &c, 1.0).unwrap();
        assert_eq!(sys.a, l);
        assert_eq!(sys.f.norm_inf(), 0.0);
        assert!(matches!(
            sys.normalized_residual(&GridField::zeros(4, 4)),
            Err(Error::ZeroRhs)
        ));
        assert_eq!(c.warnings(), vec![ConstraintWarning::Empty]);
    }

    #[test]
    fn single_constraint_dense() {
        let l = poisson_laplacian(4, 4).unwrap();
        let mut c = ConstraintMap::new(4, 4);
        c.constrain(1, 2, 1.0);
        let p = 2 * 4 + 1;
        let sys = assemble(&l, &c, 1.0).unwrap();
        let mut expect = l.to_dense().unwrap();
        expect[(p, p)] += 1.0;
        assert_eq!(sys.a.to_dense().unwrap(), expect);
        let mut f = [0.0; 16];
        f[p] = 1.0;
        assert_eq!(sys.f.values(), &f[..]);
        assert_eq!(sys.normalized_residual(&GridField::zeros(4, 4)).unwrap(), 1.0);
        assert!(c.warnings().contains(&ConstraintWarning::NoBackground));
    }

    #[test]
    fn rejects_bad_gamma_and_dims() {
        let l = poisson_laplacian(4, 4).unwrap();
        let mut c = ConstraintMap::new(4, 4);
        c.constrain(0, 0, 0.0);
        assert!(assemble(&l, &c, 0.0).is_err());
        assert!(assemble(&l, &ConstraintMap::new(4, 3), 1.0).is_err());
    }

    #[test]
    fn large_gamma_pins_targets() {
        let l = poisson_laplacian(6, 6).unwrap();
        let mut c = ConstraintMap::new(6, 6);
        let g = |x: usize, y: usize| ((x + y) % 2) as f64;
        for y in 0..6 {
            for x in 0..6 {
                c.constrain(x, y, g(x, y));
            }
        }
        let sys = assemble(&l, &c, 1e6).unwrap();
        let sol = sys
            .a
            .to_dense()
            .unwrap()
            .cholesky()
            .unwrap()
            .solve(&DVector::from_column_slice(sys.f.values()));
        for y in 0..6 {
            for x in 0..6 {
                assert!((sol[y * 6 + x] - g(x, y)).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn residual_is_linear_in_perturbation() {
        let l = poisson_laplacian(6, 6).unwrap();
        let mut c = ConstraintMap::new(6, 6);
        c.constrain(0, 0, 0.0);
        c.constrain(5, 5, 1.0);
        let sys = assemble(&l, &c, 1.0).unwrap();
        let dense: DMatrix<f64> = sys.a.to_dense().unwrap();
        let sol = dense
            .clone()
            .cholesky()
            .unwrap()
            .solve(&DVector::from_column_slice(sys.f.values()));
        let exact = GridField::from_vec(6, 6, sol.as_slice().to_vec()).unwrap();
        assert!(sys.normalized_residual(&exact).unwrap() <= 1e-10);

        let v = GridField::from_fn(6, 6, |x, y| ((x * 3 + y) % 5) as f64 - 2.0);
        let av = sys.a.spmv(&v).unwrap().norm2();
        for delta in [1e-3, 1e-1] {
            let mut u = exact.clone();
            u.axpy(delta, &v);
            let got = sys.normalized_residual(&u).unwrap();
            let want = av * delta / sys.f.norm2();
            assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
        }
    }
}
