//! Stationary smoothers and their iteration-matrix spectra.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{GridField, StencilMatrix, DENSE_LIMIT};
use crate::work::Work;

/// Damping used by [`SmootherKind::default_damped`].
pub const DEFAULT_OMEGA: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SmootherKind {
    Jacobi,
    DampedJacobi { omega: f64 },
    GaussSeidel,
}

impl SmootherKind {
    pub fn default_damped() -> Self {
        SmootherKind::DampedJacobi {
            omega: DEFAULT_OMEGA,
        }
    }

    fn validate(&self) -> Result<()> {
        if let SmootherKind::DampedJacobi { omega } = *self {
            if !(omega > 0.0 && omega <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "damping must lie in (0, 1], got {omega}"
                )));
            }
        }
        Ok(())
    }
}

/// A smoother and how many sweeps it applies per call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoother {
    pub kind: SmootherKind,
    pub sweeps: usize,
}

impl Default for Smoother {
    fn default() -> Self {
        Smoother {
            kind: SmootherKind::GaussSeidel,
            sweeps: 1,
        }
    }
}

impl Smoother {
    pub fn apply(
        &self,
        a: &StencilMatrix,
        u: &mut GridField,
        f: &GridField,
        work: &mut Work,
    ) -> Result<()> {
        self.kind.validate()?;
        check_diagonal(a)?;
        for _ in 0..self.sweeps {
            match self.kind {
                SmootherKind::Jacobi => jacobi_in_place(a, u, f, 1.0, work)?,
                SmootherKind::DampedJacobi { omega } => jacobi_in_place(a, u, f, omega, work)?,
                SmootherKind::GaussSeidel => gauss_seidel_in_place(a, u, f, work)?,
            }
        }
        Ok(())
    }
}

fn check_diagonal(a: &StencilMatrix) -> Result<()> {
    match a.diagonal().iter().position(|&d| !(d > 0.0)) {
        Some(pixel) => Err(Error::SingularSmoother { pixel }),
        None => Ok(()),
    }
}

/// Precomputed `(band, linear offset, dx)` triples for bands that stay on the
/// grid vertically from row `y`, excluding the diagonal.
fn row_bands(a: &StencilMatrix, y: usize) -> Vec<(usize, isize, isize)> {
    let w = a.width() as isize;
    a.offsets()
        .iter()
        .enumerate()
        .filter(|&(_, &(dy, dx))| {
            let ny = y as isize + dy;
            (dy, dx) != (0, 0) && ny >= 0 && (ny as usize) < a.height()
        })
        .map(|(b, &(dy, dx))| (b, dy * w + dx, dx))
        .collect()
}

fn jacobi_in_place(
    a: &StencilMatrix,
    u: &mut GridField,
    f: &GridField,
    omega: f64,
    work: &mut Work,
) -> Result<()> {
    let mut r = GridField::zeros(u.width(), u.height());
    a.spmv_into(u, &mut r, &mut Work::default())?;
    f.check_dims(a.dims())?;
    let diag = a.diagonal();
    let fv = f.values();
    let update = |(p, (ui, ri)): (usize, (&mut f64, &f64))| {
        *ui += omega * (fv[p] - ri) / diag[p];
    };
    if u.len() >= 1 << 14 && rayon::current_num_threads() > 1 {
        u.values_mut()
            .par_iter_mut()
            .zip(r.values().par_iter())
            .enumerate()
            .for_each(update);
    } else {
        u.values_mut()
            .iter_mut()
            .zip(r.values().iter())
            .enumerate()
            .for_each(update);
    }
    work.smoothing += a.nnz() as u64 + 2 * u.len() as u64;
    Ok(())
}

fn gauss_seidel_in_place(
    a: &StencilMatrix,
    u: &mut GridField,
    f: &GridField,
    work: &mut Work,
) -> Result<()> {
    f.check_dims(a.dims())?;
    u.check_dims(a.dims())?;
    let w = a.width();
    let diag = a.diagonal();
    let fv = f.values();
    let uv = u.values_mut();
    let mut count = 0u64;
    for y in 0..a.height() {
        let bands = row_bands(a, y);
        for x in 0..w {
            let p = y * w + x;
            let mut s = fv[p];
            for &(b, lin, dx) in &bands {
                let nx = x as isize + dx;
                if nx < 0 || nx as usize >= w {
                    continue;
                }
                s -= a.band(b)[p] * uv[(p as isize + lin) as usize];
                count += 1;
            }
            uv[p] = s / diag[p];
            count += 1;
        }
    }
    work.smoothing += count;
    Ok(())
}

/// One damped Jacobi sweep: `u + omega D^-1 (f - A u)`.
pub fn jacobi_sweep(
    a: &StencilMatrix,
    u: &GridField,
    f: &GridField,
    omega: f64,
) -> Result<GridField> {
    SmootherKind::DampedJacobi { omega }.validate()?;
    check_diagonal(a)?;
    let mut out = u.clone();
    jacobi_in_place(a, &mut out, f, omega, &mut Work::default())?;
    Ok(out)
}

/// One forward row-major Gauss-Seidel sweep.
pub fn gauss_seidel_sweep(a: &StencilMatrix, u: &GridField, f: &GridField) -> Result<GridField> {
    check_diagonal(a)?;
    let mut out = u.clone();
    gauss_seidel_in_place(a, &mut out, f, &mut Work::default())?;
    Ok(out)
}

/// Dense iteration matrix `R` with `e_new = R e`.
pub fn iteration_matrix(a: &StencilMatrix, kind: SmootherKind) -> Result<DMatrix<f64>> {
    kind.validate()?;
    check_diagonal(a)?;
    let dense = a.to_dense()?;
    let n = dense.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    Ok(match kind {
        SmootherKind::Jacobi | SmootherKind::DampedJacobi { .. } => {
            let omega = match kind {
                SmootherKind::DampedJacobi { omega } => omega,
                _ => 1.0,
            };
            let mut r = id;
            for i in 0..n {
                let d = dense[(i, i)];
                for j in 0..n {
                    r[(i, j)] -= omega * dense[(i, j)] / d;
                }
            }
            r
        }
        SmootherKind::GaussSeidel => {
            let lower = dense.lower_triangle();
            let m_inv_a = lower
                .solve_lower_triangular(&dense)
                .ok_or(Error::SingularSmoother { pixel: 0 })?;
            id - m_inv_a
        }
    })
}

/// Spectral radius of the smoother's iteration matrix by power iteration.
///
/// Iterates with `R^2` so that eigenvalue pairs `+mu, -mu` (undamped Jacobi
/// on bipartite stencils) do not stall the iteration.
pub fn smoother_spectral_radius(a: &StencilMatrix, kind: SmootherKind) -> Result<f64> {
    if a.pixels() > DENSE_LIMIT {
        return Err(Error::TooLargeForDense {
            pixels: a.pixels(),
            limit: DENSE_LIMIT,
        });
    }
    let r = iteration_matrix(a, kind)?;
    let r2 = &r * &r;
    let n = r.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    x.normalize_mut();
    let mut estimate = 0.0f64;
    let mut stable = 0;
    for _ in 0..200_000 {
        let y = &r2 * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = norm.sqrt();
        if (next - estimate).abs() <= 1e-14 * next.max(1e-300) {
            stable += 1;
            if stable >= 8 {
                return Ok(next);
            }
        } else {
            stable = 0;
        }
        estimate = next;
        x = y / norm;
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_problems::{analytic_eigenpair, laplace_1d};
    use std::f64::consts::PI;

    fn contraction(n: usize, mode: usize, omega: f64) -> f64 {
        let prob = laplace_1d(n).unwrap();
        let (_, v) = analytic_eigenpair(n, mode).unwrap();
        // Exact solution is zero, so u = v is pure error.
        let next = jacobi_sweep(&prob.a, &v, &prob.f, omega).unwrap();
        next.norm2() / v.norm2()
    }

    #[test]
    fn jacobi_mode_contraction() {
        let n = 63;
        let h = 1.0 / 64.0;
        for i in [1, 32, 63] {
            let want = (PI * i as f64 * h).cos().abs();
            assert!((contraction(n, i, 1.0) - want).abs() < 1e-6, "mode {i}");
        }
        let damped = contraction(n, 63, DEFAULT_OMEGA);
        let want = (1.0 - DEFAULT_OMEGA + DEFAULT_OMEGA * (PI * 63.0 * h).cos()).abs();
        assert!((damped - want).abs() < 1e-6);
        assert!((damped - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn fixed_points() {
        let prob = laplace_1d(10).unwrap();
        let exact = GridField::zeros(10, 1);
        assert_eq!(jacobi_sweep(&prob.a, &exact, &prob.f, 1.0).unwrap(), exact);
        assert_eq!(gauss_seidel_sweep(&prob.a, &exact, &prob.f).unwrap(), exact);
    }

    #[test]
    fn zero_diagonal_rejected() {
        let a = StencilMatrix::zeros(3, 1, &[(0, 1), (0, -1)]).unwrap();
        let u = GridField::zeros(3, 1);
        assert!(matches!(
            gauss_seidel_sweep(&a, &u, &u),
            Err(Error::SingularSmoother { pixel: 0 })
        ));
        assert!(jacobi_sweep(&a, &u, &u, 1.0).is_err());
        assert!(jacobi_sweep(&laplace_1d(3).unwrap().a, &u, &u, 1.5).is_err());
    }

    #[test]
    fn gauss_seidel_dominant_mode() {
        let prob = laplace_1d(63).unwrap();
        let (_, v1) = analytic_eigenpair(63, 1).unwrap();
        let mut u = v1;
        for _ in 0..20 {
            u = gauss_seidel_sweep(&prob.a, &u, &prob.f).unwrap();
        }
        let next = gauss_seidel_sweep(&prob.a, &u, &prob.f).unwrap();
        let ratio = next.norm2() / u.norm2();
        let want = (PI / 64.0).cos().powi(2);
        assert!((ratio / want - 1.0).abs() < 0.02, "{ratio} vs {want}");
    }

    #[test]
    fn spectral_radii() {
        let a = laplace_1d(63).unwrap().a;
        let rj = smoother_spectral_radius(&a, SmootherKind::Jacobi).unwrap();
        assert!((rj - (PI / 64.0).cos()).abs() < 1e-5, "{rj}");
        let rg = smoother_spectral_radius(&a, SmootherKind::GaussSeidel).unwrap();
        assert!((rg - (PI / 64.0).cos().powi(2)).abs() < 1e-4, "{rg}");
        let one = laplace_1d(1).unwrap().a;
        assert_eq!(smoother_spectral_radius(&one, SmootherKind::Jacobi).unwrap(), 0.0);
    }

    #[test]
    fn jacobi_radius_grows_with_n() {
        let rho = |n| smoother_spectral_radius(&laplace_1d(n).unwrap().a, SmootherKind::Jacobi).unwrap();
        let (a, b, c) = (rho(31), rho(63), rho(127));
        assert!(a < b && b < c);
    }

    #[test]
    fn damped_jacobi_smooths_high_modes() {
        let n = 63;
        let r = iteration_matrix(&laplace_1d(n).unwrap().a, SmootherKind::default_damped()).unwrap();
        for i in n.div_ceil(2)..=n {
            let (_, v) = analytic_eigenpair(n, i).unwrap();
            let x = DVector::from_column_slice(v.values());
            let mu = x.dot(&(&r * &x)) / x.dot(&x);
            assert!(mu.abs() <= 0.34, "mode {i}: {mu}");
        }
    }
}
