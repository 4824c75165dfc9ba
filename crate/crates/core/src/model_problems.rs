//! The 1D Dirichlet Laplace model problem.
//!
//! `-u[i-1] + 2 u[i] - u[i+1] = 0` on `n` interior points with the boundary
//! values eliminated, stored as a `1 x n` grid. Its eigenpairs are known in
//! closed form and serve as ground truth for smoother and multigrid tests.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sparse::{GridField, StencilMatrix};

#[derive(Debug, Clone)]
pub struct ModelProblem1D {
    pub n: usize,
    /// Grid spacing `1 / (n + 1)`.
    pub h: f64,
    pub a: StencilMatrix,
    pub f: GridField,
}

/// Builds the tridiagonal `[-1, 2, -1]` system on `n` free variables.
pub fn laplace_1d(n: usize) -> Result<ModelProblem1D> {
    if n == 0 {
        return Err(Error::InvalidArgument("laplace_1d needs n >= 1".into()));
    }
    let mut a = StencilMatrix::zeros(n, 1, &[(0, -1), (0, 1)])?;
    for p in 0..n {
        a.add_at(p, (0, 0), 2.0)?;
        if p + 1 < n {
            a.add_symmetric(p, p + 1, -1.0)?;
        }
    }
    Ok(ModelProblem1D {
        n,
        h: 1.0 / (n + 1) as f64,
        a,
        f: GridField::zeros(n, 1),
    })
}

/// Eigenvalue `2 - 2 cos(i pi h)` and eigenvector `v_j = sin(i pi j h) / h`
/// for mode `i` in `1..=n`.
pub fn analytic_eigenpair(n: usize, i: usize) -> Result<(f64, GridField)> {
    if n == 0 || i == 0 || i > n {
        return Err(Error::InvalidArgument(format!(
            "mode index {i} outside 1..={n}"
        )));
    }
    let h = 1.0 / (n + 1) as f64;
    let lambda = analytic_eigenvalue(n, i);
    let v = GridField::from_fn(n, 1, |j, _| {
        let j = (j + 1) as f64;
        (i as f64 * PI * j * h).sin() / h
    });
    Ok((lambda, v))
}

fn analytic_eigenvalue(n: usize, i: usize) -> f64 {
    let h = 1.0 / (n + 1) as f64;
    2.0 - 2.0 * (PI * i as f64 * h).cos()
}

/// `lambda_n / lambda_1` from the closed-form eigenvalues.
pub fn condition_number_estimate(n: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    analytic_eigenvalue(n, n) / analytic_eigenvalue(n, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    #[test]
    fn small_matrices() {
        assert_eq!(
            laplace_1d(1).unwrap().a.to_dense().unwrap(),
            DMatrix::from_element(1, 1, 2.0)
        );
        let d = laplace_1d(3).unwrap().a.to_dense().unwrap();
        assert_eq!(
            d,
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0])
        );
        assert!(laplace_1d(0).is_err());
    }

    #[test]
    fn smallest_eigenvalue_n64() {
        let d = laplace_1d(64).unwrap().a.to_dense().unwrap();
        let eig = SymmetricEigen::new(d);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((min - (2.0 - 2.0 * (PI / 65.0).cos())).abs() < 1e-8);
        assert!(min > 0.0);
    }

    #[test]
    fn eigenpair_n3_mode2() {
        let (lambda, v) = analytic_eigenpair(3, 2).unwrap();
        assert!((lambda - 2.0).abs() < 1e-15);
        let av = laplace_1d(3).unwrap().a.spmv(&v).unwrap();
        for (a, b) in av.values().iter().zip(v.values()) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
        let (l1, _) = analytic_eigenpair(1, 1).unwrap();
        assert!((l1 - 2.0).abs() < 1e-15);
        assert!(analytic_eigenpair(3, 4).is_err());
        assert!(analytic_eigenpair(3, 0).is_err());
    }

    #[test]
    fn top_eigenvalue_below_four() {
        for n in [1, 7, 100, 1000] {
            let (l, _) = analytic_eigenpair(n, n).unwrap();
            assert!(l < 4.0);
        }
    }

    #[test]
    fn eigen_residuals_and_orthogonality() {
        for n in [1, 2, 5, 17, 64, 256] {
            let a = laplace_1d(n).unwrap().a;
            let pairs: Vec<_> = (1..=n).map(|i| analytic_eigenpair(n, i).unwrap()).collect();
            let mut prev = 0.0;
            for (lambda, v) in &pairs {
                let mut r = a.spmv(v).unwrap();
                r.axpy(-lambda, v);
                assert!(r.norm2() <= 1e-8 * v.norm2());
                assert!(*lambda > prev);
                prev = *lambda;
            }
            if n <= 64 {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let (vi, vj) = (&pairs[i].1, &pairs[j].1);
                        let c = vi.dot(vj) / (vi.norm2() * vj.norm2());
                        assert!(c.abs() < 1e-8, "modes {i},{j}: {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn condition_number_law() {
        assert_eq!(condition_number_estimate(1), 1.0);
        let k64 = condition_number_estimate(64);
        let law = 4.0 * 65.0f64.powi(2) / (PI * PI);
        assert!((k64 / law - 1.0).abs() < 0.05);
        let ratio = condition_number_estimate(256) / k64;
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }
}
