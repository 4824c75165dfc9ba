//! Multigrid solvers for constrained matting-Laplacian systems.
//!
//! The crate builds the system `(L + gamma C) alpha = gamma g` from an image
//! and a scribble map, then solves it to a normalized-residual tolerance with
//! conjugate gradient, a Gauss-Seidel v-cycle, multigrid gradient descent, or
//! multigrid conjugate gradient. Every kernel counts the scalar multiplies it
//! performs so per-iteration cost can be checked without timing.
//!
//! Module map:
//!
//! - [`sparse`]: band-major stencil matrices and grid fields
//! - [`model_problems`]: the 1D Dirichlet Laplacian and its eigenpairs
//! - [`laplacian`]: color-affinity and 4-neighbor Laplacians
//! - [`system`]: constraint maps, system assembly, solve reports
//! - [`transfer`]: full weighting, bilinear prolongation, Galerkin hierarchy
//! - [`relaxation`]: Jacobi and Gauss-Seidel smoothers
//! - [`solvers`]: CG, nested iteration, v-cycle, MGGD, MGCG
//! - [`diagnostics`]: traces, convergence rates, power-law fits, scenes
//! - [`io`]: PPM/PGM files and run logs
//! - [`cli`]: the command-line front end

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod laplacian;
pub mod model_problems;
pub mod relaxation;
pub mod solvers;
pub mod sparse;
pub mod system;
pub mod transfer;
pub mod work;

pub use error::{Error, Result};
pub use sparse::{GridField, StencilMatrix};
pub use work::Work;
