//! Dense reference implementations used by the integration tests.
//!
//! Everything here is written straight from the operator definitions with
//! dense nalgebra matrices, sharing no code with the library beyond the
//! plain data types.

#![allow(dead_code)]

use mgmatte::laplacian::{EpsilonScaling, ImagePlane};
use mgmatte::transfer::EdgeRule;
use mgmatte::system::{assemble, ConstraintMap, MattingSystem};
use mgmatte::{GridField, StencilMatrix};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(w: usize, h: usize, seed: u64) -> ImagePlane {
    let mut r = rng(seed);
    let values = (0..w * h * 3).map(|_| r.gen_range(0.0..1.0)).collect();
    ImagePlane::new(w, h, 3, values).unwrap()
}

/// A smooth two-tone image with mild noise, closer to real photographs than
/// uniform noise.
pub fn blob_image(w: usize, h: usize, seed: u64) -> ImagePlane {
    let mut r = rng(seed);
    let mut values = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let u = (x as f64 + 0.5) / w as f64 - 0.5;
            let v = (y as f64 + 0.5) / h as f64 - 0.5;
            let inside = ((0.3 - (u * u + v * v).sqrt()) * 20.0).tanh() * 0.5 + 0.5;
            let fg = [0.8, 0.5, 0.2];
            let bg = [0.2, 0.3, 0.7];
            for c in 0..3 {
                let noise = r.gen_range(-0.02..0.02);
                values.push((inside * fg[c] + (1.0 - inside) * bg[c] + noise).clamp(0.0, 1.0));
            }
        }
    }
    ImagePlane::new(w, h, 3, values).unwrap()
}

pub fn random_field(w: usize, h: usize, seed: u64) -> GridField {
    let mut r = rng(seed);
    GridField::from_fn(w, h, |_, _| r.gen_range(-1.0..1.0))
}

pub fn dvec(f: &GridField) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

pub fn field(w: usize, h: usize, v: &DVector<f64>) -> GridField {
    GridField::from_vec(w, h, v.as_slice().to_vec()).unwrap()
}

/// Dense color-affinity Laplacian summed window by window in the
/// `delta_ij - (1 + (I_i - mu)^T (Sigma + eps I)^-1 (I_j - mu)) / |w|` form.
pub fn dense_levin(img: &ImagePlane, eps: f64, radius: usize, scaling: EpsilonScaling) -> DMatrix<f64> {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let color = |p: usize| -> Vector3<f64> {
        let v = img.values();
        if img.channels() == 3 {
            Vector3::new(v[3 * p], v[3 * p + 1], v[3 * p + 2])
        } else {
            Vector3::repeat(v[p])
        }
    };
    let side = 2 * radius + 1;
    let size = (side * side) as f64;
    let reg = match scaling {
        EpsilonScaling::Literal => eps,
        EpsilonScaling::PerWindow => eps / size,
    };
    let mut l = DMatrix::zeros(n, n);
    for cy in radius..h - radius {
        for cx in radius..w - radius {
            let idx: Vec<usize> = (cy - radius..=cy + radius)
                .flat_map(|y| (cx - radius..=cx + radius).map(move |x| y * w + x))
                .collect();
            // 3 x |w| color matrix; covariance from centered columns.
            let m = DMatrix::from_fn(3, idx.len(), |c, k| color(idx[k])[c]);
            let mean = m.column_mean();
            let centered = DMatrix::from_fn(3, idx.len(), |c, k| m[(c, k)] - mean[c]);
            let cov = &centered * centered.transpose() / size;
            let cov3 = Matrix3::from_fn(|i, j| cov[(i, j)]) + Matrix3::identity() * reg;
            let inv = cov3.try_inverse().unwrap();
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    let di = Vector3::new(centered[(0, a)], centered[(1, a)], centered[(2, a)]);
                    let dj = Vector3::new(centered[(0, b)], centered[(1, b)], centered[(2, b)]);
                    let delta = if a == b { 1.0 } else { 0.0 };
                    l[(i, j)] += delta - (1.0 + di.dot(&(inv * dj))) / size;
                }
            }
        }
    }
    l
}

/// 1D full-weighting weights: row `X` of the restriction along an axis of
/// length `n`.
fn restriction_1d(n: usize, rule: EdgeRule) -> DMatrix<f64> {
    if n == 1 {
        return DMatrix::identity(1, 1);
    }
    let nc = n.div_ceil(2);
    DMatrix::from_fn(nc, n, |cx, i| {
        let center = 2 * cx;
        if i == center {
            0.5
        } else if i + 1 == center {
            0.25
        } else if i == center + 1 {
            // Trailing line of an even axis has a single coarse parent.
            if n.is_multiple_of(2) && i == n - 1 && rule == EdgeRule::Fold {
                0.5
            } else {
                0.25
            }
        } else {
            0.0
        }
    })
}

/// 1D tent interpolation from `ceil(n/2)` coarse points to `n` fine points.
fn prolongation_1d(n: usize, rule: EdgeRule) -> DMatrix<f64> {
    if n == 1 {
        return DMatrix::identity(1, 1);
    }
    let nc = n.div_ceil(2);
    DMatrix::from_fn(n, nc, |i, cx| {
        if i == 2 * cx {
            1.0
        } else if i + 1 == 2 * cx || i == 2 * cx + 1 {
            if i == n - 1 && n.is_multiple_of(2) && rule == EdgeRule::Fold {
                1.0
            } else {
                0.5
            }
        } else {
            0.0
        }
    })
}

/// Dense restriction for a row-major `w x h` grid.
pub fn dense_restriction(w: usize, h: usize) -> DMatrix<f64> {
    dense_restriction_with(w, h, EdgeRule::Fold)
}

pub fn dense_restriction_with(w: usize, h: usize, rule: EdgeRule) -> DMatrix<f64> {
    restriction_1d(h, rule).kronecker(&restriction_1d(w, rule))
}

/// Dense bilinear prolongation onto a row-major `w x h` grid.
pub fn dense_prolongation(w: usize, h: usize) -> DMatrix<f64> {
    dense_prolongation_with(w, h, EdgeRule::Fold)
}

pub fn dense_prolongation_with(w: usize, h: usize, rule: EdgeRule) -> DMatrix<f64> {
    prolongation_1d(h, rule).kronecker(&prolongation_1d(w, rule))
}

pub fn dense_solve(sys: &MattingSystem) -> DVector<f64> {
    let a = sys.a.to_dense().unwrap();
    a.cholesky().expect("SPD system").solve(&dvec(&sys.f))
}

/// Random scribbles: a band of foreground on the left, background on the
/// right, plus a few scattered constraints.
pub fn random_constraints(w: usize, h: usize, seed: u64) -> ConstraintMap {
    let mut r = rng(seed);
    let mut map = ConstraintMap::new(w, h);
    for y in 0..h {
        map.constrain(0, y, 1.0);
        map.constrain(w - 1, y, 0.0);
    }
    for _ in 0..(w * h / 20).max(1) {
        let (x, y) = (r.gen_range(0..w), r.gen_range(0..h));
        map.constrain(x, y, if r.gen_bool(0.5) { 1.0 } else { 0.0 });
    }
    map
}

/// Assembled color-affinity system on a smooth image of the given size.
pub fn matting_system(w: usize, h: usize, seed: u64) -> MattingSystem {
    let img = blob_image(w, h, seed);
    let lap = mgmatte::laplacian::levin_laplacian(&img, 1e-3, 1, EpsilonScaling::Literal).unwrap();
    assemble(&lap, &random_constraints(w, h, seed ^ 0x55), 1.0).unwrap()
}

/// 5-point Dirichlet Laplacian (diagonal 4 everywhere).
pub fn dirichlet_poisson(w: usize, h: usize) -> StencilMatrix {
    let mut a = mgmatte::laplacian::poisson_laplacian(w, h).unwrap();
    for p in 0..w * h {
        let d = a.diagonal()[p];
        a.add_at(p, (0, 0), 4.0 - d).unwrap();
    }
    a
}

/// Random symmetric stencil matrix with a dominant positive diagonal.
pub fn random_spd_stencil(w: usize, h: usize, reach: isize, seed: u64) -> StencilMatrix {
    let mut r = rng(seed);
    let mut a = StencilMatrix::zeros(w, h, &StencilMatrix::square_offsets(reach)).unwrap();
    let offsets = a.offsets().to_vec();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            for &(dy, dx) in &offsets {
                if (dy, dx) <= (0, 0) || !a.in_bounds(x, y, (dy, dx)) {
                    continue;
                }
                let q = ((y as isize + dy) as usize) * w + (x as isize + dx) as usize;
                a.add_symmetric(p, q, -r.gen_range(0.0..1.0)).unwrap();
            }
        }
    }
    for p in 0..w * h {
        let off: f64 = a
            .offsets()
            .iter()
            .filter(|&&o| o != (0, 0))
            .map(|&o| a.get(p, o).abs())
            .sum();
        a.add_at(p, (0, 0), off + r.gen_range(0.1..1.0)).unwrap();
    }
    a
}
