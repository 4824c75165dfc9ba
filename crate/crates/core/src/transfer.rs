//! Grid transfer operators and the Galerkin hierarchy.
//!
//! Coarse points sit on even fine indices, so a fine axis of length `n`
//! coarsens to `ceil(n / 2)`. Prolongation is bilinear interpolation with the
//! tent stencil
//!
//! ```text
//! 1/4 1/2 1/4
//! 1/2  1  1/2
//! 1/4 1/2 1/4
//! ```
//!
//! and restriction is its transpose scaled by `1/4`, which is the
//! full-weighting stencil `[1/16 1/8 1/16; 1/8 1/4 1/8; 1/16 1/8 1/16]`.
//! Fine neighbors outside the grid contribute nothing and weights are not
//! renormalized. On an even-length axis the last fine line has no coarse
//! point beyond it. By default ([`EdgeRule::Fold`]) prolongation copies the
//! last coarse value there (weight 1 instead of 1/2) so that constants are
//! reproduced exactly, and restriction, being the transpose, picks that line
//! up with weight 1/2 along that axis. [`EdgeRule::Zero`] keeps the plain
//! 1/2, which suits Dirichlet problems.
//!
//! The coarse operator is `A_c = R A P`. Because `P = 4 R^T` exactly,
//! `<P e, A P e> = 4 <e, A_c e>` for every coarse `e`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{GridField, StencilMatrix};
use crate::work::Work;

/// Default pixel count at which coarsening stops.
pub const DEFAULT_COARSE_THRESHOLD: usize = 1024;

/// Interpolation onto the last line of an even-length axis, which has a
/// coarse point on one side only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// Copy the last coarse value. Reproduces constants, so operators with
    /// natural boundaries (`A 1 = 0`) keep that null vector when coarsened.
    #[default]
    Fold,
    /// Treat the missing coarse point as zero, as for Dirichlet boundaries.
    Zero,
}

/// Up to two coarse parents of a fine index along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Parents {
    index: [usize; 2],
    weight: [f64; 2],
    len: usize,
}

impl Parents {
    fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.index[k], self.weight[k]))
    }
}

fn coarse_len(n: usize) -> usize {
    if n == 1 {
        1
    } else {
        n.div_ceil(2)
    }
}

/// Interpolation weights for every fine index of one axis.
fn axis_parents(fine: usize, rule: EdgeRule) -> Vec<Parents> {
    let coarse = coarse_len(fine);
    (0..fine)
        .map(|p| {
            if fine == 1 || p % 2 == 0 {
                Parents {
                    index: [p / 2, 0],
                    weight: [1.0, 0.0],
                    len: 1,
                }
            } else {
                let lo = (p - 1) / 2;
                if lo + 1 < coarse {
                    Parents {
                        index: [lo, lo + 1],
                        weight: [0.5, 0.5],
                        len: 2,
                    }
                } else {
                    let edge = match rule {
                        EdgeRule::Fold => 1.0,
                        EdgeRule::Zero => 0.5,
                    };
                    Parents {
                        index: [lo, 0],
                        weight: [edge, 0.0],
                        len: 1,
                    }
                }
            }
        })
        .collect()
}

/// Restriction/prolongation pair between one fine grid and its coarsening.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    fine: (usize, usize),
    coarse: (usize, usize),
    x_parents: Vec<Parents>,
    y_parents: Vec<Parents>,
    /// `P = scale * R^T`; 2 per coarsened axis.
    scale: f64,
}

impl Transfer {
    pub fn new(fine_width: usize, fine_height: usize) -> Result<Self> {
        Self::with_rule(fine_width, fine_height, EdgeRule::Fold)
    }

    pub fn with_rule(fine_width: usize, fine_height: usize, rule: EdgeRule) -> Result<Self> {
        if fine_width == 0 || fine_height == 0 || fine_width * fine_height < 2 {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen a {fine_width}x{fine_height} grid"
            )));
        }
        let axis_scale = |n: usize| if n == 1 { 1.0 } else { 2.0 };
        Ok(Transfer {
            fine: (fine_width, fine_height),
            coarse: (coarse_len(fine_width), coarse_len(fine_height)),
            x_parents: axis_parents(fine_width, rule),
            y_parents: axis_parents(fine_height, rule),
            scale: axis_scale(fine_width) * axis_scale(fine_height),
        })
    }

    pub fn fine_dims(&self) -> (usize, usize) {
        self.fine
    }

    pub fn coarse_dims(&self) -> (usize, usize) {
        self.coarse
    }

    /// The factor `s` in `P = s R^T`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Full weighting, fine to coarse.
    pub fn restrict(&self, fine: &GridField, work: &mut Work) -> Result<GridField> {
        fine.check_dims(self.fine)?;
        let (fw, _) = self.fine;
        let (cw, ch) = self.coarse;
        let mut coarse = GridField::zeros(cw, ch);
        let inv = 1.0 / self.scale;
        let out = coarse.values_mut();
        let mut count = 0u64;
        for (y, py) in self.y_parents.iter().enumerate() {
            for (x, px) in self.x_parents.iter().enumerate() {
                let v = fine.values()[y * fw + x] * inv;
                for (cy, wy) in py.iter() {
                    for (cx, wx) in px.iter() {
                        out[cy * cw + cx] += wy * wx * v;
                        count += 1;
                    }
                }
            }
        }
        work.transfer += count;
        Ok(coarse)
    }

    /// Bilinear interpolation, coarse to fine.
    pub fn prolong(&self, coarse: &GridField, work: &mut Work) -> Result<GridField> {
        coarse.check_dims(self.coarse)?;
        let (fw, fh) = self.fine;
        let (cw, _) = self.coarse;
        let mut fine = GridField::zeros(fw, fh);
        let src = coarse.values();
        let out = fine.values_mut();
        let mut count = 0u64;
        for (y, py) in self.y_parents.iter().enumerate() {
            for (x, px) in self.x_parents.iter().enumerate() {
                let mut acc = 0.0;
                for (cy, wy) in py.iter() {
                    for (cx, wx) in px.iter() {
                        acc += wy * wx * src[cy * cw + cx];
                        count += 1;
                    }
                }
                out[y * fw + x] = acc;
            }
        }
        work.transfer += count;
        Ok(fine)
    }

    /// `u += P e` without materializing `P e`.
    pub fn prolong_add(&self, coarse: &GridField, fine: &mut GridField, work: &mut Work) -> Result<()> {
        let p = self.prolong(coarse, work)?;
        fine.check_dims(self.fine)?;
        fine.axpy(1.0, &p);
        work.vector += p.len() as u64;
        Ok(())
    }

    /// Galerkin coarse operator `R A P`.
    pub fn galerkin(&self, fine: &StencilMatrix) -> Result<StencilMatrix> {
        if fine.dims() != self.fine {
            return Err(Error::DimensionMismatch {
                expected: self.fine,
                actual: fine.dims(),
            });
        }
        fine.check_symmetric(1e-12)?;
        let reach = fine
            .offsets()
            .iter()
            .map(|&(dy, dx)| dy.abs().max(dx.abs()))
            .max()
            .unwrap_or(0);
        let coarse_reach = (reach + 2) / 2;
        let (fw, _) = self.fine;
        let (cw, ch) = self.coarse;
        let mut coarse = StencilMatrix::zeros(cw, ch, &StencilMatrix::square_offsets(coarse_reach))?;
        let side = (2 * coarse_reach + 1) as usize;
        let band_of: Vec<Option<usize>> = StencilMatrix::square_offsets(coarse_reach)
            .into_iter()
            .map(|o| coarse.band_index(o))
            .collect();
        let inv = 1.0 / self.scale;
        let mut acc: Vec<Vec<f64>> = vec![vec![0.0; cw * ch]; coarse.num_bands()];

        for (b, &(dy, dx)) in fine.offsets().iter().enumerate() {
            let band = fine.band(b);
            for y in 0..fine.height() {
                let qy = y as isize + dy;
                if qy < 0 || qy as usize >= fine.height() {
                    continue;
                }
                for x in 0..fw {
                    let qx = x as isize + dx;
                    if qx < 0 || qx as usize >= fw {
                        continue;
                    }
                    let a = band[y * fw + x];
                    if a == 0.0 {
                        continue;
                    }
                    let (qx, qy) = (qx as usize, qy as usize);
                    for (iy, wiy) in self.y_parents[y].iter() {
                        for (ix, wix) in self.x_parents[x].iter() {
                            let wi = wiy * wix * inv * a;
                            for (jy, wjy) in self.y_parents[qy].iter() {
                                for (jx, wjx) in self.x_parents[qx].iter() {
                                    let oy = jy as isize - iy as isize + coarse_reach;
                                    let ox = jx as isize - ix as isize + coarse_reach;
                                    let slot = band_of[oy as usize * side + ox as usize]
                                        .expect("coarse offset within reach");
                                    acc[slot][iy * cw + ix] += wi * wjy * wjx;
                                }
                            }
                        }
                    }
                }
            }
        }

        // Average each entry with its mirror so the result is exactly symmetric.
        let offsets = coarse.offsets().to_vec();
        for (b, &(dy, dx)) in offsets.iter().enumerate() {
            let m = coarse.band_index((-dy, -dx)).unwrap();
            let vals = coarse.values_mut(b);
            for y in 0..ch {
                for x in 0..cw {
                    let qy = y as isize + dy;
                    let qx = x as isize + dx;
                    if qy < 0 || qx < 0 || qy as usize >= ch || qx as usize >= cw {
                        continue;
                    }
                    let p = y * cw + x;
                    let q = qy as usize * cw + qx as usize;
                    vals[p] = 0.5 * (acc[b][p] + acc[m][q]);
                }
            }
        }
        coarse.prune_zero_bands();
        Ok(coarse)
    }
}

/// Fine-to-coarse full weighting (free-function form).
pub fn restrict(fine: &GridField) -> Result<GridField> {
    Transfer::new(fine.width(), fine.height())?.restrict(fine, &mut Work::default())
}

/// Coarse-to-fine bilinear interpolation onto a grid of `fine_dims`.
pub fn prolong(coarse: &GridField, fine_dims: (usize, usize)) -> Result<GridField> {
    let t = Transfer::new(fine_dims.0, fine_dims.1)?;
    if t.coarse_dims() != coarse.dims() {
        return Err(Error::DimensionMismatch {
            expected: t.coarse_dims(),
            actual: coarse.dims(),
        });
    }
    t.prolong(coarse, &mut Work::default())
}

/// `R A P` for the standard coarsening of `a`'s grid.
pub fn galerkin_coarsen(a: &StencilMatrix) -> Result<StencilMatrix> {
    Transfer::new(a.width(), a.height())?.galerkin(a)
}

#[derive(Debug, Clone)]
pub struct Level {
    pub a: StencilMatrix,
}

/// Operators from the finest level (index 0) down to the coarsest.
#[derive(Debug, Clone)]
pub struct GridHierarchy {
    levels: Vec<Level>,
    /// `transfers[i]` maps between `levels[i]` and `levels[i + 1]`.
    transfers: Vec<Transfer>,
}

impl GridHierarchy {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn transfers(&self) -> &[Transfer] {
        &self.transfers
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn operator(&self, level: usize) -> &StencilMatrix {
        &self.levels[level].a
    }

    pub fn finest(&self) -> &StencilMatrix {
        &self.levels[0].a
    }

    pub fn coarsest(&self) -> &StencilMatrix {
        &self.levels.last().unwrap().a
    }

    /// Total band values stored across levels.
    pub fn storage(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.a.num_bands() * l.a.pixels())
            .sum()
    }

    /// Keeps only the finest `depth` levels.
    pub fn truncated(&self, depth: usize) -> GridHierarchy {
        let depth = depth.clamp(1, self.depth());
        GridHierarchy {
            levels: self.levels[..depth].to_vec(),
            transfers: self.transfers[..depth - 1].to_vec(),
        }
    }
}

/// Galerkin-coarsens `a` until a level has at most `coarse_threshold` pixels.
pub fn build_hierarchy(a: &StencilMatrix, coarse_threshold: usize) -> Result<GridHierarchy> {
    build_hierarchy_with(a, coarse_threshold, EdgeRule::Fold)
}

pub fn build_hierarchy_with(
    a: &StencilMatrix,
    coarse_threshold: usize,
    rule: EdgeRule,
) -> Result<GridHierarchy> {
    if coarse_threshold == 0 {
        return Err(Error::InvalidArgument("coarse threshold must be >= 1".into()));
    }
    a.check_symmetric(1e-12)?;
    let mut levels = vec![Level { a: a.clone() }];
    let mut transfers = Vec::new();
    loop {
        let current = &levels.last().unwrap().a;
        if current.pixels() <= coarse_threshold || current.pixels() < 2 {
            break;
        }
        let t = Transfer::with_rule(current.width(), current.height(), rule)?;
        let coarse = t.galerkin(current)?;
        transfers.push(t);
        levels.push(Level { a: coarse });
    }
    Ok(GridHierarchy { levels, transfers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::poisson_laplacian;

    #[test]
    fn coarse_dims_follow_ceil_rule() {
        let t = Transfer::new(8, 7).unwrap();
        assert_eq!(t.coarse_dims(), (4, 4));
        let t = Transfer::new(9, 1).unwrap();
        assert_eq!(t.coarse_dims(), (5, 1));
        assert_eq!(t.scale(), 2.0);
        assert!(Transfer::new(1, 1).is_err());
    }

    #[test]
    fn restriction_of_constant_interior() {
        let c = restrict(&GridField::constant(9, 9, 2.5)).unwrap();
        for y in 1..4 {
            for x in 1..4 {
                assert!((c.get(x, y) - 2.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn restriction_stencil_weights() {
        let mut f = GridField::zeros(8, 8);
        f.set(2, 2, 1.0);
        let c = restrict(&f).unwrap();
        assert_eq!(c.get(1, 1), 0.25);
        assert_eq!(c.values().iter().filter(|&&v| v != 0.0).count(), 1);

        let mut f = GridField::zeros(8, 8);
        f.set(3, 2, 1.0);
        let c = restrict(&f).unwrap();
        assert_eq!((c.get(1, 1), c.get(2, 1)), (0.125, 0.125));

        let mut f = GridField::zeros(8, 8);
        f.set(3, 3, 1.0);
        let c = restrict(&f).unwrap();
        for (x, y) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            assert_eq!(c.get(x, y), 0.0625);
        }
    }

    #[test]
    fn prolongation_tent_and_constants() {
        let mut c = GridField::zeros(4, 4);
        c.set(1, 1, 1.0);
        let f = prolong(&c, (8, 8)).unwrap();
        let tent = [[0.25, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 0.25]];
        for y in 0..8 {
            for x in 0..8 {
                let want = if (1..=3).contains(&x) && (1..=3).contains(&y) {
                    tent[y - 1][x - 1]
                } else {
                    0.0
                };
                assert_eq!(f.get(x, y), want, "({x},{y})");
            }
        }
        for dims in [(8, 8), (9, 7), (2, 5), (6, 1)] {
            let t = Transfer::new(dims.0, dims.1).unwrap();
            let (cw, ch) = t.coarse_dims();
            let f = prolong(&GridField::constant(cw, ch, 0.7), dims).unwrap();
            assert!(f.values().iter().all(|&v| (v - 0.7).abs() < 1e-15));
        }
        assert!(prolong(&GridField::zeros(3, 3), (8, 8)).is_err());
    }

    #[test]
    fn galerkin_rejects_asymmetric() {
        let mut a = StencilMatrix::zeros(4, 4, &[(0, 1), (0, -1)]).unwrap();
        a.add_at(0, (0, 1), 1.0).unwrap();
        assert!(matches!(galerkin_coarsen(&a), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn poisson_coarsening_keeps_null_space() {
        let a = poisson_laplacian(8, 8).unwrap();
        let c = galerkin_coarsen(&a).unwrap();
        assert_eq!(c.dims(), (4, 4));
        assert_eq!(c.num_bands(), 9);
        assert_eq!(c.symmetry_defect(), 0.0);
        let r = c.spmv(&GridField::constant(4, 4, 1.0)).unwrap();
        assert!(r.norm_inf() < 1e-12);
    }

    #[test]
    fn hierarchy_level_counts() {
        let a = poisson_laplacian(64, 64).unwrap();
        let h = build_hierarchy(&a, 1024).unwrap();
        assert_eq!(h.depth(), 2);
        assert_eq!(h.coarsest().dims(), (32, 32));
        let h = build_hierarchy(&a, 100).unwrap();
        assert_eq!(h.depth(), 4);
        assert_eq!(h.coarsest().dims(), (8, 8));
        assert_eq!(h.truncated(2).depth(), 2);
        assert!(build_hierarchy(&a, 0).is_err());
    }
}
