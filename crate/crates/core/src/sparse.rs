//! Band-major symmetric sparse matrices on rectangular pixel grids.
//!
//! Pixels are ordered row-major, `p = y * width + x`. A [`StencilMatrix`]
//! stores one coefficient array per grid displacement `(dy, dx)`: entry
//! `values[b][p]` couples pixel `p` with pixel `p + (dy, dx)`. Coefficients
//! that would reference a pixel outside the grid are kept at exactly zero.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::work::Work;

/// Largest pixel count accepted by [`StencilMatrix::to_dense`].
pub const DENSE_LIMIT: usize = 4096;

/// Grids at least this large are multiplied row-parallel.
const PARALLEL_MIN_PIXELS: usize = 1 << 14;

/// A real field on one grid level, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        GridField {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "field of {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        Ok(GridField {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        GridField {
            width,
            height,
            values,
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.values[y * self.width + x] = value;
    }

    pub fn dot(&self, other: &GridField) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &GridField) {
        debug_assert_eq!(self.dims(), other.dims());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.values {
            *a *= alpha;
        }
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub(crate) fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Symmetric sparse matrix stored as diagonal bands over a pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilMatrix {
    width: usize,
    height: usize,
    offsets: Vec<(isize, isize)>,
    values: Vec<Vec<f64>>,
    symmetric: bool,
}

impl StencilMatrix {
    /// An all-zero matrix with the given band displacements `(dy, dx)`.
    ///
    /// Offsets are sorted and deduplicated; the `(0, 0)` band is always
    /// present.
    pub fn zeros(width: usize, height: usize, offsets: &[(isize, isize)]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid must be non-empty, got {width}x{height}"
            )));
        }
        let mut offsets: Vec<(isize, isize)> = offsets.to_vec();
        offsets.push((0, 0));
        offsets.sort_unstable();
        offsets.dedup();
        for &(dy, dx) in &offsets {
            if !offsets.contains(&(-dy, -dx)) {
                return Err(Error::Asymmetric(format!(
                    "band ({dy}, {dx}) has no mirror band"
                )));
            }
        }
        let n = width * height;
        Ok(StencilMatrix {
            width,
            height,
            values: vec![vec![0.0; n]; offsets.len()],
            offsets,
            symmetric: true,
        })
    }

    /// All displacements with `|dy| <= r` and `|dx| <= r`.
    pub fn square_offsets(radius: isize) -> Vec<(isize, isize)> {
        let mut out = Vec::new();
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                out.push((dy, dx));
            }
        }
        out
    }

    /// The identity on a `width x height` grid.
    pub fn identity(width: usize, height: usize) -> Result<Self> {
        let mut m = Self::zeros(width, height, &[(0, 0)])?;
        let d = m.band_index((0, 0)).unwrap();
        m.values[d].iter_mut().for_each(|v| *v = 1.0);
        Ok(m)
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

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn num_bands(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn band_index(&self, offset: (isize, isize)) -> Option<usize> {
        self.offsets.iter().position(|&o| o == offset)
    }

    pub fn band(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    /// Coefficients of the `(0, 0)` band.
    pub fn diagonal(&self) -> &[f64] {
        let d = self.band_index((0, 0)).expect("diagonal band always present");
        &self.values[d]
    }

    pub fn diagonal_mut(&mut self) -> &mut [f64] {
        let d = self.band_index((0, 0)).expect("diagonal band always present");
        &mut self.values[d]
    }

    /// Whether pixel `(x, y)` displaced by `(dy, dx)` is still on the grid.
    #[inline]
    pub fn in_bounds(&self, x: usize, y: usize, (dy, dx): (isize, isize)) -> bool {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height
    }

    /// Coefficient linking pixel `p` to `p + offset`; zero for absent bands.
    pub fn get(&self, p: usize, offset: (isize, isize)) -> f64 {
        match self.band_index(offset) {
            Some(b) => self.values[b][p],
            None => 0.0,
        }
    }

    /// Adds `value` to the entry `(p, p + offset)` only. Callers keep the
    /// matrix symmetric by also touching the mirrored entry.
    pub fn add_at(&mut self, p: usize, offset: (isize, isize), value: f64) -> Result<()> {
        let (x, y) = (p % self.width, p / self.width);
        if !self.in_bounds(x, y, offset) {
            return Err(Error::InvalidArgument(format!(
                "offset {offset:?} leaves the grid at pixel {p}"
            )));
        }
        let b = self.band_index(offset).ok_or_else(|| {
            Error::InvalidArgument(format!("band {offset:?} is not stored"))
        })?;
        self.values[b][p] += value;
        Ok(())
    }

    /// Adds `value` to both `(p, q)` and `(q, p)` (once when `p == q`).
    pub fn add_symmetric(&mut self, p: usize, q: usize, value: f64) -> Result<()> {
        let w = self.width as isize;
        let (px, py) = ((p % self.width) as isize, (p / self.width) as isize);
        let (qx, qy) = ((q % self.width) as isize, (q / self.width) as isize);
        let off = (qy - py, qx - px);
        debug_assert_eq!(q as isize, p as isize + off.0 * w + off.1);
        self.add_at(p, off, value)?;
        if p != q {
            self.add_at(q, (-off.0, -off.1), value)?;
        }
        Ok(())
    }

    /// Largest asymmetry `|A(p, p+o) - A(p+o, p)|` over all stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (b, &(dy, dx)) in self.offsets.iter().enumerate() {
            let Some(m) = self.band_index((-dy, -dx)) else {
                return f64::INFINITY;
            };
            for y in 0..self.height {
                for x in 0..self.width {
                    if !self.in_bounds(x, y, (dy, dx)) {
                        continue;
                    }
                    let p = y * self.width + x;
                    let q = (p as isize + dy * self.width as isize + dx) as usize;
                    worst = worst.max((self.values[b][p] - self.values[m][q]).abs());
                }
            }
        }
        worst
    }

    /// Largest magnitude stored for an off-grid neighbor (zero when the
    /// boundary invariant holds).
    pub fn out_of_bounds_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (b, &o) in self.offsets.iter().enumerate() {
            for y in 0..self.height {
                for x in 0..self.width {
                    if !self.in_bounds(x, y, o) {
                        worst = worst.max(self.values[b][y * self.width + x].abs());
                    }
                }
            }
        }
        worst
    }

    /// Rejects matrices whose stored values are not symmetric to `tol`
    /// relative to the largest coefficient.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let scale = self
            .values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let defect = self.symmetry_defect();
        if defect > tol * scale {
            return Err(Error::Asymmetric(format!(
                "largest mismatch {defect:e} (scale {scale:e})"
            )));
        }
        Ok(())
    }

    /// Drops bands that are identically zero, keeping `(0, 0)`.
    pub fn prune_zero_bands(&mut self) {
        let mut keep = Vec::new();
        for (b, &o) in self.offsets.iter().enumerate() {
            let zero = self.values[b].iter().all(|&v| v == 0.0);
            let mirror = self.band_index((-o.0, -o.1)).unwrap();
            let mirror_zero = self.values[mirror].iter().all(|&v| v == 0.0);
            keep.push(o == (0, 0) || !(zero && mirror_zero));
        }
        let mut i = 0;
        self.offsets.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut i = 0;
        self.values.retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }

    /// Number of structurally stored in-bounds entries.
    pub fn nnz(&self) -> usize {
        let mut total = 0;
        for &(dy, dx) in &self.offsets {
            let rows = self.valid_range(dy, self.height);
            let cols = self.valid_range(dx, self.width);
            total += rows.len() * cols.len();
        }
        total
    }

    #[inline]
    fn valid_range(&self, d: isize, len: usize) -> std::ops::Range<usize> {
        let lo = (-d).max(0) as usize;
        let hi = (len as isize - d.max(0)).max(0) as usize;
        lo.min(hi)..hi
    }

    /// Computes one output row of `A x` into `out`; returns the multiply count.
    #[inline]
    fn row_product(&self, y: usize, x: &[f64], out: &mut [f64]) -> u64 {
        let w = self.width;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut count = 0u64;
        for (b, &(dy, dx)) in self.offsets.iter().enumerate() {
            let ny = y as isize + dy;
            if ny < 0 || ny as usize >= self.height {
                continue;
            }
            let cols = self.valid_range(dx, w);
            let band = &self.values[b][y * w..(y + 1) * w];
            let src_row = ny as usize * w;
            for c in cols.clone() {
                out[c] += band[c] * x[(src_row as isize + c as isize + dx) as usize];
            }
            count += cols.len() as u64;
        }
        count
    }

    /// `y = A x` into a preallocated buffer, counting multiplies into `work`.
    ///
    /// Each output row is accumulated band by band in a fixed order, so the
    /// row-parallel path is bit-identical to the sequential one.
    pub fn spmv_into(&self, x: &GridField, y: &mut GridField, work: &mut Work) -> Result<()> {
        x.check_dims(self.dims())?;
        y.check_dims(self.dims())?;
        let w = self.width;
        let count: u64 = if self.pixels() >= PARALLEL_MIN_PIXELS
            && rayon::current_num_threads() > 1
        {
            y.values
                .par_chunks_mut(w)
                .enumerate()
                .map(|(row, out)| self.row_product(row, &x.values, out))
                .sum()
        } else {
            y.values
                .chunks_mut(w)
                .enumerate()
                .map(|(row, out)| self.row_product(row, &x.values, out))
                .sum()
        };
        work.spmv += count;
        Ok(())
    }

    pub fn spmv_counted(&self, x: &GridField, work: &mut Work) -> Result<GridField> {
        let mut y = GridField::zeros(self.width, self.height);
        self.spmv_into(x, &mut y, work)?;
        Ok(y)
    }

    /// `A x`.
    pub fn spmv(&self, x: &GridField) -> Result<GridField> {
        self.spmv_counted(x, &mut Work::default())
    }

    pub fn residual_counted(
        &self,
        u: &GridField,
        f: &GridField,
        work: &mut Work,
    ) -> Result<GridField> {
        f.check_dims(self.dims())?;
        let mut r = self.spmv_counted(u, work)?;
        for (ri, fi) in r.values.iter_mut().zip(&f.values) {
            *ri = fi - *ri;
        }
        Ok(r)
    }

    /// `f - A u`.
    pub fn residual(&self, u: &GridField, f: &GridField) -> Result<GridField> {
        self.residual_counted(u, f, &mut Work::default())
    }

    /// Dense copy for small oracle computations.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.pixels();
        if n > DENSE_LIMIT {
            return Err(Error::TooLargeForDense {
                pixels: n,
                limit: DENSE_LIMIT,
            });
        }
        let mut d = DMatrix::zeros(n, n);
        for (b, &(dy, dx)) in self.offsets.iter().enumerate() {
            for y in 0..self.height {
                for x in 0..self.width {
                    if !self.in_bounds(x, y, (dy, dx)) {
                        continue;
                    }
                    let p = y * self.width + x;
                    let q = (p as isize + dy * self.width as isize + dx) as usize;
                    d[(p, q)] += self.values[b][p];
                }
            }
        }
        Ok(d)
    }

    /// Adds `value` at every pixel of the `(0, 0)` band where `mask` is set.
    pub(crate) fn add_to_diagonal(&mut self, mask: &[bool], value: f64) {
        for (d, &m) in self.diagonal_mut().iter_mut().zip(mask) {
            if m {
                *d += value;
            }
        }
    }

    pub(crate) fn values_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.values[index]
    }
}

/// `A x` (free-function form).
pub fn spmv(a: &StencilMatrix, x: &GridField) -> Result<GridField> {
    a.spmv(x)
}

/// `f - A u` (free-function form).
pub fn residual(a: &StencilMatrix, u: &GridField, f: &GridField) -> Result<GridField> {
    a.residual(u, f)
}

/// Dense copy of `a` (free-function form).
pub fn to_dense(a: &StencilMatrix) -> Result<DMatrix<f64>> {
    a.to_dense()
}
