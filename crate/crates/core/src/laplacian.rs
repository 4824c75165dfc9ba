//! Matting Laplacians built from images.
//!
//! [`levin_laplacian`] sums, over every fully contained `(2r+1)^2` window,
//! the color-affinity term
//!
//! ```text
//! w_k(i, j) = (1 + (I_i - mu_k)^T (Sigma_k + eps I)^-1 (I_j - mu_k)) / |w_k|
//! ```
//!
//! for each pair of pixels `i != j` in the window, and returns `L = D - A`.
//! [`poisson_laplacian`] is the plain 4-neighbor graph Laplacian.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{GridField, StencilMatrix};

/// Image with values in `[0, 1]`, channels interleaved per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image must be non-empty".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if values.len() != width * height * channels {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height}x{channels} image needs {} values, got {}",
                width * height * channels,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "image value {v} outside [0, 1]"
            )));
        }
        Ok(ImagePlane {
            width,
            height,
            channels,
            values,
        })
    }

    /// 8-bit samples scaled by `1/255`.
    pub fn from_u8(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Color of pixel `p`; gray images are replicated to three channels.
    pub fn rgb(&self, p: usize) -> Vector3<f64> {
        if self.channels == 3 {
            Vector3::new(
                self.values[3 * p],
                self.values[3 * p + 1],
                self.values[3 * p + 2],
            )
        } else {
            Vector3::repeat(self.values[p])
        }
    }
}

/// Where the regularizer enters the window covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonScaling {
    /// `(Sigma_k + eps I)^-1`
    #[default]
    Literal,
    /// `(Sigma_k + eps / |w_k| I)^-1`, as in the reference MATLAB code.
    PerWindow,
}

/// Color statistics of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub mean: Vector3<f64>,
    /// `(Sigma + reg I)^-1`, symmetric positive definite.
    pub inv_covariance: Matrix3<f64>,
    pub size: usize,
}

impl WindowStats {
    /// Mean and regularized inverse of the biased sample covariance.
    pub fn compute(colors: &[Vector3<f64>], regularizer: f64) -> Result<Self> {
        let size = colors.len();
        let mean = colors.iter().sum::<Vector3<f64>>() / size as f64;
        let mut cov = Matrix3::zeros();
        for c in colors {
            let d = c - mean;
            cov += d * d.transpose();
        }
        cov /= size as f64;
        cov += Matrix3::identity() * regularizer;
        let inv = cov.try_inverse().ok_or_else(|| {
            Error::InvalidArgument("window covariance is not invertible".into())
        })?;
        // Remove rounding asymmetry from the inverse.
        let inv_covariance = (inv + inv.transpose()) * 0.5;
        Ok(WindowStats {
            mean,
            inv_covariance,
            size,
        })
    }
}

/// Color-affinity matting Laplacian with `(2 r + 1)^2` windows.
///
/// Only windows lying entirely inside the image contribute, so border
/// pixels belong to fewer windows. For `window_radius = 1` the result has
/// the 25 bands `|dy|, |dx| <= 2`.
pub fn levin_laplacian(
    img: &ImagePlane,
    epsilon: f64,
    window_radius: usize,
    scaling: EpsilonScaling,
) -> Result<StencilMatrix> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if window_radius == 0 {
        return Err(Error::InvalidArgument("window radius must be >= 1".into()));
    }
    let side = 2 * window_radius + 1;
    let (w, h) = (img.width, img.height);
    if w < side || h < side {
        return Err(Error::InvalidArgument(format!(
            "{w}x{h} image is smaller than the {side}x{side} window"
        )));
    }
    let reach = 2 * window_radius as isize;
    let mut lap = StencilMatrix::zeros(w, h, &StencilMatrix::square_offsets(reach))?;
    let size = side * side;
    let regularizer = match scaling {
        EpsilonScaling::Literal => epsilon,
        EpsilonScaling::PerWindow => epsilon / size as f64,
    };
    let r = window_radius;

    let mut pixels = Vec::with_capacity(size);
    let mut colors = Vec::with_capacity(size);
    let mut whitened = Vec::with_capacity(size);
    for cy in r..h - r {
        for cx in r..w - r {
            pixels.clear();
            colors.clear();
            for y in cy - r..=cy + r {
                for x in cx - r..=cx + r {
                    let p = y * w + x;
                    pixels.push(p);
                    colors.push(img.rgb(p));
                }
            }
            let stats = WindowStats::compute(&colors, regularizer)?;
            whitened.clear();
            whitened.extend(colors.iter().map(|c| stats.inv_covariance * (c - stats.mean)));
            let scale = 1.0 / size as f64;
            for a in 0..size {
                let da = colors[a] - stats.mean;
                for b in (a + 1)..size {
                    let affinity = scale * (1.0 + da.dot(&whitened[b]));
                    // L = D - A
                    lap.add_symmetric(pixels[a], pixels[b], -affinity)?;
                    lap.add_at(pixels[a], (0, 0), affinity)?;
                    lap.add_at(pixels[b], (0, 0), affinity)?;
                }
            }
        }
    }
    Ok(lap)
}

/// 4-neighbor graph Laplacian with unit affinities.
pub fn poisson_laplacian(width: usize, height: usize) -> Result<StencilMatrix> {
    if width == 0 || height == 0 || width * height < 2 {
        return Err(Error::InvalidArgument(format!(
            "degenerate grid {width}x{height}"
        )));
    }
    let mut lap = StencilMatrix::zeros(width, height, &[(0, -1), (0, 1), (-1, 0), (1, 0)])?;
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            let mut edges = Vec::with_capacity(2);
            if x + 1 < width {
                edges.push(p + 1);
            }
            if y + 1 < height {
                edges.push(p + width);
            }
            for q in edges {
                lap.add_symmetric(p, q, -1.0)?;
                lap.add_at(p, (0, 0), 1.0)?;
                lap.add_at(q, (0, 0), 1.0)?;
            }
        }
    }
    Ok(lap)
}

/// `x^T L x`.
pub fn quadratic_form(lap: &StencilMatrix, x: &GridField) -> Result<f64> {
    let lx = lap.spmv(x)?;
    Ok(x.dot(&lx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> ImagePlane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..w * h * 3).map(|_| rng.gen::<f64>()).collect();
        ImagePlane::new(w, h, 3, values).unwrap()
    }

    #[test]
    fn poisson_2x2() {
        let d = poisson_laplacian(2, 2).unwrap().to_dense().unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -1.0, -1.0, 0.0, -1.0, 2.0, 0.0, -1.0, -1.0, 0.0, 2.0, -1.0, 0.0, -1.0, -1.0,
                2.0,
            ],
        );
        assert_eq!(d, expect);
        let mut e0 = GridField::zeros(2, 2);
        e0.set(0, 0, 1.0);
        assert_eq!(quadratic_form(&poisson_laplacian(2, 2).unwrap(), &e0).unwrap(), 2.0);
    }

    #[test]
    fn poisson_row_sums_and_bands() {
        for (w, h) in [(2, 2), (5, 3), (1, 7), (9, 9)] {
            let l = poisson_laplacian(w, h).unwrap();
            assert_eq!(l.num_bands(), 5);
            let r = l.spmv(&GridField::constant(w, h, 1.0)).unwrap();
            assert!(r.values().iter().all(|&v| v == 0.0));
        }
        assert!(poisson_laplacian(1, 1).is_err());
        assert!(poisson_laplacian(0, 4).is_err());
    }

    #[test]
    fn poisson_row_grid_is_free_1d_laplacian() {
        let l = poisson_laplacian(6, 1).unwrap();
        assert_eq!(l.diagonal(), &[1.0, 2.0, 2.0, 2.0, 2.0, 1.0]);
        let right = l.band(l.band_index((0, 1)).unwrap());
        assert_eq!(right, &[-1.0, -1.0, -1.0, -1.0, -1.0, 0.0]);
    }

    #[test]
    fn levin_null_vector_and_structure() {
        let img = random_image(6, 6, 9);
        for scaling in [EpsilonScaling::Literal, EpsilonScaling::PerWindow] {
            let l = levin_laplacian(&img, 1e-3, 1, scaling).unwrap();
            assert_eq!(l.num_bands(), 25);
            assert!(l.symmetry_defect() == 0.0);
            assert_eq!(l.out_of_bounds_defect(), 0.0);
            let r = l.spmv(&GridField::constant(6, 6, 1.0)).unwrap();
            assert!(r.norm_inf() <= 1e-8);
            assert!(quadratic_form(&l, &GridField::constant(6, 6, 0.3)).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn levin_rejects_bad_input() {
        let img = random_image(2, 5, 1);
        assert!(levin_laplacian(&img, 1e-3, 1, EpsilonScaling::Literal).is_err());
        let img = random_image(4, 4, 1);
        assert!(levin_laplacian(&img, 0.0, 1, EpsilonScaling::Literal).is_err());
        assert!(levin_laplacian(&img, -1.0, 1, EpsilonScaling::Literal).is_err());
    }

    #[test]
    fn gray_images_are_replicated() {
        let img = ImagePlane::new(3, 3, 1, (0..9).map(|v| v as f64 / 9.0).collect()).unwrap();
        assert_eq!(img.rgb(4), Vector3::repeat(4.0 / 9.0));
        assert!(levin_laplacian(&img, 1e-2, 1, EpsilonScaling::Literal).is_ok());
    }

    #[test]
    fn image_validation() {
        assert!(ImagePlane::new(2, 2, 3, vec![0.5; 11]).is_err());
        assert!(ImagePlane::new(1, 1, 2, vec![0.5; 2]).is_err());
        assert!(ImagePlane::new(1, 1, 1, vec![1.5]).is_err());
        let img = ImagePlane::from_u8(1, 1, 3, &[255, 0, 51]).unwrap();
        assert_eq!(img.values(), &[1.0, 0.0, 0.2]);
    }

    #[test]
    fn window_inverse_is_spd() {
        let colors: Vec<_> = (0..9)
            .map(|i| Vector3::new(i as f64 / 9.0, 0.5, 1.0 - i as f64 / 9.0))
            .collect();
        let stats = WindowStats::compute(&colors, 1e-3).unwrap();
        let eig = stats.inv_covariance.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&v| v > 0.0));
        assert_eq!(stats.size, 9);
    }
}
