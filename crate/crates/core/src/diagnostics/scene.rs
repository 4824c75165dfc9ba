//! Analytic test scenes sampled at any resolution.
//!
//! The disk scene is defined on the unit square: a soft-edged disk of one
//! color family over a background of another, each with a smooth color
//! gradient and a seeded band-limited texture. Sampling at pixel centers
//! means every resolution sees the same underlying picture.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::laplacian::ImagePlane;
use crate::system::ConstraintMap;

pub const DEFAULT_SCENE_SEED: u64 = 2015;

const DISK_CENTER: (f64, f64) = (0.5, 0.5);
const DISK_RADIUS: f64 = 0.3;
/// Width of the soft disk boundary, in scene units.
const EDGE_WIDTH: f64 = 0.03;
const DOT_RADIUS: f64 = 0.08;
const FRAME_WIDTH: f64 = 0.06;
const TEXTURE_WAVES: usize = 12;
const MAX_CYCLES: f64 = 6.0;
const TEXTURE_AMPLITUDE: f64 = 0.04;

#[derive(Debug, Clone, Copy)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amplitude: [f64; 3],
}

/// A seeded continuous scene that can be rendered at any size.
#[derive(Debug, Clone)]
pub struct DiskScene {
    seed: u64,
    waves: Vec<Wave>,
}

impl DiskScene {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = (0..TEXTURE_WAVES)
            .map(|_| {
                let cycles = rng.gen_range(1.0..MAX_CYCLES);
                let angle = rng.gen_range(0.0..PI);
                Wave {
                    kx: 2.0 * PI * cycles * angle.cos(),
                    ky: 2.0 * PI * cycles * angle.sin(),
                    phase: rng.gen_range(0.0..2.0 * PI),
                    amplitude: [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ],
                }
            })
            .collect();
        DiskScene { seed, waves }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Foreground coverage at a scene point.
    pub fn coverage(&self, u: f64, v: f64) -> f64 {
        let d = ((u - DISK_CENTER.0).powi(2) + (v - DISK_CENTER.1).powi(2)).sqrt();
        let t = ((DISK_RADIUS + 0.5 * EDGE_WIDTH - d) / EDGE_WIDTH).clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    }

    fn texture(&self, u: f64, v: f64) -> [f64; 3] {
        let scale = TEXTURE_AMPLITUDE / (TEXTURE_WAVES as f64).sqrt();
        let mut out = [0.0; 3];
        for w in &self.waves {
            let s = (w.kx * u + w.ky * v + w.phase).sin();
            for (c, o) in out.iter_mut().enumerate() {
                *o += scale * w.amplitude[c] * s;
            }
        }
        out
    }

    /// Color at a scene point, each channel in `[0, 1]`.
    pub fn color(&self, u: f64, v: f64) -> [f64; 3] {
        let fg = [0.85 - 0.2 * v, 0.55 + 0.15 * u, 0.2 + 0.1 * (u + v)];
        let bg = [0.15 + 0.2 * u, 0.3 + 0.1 * v, 0.7 - 0.2 * u * v];
        let alpha = self.coverage(u, v);
        let tex = self.texture(u, v);
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = (alpha * fg[c] + (1.0 - alpha) * bg[c] + tex[c]).clamp(0.0, 1.0);
        }
        out
    }

    /// Renders the image and scribbles on a `resolution x resolution` grid.
    pub fn render(&self, resolution: usize) -> Result<SyntheticScene> {
        if resolution < 8 {
            return Err(Error::InvalidArgument(format!(
                "scene resolution must be >= 8, got {resolution}"
            )));
        }
        let n = resolution;
        let center = |i: usize| (i as f64 + 0.5) / n as f64;
        let mut values = Vec::with_capacity(n * n * 3);
        let mut scribbles = ConstraintMap::new(n, n);
        for y in 0..n {
            for x in 0..n {
                let (u, v) = (center(x), center(y));
                values.extend_from_slice(&self.color(u, v));
                let d = ((u - DISK_CENTER.0).powi(2) + (v - DISK_CENTER.1).powi(2)).sqrt();
                if d < DOT_RADIUS {
                    scribbles.constrain(x, y, 1.0);
                } else if u < FRAME_WIDTH
                    || v < FRAME_WIDTH
                    || u > 1.0 - FRAME_WIDTH
                    || v > 1.0 - FRAME_WIDTH
                {
                    scribbles.constrain(x, y, 0.0);
                }
            }
        }
        Ok(SyntheticScene {
            resolution: n,
            image: ImagePlane::new(n, n, 3, values)?,
            scribbles,
        })
    }
}

/// One rendering of a scene.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub resolution: usize,
    pub image: ImagePlane,
    pub scribbles: ConstraintMap,
}

/// The disk scene with the default seed at `resolution`.
pub fn disk_scene(resolution: usize) -> Result<SyntheticScene> {
    DiskScene::new(DEFAULT_SCENE_SEED).render(resolution)
}
