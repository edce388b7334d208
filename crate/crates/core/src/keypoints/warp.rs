//! Seeded homographic warps for building training pairs.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homography::Homography;
use crate::raster::Raster;

const MAX_DRAWS: usize = 16;

/// Bounds for a random warp about the image center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarpParams {
    pub max_rotation_deg: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    /// Per-axis translation bound in pixels.
    pub max_translation: f64,
    /// Corner displacement from the perspective term, as a fraction of the
    /// half image size.
    pub perspective: f64,
}

impl Default for WarpParams {
    fn default() -> Self {
        Self {
            max_rotation_deg: 5.0,
            min_scale: 0.95,
            max_scale: 1.05,
            max_translation: 4.0,
            perspective: 0.0,
        }
    }
}

impl WarpParams {
    pub fn identity() -> Self {
        Self {
            max_rotation_deg: 0.0,
            min_scale: 1.0,
            max_scale: 1.0,
            max_translation: 0.0,
            perspective: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.max_rotation_deg,
            self.min_scale,
            self.max_scale,
            self.max_translation,
            self.perspective,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite
            || self.max_rotation_deg < 0.0
            || self.max_translation < 0.0
            || !(0.0..1.0).contains(&self.perspective)
            || !(self.min_scale > 0.0 && self.min_scale <= self.max_scale)
        {
            return Err(Error::Config(format!("invalid warp bounds {self:?}")));
        }
        Ok(())
    }
}

fn symmetric(rng: &mut impl Rng, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}

/// Samples `T(center + t) · R · S · P · T(-center)` where `P` carries the
/// perspective row. Zero bounds give the exact identity.
pub(crate) fn sample_warp(
    rng: &mut impl Rng,
    p: &WarpParams,
    center: (f64, f64),
    half_size: f64,
) -> Matrix3<f64> {
    let theta = symmetric(rng, p.max_rotation_deg).to_radians();
    let s = if p.max_scale > p.min_scale {
        rng.random_range(p.min_scale..=p.max_scale)
    } else {
        p.min_scale
    };
    let (tx, ty) = (symmetric(rng, p.max_translation), symmetric(rng, p.max_translation));
    let jitter = p.perspective / half_size.max(1.0);
    let (p1, p2) = (symmetric(rng, jitter), symmetric(rng, jitter));

    let (c, sn) = (s * theta.cos(), s * theta.sin());
    let rs = Matrix3::new(c, -sn, 0.0, sn, c, 0.0, 0.0, 0.0, 1.0);
    let persp = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, p1, p2, 1.0);
    let to = Matrix3::new(1.0, 0.0, center.0 + tx, 0.0, 1.0, center.1 + ty, 0.0, 0.0, 1.0);
    let from = Matrix3::new(1.0, 0.0, -center.0, 0.0, 1.0, -center.1, 0.0, 0.0, 1.0);
    to * rs * persp * from
}

/// Resamples `src` onto a `width` x `height` grid: each output pixel center
/// is mapped through `dst_to_src` and read bilinearly. Pixels that fall
/// outside the source are black and flagged invalid in the returned mask.
pub fn warp_inverse(
    src: &Raster,
    dst_to_src: &Homography,
    width: usize,
    height: usize,
) -> (Raster, Vec<bool>) {
    let m = dst_to_src.matrix();
    let mut out = Raster::new(width, height);
    let mut valid = vec![false; width * height];
    for y in 0..height {
        let fy = y as f64 + 0.5;
        for x in 0..width {
            let fx = x as f64 + 0.5;
            let w = m[(2, 0)] * fx + m[(2, 1)] * fy + m[(2, 2)];
            if w.abs() < 1e-12 {
                continue;
            }
            let sx = (m[(0, 0)] * fx + m[(0, 1)] * fy + m[(0, 2)]) / w;
            let sy = (m[(1, 0)] * fx + m[(1, 1)] * fy + m[(1, 2)]) / w;
            if let Some(v) = src.sample_bilinear(sx, sy) {
                out.set(x, y, v);
                valid[y * width + x] = true;
            }
        }
    }
    (out, valid)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub warped: Raster,
    /// Maps source pixels onto warped pixels.
    pub homography: Homography,
    /// Warped pixels that received source content.
    pub valid: Vec<bool>,
}

/// Warps `image` by a random homography drawn from `params` with `seed`.
pub fn make_training_pair(image: &Raster, params: &WarpParams, seed: u64) -> Result<TrainingPair> {
    params.validate()?;
    let (w, h) = (image.width(), image.height());
    let center = (w as f64 / 2.0, h as f64 / 2.0);
    let half = 0.5 * w.min(h) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let m = sample_warp(&mut rng, params, center, half);
        let Ok(homography) = Homography::new(m) else {
            continue;
        };
        let Ok(inv) = homography.inverse() else {
            continue;
        };
        let (warped, valid) = warp_inverse(image, &inv, w, h);
        return Ok(TrainingPair {
            warped,
            homography,
            valid,
        });
    }
    Err(Error::Degenerate(format!(
        "no invertible warp after {MAX_DRAWS} draws"
    )))
}
