//! Deterministic corner detector with gradient-histogram patch descriptors.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

use super::{greedy_nms, Descriptors, Keypoint};

/// 4x4 spatial cells times 8 orientation bins.
pub const DESCRIPTOR_DIM: usize = 128;
const PATCH: usize = 16;
const GRID: usize = 4;
const BINS: usize = 8;
const MIN_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Smoothing applied before the gradient covariance.
    pub sigma: f64,
    /// Minimum smallest-eigenvalue response.
    pub threshold: f64,
    pub nms_radius: usize,
    pub max_count: usize,
    /// Pixels near the border are not reported, so every descriptor patch
    /// lies inside the image.
    pub border: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            sigma: 1.5,
            threshold: 1e-4,
            nms_radius: 4,
            max_count: 1000,
            border: 10,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.threshold > 0.0 && self.max_count > 0) {
            return Err(Error::Config(format!(
                "detector needs sigma > 0, threshold > 0 and max_count > 0, got {self:?}"
            )));
        }
        if self.border < PATCH / 2 + 1 {
            return Err(Error::Config(format!(
                "border must be at least {}, got {}",
                PATCH / 2 + 1,
                self.border
            )));
        }
        Ok(())
    }
}

/// Smallest eigenvalue of the gradient covariance summed over a 3x3 window.
fn min_eigen_response(gx: &Raster, gy: &Raster) -> Vec<f32> {
    let (w, h) = (gx.width(), gx.height());
    let (gxs, gys) = (gx.as_slice(), gy.as_slice());
    let mut xx = vec![0.0f32; w * h];
    let mut xy = vec![0.0f32; w * h];
    let mut yy = vec![0.0f32; w * h];
    for i in 0..w * h {
        xx[i] = gxs[i] * gxs[i];
        xy[i] = gxs[i] * gys[i];
        yy[i] = gys[i] * gys[i];
    }
    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        if y == 0 || y + 1 >= h {
            return;
        }
        for x in 1..w - 1 {
            let (mut a, mut b, mut c) = (0.0f32, 0.0f32, 0.0f32);
            for yy_ in y - 1..=y + 1 {
                let base = yy_ * w;
                for xx_ in x - 1..=x + 1 {
                    a += xx[base + xx_];
                    b += xy[base + xx_];
                    c += yy[base + xx_];
                }
            }
            let half_tr = 0.5 * (a + c);
            let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            row[x] = (half_tr - d).max(0.0);
        }
    });
    out
}

fn is_local_max(r: &[f32], w: usize, x: usize, y: usize) -> bool {
    let v = r[y * w + x];
    for yy in y - 1..=y + 1 {
        for xx in x - 1..=x + 1 {
            if r[yy * w + xx] > v {
                return false;
            }
        }
    }
    true
}

/// Gradient histogram over the 16x16 pixel block `[cx-8, cx+8) x [cy-8, cy+8)`.
fn describe(mag: &[f32], ang: &[f32], w: usize, cx: usize, cy: usize) -> Option<[f32; DESCRIPTOR_DIM]> {
    let mut hist = [0.0f32; DESCRIPTOR_DIM];
    let half = PATCH / 2;
    let sigma = 0.5 * PATCH as f32;
    let cell = (PATCH / GRID) as f32;
    for py in 0..PATCH {
        let dy = py as f32 - (half as f32 - 0.5);
        let v = (py as f32 + 0.5) / cell - 0.5;
        let row = (cy + py - half) * w;
        for px in 0..PATCH {
            let dx = px as f32 - (half as f32 - 0.5);
            let idx = row + cx + px - half;
            let m = mag[idx] * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            if m == 0.0 {
                continue;
            }
            let u = (px as f32 + 0.5) / cell - 0.5;
            let o = ang[idx] * BINS as f32 / (2.0 * PI as f32);
            let (o0, fo) = (o.floor(), o - o.floor());
            let (u0, fu) = (u.floor(), u - u.floor());
            let (v0, fv) = (v.floor(), v - v.floor());
            for (iv, wv) in [(v0 as isize, 1.0 - fv), (v0 as isize + 1, fv)] {
                if !(0..GRID as isize).contains(&iv) {
                    continue;
                }
                for (iu, wu) in [(u0 as isize, 1.0 - fu), (u0 as isize + 1, fu)] {
                    if !(0..GRID as isize).contains(&iu) {
                        continue;
                    }
                    for (io, wo) in [(o0 as isize, 1.0 - fo), (o0 as isize + 1, fo)] {
                        let bin = io.rem_euclid(BINS as isize) as usize;
                        let k = (iv as usize * GRID + iu as usize) * BINS + bin;
                        hist[k] += m * wv * wu * wo;
                    }
                }
            }
        }
    }
    normalize(&mut hist)?;
    hist.iter_mut().for_each(|v| *v = v.min(0.2));
    normalize(&mut hist)?;
    Some(hist)
}

fn normalize(v: &mut [f32]) -> Option<()> {
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if !(n > 0.0) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(())
}

/// Detects corners and describes them. Keypoints sit at pixel centers
/// (`x + 0.5`, `y + 0.5`) in continuous image coordinates.
pub fn builtin_detect(image: &Raster, cfg: &DetectorConfig) -> Result<(Vec<Keypoint>, Descriptors)> {
    cfg.validate()?;
    let (w, h) = (image.width(), image.height());
    if w < MIN_SIZE || h < MIN_SIZE {
        return Err(Error::Config(format!(
            "image {w}x{h} is smaller than {MIN_SIZE}x{MIN_SIZE}"
        )));
    }
    let smooth = image.gaussian_blur(cfg.sigma);
    let (gx, gy) = smooth.gradients();
    let response = min_eigen_response(&gx, &gy);

    let b = cfg.border;
    let mut candidates = Vec::new();
    if w > 2 * b && h > 2 * b {
        for y in b..h - b {
            for x in b..w - b {
                let r = response[y * w + x];
                if r as f64 >= cfg.threshold && is_local_max(&response, w, x, y) {
                    candidates.push((x, y, r as f64));
                }
            }
        }
    }
    let kept = greedy_nms(candidates, w, h, cfg.nms_radius, cfg.max_count);

    let (gxs, gys) = (gx.as_slice(), gy.as_slice());
    let mag: Vec<f32> = gxs.iter().zip(gys).map(|(a, b)| (a * a + b * b).sqrt()).collect();
    let ang: Vec<f32> = gxs
        .iter()
        .zip(gys)
        .map(|(a, b)| b.atan2(*a).rem_euclid(2.0 * PI as f32))
        .collect();
    let described: Vec<_> = kept
        .par_iter()
        .map(|&(x, y, s)| describe(&mag, &ang, w, x, y).map(|d| (x, y, s, d)))
        .collect();

    let mut pts = Vec::with_capacity(described.len());
    let mut desc = Descriptors::with_dim(DESCRIPTOR_DIM);
    for (x, y, s, d) in described.into_iter().flatten() {
        pts.push(Keypoint {
            x: x as f64 + 0.5,
            y: y as f64 + 0.5,
            score: s,
        });
        desc.push(&d);
    }
    Ok((pts, desc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn texture(w: usize, h: usize, seed: u64) -> Raster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Raster::from_vec(w, h, (0..w * h).map(|_| rng.random::<f32>()).collect())
            .unwrap()
            .gaussian_blur(2.0)
    }

    #[test]
    fn constant_image_has_no_keypoints() {
        let (pts, desc) = builtin_detect(&Raster::filled(64, 64, 0.5), &DetectorConfig::default()).unwrap();
        assert!(pts.is_empty() && desc.is_empty());
    }

    #[test]
    fn square_corners_are_strongest() {
        let img = Raster::from_fn(96, 96, |x, y| {
            if (32..64).contains(&x) && (32..64).contains(&y) { 1.0 } else { 0.0 }
        });
        let (pts, desc) = builtin_detect(&img, &DetectorConfig::default()).unwrap();
        assert!(pts.len() >= 4);
        assert_eq!(desc.len(), pts.len());
        let mut top: Vec<_> = pts.iter().take(4).map(|p| (p.x, p.y)).collect();
        top.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let corners = [(32.0, 32.0), (32.0, 64.0), (64.0, 32.0), (64.0, 64.0)];
        for (p, c) in top.iter().zip(corners) {
            assert!((p.0 - c.0).abs() <= 2.0 && (p.1 - c.1).abs() <= 2.0, "{p:?} vs {c:?}");
        }
        for d in desc.iter() {
            let n: f32 = d.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn translation_moves_interior_points() {
        let big = texture(200, 200, 3);
        let a = big.crop(20, 20, 150, 150).unwrap();
        let b = big.crop(15, 23, 150, 150).unwrap();
        // b(x, y) = a(x - 5, y + 3)
        let cfg = DetectorConfig::default();
        let (pa, da) = builtin_detect(&a, &cfg).unwrap();
        let (pb, db) = builtin_detect(&b, &cfg).unwrap();
        let interior = |x: f64, y: f64| (40.0..110.0).contains(&x) && (40.0..110.0).contains(&y);
        let shifted: Vec<_> = pa
            .iter()
            .zip(da.iter())
            .filter(|(p, _)| interior(p.x, p.y))
            .map(|(p, d)| ((p.x + 5.0, p.y - 3.0), d))
            .collect();
        assert!(shifted.len() > 10);
        for ((x, y), d) in shifted {
            let j = pb
                .iter()
                .position(|q| q.x == x && q.y == y)
                .unwrap_or_else(|| panic!("missing ({x}, {y})"));
            let diff: f32 = d.iter().zip(db.get(j)).map(|(u, v)| (u - v).abs()).sum();
            assert!(diff < 1e-4);
        }
    }

    #[test]
    fn small_image_rejected() {
        assert!(matches!(
            builtin_detect(&Raster::new(31, 64), &DetectorConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn deterministic_and_bounded() {
        let img = texture(128, 128, 9);
        let cfg = DetectorConfig { max_count: 25, ..DetectorConfig::default() };
        let a = builtin_detect(&img, &cfg).unwrap();
        let b = builtin_detect(&img, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.0.len() <= 25);
        assert!(a.0.windows(2).all(|w| w[0].score >= w[1].score));
    }
}
