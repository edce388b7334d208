//! Procedural test worlds: a geo-referenced map and aerial frames cut from
//! it by known homographies, with exact ground truth.

use std::fs;
use std::path::Path;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo_ref::{GeoPoint, GeoRefMap, PixelPoint, EARTH_RADIUS_M};
use crate::homography::Homography;
use crate::keypoints::{warp_inverse, WarpParams};
use crate::pipeline::{derive_seed, QueryFrame};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Texture {
    /// Dense multi-scale texture with regionally varying orientation.
    #[default]
    Rich,
    /// Smooth low-frequency blobs with large flat areas.
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    /// Edge of the square map in pixels.
    pub map_size: usize,
    /// Ground sampling distance in meters per pixel.
    pub resolution: f64,
    pub texture: Texture,
    pub n_frames: usize,
    /// Edge of the square frames in pixels.
    pub frame_size: usize,
    pub max_rotation_deg: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    /// Corner displacement from the perspective term, as a fraction of the
    /// half frame size.
    pub perspective: f64,
    pub noise_sigma: f64,
    /// Additive brightness offset bound.
    pub brightness: f64,
    /// Relative contrast change bound.
    pub contrast: f64,
    /// Latitude and longitude of the lower-left map corner.
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            map_size: 2000,
            resolution: 1.0,
            texture: Texture::Rich,
            n_frames: 20,
            frame_size: 400,
            max_rotation_deg: 10.0,
            min_scale: 0.9,
            max_scale: 1.1,
            perspective: 0.01,
            noise_sigma: 0.02,
            brightness: 0.05,
            contrast: 0.1,
            origin_lat: 0.0,
            origin_lon: 0.0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    /// No warp and no photometric change: frames are plain crops.
    pub fn without_distortion(self) -> Self {
        Self {
            max_rotation_deg: 0.0,
            min_scale: 1.0,
            max_scale: 1.0,
            perspective: 0.0,
            noise_sigma: 0.0,
            brightness: 0.0,
            contrast: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.map_size == 0 || self.frame_size == 0 || self.frame_size >= self.map_size {
            return bad(format!(
                "need 0 < frame_size < map_size, got {} and {}",
                self.frame_size, self.map_size
            ));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        if !(self.min_scale > 0.5 && self.min_scale <= self.max_scale && self.max_scale < 2.0) {
            return bad(format!(
                "scale range [{}, {}] must lie within (0.5, 2)",
                self.min_scale, self.max_scale
            ));
        }
        for (name, v) in [
            ("max_rotation_deg", self.max_rotation_deg),
            ("noise_sigma", self.noise_sigma),
            ("brightness", self.brightness),
            ("contrast", self.contrast),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(0.0..0.5).contains(&self.perspective) {
            return bad(format!("perspective must be in [0, 0.5), got {}", self.perspective));
        }
        GeoPoint::new(self.origin_lat, self.origin_lon)?;
        Ok(())
    }

    fn warp(&self) -> WarpParams {
        WarpParams {
            max_rotation_deg: self.max_rotation_deg,
            min_scale: self.min_scale,
            max_scale: self.max_scale,
            max_translation: 0.0,
            perspective: self.perspective,
        }
    }

    /// Distance from the map edge that keeps every warped frame inside.
    pub fn center_margin(&self) -> f64 {
        let half_diag = self.frame_size as f64 * std::f64::consts::FRAC_1_SQRT_2;
        (half_diag * self.max_scale * (1.0 + 4.0 * self.perspective)).ceil() + 1.0
    }
}

fn hash2(ix: i64, iy: i64, salt: u64) -> f32 {
    let mut z = salt
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 40) as f32 / (1u64 << 24) as f32
}

/// Lattice value noise with smoothstep interpolation, in `[0, 1]`.
fn value_noise(x: f64, y: f64, salt: u64) -> f32 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = ((x - x0) as f32, (y - y0) as f32);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = hash2(ix, iy, salt);
    let b = hash2(ix + 1, iy, salt);
    let c = hash2(ix, iy + 1, salt);
    let d = hash2(ix + 1, iy + 1, salt);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

/// Octaves of value noise from `base` pixels down, halving each time.
fn fbm(x: f64, y: f64, base: f64, octaves: usize, salt: u64) -> f32 {
    let (mut sum, mut amp, mut norm, mut scale) = (0.0f32, 1.0f32, 0.0f32, base);
    for o in 0..octaves {
        sum += amp * value_noise(x / scale, y / scale, salt.wrapping_add(o as u64 * 7919));
        norm += amp;
        amp *= 0.6;
        scale *= 0.5;
    }
    sum / norm
}

struct Region {
    site: (f64, f64),
    cos: f64,
    sin: f64,
    stretch: f64,
    period: f64,
    contrast: f32,
    salt: u64,
}

const REGION_SPACING: f64 = 300.0;

fn regions(size: usize, rng: &mut impl Rng) -> (Vec<Region>, usize) {
    let n = (size as f64 / REGION_SPACING).ceil() as usize + 1;
    let mut out = Vec::with_capacity(n * n);
    for gy in 0..n {
        for gx in 0..n {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            out.push(Region {
                site: (
                    (gx as f64 + rng.random_range(0.1..0.9)) * REGION_SPACING,
                    (gy as f64 + rng.random_range(0.1..0.9)) * REGION_SPACING,
                ),
                cos: theta.cos(),
                sin: theta.sin(),
                stretch: rng.random_range(2.0..6.0),
                period: rng.random_range(6.0..18.0),
                contrast: rng.random_range(0.3..0.8),
                salt: rng.random(),
            });
        }
    }
    (out, n)
}

fn nearest_region(regions: &[Region], n: usize, x: f64, y: f64) -> &Region {
    let (cx, cy) = ((x / REGION_SPACING) as isize, (y / REGION_SPACING) as isize);
    let mut best = (f64::INFINITY, 0);
    for gy in cy - 1..=cy + 1 {
        for gx in cx - 1..=cx + 1 {
            if gx < 0 || gy < 0 || gx >= n as isize || gy >= n as isize {
                continue;
            }
            let i = gy as usize * n + gx as usize;
            let (sx, sy) = regions[i].site;
            let d = (sx - x).powi(2) + (sy - y).powi(2);
            if d < best.0 {
                best = (d, i);
            }
        }
    }
    &regions[best.1]
}

fn rich_map(size: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (regions, n) = regions(size, &mut rng);
    let iso_salt: u64 = rng.random();
    let mut data = vec![0.0f32; size * size];
    data.par_chunks_mut(size).enumerate().for_each(|(y, row)| {
        let fy = y as f64 + 0.5;
        for (x, v) in row.iter_mut().enumerate() {
            let fx = x as f64 + 0.5;
            let r = nearest_region(&regions, n, fx, fy);
            let u = (fx * r.cos + fy * r.sin) / r.period;
            let w = (-fx * r.sin + fy * r.cos) / (r.period * r.stretch);
            let aniso = fbm(u, w, 1.0, 2, r.salt);
            let iso = fbm(fx, fy, 24.0, 4, iso_salt);
            *v = (0.5 + r.contrast * (aniso - 0.5) + 0.6 * (iso - 0.5)).clamp(0.0, 1.0);
        }
    });
    Raster::from_vec(size, size, data).expect("sized buffer")
}

fn sparse_map(size: usize, seed: u64) -> Raster {
    let salt = ChaCha8Rng::seed_from_u64(seed).random::<u64>();
    let mut data = vec![0.0f32; size * size];
    data.par_chunks_mut(size).enumerate().for_each(|(y, row)| {
        for (x, v) in row.iter_mut().enumerate() {
            let n = fbm(x as f64 + 0.5, y as f64 + 0.5, 160.0, 3, salt);
            let s = 1.0 / (1.0 + (-(n - 0.5) * 25.0).exp());
            *v = 0.3 + 0.4 * s;
        }
    });
    Raster::from_vec(size, size, data).expect("sized buffer")
}

/// Quantizes through 8 bits so that in-memory rasters equal their PGM form.
fn quantize(r: &Raster) -> Raster {
    Raster::from_u8(r.width(), r.height(), &r.to_u8()).expect("same size")
}

/// Geo corners of a `w` x `h` map with lower-left corner `ll` at `resolution`
/// meters per pixel under the equirectangular model.
pub fn geo_extent(ll: GeoPoint, w: usize, h: usize, resolution: f64) -> Result<GeoPoint> {
    let dlat = (h as f64 * resolution / EARTH_RADIUS_M).to_degrees();
    let mid = (ll.lat + dlat / 2.0).to_radians();
    let dlon = (w as f64 * resolution / (EARTH_RADIUS_M * mid.cos())).to_degrees();
    GeoPoint::new(ll.lat + dlat, ll.lon + dlon)
}

pub fn generate_map(spec: &SceneSpec) -> Result<GeoRefMap> {
    spec.validate()?;
    let raster = match spec.texture {
        Texture::Rich => rich_map(spec.map_size, spec.seed),
        Texture::Sparse => sparse_map(spec.map_size, spec.seed),
    };
    let ll = GeoPoint::new(spec.origin_lat, spec.origin_lon)?;
    let ur = geo_extent(ll, spec.map_size, spec.map_size, spec.resolution)?;
    GeoRefMap::new(quantize(&raster), ll, ur)
}

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub map: GeoRefMap,
    pub frames: Vec<QueryFrame>,
    /// Map-pixel to frame-pixel homography of every frame.
    pub true_homographies: Vec<Homography>,
    /// Map pixel under each frame center.
    pub centers: Vec<PixelPoint>,
}

fn translation(tx: f64, ty: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0)
}

struct FrameDraw {
    image: Raster,
    map_to_frame: Homography,
    center: PixelPoint,
}

fn draw_frame(map: &GeoRefMap, spec: &SceneSpec, id: usize) -> Result<FrameDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, id as u64));
    let margin = spec.center_margin();
    let (w, h) = (map.width_px() as f64, map.height_px() as f64);
    let cx = rng.random_range(margin..=w - margin);
    let cy = rng.random_range(margin..=h - margin);
    let fs = spec.frame_size as f64;
    let fc = fs / 2.0;
    let local = crate::keypoints::warp::sample_warp(&mut rng, &spec.warp(), (fc, fc), fc);
    let frame_to_map = Homography::new(translation(cx - fc, cy - fc) * local)?;
    let map_to_frame = frame_to_map.inverse()?;

    let (mut image, _) = warp_inverse(map.raster(), &frame_to_map, spec.frame_size, spec.frame_size);
    let gain = 1.0 + symmetric(&mut rng, spec.contrast);
    let offset = symmetric(&mut rng, spec.brightness);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    for v in image.as_mut_slice() {
        let n = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        *v = (((*v as f64 - 0.5) * gain + 0.5 + offset + n).clamp(0.0, 1.0)) as f32;
    }
    Ok(FrameDraw {
        image: quantize(&image),
        map_to_frame,
        center: PixelPoint::new(cx, cy),
    })
}

fn symmetric(rng: &mut impl Rng, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}

/// Cuts `spec.n_frames` frames from `map`. Frame `i` depends only on the
/// map, the spec and `i`.
pub fn generate_frames(map: &GeoRefMap, spec: &SceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let margin = spec.center_margin();
    if 2.0 * margin > map.width_px().min(map.height_px()) as f64 {
        return Err(Error::Config(format!(
            "map {}x{} is too small for {} px frames",
            map.width_px(),
            map.height_px(),
            spec.frame_size
        )));
    }
    let draws = (0..spec.n_frames)
        .into_par_iter()
        .map(|i| draw_frame(map, spec, i))
        .collect::<Result<Vec<_>>>()?;
    let mut frames = Vec::with_capacity(draws.len());
    let mut true_homographies = Vec::with_capacity(draws.len());
    let mut centers = Vec::with_capacity(draws.len());
    for (id, d) in draws.into_iter().enumerate() {
        frames.push(QueryFrame {
            id,
            image: d.image,
            truth: Some(map.pixel_to_geo(d.center)?),
            embedding: None,
        });
        true_homographies.push(d.map_to_frame);
        centers.push(d.center);
    }
    Ok(SyntheticScene {
        spec: spec.clone(),
        map: map.clone(),
        frames,
        true_homographies,
        centers,
    })
}

pub fn generate_scene(spec: &SceneSpec) -> Result<SyntheticScene> {
    generate_frames(&generate_map(spec)?, spec)
}

#[derive(Serialize, Deserialize)]
struct HomographyRecord {
    frame_id: usize,
    map_to_frame: Homography,
    center_px: [f64; 2],
}

#[derive(Serialize, Deserialize)]
pub(crate) struct TruthRow {
    pub frame_id: usize,
    pub lat: f64,
    pub lon: f64,
}

pub fn frame_file_name(id: usize) -> String {
    format!("{id:03}.pgm")
}

impl SyntheticScene {
    /// Writes `map.pgm`, `geo.json`, `frames/NNN.pgm`, `truth.csv`,
    /// `homographies.json` and the generating `scene.toml`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("frames"))?;
        self.map.raster().save_pgm(dir.join("map.pgm"))?;
        self.map.sidecar().save(dir.join("geo.json"))?;
        for f in &self.frames {
            f.image.save_pgm(dir.join("frames").join(frame_file_name(f.id)))?;
        }
        let truth: Vec<_> = self
            .frames
            .iter()
            .filter_map(|f| f.truth.map(|t| (f.id, t)))
            .collect();
        write_truth_csv(dir.join("truth.csv"), &truth)?;
        let records: Vec<_> = self
            .frames
            .iter()
            .zip(&self.true_homographies)
            .zip(&self.centers)
            .map(|((f, h), c)| HomographyRecord {
                frame_id: f.id,
                map_to_frame: *h,
                center_px: [c.x, c.y],
            })
            .collect();
        fs::write(
            dir.join("homographies.json"),
            serde_json::to_string_pretty(&records)? + "\n",
        )?;
        fs::write(
            dir.join("scene.toml"),
            toml::to_string(&self.spec).map_err(|e| Error::Internal(e.to_string()))?,
        )?;
        Ok(())
    }
}

pub fn write_truth_csv(path: impl AsRef<Path>, truth: &[(usize, GeoPoint)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame_id", "lat", "lon"])?;
    for (id, g) in truth {
        w.write_record([id.to_string(), format!("{:.9}", g.lat), format!("{:.9}", g.lon)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, GeoPoint)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: TruthRow = row?;
        out.push((row.frame_id, GeoPoint::new(row.lat, row.lon)?));
    }
    Ok(out)
}

/// Reads `SceneSpec` from TOML; missing keys take their defaults.
pub fn load_spec(path: impl AsRef<Path>) -> Result<SceneSpec> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
}
