//! Single-channel floating point raster with the handful of image operations
//! the pipeline needs (cropping, resampling, smoothing, gradients) and 8-bit
//! netpbm I/O.
//!
//! Pixel values are intensities in `[0, 1]`. Continuous coordinates follow the
//! top-left origin convention with integer values on pixel corners, so the
//! center of pixel `(i, j)` sits at `(i + 0.5, j + 0.5)`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "raster {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel lookup with coordinates clamped to the raster (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Copies the `w`x`h` window whose top-left pixel is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Raster> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Range(format!(
                "crop {}x{}+{}+{} exceeds raster {}x{}",
                w, h, x0, y0, self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + w]);
        }
        Ok(Raster {
            width: w,
            height: h,
            data,
        })
    }

    /// Bilinear sample at a continuous coordinate. Returns `None` outside the
    /// raster footprint `[0, w] x [0, h]`; inside, the half-pixel rim is edge
    /// replicated.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f32> {
        if !(x >= 0.0 && y >= 0.0 && x <= self.width as f64 && y <= self.height as f64) {
            return None;
        }
        let fx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = (fx - x0 as f64) as f32;
        let ay = (fy - y0 as f64) as f32;
        let top = self.get(x0, y0) * (1.0 - ax) + self.get(x1, y0) * ax;
        let bottom = self.get(x0, y1) * (1.0 - ax) + self.get(x1, y1) * ax;
        Some(top * (1.0 - ay) + bottom * ay)
    }

    /// Separable Gaussian smoothing with edge replication. The kernel is
    /// truncated at three standard deviations.
    pub fn gaussian_blur(&self, sigma: f64) -> Raster {
        if sigma <= 0.0 {
            return self.clone();
        }
        let kernel = gaussian_kernel(sigma);
        let r = (kernel.len() / 2) as isize;
        let (w, h) = (self.width, self.height);

        let mut tmp = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f32;
                for (k, &kv) in kernel.iter().enumerate() {
                    acc += kv * self.get_clamped(x as isize + k as isize - r, y as isize);
                }
                tmp[y * w + x] = acc;
            }
        }
        let mut out = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f32;
                for (k, &kv) in kernel.iter().enumerate() {
                    let yy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                    acc += kv * tmp[yy * w + x];
                }
                out[y * w + x] = acc;
            }
        }
        Raster {
            width: w,
            height: h,
            data: out,
        }
    }

    /// Central-difference gradients `(d/dx, d/dy)` with edge replication.
    pub fn gradients(&self) -> (Raster, Raster) {
        let (w, h) = (self.width, self.height);
        let mut gx = Raster::new(w, h);
        let mut gy = Raster::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let (xi, yi) = (x as isize, y as isize);
                gx.set(
                    x,
                    y,
                    0.5 * (self.get_clamped(xi + 1, yi) - self.get_clamped(xi - 1, yi)),
                );
                gy.set(
                    x,
                    y,
                    0.5 * (self.get_clamped(xi, yi + 1) - self.get_clamped(xi, yi - 1)),
                );
            }
        }
        (gx, gy)
    }

    /// Rotates the raster by 180 degrees.
    pub fn rotate180(&self) -> Raster {
        let mut data = self.data.clone();
        data.reverse();
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Quantizes to 8 bits, rounding to nearest and clamping to `[0, 255]`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Raster> {
        Raster::from_vec(
            width,
            height,
            bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        )
    }

    /// Loads a binary PGM (P5) or PPM (P6). Color input is reduced to luminance
    /// with weights 0.299 / 0.587 / 0.114.
    pub fn load_pnm(path: impl AsRef<Path>) -> Result<Raster> {
        let path = path.as_ref();
        let img = ImageReader::open(path)?.with_guessed_format()?.decode()?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        match img {
            DynamicImage::ImageLuma8(gray) => Raster::from_u8(w, h, gray.as_raw()),
            other => {
                let rgb = other.to_rgb8();
                let data = rgb
                    .pixels()
                    .map(|p| {
                        let [r, g, b] = p.0;
                        (0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32) / 255.0
                    })
                    .collect();
                Raster::from_vec(w, h, data)
            }
        }
    }

    /// Writes an 8-bit binary PGM (P5).
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        PnmEncoder::new(file)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(
                &self.to_u8(),
                self.width as u32,
                self.height as u32,
                ExtendedColorType::L8,
            )?;
        Ok(())
    }
}

pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k.into_iter().map(|v| v as f32).collect()
}
