//! Global image descriptors for retrieval.
//!
//! An image is turned into a non-negative dense feature map, pooled per
//! channel with a generalized mean, then L2-normalized. The built-in feature
//! provider is a two-scale grid of unsigned gradient-orientation histograms;
//! externally computed descriptors can be imported from tensor-blob files.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::tbf::Tensor;

/// Gaussian pre-smoothing applied before each orientation histogram.
pub const BUILTIN_SCALES: [f64; 2] = [1.0, 2.0];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provider {
    #[default]
    Builtin,
    Import,
}

impl FromStr for Provider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "builtin" => Ok(Provider::Builtin),
            "import" => Ok(Provider::Import),
            other => Err(Error::Config(format!("unknown embedding provider `{other}`"))),
        }
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provider::Builtin => "builtin",
            Provider::Import => "import",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: Provider,
    /// Generalized-mean exponent.
    pub gem_p: f64,
    /// Cell edge in pixels for the built-in provider.
    pub cell: usize,
    pub orientation_bins: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: Provider::Builtin,
            gem_p: 3.0,
            cell: 16,
            orientation_bins: 8,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gem_p >= 1.0) || !self.gem_p.is_finite() {
            return Err(Error::Config(format!("gem_p must be >= 1, got {}", self.gem_p)));
        }
        if self.cell == 0 || self.orientation_bins == 0 {
            return Err(Error::Config("cell and orientation_bins must be positive".into()));
        }
        Ok(())
    }

    /// Identifies everything that affects embedding values. Queries are only
    /// comparable with an index carrying the same fingerprint.
    pub fn fingerprint(&self) -> String {
        match self.provider {
            Provider::Builtin => format!(
                "builtin/v1 cell={} bins={} scales={:?} gem_p={}",
                self.cell, self.orientation_bins, BUILTIN_SCALES, self.gem_p
            ),
            Provider::Import => "import".to_string(),
        }
    }

    pub fn channels(&self) -> usize {
        BUILTIN_SCALES.len() * self.orientation_bins
    }
}

/// Channel-major non-negative feature map.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseFeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DenseFeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape("feature map dimensions must be positive".into()));
        }
        if values.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "feature map {}x{}x{} needs {} values, got {}",
                channels,
                height,
                width,
                channels * height * width,
                values.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            values,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[c * n..(c + 1) * n]
    }

    /// Histogram of cell `(row, col)` across all channels.
    pub fn cell(&self, row: usize, col: usize) -> Vec<f64> {
        (0..self.channels)
            .map(|c| self.channel(c)[row * self.width + col])
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// The all-zero embedding used in place of a degenerate one.
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "embedding dims differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(euclidean(&self.values, &other.values))
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn dense_features(image: &Raster, config: &EmbeddingConfig) -> Result<DenseFeatureMap> {
    config.validate()?;
    if config.provider != Provider::Builtin {
        return Err(Error::Config(format!(
            "provider `{}` does not compute dense features; import embeddings instead",
            config.provider
        )));
    }
    let cell = config.cell;
    let bins = config.orientation_bins;
    let (cols, rows) = (image.width() / cell, image.height() / cell);
    if cols == 0 || rows == 0 {
        return Err(Error::Config(format!(
            "image {}x{} is smaller than one {}px cell",
            image.width(),
            image.height(),
            cell
        )));
    }

    let channels = BUILTIN_SCALES.len() * bins;
    let plane = rows * cols;
    let mut values = vec![0.0f64; channels * plane];
    let bin_width = PI / bins as f64;
    let area = (cell * cell) as f64;

    for (s, &sigma) in BUILTIN_SCALES.iter().enumerate() {
        let (gx, gy) = image.gaussian_blur(sigma).gradients();
        for y in 0..rows * cell {
            for x in 0..cols * cell {
                let dx = gx.get(x, y) as f64;
                let dy = gy.get(x, y) as f64;
                let mag = dx.hypot(dy);
                if mag == 0.0 {
                    continue;
                }
                let theta = dy.atan2(dx).rem_euclid(PI);
                let t = theta / bin_width;
                let b0 = t.floor();
                let frac = t - b0;
                let b0 = (b0 as usize) % bins;
                let b1 = (b0 + 1) % bins;
                let cell_idx = (y / cell) * cols + x / cell;
                values[(s * bins + b0) * plane + cell_idx] += mag * (1.0 - frac) / area;
                values[(s * bins + b1) * plane + cell_idx] += mag * frac / area;
            }
        }
    }
    DenseFeatureMap::new(channels, rows, cols, values)
}

/// Generalized-mean pooling, one value per channel.
pub fn gem_pool(fmap: &DenseFeatureMap, p: f64) -> Result<Embedding> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("GeM exponent must be >= 1, got {p}")));
    }
    let mut out = Vec::with_capacity(fmap.channels());
    for c in 0..fmap.channels() {
        out.push(gem_channel(fmap.channel(c), p)?);
    }
    Ok(Embedding::new(out))
}

fn gem_channel(values: &[f64], p: f64) -> Result<f64> {
    let mut max = 0.0f64;
    for &v in values {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!(
                "GeM pooling needs finite non-negative features, found {v}"
            )));
        }
        max = max.max(v);
    }
    let n = values.len() as f64;
    if p == 1.0 {
        return Ok(values.iter().sum::<f64>() / n);
    }
    if max == 0.0 {
        return Ok(0.0);
    }
    // Scale by the maximum so large exponents do not underflow.
    let mean_pow = values.iter().map(|&v| (v / max).powf(p)).sum::<f64>() / n;
    Ok(max * mean_pow.powf(1.0 / p))
}

pub fn l2_normalize(v: &Embedding) -> Result<Embedding> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero-norm vector".into()));
    }
    Ok(Embedding::new(v.values.iter().map(|x| x / norm).collect()))
}

/// Unit-norm GeM descriptor of an image under the built-in provider.
pub fn embed(image: &Raster, config: &EmbeddingConfig) -> Result<Embedding> {
    l2_normalize(&gem_pool(&dense_features(image, config)?, config.gem_p)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletExample {
    pub query: Embedding,
    pub positive: Embedding,
    pub negative: Embedding,
}

/// Hinge on `d(q, pos) - d(q, neg) + delta` with Euclidean `d`.
pub fn triplet_loss(t: &TripletExample, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("margin must be >= 0, got {delta}")));
    }
    let dp = t.query.distance(&t.positive)?;
    let dn = t.query.distance(&t.negative)?;
    Ok((dp - dn + delta).max(0.0))
}

/// Loads a rank-1 tensor blob and normalizes it.
pub fn import_embedding(path: impl AsRef<Path>) -> Result<Embedding> {
    embedding_from_tensor(&Tensor::read(path)?)
}

pub fn embedding_from_tensor(t: &Tensor) -> Result<Embedding> {
    if t.rank() != 1 {
        return Err(Error::format(
            "shape",
            format!("embedding must be rank-1, got shape {:?}", t.shape),
        ));
    }
    if t.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::format("payload", "non-finite embedding value"));
    }
    l2_normalize(&Embedding::new(t.data.iter().map(|&v| v as f64).collect()))
}
