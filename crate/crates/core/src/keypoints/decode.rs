//! Decoding of per-cell keypoint scores and coarse descriptor grids.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tbf::Tensor;

use super::{greedy_nms, Descriptors, Keypoint};

/// Edge of the square pixel block summarized by one score cell.
pub const CELL: usize = 8;
/// 64 in-cell positions plus the "no keypoint" dustbin.
pub const SCORE_CHANNELS: usize = CELL * CELL + 1;
const DUSTBIN: usize = SCORE_CHANNELS - 1;

/// Raw per-cell logits, laid out `[hc][wc][65]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTensor {
    hc: usize,
    wc: usize,
    logits: Vec<f64>,
}

impl ScoreTensor {
    pub fn new(hc: usize, wc: usize, logits: Vec<f64>) -> Result<Self> {
        if hc == 0 || wc == 0 {
            return Err(Error::Shape("score tensor needs at least one cell".into()));
        }
        if logits.len() != hc * wc * SCORE_CHANNELS {
            return Err(Error::Shape(format!(
                "score tensor {}x{}x{} needs {} logits, got {}",
                hc,
                wc,
                SCORE_CHANNELS,
                hc * wc * SCORE_CHANNELS,
                logits.len()
            )));
        }
        Ok(Self { hc, wc, logits })
    }

    pub fn hc(&self) -> usize {
        self.hc
    }

    pub fn wc(&self) -> usize {
        self.wc
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.wc + col) * SCORE_CHANNELS;
        &self.logits[start..start + SCORE_CHANNELS]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let start = (row * self.wc + col) * SCORE_CHANNELS;
        &mut self.logits[start..start + SCORE_CHANNELS]
    }

    pub(crate) fn cells(&self) -> impl Iterator<Item = &[f64]> {
        self.logits.chunks_exact(SCORE_CHANNELS)
    }
}

/// Full-resolution keypoint probabilities with the per-cell dustbin mass
/// that was removed.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointHeatmap {
    width: usize,
    height: usize,
    probs: Vec<f64>,
    dustbin: Vec<f64>,
}

impl KeypointHeatmap {
    pub fn from_probs(width: usize, height: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != width * height {
            return Err(Error::Shape("heatmap size mismatch".into()));
        }
        Ok(Self {
            width,
            height,
            probs,
            dustbin: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[y * self.width + x]
    }

    /// Dustbin probability of cell `(row, col)`; empty for heatmaps built
    /// with [`KeypointHeatmap::from_probs`].
    pub fn dustbin(&self, row: usize, col: usize) -> Option<f64> {
        self.dustbin.get(row * (self.width / CELL) + col).copied()
    }
}

/// Numerically stable softmax into `out`.
fn softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

pub(crate) fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits[k] - lse
}

/// Per-cell softmax over 65 channels; the dustbin is dropped and channel
/// `k` fills pixel `(k mod 8, k div 8)` of the cell's block.
pub fn decode_heatmap(t: &ScoreTensor) -> Result<KeypointHeatmap> {
    if t.logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("score tensor contains non-finite logits".into()));
    }
    let (width, height) = (t.wc * CELL, t.hc * CELL);
    let mut probs = vec![0.0; width * height];
    let mut dustbin = Vec::with_capacity(t.hc * t.wc);
    let mut p = [0.0f64; SCORE_CHANNELS];
    for row in 0..t.hc {
        for col in 0..t.wc {
            softmax(t.cell(row, col), &mut p);
            for (k, &v) in p[..DUSTBIN].iter().enumerate() {
                let x = col * CELL + k % CELL;
                let y = row * CELL + k / CELL;
                probs[y * width + x] = v;
            }
            dustbin.push(p[DUSTBIN]);
        }
    }
    Ok(KeypointHeatmap {
        width,
        height,
        probs,
        dustbin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractParams {
    pub threshold: f64,
    pub nms_radius: usize,
    pub max_count: usize,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            threshold: 0.015,
            nms_radius: 4,
            max_count: 1000,
        }
    }
}

/// Thresholded, non-maximum-suppressed keypoints at integer pixel positions.
pub fn extract_keypoints(h: &KeypointHeatmap, params: &ExtractParams) -> Result<Vec<Keypoint>> {
    if !(params.threshold > 0.0 && params.threshold < 1.0) {
        return Err(Error::Config(format!(
            "threshold must be in (0, 1), got {}",
            params.threshold
        )));
    }
    let candidates: Vec<_> = (0..h.height)
        .flat_map(|y| (0..h.width).map(move |x| (x, y)))
        .filter_map(|(x, y)| {
            let s = h.get(x, y);
            (s >= params.threshold).then_some((x, y, s))
        })
        .collect();
    Ok(
        greedy_nms(candidates, h.width, h.height, params.nms_radius, params.max_count)
            .into_iter()
            .map(|(x, y, score)| Keypoint {
                x: x as f64,
                y: y as f64,
                score,
            })
            .collect(),
    )
}

/// Coarse descriptor field, one `dim`-vector per score cell, laid out
/// `[hc][wc][dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseDescriptorGrid {
    hc: usize,
    wc: usize,
    dim: usize,
    data: Vec<f64>,
}

impl CoarseDescriptorGrid {
    pub fn new(hc: usize, wc: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if hc == 0 || wc == 0 || dim == 0 {
            return Err(Error::Shape("descriptor grid dimensions must be positive".into()));
        }
        if data.len() != hc * wc * dim {
            return Err(Error::Shape(format!(
                "descriptor grid {}x{}x{} needs {} values, got {}",
                hc,
                wc,
                dim,
                hc * wc * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("descriptor grid contains non-finite values".into()));
        }
        Ok(Self { hc, wc, dim, data })
    }

    pub fn hc(&self) -> usize {
        self.hc
    }

    pub fn wc(&self) -> usize {
        self.wc
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.wc + col) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Image position of node `(row, col)`: the center of its pixel block.
    pub fn anchor(row: usize, col: usize) -> (f64, f64) {
        (
            (CELL * col) as f64 + 3.5,
            (CELL * row) as f64 + 3.5,
        )
    }
}

fn lattice_coord(v: f64, n: usize) -> (usize, usize, f64) {
    let g = ((v - 3.5) / CELL as f64).clamp(0.0, (n - 1) as f64);
    let i0 = (g.floor() as usize).min(n.saturating_sub(2));
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, g - i0 as f64)
}

/// Bilinear interpolation of the grid at image point `(x, y)`, before
/// normalization. Points outside the node lattice use the nearest hull value.
pub fn interpolate_descriptor(grid: &CoarseDescriptorGrid, x: f64, y: f64) -> Vec<f64> {
    let (c0, c1, ax) = lattice_coord(x, grid.wc);
    let (r0, r1, ay) = lattice_coord(y, grid.hc);
    let w = [
        (r0, c0, (1.0 - ax) * (1.0 - ay)),
        (r0, c1, ax * (1.0 - ay)),
        (r1, c0, (1.0 - ax) * ay),
        (r1, c1, ax * ay),
    ];
    let mut out = vec![0.0; grid.dim];
    for (r, c, wt) in w {
        if wt == 0.0 {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(grid.node(r, c)) {
            *o += wt * v;
        }
    }
    out
}

/// Descriptors for the keypoints that could be sampled, with the indices of
/// those that were dropped because their interpolated vector vanished.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDescriptors {
    pub descriptors: Descriptors,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

pub fn sample_descriptors(
    grid: &CoarseDescriptorGrid,
    pts: &[Keypoint],
) -> Result<SampledDescriptors> {
    let (w, h) = ((grid.wc * CELL) as f64, (grid.hc * CELL) as f64);
    let mut descriptors = Descriptors::with_dim(grid.dim);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if !(p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h) {
            return Err(Error::Range(format!(
                "keypoint ({}, {}) outside {}x{} image",
                p.x, p.y, w, h
            )));
        }
        let v = interpolate_descriptor(grid, p.x, p.y);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            dropped.push(i);
            continue;
        }
        let row: Vec<f32> = v.iter().map(|x| (x / norm) as f32).collect();
        descriptors.push(&row);
        kept.push(i);
    }
    Ok(SampledDescriptors {
        descriptors,
        kept,
        dropped,
    })
}

/// Loads a `[hc, wc, 65]` score tensor and a `[hc, wc, D]` descriptor grid.
pub fn import_tensors(
    score_path: impl AsRef<Path>,
    desc_path: impl AsRef<Path>,
) -> Result<(ScoreTensor, CoarseDescriptorGrid)> {
    tensors_from_blobs(&Tensor::read(score_path)?, &Tensor::read(desc_path)?)
}

pub(crate) fn tensors_from_blobs(
    score: &Tensor,
    desc: &Tensor,
) -> Result<(ScoreTensor, CoarseDescriptorGrid)> {
    if score.rank() != 3 || score.shape[2] != SCORE_CHANNELS {
        return Err(Error::format(
            "score.shape",
            format!("expected [hc, wc, {SCORE_CHANNELS}], got {:?}", score.shape),
        ));
    }
    if desc.rank() != 3 || desc.shape[2] == 0 {
        return Err(Error::format(
            "desc.shape",
            format!("expected [hc, wc, D], got {:?}", desc.shape),
        ));
    }
    if score.shape[0] != desc.shape[0] {
        return Err(Error::format(
            "hc",
            format!("score has {} rows, descriptors {}", score.shape[0], desc.shape[0]),
        ));
    }
    if score.shape[1] != desc.shape[1] {
        return Err(Error::format(
            "wc",
            format!("score has {} cols, descriptors {}", score.shape[1], desc.shape[1]),
        ));
    }
    let to64 = |d: &[f32]| d.iter().map(|&v| v as f64).collect::<Vec<_>>();
    let st = ScoreTensor::new(score.shape[0], score.shape[1], to64(&score.data))
        .map_err(|e| Error::format("score", e.to_string()))?;
    let grid = CoarseDescriptorGrid::new(desc.shape[0], desc.shape[1], desc.shape[2], to64(&desc.data))
        .map_err(|e| Error::format("desc", e.to_string()))?;
    Ok((st, grid))
}
