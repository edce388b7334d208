//! Keypoints and local descriptors.
//!
//! Two sources are supported: decoding of network-style outputs (a
//! 65-channel per-cell score tensor and a coarse descriptor grid) and a
//! deterministic built-in corner detector with gradient-histogram
//! descriptors. Training losses for the network outputs and a seeded
//! homographic pair generator are included for external training code.

mod decode;
mod detector;
mod loss;
pub(crate) mod warp;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo_ref::PixelPoint;

pub use decode::{
    decode_heatmap, extract_keypoints, import_tensors, interpolate_descriptor,
    sample_descriptors, CoarseDescriptorGrid, ExtractParams, KeypointHeatmap, SampledDescriptors,
    ScoreTensor, CELL, SCORE_CHANNELS,
};
pub use detector::{builtin_detect, DetectorConfig, DESCRIPTOR_DIM};
pub use loss::{descriptor_loss, keypoint_loss, CorrespondenceLabels, DescriptorLossConfig};
pub use warp::{make_training_pair, warp_inverse, TrainingPair, WarpParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

impl Keypoint {
    pub fn point(&self) -> PixelPoint {
        PixelPoint::new(self.x, self.y)
    }
}

/// Row-major descriptor matrix, one row per keypoint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Descriptors {
    dim: usize,
    data: Vec<f32>,
}

impl Descriptors {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of dim {}",
                data.len(),
                dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn with_dim(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, row: &[f32]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

/// Writes one `{"x":..,"y":..,"score":..}` object per line.
pub fn write_keypoints_jsonl(mut w: impl Write, pts: &[Keypoint]) -> Result<()> {
    for p in pts {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_keypoints_jsonl(r: impl BufRead) -> Result<Vec<Keypoint>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Greedy non-maximum suppression. Candidates are visited by descending
/// score, ties in `(y, x)` order; a candidate survives when no survivor lies
/// within Chebyshev distance `radius`.
pub(crate) fn greedy_nms(
    mut candidates: Vec<(usize, usize, f64)>,
    width: usize,
    height: usize,
    radius: usize,
    max_count: usize,
) -> Vec<(usize, usize, f64)> {
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));
    let mut blocked = vec![false; width * height];
    let mut kept = Vec::new();
    for (x, y, s) in candidates {
        if kept.len() >= max_count {
            break;
        }
        if blocked[y * width + x] {
            continue;
        }
        kept.push((x, y, s));
        let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(height - 1));
        let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(width - 1));
        for yy in y0..=y1 {
            blocked[yy * width + x0..=yy * width + x1].fill(true);
        }
    }
    kept
}
