//! Nearest-neighbor descriptor matching with optional ratio test and mutual
//! consistency check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo_ref::PixelPoint;
use crate::keypoints::{Descriptors, Keypoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchParams {
    /// Maximum nearest / second-nearest distance ratio. `1.0` disables the test.
    pub ratio: f64,
    pub mutual: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            ratio: 0.8,
            mutual: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchPair {
    /// Index into the query-side keypoints.
    pub query_idx: usize,
    /// Index into the patch-side keypoints.
    pub patch_idx: usize,
    pub query: Keypoint,
    pub patch: Keypoint,
    pub distance: f64,
}

/// One-to-one pairs in ascending distance order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchSet {
    pub pairs: Vec<MatchPair>,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Query-side and patch-side locations of every pair.
    pub fn point_pairs(&self) -> (Vec<PixelPoint>, Vec<PixelPoint>) {
        self.pairs
            .iter()
            .map(|m| (m.query.point(), m.patch.point()))
            .unzip()
    }
}

/// Euclidean distance between two descriptors. Accumulates in eight lanes
/// so the loop vectorizes.
#[inline]
pub fn descriptor_distance(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (ca, cb) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for l in 0..8 {
            let d = ca[l] - cb[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0f32;
    for i in chunks * 8..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    let s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    (s + tail).sqrt()
}

#[derive(Clone, Copy)]
struct Nearest {
    idx: usize,
    d1: f32,
    d2: f32,
}

fn nearest_in_row(row: &[f32]) -> Nearest {
    let mut n = Nearest {
        idx: 0,
        d1: f32::INFINITY,
        d2: f32::INFINITY,
    };
    for (j, &d) in row.iter().enumerate() {
        if d < n.d1 {
            n.d2 = n.d1;
            n.d1 = d;
            n.idx = j;
        } else if d < n.d2 {
            n.d2 = d;
        }
    }
    n
}

pub fn match_descriptors(
    desc_a: &Descriptors,
    pts_a: &[Keypoint],
    desc_b: &Descriptors,
    pts_b: &[Keypoint],
    params: &MatchParams,
) -> Result<MatchSet> {
    if !(params.ratio > 0.0 && params.ratio <= 1.0) {
        return Err(Error::Config(format!("ratio must be in (0, 1], got {}", params.ratio)));
    }
    if desc_a.len() != pts_a.len() || desc_b.len() != pts_b.len() {
        return Err(Error::Shape("descriptor and keypoint counts differ".into()));
    }
    if desc_a.dim() != desc_b.dim() && !desc_a.is_empty() && !desc_b.is_empty() {
        return Err(Error::Shape(format!(
            "descriptor dims differ: {} vs {}",
            desc_a.dim(),
            desc_b.dim()
        )));
    }
    let (na, nb) = (desc_a.len(), desc_b.len());
    if na == 0 || nb == 0 {
        return Ok(MatchSet::default());
    }

    let dist: Vec<f32> = (0..na)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = desc_a.get(i);
            (0..nb).map(move |j| descriptor_distance(a, desc_b.get(j)))
        })
        .collect();

    let forward: Vec<Nearest> = dist.chunks_exact(nb).map(nearest_in_row).collect();

    let backward: Vec<usize> = if params.mutual {
        let mut best = vec![(f32::INFINITY, 0usize); nb];
        for i in 0..na {
            for (j, b) in best.iter_mut().enumerate() {
                let d = dist[i * nb + j];
                if d < b.0 {
                    *b = (d, i);
                }
            }
        }
        best.into_iter().map(|(_, i)| i).collect()
    } else {
        Vec::new()
    };

    // Best surviving query index per patch keypoint.
    let mut claim: Vec<Option<usize>> = vec![None; nb];
    for (i, n) in forward.iter().enumerate() {
        if params.mutual && backward[n.idx] != i {
            continue;
        }
        if nb >= 2 && !(n.d1 as f64 <= params.ratio * n.d2 as f64) {
            continue;
        }
        match claim[n.idx] {
            Some(prev) if forward[prev].d1 <= n.d1 => {}
            _ => claim[n.idx] = Some(i),
        }
    }

    let mut pairs: Vec<MatchPair> = claim
        .iter()
        .enumerate()
        .filter_map(|(j, c)| {
            c.map(|i| MatchPair {
                query_idx: i,
                patch_idx: j,
                query: pts_a[i],
                patch: pts_b[j],
                distance: forward[i].d1 as f64,
            })
        })
        .collect();
    pairs.sort_by(|x, y| {
        x.distance
            .total_cmp(&y.distance)
            .then(x.query_idx.cmp(&y.query_idx))
    });
    Ok(MatchSet { pairs })
}
