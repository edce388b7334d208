//! Training losses over network-style outputs.

use crate::error::{Error, Result};
use crate::homography::Homography;

use super::decode::log_softmax_at;
use super::{CoarseDescriptorGrid, ScoreTensor, CELL, SCORE_CHANNELS};

/// Mean cross-entropy over cells; `labels` holds the true channel of every
/// cell in row-major order, `64` meaning "no keypoint".
pub fn keypoint_loss(t: &ScoreTensor, labels: &[usize]) -> Result<f64> {
    let cells = t.hc() * t.wc();
    if labels.len() != cells {
        return Err(Error::Shape(format!(
            "{} labels for {} cells",
            labels.len(),
            cells
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= SCORE_CHANNELS) {
        return Err(Error::Domain(format!("label {bad} outside [0, 64]")));
    }
    let total: f64 = t
        .cells()
        .zip(labels)
        .map(|(logits, &y)| -log_softmax_at(logits, y))
        .sum();
    Ok(total / cells as f64)
}

/// Correspondence indicator between every cell of grid A and every cell of
/// grid B, stored row-major as `[cells_a][cells_b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceLabels {
    hc: usize,
    wc: usize,
    s: Vec<bool>,
}

impl CorrespondenceLabels {
    pub fn new(hc: usize, wc: usize, s: Vec<bool>) -> Result<Self> {
        let n = hc * wc;
        if s.len() != n * n {
            return Err(Error::Shape(format!(
                "indicator needs {} entries, got {}",
                n * n,
                s.len()
            )));
        }
        Ok(Self { hc, wc, s })
    }

    /// Marks `(a, b)` when the center of cell `a`, mapped by `h` (A → B),
    /// lands closer than one cell size to the center of cell `b`.
    pub fn from_homography(hc: usize, wc: usize, h: &Homography) -> Result<Self> {
        let n = hc * wc;
        let center = |i: usize| CoarseDescriptorGrid::anchor(i / wc, i % wc);
        let mut s = vec![false; n * n];
        for a in 0..n {
            let (x, y) = center(a);
            let Ok(p) = h.apply(crate::geo_ref::PixelPoint::new(x, y)) else {
                continue;
            };
            for b in 0..n {
                let (bx, by) = center(b);
                if ((p.x - bx).powi(2) + (p.y - by).powi(2)).sqrt() < CELL as f64 {
                    s[a * n + b] = true;
                }
            }
        }
        Ok(Self { hc, wc, s })
    }

    pub fn get(&self, a: usize, b: usize) -> bool {
        self.s[a * self.hc * self.wc + b]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescriptorLossConfig {
    pub m_p: f64,
    pub m_n: f64,
    pub lambda_d: f64,
}

impl Default for DescriptorLossConfig {
    fn default() -> Self {
        Self {
            m_p: 1.0,
            m_n: 0.2,
            lambda_d: 250.0,
        }
    }
}

impl DescriptorLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.m_p > self.m_n && self.m_n >= 0.0 && self.lambda_d > 0.0) {
            return Err(Error::Config(format!(
                "need m_p > m_n >= 0 and lambda_d > 0, got {:?}",
                self
            )));
        }
        Ok(())
    }
}

/// Hinge loss over all cell pairs, averaged over `(hc·wc)²` pairs.
pub fn descriptor_loss(
    a: &CoarseDescriptorGrid,
    b: &CoarseDescriptorGrid,
    labels: &CorrespondenceLabels,
    cfg: &DescriptorLossConfig,
) -> Result<f64> {
    cfg.validate()?;
    if (a.hc(), a.wc(), a.dim()) != (b.hc(), b.wc(), b.dim()) {
        return Err(Error::Shape("descriptor grids differ in shape".into()));
    }
    if (labels.hc, labels.wc) != (a.hc(), a.wc()) {
        return Err(Error::Shape("indicator does not match grid size".into()));
    }
    let n = a.hc() * a.wc();
    let node = |g: &'_ CoarseDescriptorGrid, i: usize| -> Vec<f64> { g.node(i / g.wc(), i % g.wc()).to_vec() };
    let mut total = 0.0;
    for i in 0..n {
        let d = node(a, i);
        for j in 0..n {
            let dot: f64 = d.iter().zip(node(b, j)).map(|(x, y)| x * y).sum();
            total += if labels.get(i, j) {
                cfg.lambda_d * (cfg.m_p - dot).max(0.0)
            } else {
                (dot - cfg.m_n).max(0.0)
            };
        }
    }
    Ok(total / (n * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: &[f64]) -> CoarseDescriptorGrid {
        CoarseDescriptorGrid::new(1, 1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn keypoint_loss_examples() {
        let t = ScoreTensor::new(2, 3, vec![0.0; 6 * SCORE_CHANNELS]).unwrap();
        let l = keypoint_loss(&t, &[0, 64, 5, 17, 63, 1]).unwrap();
        assert!((l - 65f64.ln()).abs() < 1e-12);
        assert!((65f64.ln() - 4.174387).abs() < 1e-6);

        let peaked = |v: f64| {
            let mut logits = vec![0.0; SCORE_CHANNELS];
            logits[7] = v;
            keypoint_loss(&ScoreTensor::new(1, 1, logits).unwrap(), &[7]).unwrap()
        };
        let expect = (10f64.exp() + 64.0).ln() - 10.0;
        assert!((peaked(10.0) - expect).abs() < 1e-12);
        assert!((expect - 2.9014e-3).abs() < 1e-7);
        assert!(peaked(5.0) > peaked(10.0) && peaked(10.0) > peaked(20.0));
        assert!(peaked(20.0) < 1e-6);
    }

    #[test]
    fn keypoint_label_validation() {
        let t = ScoreTensor::new(1, 1, vec![0.0; SCORE_CHANNELS]).unwrap();
        assert!(matches!(keypoint_loss(&t, &[65]), Err(Error::Domain(_))));
        assert!(matches!(keypoint_loss(&t, &[1, 2]), Err(Error::Shape(_))));
    }

    #[test]
    fn descriptor_loss_examples() {
        let cfg = DescriptorLossConfig::default();
        let pos = CorrespondenceLabels::new(1, 1, vec![true]).unwrap();
        let neg = CorrespondenceLabels::new(1, 1, vec![false]).unwrap();

        let u = single(&[0.6, 0.8]);
        assert_eq!(descriptor_loss(&u, &u, &pos, &cfg).unwrap(), 0.0);

        // dot = 0.5
        let a = single(&[1.0, 0.0]);
        let b = single(&[0.5, 0.75f64.sqrt()]);
        assert!((descriptor_loss(&a, &b, &neg, &cfg).unwrap() - 0.3).abs() < 1e-12);

        // dot = 0.4
        let c = single(&[0.4, 0.84f64.sqrt()]);
        let unit_lambda = DescriptorLossConfig { lambda_d: 1.0, ..cfg };
        assert!((descriptor_loss(&a, &c, &pos, &unit_lambda).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn descriptor_loss_normalizes_by_pair_count() {
        let g = CoarseDescriptorGrid::new(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        // Diagonal positive, off-diagonal negative with dot 0 -> zero loss.
        let s = CorrespondenceLabels::new(1, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(descriptor_loss(&g, &g, &s, &DescriptorLossConfig::default()).unwrap(), 0.0);
        // All negative: two pairs with dot 1 contribute 0.8 each over 4 pairs.
        let s = CorrespondenceLabels::new(1, 2, vec![false; 4]).unwrap();
        let l = descriptor_loss(&g, &g, &s, &DescriptorLossConfig::default()).unwrap();
        assert!((l - 0.4).abs() < 1e-12);
    }

    #[test]
    fn descriptor_loss_errors() {
        let a = single(&[1.0, 0.0]);
        let b = single(&[1.0, 0.0, 0.0]);
        let s = CorrespondenceLabels::new(1, 1, vec![true]).unwrap();
        let cfg = DescriptorLossConfig::default();
        assert!(matches!(descriptor_loss(&a, &b, &s, &cfg), Err(Error::Shape(_))));
        let bad = DescriptorLossConfig { m_n: 1.5, ..cfg };
        assert!(matches!(descriptor_loss(&a, &a, &s, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn labels_from_identity_are_diagonal() {
        let s = CorrespondenceLabels::from_homography(3, 4, &Homography::identity()).unwrap();
        for a in 0..12 {
            for b in 0..12 {
                assert_eq!(s.get(a, b), a == b);
            }
        }
        let shifted = CorrespondenceLabels::from_homography(3, 4, &Homography::translation(8.0, 0.0)).unwrap();
        assert!(shifted.get(0, 1) && !shifted.get(0, 0));
    }
}
