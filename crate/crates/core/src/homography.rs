//! Planar homographies: normalized DLT fitting, seeded RANSAC, and
//! projection of the frame center.
//!
//! Matrices are kept with `h22 = 1`. Fitting maps query-frame points onto
//! patch points, so projecting the frame center yields a patch pixel.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo_ref::PixelPoint;
use crate::matching::MatchSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct Homography(Matrix3<f64>);

impl Homography {
    /// Normalizes `m` so that `h22 = 1` and checks it is invertible.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("homography has non-finite entries".into()));
        }
        let scale = m.norm();
        if m[(2, 2)].abs() <= 1e-12 * scale || scale == 0.0 {
            return Err(Error::Normalization);
        }
        let m = m / m[(2, 2)];
        let norm = m.norm();
        if m.determinant().abs() <= 1e-12 * norm * norm * norm {
            return Err(Error::Degenerate("homography is singular".into()));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self(Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0))
    }

    /// Row-major entries `h00, h01, ..., h22`.
    pub fn from_rows(rows: [f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&rows))
    }

    pub fn to_rows(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, p: PixelPoint) -> Result<PixelPoint> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::Domain("cannot project a non-finite point".into()));
        }
        let v = self.0 * Vector3::new(p.x, p.y, 1.0);
        let scale = self.0[(2, 0)].abs() * p.x.abs() + self.0[(2, 1)].abs() * p.y.abs() + 1.0;
        if v.z.abs() <= 1e-12 * scale {
            return Err(Error::ProjectionAtInfinity);
        }
        Ok(PixelPoint::new(v.x / v.z, v.y / v.z))
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .0
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("homography is singular".into()))?;
        Self::new(inv)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self> {
        Self::new(self.0 * other.0)
    }

    /// Forward reprojection error of one correspondence, infinite when the
    /// source point maps to infinity.
    pub fn residual(&self, src: PixelPoint, dst: PixelPoint) -> f64 {
        self.apply(src)
            .map(|p| p.distance(&dst))
            .unwrap_or(f64::INFINITY)
    }
}

impl TryFrom<[f64; 9]> for Homography {
    type Error = Error;

    fn try_from(rows: [f64; 9]) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<Homography> for [f64; 9] {
    fn from(h: Homography) -> Self {
        h.to_rows()
    }
}

/// Similarity that moves the centroid to the origin and the mean distance
/// from it to sqrt(2).
fn conditioning(points: &[PixelPoint]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| (p.x - cx).hypot(p.y - cy))
        .sum::<f64>()
        / n;
    if !(mean_dist > 0.0) || !mean_dist.is_finite() {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(t: &Matrix3<f64>, p: PixelPoint) -> (f64, f64) {
    // Conditioning matrices are affine.
    (
        t[(0, 0)] * p.x + t[(0, 1)] * p.y + t[(0, 2)],
        t[(1, 0)] * p.x + t[(1, 1)] * p.y + t[(1, 2)],
    )
}

/// Least-squares homography mapping `src[i]` onto `dst[i]` by the normalized
/// Direct Linear Transform.
pub fn dlt_fit(src: &[PixelPoint], dst: &[PixelPoint]) -> Result<Homography> {
    let n = src.len();
    if dst.len() != n {
        return Err(Error::Shape(format!("{} source vs {} target points", n, dst.len())));
    }
    if n < 4 {
        return Err(Error::InsufficientMatches(n));
    }
    let t_src = conditioning(src)?;
    let t_dst = conditioning(dst)?;

    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (&s, &d)) in src.iter().zip(dst).enumerate() {
        let (x, y) = transform(&t_src, s);
        let (u, v) = transform(&t_dst, d);
        let r0 = 2 * i;
        let r1 = r0 + 1;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = u;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = v;
    }
    // R from a QR factorization shares singular values and right singular
    // vectors with A, and is only 9x9.
    let r = if rows > 9 { a.qr().r() } else { a };
    let svd = r.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD did not produce right singular vectors".into()))?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = order[0];
    let second = svd.singular_values[order[1]];
    let largest = svd.singular_values[order[order.len() - 1]];
    if !(second > 1e-9 * largest) {
        return Err(Error::Degenerate(
            "correspondences do not determine a unique homography".into(),
        ));
    }

    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| Error::Internal("conditioning matrix is singular".into()))?;
    Homography::new(t_dst_inv * hn * t_src)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Maximum reprojection error of an inlier, in pixels.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            inlier_threshold: 3.0,
            min_inliers: 15,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("RANSAC needs at least one iteration".into()));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::Config("inlier threshold must be positive".into()));
        }
        if self.min_inliers < 4 {
            return Err(Error::Config("min_inliers must be at least 4".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RansacFit {
    pub homography: Homography,
    pub inliers: Vec<bool>,
}

impl RansacFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

fn nearly_collinear(a: PixelPoint, b: PixelPoint, c: PixelPoint) -> bool {
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let scale = a.distance(&b).max(a.distance(&c)).max(b.distance(&c));
    cross.abs() <= 1e-9 * scale * scale
}

fn sample_degenerate(pts: &[PixelPoint; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES
        .iter()
        .any(|t| nearly_collinear(pts[t[0]], pts[t[1]], pts[t[2]]))
}

/// Inlier mask and residual sum of `h` over all correspondences.
fn score(h: &Homography, src: &[PixelPoint], dst: &[PixelPoint], thr: f64) -> (Vec<bool>, usize, f64) {
    let mut mask = Vec::with_capacity(src.len());
    let mut count = 0;
    let mut sum = 0.0;
    for (&s, &d) in src.iter().zip(dst) {
        let r = h.residual(s, d);
        let inlier = r <= thr;
        if inlier {
            count += 1;
            sum += r;
        }
        mask.push(inlier);
    }
    (mask, count, sum)
}

/// Seeded 4-point RANSAC followed by a least-squares re-fit on the
/// consensus set. Deterministic for a given `cfg.seed`.
pub fn ransac_fit_points(
    src: &[PixelPoint],
    dst: &[PixelPoint],
    cfg: &RansacConfig,
) -> Result<RansacFit> {
    cfg.validate()?;
    let n = src.len();
    if dst.len() != n {
        return Err(Error::Shape(format!("{} source vs {} target points", n, dst.len())));
    }
    if n < 4 {
        return Err(Error::InsufficientMatches(n));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Homography, Vec<bool>, usize, f64)> = None;
    for _ in 0..cfg.iterations {
        let idx = sample(&mut rng, n, 4);
        let s: [PixelPoint; 4] = std::array::from_fn(|i| src[idx.index(i)]);
        let d: [PixelPoint; 4] = std::array::from_fn(|i| dst[idx.index(i)]);
        if sample_degenerate(&s) || sample_degenerate(&d) {
            continue;
        }
        let Ok(h) = dlt_fit(&s, &d) else { continue };
        let (mask, count, sum) = score(&h, src, dst, cfg.inlier_threshold);
        let better = match &best {
            None => true,
            Some((_, _, bc, bs)) => {
                count > *bc || (count == *bc && count > 0 && sum / (count as f64) < bs / (*bc as f64))
            }
        };
        if better {
            best = Some((h, mask, count, sum));
        }
    }

    let (h, mask, count, _) = best.ok_or(Error::NoConsensus {
        best: 0,
        required: cfg.min_inliers,
    })?;
    if count < cfg.min_inliers {
        return Err(Error::NoConsensus {
            best: count,
            required: cfg.min_inliers,
        });
    }

    let (in_src, in_dst): (Vec<PixelPoint>, Vec<PixelPoint>) = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| (src[i], dst[i]))
        .unzip();
    if let Ok(refit) = dlt_fit(&in_src, &in_dst) {
        let (refit_mask, refit_count, _) = score(&refit, src, dst, cfg.inlier_threshold);
        if refit_count >= count {
            return Ok(RansacFit {
                homography: refit,
                inliers: refit_mask,
            });
        }
    }
    Ok(RansacFit {
        homography: h,
        inliers: mask,
    })
}

/// RANSAC over a match set, fitting query-frame points onto patch points.
pub fn ransac_fit(matches: &MatchSet, cfg: &RansacConfig) -> Result<RansacFit> {
    let (src, dst) = matches.point_pairs();
    ransac_fit_points(&src, &dst, cfg)
}

/// Projects the center of a `frame_w` x `frame_h` frame through `h`.
pub fn project_center(h: &Homography, frame_w: usize, frame_h: usize) -> Result<PixelPoint> {
    h.apply(PixelPoint::new(frame_w as f64 / 2.0, frame_h as f64 / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn pt(x: f64, y: f64) -> PixelPoint {
        PixelPoint::new(x, y)
    }

    /// Random homography composed from a similarity, a shear and a bounded
    /// perspective term, expressed about `center`.
    pub(crate) fn random_h(rng: &mut impl Rng, center: f64) -> Homography {
        let theta: f64 = rng.random_range(-0.6..0.6);
        let s: f64 = rng.random_range(0.7..1.4);
        let shear: f64 = rng.random_range(-0.1..0.1);
        let (tx, ty) = (rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
        let (p1, p2) = (rng.random_range(-4e-4..4e-4), rng.random_range(-4e-4..4e-4));
        let (c, sn) = (theta.cos() * s, theta.sin() * s);
        let a = Matrix3::new(c, -sn + shear, tx, sn, c, ty, p1, p2, 1.0);
        let to = Matrix3::new(1.0, 0.0, center, 0.0, 1.0, center, 0.0, 0.0, 1.0);
        let from = Matrix3::new(1.0, 0.0, -center, 0.0, 1.0, -center, 0.0, 0.0, 1.0);
        Homography::new(to * a * from).unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(Homography::identity().apply(pt(7.0, 11.0)).unwrap(), pt(7.0, 11.0));
        assert_eq!(
            Homography::translation(5.0, -3.0).apply(pt(10.0, 10.0)).unwrap(),
            pt(15.0, 7.0)
        );
        let h = Homography::from_rows([1.2, 0.1, 3.0, 0.0, 1.0, 0.0, 0.001, 0.0, 1.0]).unwrap();
        let p = h.apply(pt(100.0, 0.0)).unwrap();
        assert!((p.x - (1.2 * 100.0 + 3.0) / 1.1).abs() < 1e-12);
        assert!(p.y.abs() < 1e-12);
        let h = Homography::from_rows([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -0.01, 0.0, 1.0]).unwrap();
        assert!(matches!(h.apply(pt(100.0, 5.0)), Err(Error::ProjectionAtInfinity)));
    }

    #[test]
    fn rows_normalize_h22() {
        let h = Homography::from_rows([2.0, 0.0, 4.0, 0.0, 2.0, 6.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(h.to_rows(), [1.0, 0.0, 2.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            Homography::from_rows([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]),
            Err(Error::Normalization)
        ));
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, "[1.0,0.0,2.0,0.0,1.0,3.0,0.0,0.0,1.0]");
        let back: Homography = serde_json::from_str("[2,0,4,0,2,6,0,0,2]").unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn dlt_recovers_four_point_homography() {
        let h = Homography::from_rows([0.9, -0.2, 30.0, 0.15, 1.1, -12.0, 2e-4, -1e-4, 1.0]).unwrap();
        let src = [pt(0.0, 0.0), pt(400.0, 10.0), pt(390.0, 380.0), pt(-5.0, 410.0)];
        let dst: Vec<_> = src.iter().map(|&p| h.apply(p).unwrap()).collect();
        let fit = dlt_fit(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            assert!(fit.apply(*s).unwrap().distance(d) < 1e-6);
        }
    }

    #[test]
    fn dlt_identity_and_degeneracy() {
        let src = [pt(1.0, 2.0), pt(50.0, 3.0), pt(40.0, 70.0), pt(-8.0, 33.0), pt(9.0, 9.0)];
        let fit = dlt_fit(&src, &src).unwrap();
        for (a, b) in fit.to_rows().iter().zip(Homography::identity().to_rows()) {
            assert!((a - b).abs() < 1e-9);
        }
        let line = [pt(0.0, 0.0), pt(1.0, 1.0), pt(2.0, 2.0), pt(5.0, 5.0)];
        let other = [pt(0.0, 0.0), pt(3.0, 1.0), pt(2.0, 7.0), pt(5.0, 5.0)];
        assert!(matches!(dlt_fit(&line, &other), Err(Error::Degenerate(_))));
        assert!(matches!(dlt_fit(&line[..3], &other[..3]), Err(Error::InsufficientMatches(3))));
    }

    #[test]
    fn ransac_exact_matches_all_inliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_h(&mut rng, 200.0);
        let src: Vec<_> = (0..60)
            .map(|_| pt(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)))
            .collect();
        let dst: Vec<_> = src.iter().map(|&p| h.apply(p).unwrap()).collect();
        let fit = ransac_fit_points(&src, &dst, &RansacConfig::default()).unwrap();
        assert_eq!(fit.inlier_count(), 60);
        for (s, d) in src.iter().zip(&dst) {
            assert!(fit.homography.apply(*s).unwrap().distance(d) < 1e-6);
        }
    }

    #[test]
    fn ransac_errors() {
        let src = [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)];
        assert!(matches!(
            ransac_fit_points(&src, &src, &RansacConfig::default()),
            Err(Error::InsufficientMatches(3))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src: Vec<_> = (0..40)
            .map(|_| pt(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)))
            .collect();
        let dst: Vec<_> = (0..40)
            .map(|_| pt(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)))
            .collect();
        assert!(matches!(
            ransac_fit_points(&src, &dst, &RansacConfig { iterations: 200, ..Default::default() }),
            Err(Error::NoConsensus { .. })
        ));
    }

    #[test]
    fn ransac_robust_to_outliers_monte_carlo() {
        // 100 noisy inliers + 100 uniform outliers; the consensus set must
        // contain at least 95% of the true inliers in at least 95 of 100 seeds.
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut good_trials = 0;
        for trial in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let h = random_h(&mut rng, 250.0);
            let mut src = Vec::new();
            let mut dst = Vec::new();
            for _ in 0..100 {
                let s = pt(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0));
                let d = h.apply(s).unwrap();
                src.push(s);
                dst.push(pt(d.x + noise.sample(&mut rng), d.y + noise.sample(&mut rng)));
            }
            for _ in 0..100 {
                src.push(pt(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)));
                dst.push(pt(rng.random_range(-100.0..600.0), rng.random_range(-100.0..600.0)));
            }
            let cfg = RansacConfig { iterations: 1000, seed: trial, ..Default::default() };
            let fit = ransac_fit_points(&src, &dst, &cfg).unwrap();
            let kept = fit.inliers[..100].iter().filter(|&&b| b).count();
            if kept >= 95 {
                good_trials += 1;
            }
        }
        assert!(good_trials >= 95, "{good_trials}/100");
    }

    #[test]
    fn ransac_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_h(&mut rng, 200.0);
        let src: Vec<_> = (0..80)
            .map(|_| pt(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)))
            .collect();
        let dst: Vec<_> = src
            .iter()
            .enumerate()
            .map(|(i, &p)| if i % 3 == 0 { pt(p.y, p.x) } else { h.apply(p).unwrap() })
            .collect();
        let cfg = RansacConfig { seed: 99, ..Default::default() };
        let a = ransac_fit_points(&src, &dst, &cfg).unwrap();
        let b = ransac_fit_points(&src, &dst, &cfg).unwrap();
        assert_eq!(a.homography.to_rows().map(f64::to_bits), b.homography.to_rows().map(f64::to_bits));
        assert_eq!(a.inliers, b.inliers);
    }

    #[test]
    fn center_projection() {
        assert_eq!(project_center(&Homography::identity(), 640, 480).unwrap(), pt(320.0, 240.0));
        assert_eq!(
            project_center(&Homography::translation(100.0, 50.0), 640, 480).unwrap(),
            pt(420.0, 290.0)
        );
    }

    proptest! {
        #[test]
        fn dlt_reproduces_exact_correspondences(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_h(&mut rng, 250.0);
            let src: Vec<_> = (0..8)
                .map(|_| pt(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)))
                .collect();
            let dst: Vec<_> = src.iter().map(|&p| h.apply(p).unwrap()).collect();
            let fit = dlt_fit(&src, &dst).unwrap();
            for (s, d) in src.iter().zip(&dst) {
                prop_assert!(fit.apply(*s).unwrap().distance(d) < 1e-6);
            }
        }

        #[test]
        fn dlt_consistent_under_similarity_pretransform(seed in any::<u64>()) {
            // Fitting (S1 x -> S2 H x) must give S2 H S1^-1.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_h(&mut rng, 250.0);
            let sim = |rng: &mut ChaCha8Rng| {
                let (t, s) = (rng.random_range(-3.0..3.0f64), rng.random_range(0.2..5.0f64));
                Homography::from_rows([s * t.cos(), -s * t.sin(), rng.random_range(-1e3..1e3),
                                       s * t.sin(), s * t.cos(), rng.random_range(-1e3..1e3),
                                       0.0, 0.0, 1.0]).unwrap()
            };
            let (s1, s2) = (sim(&mut rng), sim(&mut rng));
            let src: Vec<_> = (0..8)
                .map(|_| pt(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)))
                .collect();
            let a: Vec<_> = src.iter().map(|&p| s1.apply(p).unwrap()).collect();
            let b: Vec<_> = src.iter().map(|&p| s2.apply(h.apply(p).unwrap()).unwrap()).collect();
            let fit = dlt_fit(&a, &b).unwrap();
            let expect = s2.compose(&h).unwrap().compose(&s1.inverse().unwrap()).unwrap();
            for p in &a {
                prop_assert!(fit.apply(*p).unwrap().distance(&expect.apply(*p).unwrap()) < 1e-6);
            }
        }

        #[test]
        fn inverse_round_trip(seed in any::<u64>(), x in 0.0f64..500.0, y in 0.0f64..500.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_h(&mut rng, 250.0);
            let p = pt(x, y);
            let back = h.inverse().unwrap().apply(h.apply(p).unwrap()).unwrap();
            prop_assert!(back.distance(&p) < 1e-9);
        }
    }
}
