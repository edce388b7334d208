//! Fit homographies from exact and contaminated correspondences and
//! project a frame center.
//!
//! cargo run --example homography

use ortholoc::geo_ref::PixelPoint;
use ortholoc::homography::{dlt_fit, project_center, ransac_fit_points, Homography, RansacConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ortholoc::Result<()> {
    let truth = Homography::from_rows([0.98, -0.17, 40.0, 0.17, 0.98, -12.0, 1e-4, -5e-5, 1.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let src: Vec<PixelPoint> = (0..8)
        .map(|_| PixelPoint::new(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)))
        .collect();
    let dst: Vec<PixelPoint> = src.iter().map(|&p| truth.apply(p)).collect::<Result<_, _>>()?;
    let h = dlt_fit(&src, &dst)?;
    let worst = src.iter().zip(&dst).map(|(s, d)| h.residual(*s, *d)).fold(0.0, f64::max);
    println!("DLT from 8 exact pairs: max residual {worst:.2e} px");
    println!("  recovered {:?}", h.to_rows());

    // 100 noisy inliers plus 100 random outliers.
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for i in 0..200 {
        let p = PixelPoint::new(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0));
        let q = if i < 100 {
            let t = truth.apply(p)?;
            PixelPoint::new(t.x + rng.random_range(-0.5..0.5), t.y + rng.random_range(-0.5..0.5))
        } else {
            PixelPoint::new(rng.random_range(0.0..450.0), rng.random_range(0.0..450.0))
        };
        src.push(p);
        dst.push(q);
    }
    let fit = ransac_fit_points(&src, &dst, &RansacConfig { seed: 5, ..RansacConfig::default() })?;
    println!("RANSAC: {} inliers of 200", fit.inlier_count());
    let c = project_center(&fit.homography, 400, 400)?;
    let t = project_center(&truth, 400, 400)?;
    println!("frame center -> ({:.3}, {:.3}); truth ({:.3}, {:.3})", c.x, c.y, t.x, t.y);
    println!("as JSON: {}", serde_json::to_string(&fit.homography)?);
    Ok(())
}
