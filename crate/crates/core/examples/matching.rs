//! Match keypoints between a map patch and a warped view of it, then fit
//! a homography with RANSAC.
//!
//! cargo run --release --example matching

use ortholoc::geo_ref::PixelPoint;
use ortholoc::homography::{ransac_fit, RansacConfig};
use ortholoc::keypoints::{builtin_detect, make_training_pair, DetectorConfig, WarpParams};
use ortholoc::matching::{match_descriptors, MatchParams};
use ortholoc::synthgen::{generate_map, SceneSpec};

fn main() -> ortholoc::Result<()> {
    let map = generate_map(&SceneSpec { map_size: 800, ..SceneSpec::default() })?;
    let patch = map.raster().crop(200, 200, 320, 320)?;
    let pair = make_training_pair(&patch, &WarpParams { max_rotation_deg: 8.0, ..WarpParams::default() }, 3)?;

    let det = DetectorConfig::default();
    let (pa, da) = builtin_detect(&patch, &det)?;
    let (pb, db) = builtin_detect(&pair.warped, &det)?;
    for params in [
        MatchParams { ratio: 1.0, mutual: false },
        MatchParams { ratio: 1.0, mutual: true },
        MatchParams::default(),
    ] {
        let m = match_descriptors(&da, &pa, &db, &pb, &params)?;
        let correct = m
            .pairs
            .iter()
            .filter(|p| pair.homography.residual(p.query.point(), p.patch.point()) < 2.0)
            .count();
        println!(
            "ratio {:.1} mutual {:5}: {:4} matches, {:4} within 2 px of truth",
            params.ratio, params.mutual, m.len(), correct
        );
    }

    let matches = match_descriptors(&da, &pa, &db, &pb, &MatchParams::default())?;
    let fit = ransac_fit(&matches, &RansacConfig::default())?;
    println!("RANSAC: {} of {} matches are inliers", fit.inlier_count(), matches.len());
    let c = PixelPoint::new(160.0, 160.0);
    let est = fit.homography.apply(c)?;
    let truth = pair.homography.apply(c)?;
    println!("center maps to ({:.2}, {:.2}), truth ({:.2}, {:.2})", est.x, est.y, truth.x, truth.y);
    Ok(())
}
