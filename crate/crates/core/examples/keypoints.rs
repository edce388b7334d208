//! Decode network-style keypoint scores and descriptor grids, evaluate the
//! training losses, and run the built-in corner detector.
//!
//! cargo run --example keypoints

use ortholoc::homography::Homography;
use ortholoc::keypoints::{
    builtin_detect, decode_heatmap, descriptor_loss, extract_keypoints, keypoint_loss,
    make_training_pair, sample_descriptors, CoarseDescriptorGrid, CorrespondenceLabels,
    DescriptorLossConfig, DetectorConfig, ExtractParams, ScoreTensor, WarpParams, SCORE_CHANNELS,
};
use ortholoc::raster::Raster;

fn main() -> ortholoc::Result<()> {
    // A 4x4-cell score tensor: every cell prefers its dustbin except two
    // cells with a confident keypoint.
    let (hc, wc) = (4, 4);
    let mut logits = vec![0.0; hc * wc * SCORE_CHANNELS];
    for cell in logits.chunks_mut(SCORE_CHANNELS) {
        cell[64] = 6.0;
    }
    logits[(hc + 1) * SCORE_CHANNELS + 27] = 12.0; // cell (1, 1), pixel (3, 3)
    logits[(2 * wc + 3) * SCORE_CHANNELS + 8] = 10.0; // cell (2, 3), pixel (0, 1)
    let scores = ScoreTensor::new(hc, wc, logits)?;
    let heat = decode_heatmap(&scores)?;
    let pts = extract_keypoints(&heat, &ExtractParams::default())?;
    println!("decoded {} keypoints: {:?}", pts.len(), pts);

    let mut labels = vec![64; hc * wc];
    labels[hc + 1] = 27;
    labels[2 * wc + 3] = 8;
    println!("keypoint loss {:.5}", keypoint_loss(&scores, &labels)?);

    let grid = CoarseDescriptorGrid::new(
        hc,
        wc,
        3,
        (0..hc * wc).flat_map(|i| [1.0, i as f64 * 0.1, 0.5]).collect(),
    )?;
    let sampled = sample_descriptors(&grid, &pts)?;
    for (p, d) in pts.iter().zip(sampled.descriptors.iter()) {
        println!("  descriptor at ({}, {}) = {:?}", p.x, p.y, d);
    }
    let s = CorrespondenceLabels::from_homography(hc, wc, &Homography::identity())?;
    println!(
        "descriptor loss against itself {:.4}",
        descriptor_loss(&grid, &grid, &s, &DescriptorLossConfig::default())?
    );

    // Built-in detector on a textured image and its warped copy.
    let img = Raster::from_fn(160, 160, |x, y| {
        let (x, y) = (x as f32, y as f32);
        0.5 + 0.25 * (x * 0.21).sin() * (y * 0.17).cos() + 0.2 * ((x + 2.0 * y) * 0.05).sin()
    });
    let (kp, desc) = builtin_detect(&img, &DetectorConfig::default())?;
    println!("built-in detector: {} keypoints, {}-d descriptors", kp.len(), desc.dim());
    let pair = make_training_pair(&img, &WarpParams::default(), 7)?;
    let (kp2, _) = builtin_detect(&pair.warped, &DetectorConfig::default())?;
    println!("warped copy: {} keypoints, true H {:?}", kp2.len(), pair.homography.to_rows());
    Ok(())
}
