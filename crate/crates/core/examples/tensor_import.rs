//! Exchange tensors with external networks through TBF files: keypoint
//! score tensors, descriptor grids and global embeddings.
//!
//! cargo run --example tensor_import

use ortholoc::keypoints::{decode_heatmap, extract_keypoints, import_tensors, sample_descriptors, ExtractParams};
use ortholoc::tbf::Tensor;

fn main() -> ortholoc::Result<()> {
    let dir = std::env::temp_dir().join("ortholoc-tensor-example");
    std::fs::create_dir_all(&dir)?;
    let (hc, wc, d) = (6, 8, 32);

    let mut scores = vec![0.0f32; hc * wc * 65];
    for (i, cell) in scores.chunks_mut(65).enumerate() {
        cell[64] = 4.0;
        if i % 5 == 0 {
            cell[i % 64] = 9.0;
        }
    }
    let desc: Vec<f32> = (0..hc * wc * d).map(|i| ((i * 37) % 101) as f32 / 101.0 - 0.5).collect();
    let (sp, dp) = (dir.join("scores.tbf"), dir.join("desc.tbf"));
    Tensor::new(vec![hc, wc, 65], scores)?.write(&sp)?;
    Tensor::new(vec![hc, wc, d], desc)?.write(&dp)?;
    println!("score file is {} bytes", std::fs::metadata(&sp)?.len());

    let (st, grid) = import_tensors(&sp, &dp)?;
    let pts = extract_keypoints(&decode_heatmap(&st)?, &ExtractParams::default())?;
    let s = sample_descriptors(&grid, &pts)?;
    println!("{} keypoints, {} descriptors of dim {}", pts.len(), s.descriptors.len(), s.descriptors.dim());

    Tensor::new(vec![hc, wc, 64], vec![0.0; hc * wc * 64])?.write(&sp)?;
    match import_tensors(&sp, &dp) {
        Err(e) => println!("missing dustbin channel rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
