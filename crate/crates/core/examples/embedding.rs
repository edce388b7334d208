//! Global descriptors: GeM pooling, normalization, triplet loss and
//! importing externally computed embeddings.
//!
//! cargo run --example embedding

use ortholoc::embedding::{
    dense_features, embed, gem_pool, import_embedding, l2_normalize, triplet_loss, DenseFeatureMap,
    EmbeddingConfig, TripletExample,
};
use ortholoc::raster::Raster;
use ortholoc::tbf::Tensor;

fn main() -> ortholoc::Result<()> {
    let fmap = DenseFeatureMap::new(2, 1, 4, vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 8.0])?;
    for p in [1.0, 3.0, 10.0, 100.0] {
        println!("GeM p={p:<5} -> {:?}", gem_pool(&fmap, p)?.as_slice());
    }

    let cfg = EmbeddingConfig::default();
    let stripes = Raster::from_fn(128, 128, |x, _| ((x / 6) % 2) as f32);
    let rings = Raster::from_fn(128, 128, |x, y| {
        let r = ((x as f32 - 64.0).hypot(y as f32 - 64.0) / 5.0) as usize;
        (r % 2) as f32
    });
    let shifted = Raster::from_fn(128, 128, |x, _| (((x + 3) / 6) % 2) as f32);
    let f = dense_features(&stripes, &cfg)?;
    println!("dense features: {} channels on a {}x{} grid", f.channels(), f.height(), f.width());

    let (q, pos, neg) = (embed(&stripes, &cfg)?, embed(&shifted, &cfg)?, embed(&rings, &cfg)?);
    println!("d(stripes, shifted) = {:.4}", q.distance(&pos)?);
    println!("d(stripes, rings)   = {:.4}", q.distance(&neg)?);
    let t = TripletExample { query: q, positive: pos, negative: neg };
    println!("triplet loss (delta 0.5) = {:.4}", triplet_loss(&t, 0.5)?);

    let dir = tempfile_dir();
    let path = dir.join("query.tbf");
    Tensor::new(vec![4], vec![3.0, 0.0, 4.0, 0.0])?.write(&path)?;
    let imported = l2_normalize(&import_embedding(&path)?)?;
    println!("imported and normalized: {:?}", imported.as_slice());
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join("ortholoc-embedding-example");
    std::fs::create_dir_all(&d).expect("temp dir");
    d
}
