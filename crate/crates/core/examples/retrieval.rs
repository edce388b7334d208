//! Build a global-descriptor index over map tiles and retrieve candidate
//! tiles for aerial frames.
//!
//! cargo run --release --example retrieval

use ortholoc::embedding::{embed, EmbeddingConfig};
use ortholoc::retrieval::{recall_at_k, RetrievalIndex};
use ortholoc::synthgen::{generate_scene, SceneSpec};
use ortholoc::tiler::make_tiles;

fn main() -> ortholoc::Result<()> {
    let scene = generate_scene(&SceneSpec { n_frames: 10, ..SceneSpec::default() })?;
    let tiles = make_tiles(&scene.map, 500, 250)?;
    let cfg = EmbeddingConfig::default();
    let index = RetrievalIndex::build(&tiles, &scene.map, &cfg)?;
    println!("indexed {} tiles, {}-d descriptors [{}]", index.len(), index.dim(), index.fingerprint());

    let mut results = Vec::new();
    let mut truth = Vec::new();
    for (frame, center) in scene.frames.iter().zip(&scene.centers) {
        let q = embed(&frame.image, &cfg)?;
        let cands = index.retrieve(&q, &cfg.fingerprint(), 5)?;
        let expected = tiles.containing(*center);
        let ranked: Vec<String> = cands
            .iter()
            .map(|c| format!("{}({:.3})", c.tile_id, c.distance))
            .collect();
        println!("frame {:2}: true tiles {:?} top-5 {}", frame.id, expected, ranked.join(" "));
        results.push(cands);
        truth.push(expected);
    }
    for k in [1, 3, 5] {
        println!("recall@{k} = {:.2}", recall_at_k(&results, &truth, k)?);
    }
    Ok(())
}
