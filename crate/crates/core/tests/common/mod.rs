#![allow(dead_code)]

use ortholoc::keypoints::{Descriptors, Keypoint};
use ortholoc::retrieval::RetrievalIndex;
use ortholoc::synthgen::{generate_scene, SceneSpec, SyntheticScene};
use ortholoc::tiler::{make_tiles, TileSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Matcher written from the textual rules, on integer-valued descriptors so
/// that squared distances are exact. `ratio_sq` is the squared ratio as a
/// fraction `num / den`.
pub fn brute_force_match(
    a: &[Vec<i64>],
    b: &[Vec<i64>],
    ratio_sq: (i64, i64),
    mutual: bool,
) -> Vec<(usize, usize)> {
    let sq = |x: &[i64], y: &[i64]| -> i64 { x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum() };
    let d: Vec<Vec<i64>> = a.iter().map(|x| b.iter().map(|y| sq(x, y)).collect()).collect();
    let mut proposals: Vec<(usize, usize, i64)> = Vec::new();
    for (i, row) in d.iter().enumerate() {
        let mut order: Vec<usize> = (0..b.len()).collect();
        order.sort_by_key(|&j| (row[j], j));
        let j = order[0];
        if b.len() >= 2 {
            let (d1, d2) = (row[j], row[order[1]]);
            if d1 * ratio_sq.1 > ratio_sq.0 * d2 {
                continue;
            }
        }
        if mutual {
            let back = (0..a.len()).min_by_key(|&k| (d[k][j], k)).unwrap();
            if back != i {
                continue;
            }
        }
        proposals.push((i, j, row[j]));
    }
    let mut kept: Vec<(usize, usize, i64)> = Vec::new();
    for &(i, j, dist) in &proposals {
        let best = proposals
            .iter()
            .filter(|p| p.1 == j)
            .min_by_key(|p| (p.2, p.0))
            .unwrap();
        if best.0 == i {
            kept.push((i, j, dist));
        }
    }
    kept.sort_by_key(|&(i, _, dist)| (dist, i));
    kept.into_iter().map(|(i, j, _)| (i, j)).collect()
}

pub fn int_descriptors(rng: &mut impl Rng, n: usize, dim: usize, levels: i64) -> Vec<Vec<i64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(0..levels)).collect())
        .collect()
}

pub fn to_descriptors(v: &[Vec<i64>], dim: usize) -> Descriptors {
    let data = v.iter().flatten().map(|&x| x as f32).collect();
    Descriptors::new(dim, data).unwrap()
}

pub fn dummy_points(n: usize) -> Vec<Keypoint> {
    (0..n)
        .map(|i| Keypoint { x: i as f64, y: 0.0, score: 1.0 })
        .collect()
}

/// Exhaustive nearest-tile scan on integer embeddings: `(tile_id, squared
/// distance)` in ascending order, degenerate tiles skipped.
pub fn brute_force_retrieve(entries: &[Option<Vec<i64>>], q: &[i64], k: usize) -> Vec<(usize, i64)> {
    let mut all: Vec<(usize, i64)> = entries
        .iter()
        .enumerate()
        .filter_map(|(id, e)| {
            e.as_ref()
                .map(|e| (id, e.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()))
        })
        .collect();
    all.sort_by_key(|&(id, d)| (d, id));
    all.truncate(k);
    all
}

/// A strip map cut into `n` tiles of 8 px each.
pub fn strip_tiles(n: usize) -> (ortholoc::geo_ref::GeoRefMap, TileSet) {
    use ortholoc::geo_ref::{GeoPoint, GeoRefMap};
    use ortholoc::raster::Raster;
    let map = GeoRefMap::new(
        Raster::from_fn(8 * n, 8, |x, y| ((x * 7 + y * 3) % 11) as f32 / 10.0),
        GeoPoint::new(0.0, 0.0).unwrap(),
        GeoPoint::new(0.0001, 0.0001 * n as f64).unwrap(),
    )
    .unwrap();
    let tiles = make_tiles(&map, 8, 8).unwrap();
    assert_eq!(tiles.len(), n);
    (map, tiles)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A 1000 px scene with a handful of frames; big enough for the whole
/// pipeline, small enough to localize repeatedly.
pub fn small_spec() -> SceneSpec {
    SceneSpec {
        map_size: 1000,
        n_frames: 6,
        seed: 11,
        ..SceneSpec::default()
    }
}

pub struct Fixture {
    pub scene: SyntheticScene,
    pub tiles: TileSet,
    pub index: RetrievalIndex,
}

pub fn fixture(spec: &SceneSpec) -> Fixture {
    let scene = generate_scene(spec).unwrap();
    let tiles = make_tiles(&scene.map, 500, 250).unwrap();
    let index = RetrievalIndex::build(&tiles, &scene.map, &Default::default()).unwrap();
    Fixture { scene, tiles, index }
}
