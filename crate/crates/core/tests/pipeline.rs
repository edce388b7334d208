mod common;

use std::sync::OnceLock;

use common::*;
use ortholoc::geo_ref::{geo_distance_m, GeoPoint, GeoRefMap};
use ortholoc::pipeline::{localize_frame, run_flight, LocalizationResult, LocalizerConfig, MapContext, QueryFrame, Status};
use ortholoc::raster::Raster;
use ortholoc::retrieval::RetrievalIndex;
use ortholoc::synthgen::{generate_map, SceneSpec};
use ortholoc::tiler::make_tiles;

fn shared() -> &'static (Fixture, Vec<LocalizationResult>) {
    static F: OnceLock<(Fixture, Vec<LocalizationResult>)> = OnceLock::new();
    F.get_or_init(|| {
        let f = fixture(&small_spec());
        let log = run_flight(&f.scene.frames, ctx(&f), &LocalizerConfig::default(), 1).unwrap();
        (f, log.results)
    })
}

fn ctx(f: &Fixture) -> MapContext<'_> {
    MapContext { index: &f.index, tiles: &f.tiles, map: &f.scene.map }
}

fn untimed(mut r: Vec<LocalizationResult>) -> Vec<LocalizationResult> {
    for x in &mut r {
        x.elapsed_s = 0.0;
    }
    r
}

#[test]
fn flight_localizes_and_keeps_ids() {
    let (f, results) = shared();
    assert_eq!(results.len(), f.scene.frames.len());
    for (i, r) in results.iter().enumerate() {
        assert_eq!(r.frame_id, i);
        assert_eq!(r.status == Status::Ok, r.predicted.is_some());
        assert_eq!(r.error_m.is_some(), r.predicted.is_some() && r.truth.is_some());
    }
    let ok = results.iter().filter(|r| r.is_ok()).count();
    assert!(ok * 10 >= results.len() * 8, "{ok}/{} ok", results.len());
}

#[test]
fn frame_order_does_not_matter() {
    let (f, results) = shared();
    let mut rev = f.scene.frames.clone();
    rev.reverse();
    let again = run_flight(&rev, ctx(f), &LocalizerConfig::default(), 2).unwrap();
    assert_eq!(untimed(again.results), untimed(results.clone()));
    let single: Vec<_> = rev
        .iter()
        .map(|fr| localize_frame(fr, ctx(f), &LocalizerConfig::default()).unwrap())
        .rev()
        .collect();
    assert_eq!(untimed(single), untimed(results.clone()));
}

#[test]
fn geo_error_is_bounded_by_pixel_error() {
    let (f, results) = shared();
    let rho = f.scene.spec.resolution;
    for r in results.iter().filter(|r| r.is_ok()) {
        let px_err = r.predicted_px.unwrap().distance(&f.scene.centers[r.frame_id]);
        let e = r.error_m.unwrap();
        assert!(e <= rho * px_err * (1.0 + 1e-6) + 1e-9, "frame {}: {e} m vs {px_err} px", r.frame_id);
    }
}

#[test]
fn global_search_dominates_retrieval() {
    let (f, results) = shared();
    let all = LocalizerConfig { k: f.tiles.len(), ..LocalizerConfig::default() };
    for (fr, narrow) in f.scene.frames.iter().zip(results) {
        let wide = localize_frame(fr, ctx(f), &all).unwrap();
        assert!(wide.inliers >= narrow.inliers, "frame {}: {} < {}", fr.id, wide.inliers, narrow.inliers);
    }
}

#[test]
fn black_frame_has_no_consensus() {
    let (f, _) = shared();
    let frame = QueryFrame { id: 0, image: Raster::new(400, 400), truth: None, embedding: None };
    let r = localize_frame(&frame, ctx(f), &LocalizerConfig::default()).unwrap();
    assert_eq!(r.status, Status::NoConsensus);
    assert!(r.predicted.is_none() && r.error_m.is_none());
}

#[test]
fn exact_crop_is_localized_within_a_pixel() {
    let (f, _) = shared();
    let map = &f.scene.map;
    let (x0, y0) = (330, 410);
    let image = map.raster().crop(x0, y0, 400, 400).unwrap();
    let truth = map
        .pixel_to_geo(ortholoc::geo_ref::PixelPoint::new(x0 as f64 + 200.0, y0 as f64 + 200.0))
        .unwrap();
    let frame = QueryFrame { id: 3, image, truth: Some(truth), embedding: None };
    let r = localize_frame(&frame, ctx(f), &LocalizerConfig::default()).unwrap();
    assert_eq!(r.status, Status::Ok);
    assert!(r.error_m.unwrap() <= f.scene.spec.resolution, "{:?}", r.error_m);
}

#[test]
fn planted_tile_wins_among_noise() {
    // Six 500 px tiles; tile 4 carries real texture, the rest are white noise.
    let textured = generate_map(&SceneSpec { map_size: 500, seed: 8, ..SceneSpec::default() }).unwrap();
    let mut g = rng(3);
    let raster = Raster::from_fn(1500, 1000, |x, y| {
        if (500..1000).contains(&x) && y >= 500 {
            textured.raster().get(x - 500, y - 500)
        } else {
            rand::Rng::random::<f32>(&mut g)
        }
    });
    let map = GeoRefMap::new(raster, GeoPoint::new(0.0, 0.0).unwrap(), GeoPoint::new(0.009, 0.0135).unwrap()).unwrap();
    let tiles = make_tiles(&map, 500, 500).unwrap();
    assert_eq!(tiles.len(), 6);
    let index = RetrievalIndex::build(&tiles, &map, &Default::default()).unwrap();
    let frame = QueryFrame {
        id: 0,
        image: map.raster().crop(550, 560, 400, 400).unwrap(),
        truth: None,
        embedding: None,
    };
    let cfg = LocalizerConfig { k: 6, ..LocalizerConfig::default() };
    let r = localize_frame(&frame, MapContext { index: &index, tiles: &tiles, map: &map }, &cfg).unwrap();
    assert_eq!(r.status, Status::Ok);
    assert_eq!(r.tile_id, Some(4));
    let expected = map.pixel_to_geo(ortholoc::geo_ref::PixelPoint::new(750.0, 760.0)).unwrap();
    assert!(geo_distance_m(r.predicted.unwrap(), expected) < 0.5);
}
