//! Cut a geo-referenced map into overlapping tiles and convert between
//! pixel and geodetic coordinates.
//!
//! cargo run --example tiling

use ortholoc::geo_ref::{geo_distance_m, GeoPoint, GeoRefMap, PixelPoint};
use ortholoc::raster::Raster;
use ortholoc::tiler::{make_tiles, tile_pixel_to_map_pixel, TileManifest};

fn main() -> ortholoc::Result<()> {
    // 1200 x 800 px at roughly 0.5 m/px near Zurich.
    let raster = Raster::from_fn(1200, 800, |x, y| ((x / 40 + y / 40) % 2) as f32);
    let map = GeoRefMap::new(
        raster,
        GeoPoint::new(47.3700, 8.5400)?,
        GeoPoint::new(47.3736, 8.5480)?,
    )?;
    let (mx, my) = map.meters_per_pixel();
    println!("map {}x{} px, {mx:.3} x {my:.3} m/px", map.width_px(), map.height_px());

    let tiles = make_tiles(&map, 500, 250)?;
    println!("{} tiles of 500 px, stride 250:", tiles.len());
    for t in &tiles.tiles {
        println!(
            "  tile {:2} origin ({:4}, {:4}) center {:.6}, {:.6}",
            t.id, t.origin.x, t.origin.y, t.geo_center.lat, t.geo_center.lon
        );
    }

    // A point seen at (120, 340) inside tile 4 is a map pixel, then a GeoPoint.
    let tile = &tiles.tiles[4];
    let map_px = tile_pixel_to_map_pixel(tile, PixelPoint::new(120.0, 340.0));
    let geo = map.pixel_to_geo(map_px)?;
    let back = map.geo_to_pixel(geo)?;
    println!(
        "tile 4 (120, 340) -> map ({}, {}) -> {:.7}, {:.7} -> map ({:.6}, {:.6})",
        map_px.x, map_px.y, geo.lat, geo.lon, back.x, back.y
    );
    println!("tiles containing it: {:?}", tiles.containing(map_px));
    println!(
        "distance to map center: {:.1} m",
        geo_distance_m(geo, map.pixel_to_geo(PixelPoint::new(600.0, 400.0))?)
    );

    let manifest = TileManifest::new(&tiles, &map, None);
    println!("manifest map_ref {}", manifest.map_ref);
    Ok(())
}
