//! Overlapping square tiling of a map. Every map pixel is covered by at
//! least one tile; the final tile on each axis is clamped to the map edge so
//! all tiles share one size.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geo_ref::{GeoPoint, GeoRefMap, GeoSidecar, PixelPoint};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileOrigin {
    pub x: usize,
    pub y: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub id: usize,
    pub origin: TileOrigin,
    pub width: usize,
    pub height: usize,
    pub geo_center: GeoPoint,
}

impl Tile {
    /// Whether a continuous map-pixel location falls inside the tile's
    /// footprint (edges inclusive).
    pub fn contains(&self, p: PixelPoint) -> bool {
        let (x0, y0) = (self.origin.x as f64, self.origin.y as f64);
        p.x >= x0 && p.x <= x0 + self.width as f64 && p.y >= y0 && p.y <= y0 + self.height as f64
    }

    /// Translates a tile-local pixel into the map frame. Points outside the
    /// tile extent are translated as well.
    pub fn to_map_pixel(&self, p: PixelPoint) -> PixelPoint {
        tile_pixel_to_map_pixel(self, p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileSet {
    pub tile_size: usize,
    pub stride: usize,
    /// Fingerprint of the source map (sidecar and pixels).
    pub map_ref: String,
    pub tiles: Vec<Tile>,
}

impl TileSet {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Tile> {
        self.tiles.get(id)
    }

    /// Ids of all tiles whose footprint contains `p`.
    pub fn containing(&self, p: PixelPoint) -> Vec<usize> {
        self.tiles
            .iter()
            .filter(|t| t.contains(p))
            .map(|t| t.id)
            .collect()
    }
}

/// Origins along one axis: multiples of `stride` that keep the tile inside
/// the map, plus `dim - tile` when the last stride step does not reach it.
pub fn axis_origins(dim: usize, tile: usize, stride: usize) -> Vec<usize> {
    let last = dim - tile;
    let mut origins: Vec<usize> = (0..=last).step_by(stride).collect();
    if origins.last() != Some(&last) {
        origins.push(last);
    }
    origins
}

pub fn make_tiles(map: &GeoRefMap, tile_size: usize, stride: usize) -> Result<TileSet> {
    let (w, h) = (map.width_px(), map.height_px());
    if tile_size == 0 || stride == 0 {
        return Err(Error::Config("tile size and stride must be positive".into()));
    }
    if stride > tile_size {
        return Err(Error::Config(format!(
            "stride {stride} exceeds tile size {tile_size}; tiles would leave gaps"
        )));
    }
    if tile_size > w.min(h) {
        return Err(Error::Config(format!(
            "tile size {tile_size} exceeds map dimension {}",
            w.min(h)
        )));
    }

    let xs = axis_origins(w, tile_size, stride);
    let ys = axis_origins(h, tile_size, stride);
    let mut tiles = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let center = PixelPoint::new(
                x as f64 + tile_size as f64 / 2.0,
                y as f64 + tile_size as f64 / 2.0,
            );
            tiles.push(Tile {
                id: tiles.len(),
                origin: TileOrigin { x, y },
                width: tile_size,
                height: tile_size,
                geo_center: map.pixel_to_geo(center)?,
            });
        }
    }
    Ok(TileSet {
        tile_size,
        stride,
        map_ref: map_fingerprint(map),
        tiles,
    })
}

pub fn crop(map: &GeoRefMap, tile: &Tile) -> Result<Raster> {
    map.raster()
        .crop(tile.origin.x, tile.origin.y, tile.width, tile.height)
}

pub fn tile_pixel_to_map_pixel(tile: &Tile, p: PixelPoint) -> PixelPoint {
    PixelPoint::new(p.x + tile.origin.x as f64, p.y + tile.origin.y as f64)
}

/// Short content hash of a map: sidecar plus quantized pixels.
pub fn map_fingerprint(map: &GeoRefMap) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&map.sidecar()).expect("sidecar serializes"));
    hasher.update(map.raster().to_u8());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// On-disk form of a tile set: `tiles/manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileManifest {
    pub tile_size: usize,
    pub stride: usize,
    pub map: GeoSidecar,
    pub map_ref: String,
    /// Raster the tiles were cut from, as given on the command line.
    pub map_path: Option<String>,
    pub tiles: Vec<Tile>,
}

impl TileManifest {
    pub fn new(set: &TileSet, map: &GeoRefMap, map_path: Option<String>) -> Self {
        Self {
            tile_size: set.tile_size,
            stride: set.stride,
            map: map.sidecar(),
            map_ref: set.map_ref.clone(),
            map_path,
            tiles: set.tiles.clone(),
        }
    }

    pub fn tile_set(&self) -> TileSet {
        TileSet {
            tile_size: self.tile_size,
            stride: self.stride,
            map_ref: self.map_ref.clone(),
            tiles: self.tiles.clone(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let manifest: TileManifest = serde_json::from_str(&text)?;
        for (i, t) in manifest.tiles.iter().enumerate() {
            if t.id != i {
                return Err(Error::format(
                    "tiles",
                    format!("tile at position {i} has id {}", t.id),
                ));
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
