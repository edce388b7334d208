//! Geo-referencing of north-up ortho rasters: linear pixel <-> geodetic
//! mapping between the lower-left and upper-right corners, plus a
//! small-distance metric in meters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Mean Earth radius used for metric distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    /// Degrees, positive north.
    pub lat: f64,
    /// Degrees, positive east.
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Range(format!("invalid geo point ({lat}, {lon})")));
        }
        Ok(Self { lat, lon })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Contents of the `geo.json` sidecar that accompanies every map raster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoSidecar {
    pub ll: GeoPoint,
    pub ur: GeoPoint,
    pub width_px: usize,
    pub height_px: usize,
}

impl GeoSidecar {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {}", path.display(), e),
            ))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// A north-up geo-referenced grayscale map.
#[derive(Clone, Debug)]
pub struct GeoRefMap {
    ll: GeoPoint,
    ur: GeoPoint,
    raster: Raster,
}

impl GeoRefMap {
    pub fn new(raster: Raster, ll: GeoPoint, ur: GeoPoint) -> Result<Self> {
        if raster.width() == 0 || raster.height() == 0 {
            return Err(Error::Config("map raster is empty".into()));
        }
        GeoPoint::new(ll.lat, ll.lon)?;
        GeoPoint::new(ur.lat, ur.lon)?;
        if !(ur.lat > ll.lat && ur.lon > ll.lon) {
            return Err(Error::Config(format!(
                "upper-right corner ({}, {}) must lie north-east of lower-left ({}, {})",
                ur.lat, ur.lon, ll.lat, ll.lon
            )));
        }
        Ok(Self { ll, ur, raster })
    }

    pub fn from_sidecar(raster: Raster, geo: &GeoSidecar) -> Result<Self> {
        if raster.width() != geo.width_px || raster.height() != geo.height_px {
            return Err(Error::Shape(format!(
                "raster is {}x{} but sidecar declares {}x{}",
                raster.width(),
                raster.height(),
                geo.width_px,
                geo.height_px
            )));
        }
        Self::new(raster, geo.ll, geo.ur)
    }

    /// Loads a PGM/PPM raster together with its `geo.json` sidecar.
    pub fn load(raster_path: impl AsRef<Path>, geo_path: impl AsRef<Path>) -> Result<Self> {
        let geo = GeoSidecar::load(geo_path)?;
        let raster = Raster::load_pnm(raster_path)?;
        Self::from_sidecar(raster, &geo)
    }

    pub fn sidecar(&self) -> GeoSidecar {
        GeoSidecar {
            ll: self.ll,
            ur: self.ur,
            width_px: self.width_px(),
            height_px: self.height_px(),
        }
    }

    pub fn width_px(&self) -> usize {
        self.raster.width()
    }

    pub fn height_px(&self) -> usize {
        self.raster.height()
    }

    pub fn ll(&self) -> GeoPoint {
        self.ll
    }

    pub fn ur(&self) -> GeoPoint {
        self.ur
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    /// Geodetic position of a continuous pixel coordinate. Pixel `(0, 0)` is
    /// the north-west corner `(ur.lat, ll.lon)`.
    pub fn pixel_to_geo(&self, p: PixelPoint) -> Result<GeoPoint> {
        let (w, h) = (self.width_px() as f64, self.height_px() as f64);
        if !(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h) {
            return Err(Error::Range(format!(
                "pixel ({}, {}) outside map {}x{}",
                p.x, p.y, w, h
            )));
        }
        Ok(GeoPoint {
            lat: self.ur.lat - (p.y / h) * (self.ur.lat - self.ll.lat),
            lon: self.ll.lon + (p.x / w) * (self.ur.lon - self.ll.lon),
        })
    }

    pub fn geo_to_pixel(&self, g: GeoPoint) -> Result<PixelPoint> {
        let dlat = self.ur.lat - self.ll.lat;
        let dlon = self.ur.lon - self.ll.lon;
        // Allow for rounding in the forward mapping at the corners.
        let tol_lat = 1e-12 * dlat.abs().max(1.0);
        let tol_lon = 1e-12 * dlon.abs().max(1.0);
        if g.lat < self.ll.lat - tol_lat
            || g.lat > self.ur.lat + tol_lat
            || g.lon < self.ll.lon - tol_lon
            || g.lon > self.ur.lon + tol_lon
        {
            return Err(Error::Range(format!(
                "geo point ({}, {}) outside map bounds",
                g.lat, g.lon
            )));
        }
        Ok(PixelPoint {
            x: (g.lon - self.ll.lon) / dlon * self.width_px() as f64,
            y: (self.ur.lat - g.lat) / dlat * self.height_px() as f64,
        })
    }

    /// Approximate ground sampling distance along each axis, in meters per pixel.
    pub fn meters_per_pixel(&self) -> (f64, f64) {
        let mid = (self.ll.lat + self.ur.lat) / 2.0;
        let ew = geo_distance_m(
            GeoPoint { lat: mid, lon: self.ll.lon },
            GeoPoint { lat: mid, lon: self.ur.lon },
        ) / self.width_px() as f64;
        let ns = geo_distance_m(
            GeoPoint { lat: self.ll.lat, lon: self.ll.lon },
            GeoPoint { lat: self.ur.lat, lon: self.ll.lon },
        ) / self.height_px() as f64;
        (ew, ns)
    }
}

/// Equirectangular distance in meters, evaluated at the mean latitude.
pub fn geo_distance_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let phi_m = ((a.lat + b.lat) / 2.0).to_radians();
    EARTH_RADIUS_M * dphi.hypot(phi_m.cos() * dlambda)
}
