//! End-to-end localization of query frames and flight-level metrics.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{embed, Embedding, EmbeddingConfig, Provider};
use crate::error::{Error, Result};
use crate::geo_ref::{geo_distance_m, GeoPoint, GeoRefMap, PixelPoint};
use crate::homography::{project_center, ransac_fit, Homography, RansacConfig};
use crate::keypoints::{builtin_detect, DetectorConfig};
use crate::matching::{match_descriptors, MatchParams};
use crate::raster::Raster;
use crate::retrieval::RetrievalIndex;
use crate::tiler::{crop, TileSet};

/// Mixes a global seed with an identifier (splitmix64 finalizer), so every
/// frame draws from its own stream regardless of processing order.
pub fn derive_seed(global: u64, id: u64) -> u64 {
    let mut z = global ^ id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryFrame {
    pub id: usize,
    pub image: Raster,
    pub truth: Option<GeoPoint>,
    /// Precomputed global descriptor, required when the index was built from
    /// imported embeddings.
    pub embedding: Option<Embedding>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizerConfig {
    /// Number of retrieved candidate tiles.
    pub k: usize,
    pub embedding: EmbeddingConfig,
    pub detector: DetectorConfig,
    pub matching: MatchParams,
    /// The `seed` field is replaced per frame and candidate.
    pub ransac: RansacConfig,
    pub min_final_inliers: usize,
    pub seed: u64,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        Self {
            k: 5,
            embedding: EmbeddingConfig::default(),
            detector: DetectorConfig::default(),
            matching: MatchParams::default(),
            ransac: RansacConfig::default(),
            min_final_inliers: 15,
            seed: 0,
        }
    }
}

impl LocalizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.embedding.validate()?;
        self.detector.validate()?;
        self.ransac.validate()?;
        if !(self.matching.ratio > 0.0 && self.matching.ratio <= 1.0) {
            return Err(Error::Config(format!(
                "ratio must be in (0, 1], got {}",
                self.matching.ratio
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoConsensus,
    NoCandidates,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NoConsensus => "no_consensus",
            Status::NoCandidates => "no_candidates",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Status::Ok),
            "no_consensus" => Ok(Status::NoConsensus),
            "no_candidates" => Ok(Status::NoCandidates),
            other => Err(Error::format("status", format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub frame_id: usize,
    pub status: Status,
    pub predicted: Option<GeoPoint>,
    pub truth: Option<GeoPoint>,
    pub tile_id: Option<usize>,
    pub inliers: usize,
    pub matches: usize,
    pub error_m: Option<f64>,
    pub elapsed_s: f64,
    /// Predicted map pixel; not part of the CSV log.
    #[serde(skip)]
    pub predicted_px: Option<PixelPoint>,
}

impl LocalizationResult {
    fn failed(frame: &QueryFrame, status: Status) -> Self {
        Self {
            frame_id: frame.id,
            status,
            predicted: None,
            truth: frame.truth,
            tile_id: None,
            inliers: 0,
            matches: 0,
            error_m: None,
            elapsed_s: 0.0,
            predicted_px: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlightLog {
    pub results: Vec<LocalizationResult>,
    pub config_fingerprint: String,
    pub seed: u64,
}

/// Everything a frame is localized against.
#[derive(Clone, Copy)]
pub struct MapContext<'a> {
    pub index: &'a RetrievalIndex,
    pub tiles: &'a TileSet,
    pub map: &'a GeoRefMap,
}

impl MapContext<'_> {
    pub fn check(&self, cfg: &LocalizerConfig) -> Result<()> {
        if self.tiles.len() != self.index.len() {
            return Err(Error::Incompatible(format!(
                "index has {} entries for {} tiles",
                self.index.len(),
                self.tiles.len()
            )));
        }
        if self.index.map_ref() != self.tiles.map_ref {
            return Err(Error::Incompatible("index and tiles come from different maps".into()));
        }
        if self.tiles.map_ref != crate::tiler::map_fingerprint(self.map) {
            return Err(Error::Incompatible("tiles were cut from a different map".into()));
        }
        self.index.check_fingerprint(&cfg.embedding.fingerprint())
    }
}

struct Best {
    tile_id: usize,
    inliers: usize,
    matches: usize,
    homography: Homography,
}

fn frame_embedding(frame: &QueryFrame, cfg: &EmbeddingConfig) -> Result<Option<Embedding>> {
    match (cfg.provider, &frame.embedding) {
        (Provider::Import, Some(e)) => Ok(Some(e.clone())),
        (Provider::Import, None) => Err(Error::Config(format!(
            "frame {} has no imported embedding",
            frame.id
        ))),
        (Provider::Builtin, _) => match embed(&frame.image, cfg) {
            Ok(e) => Ok(Some(e)),
            Err(Error::Degenerate(_)) => Ok(None),
            Err(e) => Err(e),
        },
    }
}

fn localize_inner(frame: &QueryFrame, ctx: MapContext<'_>, cfg: &LocalizerConfig) -> Result<LocalizationResult> {
    if ctx.index.entries().iter().all(|e| e.degenerate) {
        return Ok(LocalizationResult::failed(frame, Status::NoCandidates));
    }
    let Some(query) = frame_embedding(frame, &cfg.embedding)? else {
        return Ok(LocalizationResult::failed(frame, Status::NoConsensus));
    };
    let candidates = ctx.index.retrieve(&query, &cfg.embedding.fingerprint(), cfg.k)?;
    if candidates.is_empty() {
        return Ok(LocalizationResult::failed(frame, Status::NoCandidates));
    }
    let (frame_pts, frame_desc) = builtin_detect(&frame.image, &cfg.detector)?;
    if frame_pts.len() < 4 {
        return Ok(LocalizationResult::failed(frame, Status::NoConsensus));
    }

    let frame_seed = derive_seed(cfg.seed, frame.id as u64);
    let mut best: Option<Best> = None;
    let mut most_matches = 0;
    for cand in &candidates {
        let tile = ctx
            .tiles
            .get(cand.tile_id)
            .ok_or_else(|| Error::Internal(format!("index refers to missing tile {}", cand.tile_id)))?;
        let patch = crop(ctx.map, tile)?;
        let (tile_pts, tile_desc) = builtin_detect(&patch, &cfg.detector)?;
        let matches = match_descriptors(&frame_desc, &frame_pts, &tile_desc, &tile_pts, &cfg.matching)?;
        most_matches = most_matches.max(matches.len());
        let ransac = RansacConfig {
            seed: derive_seed(frame_seed, cand.tile_id as u64),
            ..cfg.ransac.clone()
        };
        let fit = match ransac_fit(&matches, &ransac) {
            Ok(fit) => fit,
            Err(Error::NoConsensus { .. } | Error::InsufficientMatches(_) | Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        };
        let inliers = fit.inlier_count();
        if best.as_ref().is_none_or(|b| inliers > b.inliers) {
            best = Some(Best {
                tile_id: cand.tile_id,
                inliers,
                matches: matches.len(),
                homography: fit.homography,
            });
        }
    }

    let mut result = LocalizationResult::failed(frame, Status::NoConsensus);
    result.matches = most_matches;
    let Some(best) = best else {
        return Ok(result);
    };
    result.tile_id = Some(best.tile_id);
    result.inliers = best.inliers;
    result.matches = best.matches;
    if best.inliers < cfg.min_final_inliers {
        return Ok(result);
    }
    let tile = &ctx.tiles.tiles[best.tile_id];
    let Ok(in_tile) = project_center(&best.homography, frame.image.width(), frame.image.height()) else {
        return Ok(result);
    };
    let map_px = tile.to_map_pixel(in_tile);
    let Ok(predicted) = ctx.map.pixel_to_geo(map_px) else {
        return Ok(result);
    };
    result.status = Status::Ok;
    result.predicted = Some(predicted);
    result.predicted_px = Some(map_px);
    result.error_m = frame.truth.map(|t| geo_distance_m(predicted, t));
    Ok(result)
}

/// Localizes one frame. Failures to find a consistent tile are reported in
/// the result status; only broken inputs are errors.
pub fn localize_frame(frame: &QueryFrame, ctx: MapContext<'_>, cfg: &LocalizerConfig) -> Result<LocalizationResult> {
    let start = Instant::now();
    let mut r = localize_inner(frame, ctx, cfg)?;
    r.elapsed_s = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Localizes every frame on `jobs` worker threads (0 uses all cores).
/// Results are ordered by frame id and do not depend on `jobs`.
pub fn run_flight(frames: &[QueryFrame], ctx: MapContext<'_>, cfg: &LocalizerConfig, jobs: usize) -> Result<FlightLog> {
    cfg.validate()?;
    ctx.check(cfg)?;
    if frames.is_empty() {
        return Err(Error::Config("no frames to localize".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = frames.iter().find(|f| !seen.insert(f.id)) {
        return Err(Error::Config(format!("duplicate frame id {}", dup.id)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let mut results = pool.install(|| {
        frames
            .par_iter()
            .map(|f| localize_frame(f, ctx, cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    results.sort_by_key(|r| r.frame_id);
    Ok(FlightLog {
        results,
        config_fingerprint: config_fingerprint(cfg),
        seed: cfg.seed,
    })
}

/// Short hash of the full localizer configuration.
pub fn config_fingerprint(cfg: &LocalizerConfig) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(serde_json::to_vec(cfg).expect("config serializes"));
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Mean localization error over successful frames with known truth.
pub fn ale(results: &[LocalizationResult]) -> Result<f64> {
    let errs: Vec<f64> = results
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| r.error_m)
        .collect();
    if errs.is_empty() {
        return Err(Error::UndefinedMetric(
            "no localized frame with known truth".into(),
        ));
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Fraction of frames that did not localize.
pub fn failure_rate(results: &[LocalizationResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| !r.is_ok()).count() as f64 / results.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStats {
    pub mean_s: f64,
    pub median_s: f64,
    pub max_s: f64,
}

/// Timing over all frames, failed ones included.
pub fn time_stats(results: &[LocalizationResult]) -> Result<TimeStats> {
    if results.is_empty() {
        return Err(Error::UndefinedMetric("empty flight log".into()));
    }
    let mut t: Vec<f64> = results.iter().map(|r| r.elapsed_s).collect();
    t.sort_by(f64::total_cmp);
    let n = t.len();
    let median_s = if n % 2 == 1 {
        t[n / 2]
    } else {
        0.5 * (t[n / 2 - 1] + t[n / 2])
    };
    Ok(TimeStats {
        mean_s: t.iter().sum::<f64>() / n as f64,
        median_s,
        max_s: t[n - 1],
    })
}

pub const CSV_HEADER: [&str; 11] = [
    "frame_id", "status", "pred_lat", "pred_lon", "gt_lat", "gt_lon", "err_m", "tile_id", "inliers",
    "matches", "elapsed_s",
];

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

pub fn write_csv(w: impl Write, results: &[LocalizationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.write_record([
            r.frame_id.to_string(),
            r.status.to_string(),
            opt(r.predicted, |g| format!("{:.9}", g.lat)),
            opt(r.predicted, |g| format!("{:.9}", g.lon)),
            opt(r.truth, |g| format!("{:.9}", g.lat)),
            opt(r.truth, |g| format!("{:.9}", g.lon)),
            opt(r.error_m, |e| format!("{e:.6}")),
            opt(r.tile_id, |t| t.to_string()),
            r.inliers.to_string(),
            r.matches.to_string(),
            format!("{:.6}", r.elapsed_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct CsvRow {
    frame_id: usize,
    status: String,
    pred_lat: Option<f64>,
    pred_lon: Option<f64>,
    gt_lat: Option<f64>,
    gt_lon: Option<f64>,
    err_m: Option<f64>,
    tile_id: Option<usize>,
    inliers: usize,
    matches: usize,
    elapsed_s: f64,
}

fn pair(lat: Option<f64>, lon: Option<f64>, field: &str) -> Result<Option<GeoPoint>> {
    match (lat, lon) {
        (Some(lat), Some(lon)) => Ok(Some(GeoPoint::new(lat, lon)?)),
        (None, None) => Ok(None),
        _ => Err(Error::format(field, "latitude and longitude must both be present")),
    }
}

pub fn read_csv(r: impl std::io::Read) -> Result<Vec<LocalizationResult>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::format("header", format!("unexpected columns {header:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        out.push(LocalizationResult {
            frame_id: row.frame_id,
            status: row.status.parse()?,
            predicted: pair(row.pred_lat, row.pred_lon, "pred")?,
            truth: pair(row.gt_lat, row.gt_lon, "gt")?,
            tile_id: row.tile_id,
            inliers: row.inliers,
            matches: row.matches,
            error_m: row.err_m,
            elapsed_s: row.elapsed_s,
            predicted_px: None,
        });
    }
    Ok(out)
}

/// One JSON object per result, mirroring the CSV columns.
pub fn write_jsonl(mut w: impl Write, results: &[LocalizationResult]) -> Result<()> {
    for r in results {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(r: impl BufRead) -> Result<Vec<LocalizationResult>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Writes `flight.csv` and `flight.jsonl` into `dir`.
pub fn save_log(dir: impl AsRef<Path>, results: &[LocalizationResult]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_csv(std::fs::File::create(dir.join("flight.csv"))?, results)?;
    write_jsonl(
        std::io::BufWriter::new(std::fs::File::create(dir.join("flight.jsonl"))?),
        results,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(id: usize, status: Status, err: Option<f64>, t: f64) -> LocalizationResult {
        let g = GeoPoint::new(0.001, 0.002).unwrap();
        LocalizationResult {
            frame_id: id,
            status,
            predicted: (status == Status::Ok).then_some(g),
            truth: Some(g),
            tile_id: (status == Status::Ok).then_some(3),
            inliers: 20,
            matches: 40,
            error_m: err,
            elapsed_s: t,
            predicted_px: None,
        }
    }

    #[test]
    fn ale_examples() {
        let log = [res(0, Status::Ok, Some(2.0), 0.1), res(1, Status::Ok, Some(4.0), 0.1)];
        assert_eq!(ale(&log).unwrap(), 3.0);
        let log = [res(0, Status::Ok, Some(0.0), 0.1)];
        assert_eq!(ale(&log).unwrap(), 0.0);
        let log = [
            res(0, Status::Ok, Some(2.0), 0.1),
            res(1, Status::NoConsensus, None, 0.1),
        ];
        assert_eq!(ale(&log).unwrap(), 2.0);
        assert_eq!(failure_rate(&log), 0.5);
        assert!(matches!(
            ale(&[res(0, Status::NoConsensus, None, 0.1)]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn time_stats_examples() {
        let s = time_stats(&[res(0, Status::Ok, None, 0.5)]).unwrap();
        assert_eq!((s.mean_s, s.median_s, s.max_s), (0.5, 0.5, 0.5));
        let log: Vec<_> = [0.2, 0.4, 0.9]
            .iter()
            .enumerate()
            .map(|(i, &t)| res(i, Status::NoConsensus, None, t))
            .collect();
        let s = time_stats(&log).unwrap();
        assert!((s.mean_s - 0.5).abs() < 1e-12);
        assert_eq!((s.median_s, s.max_s), (0.4, 0.9));
        assert!(time_stats(&[]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let log = vec![
            res(0, Status::Ok, Some(1.25), 0.5),
            res(1, Status::NoConsensus, None, 0.25),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &log).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(
            lines[1],
            "0,ok,0.001000000,0.002000000,0.001000000,0.002000000,1.250000,3,20,40,0.500000"
        );
        assert_eq!(lines[2], "1,no_consensus,,,0.001000000,0.002000000,,,20,40,0.250000");
        assert_eq!(read_csv(&buf[..]).unwrap(), log);

        let mut buf = Vec::new();
        write_jsonl(&mut buf, &log).unwrap();
        assert_eq!(read_jsonl(&buf[..]).unwrap(), log);
    }

    #[test]
    fn seeds_differ_per_frame() {
        let s: HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
    }
}
