//! Command-line front end. Exit codes: 0 success, 2 usage or input error,
//! 3 incompatible artifacts, 4 internal error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{schema_hash, RunConfig};
use crate::embedding::{l2_normalize, Embedding, Provider};
use crate::error::{Error, Result};
use crate::geo_ref::{GeoRefMap, GeoSidecar};
use crate::homography::ransac_fit;
use crate::keypoints::builtin_detect;
use crate::matching::match_descriptors;
use crate::pipeline::{ale, run_flight, save_log, time_stats, MapContext, QueryFrame};
use crate::raster::Raster;
use crate::retrieval::RetrievalIndex;
use crate::svg;
use crate::synthgen::{generate_scene, load_spec, read_truth_csv, SceneSpec};
use crate::tbf::Tensor;
use crate::tiler::{crop, make_tiles, TileManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCOMPATIBLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Incompatible(_) => EXIT_INCOMPATIBLE,
        Error::Internal(_) => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

fn long_version() -> &'static str {
    Box::leak(format!("{} (config schema {})", env!("CARGO_PKG_VERSION"), schema_hash()).into_boxed_str())
}

#[derive(Parser, Debug)]
#[command(name = "ortholoc", version = long_version(), about = "Visual localization of aerial frames against a geo-referenced map")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cut a map into overlapping tiles.
    Tile(TileArgs),
    /// Embed every tile and write a retrieval index.
    Index(IndexArgs),
    /// Localize a directory of frames.
    Localize(LocalizeArgs),
    /// Summarize a flight log and optionally plot it.
    Eval(EvalArgs),
    /// Generate a synthetic scene.
    Synth(SynthArgs),
    /// Match two images and report the homography consensus.
    Match(MatchArgs),
}

#[derive(Args, Debug)]
pub struct TileArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Geo sidecar; defaults to `geo.json` next to the map.
    #[arg(long)]
    pub geo: Option<PathBuf>,
    #[arg(long)]
    pub tile_size: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Also write every tile crop as `NNNNN.pgm`.
    #[arg(long)]
    pub write_crops: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    #[arg(long)]
    pub tiles: PathBuf,
    /// `builtin` or `import`.
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub gem_p: Option<f64>,
    /// Tile embeddings for the import provider: a `[tiles, dim]` TBF file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LocalizeArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Directory of `NNN.pgm` frames.
    #[arg(long)]
    pub frames: PathBuf,
    /// `frame_id,lat,lon` CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Frame embeddings for an imported index: a `[frames, dim]` TBF file in
    /// frame order.
    #[arg(long)]
    pub frame_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory for `flight.csv` and `flight.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Directory for `trajectory.svg` and `errors.svg`.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Geo sidecar giving the trajectory plot extent.
    #[arg(long)]
    pub geo: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene TOML; defaults are used for missing keys or without a file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub viz: Option<PathBuf>,
    #[arg(long)]
    pub ratio: Option<f64>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Tile(a) => cmd_tile(&cfg, a),
        Command::Index(a) => cmd_index(&cfg, a),
        Command::Localize(a) => cmd_localize(&cfg, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Match(a) => cmd_match(&cfg, a),
    }
}

fn cmd_tile(cfg: &RunConfig, a: TileArgs) -> Result<()> {
    let geo_path = a
        .geo
        .unwrap_or_else(|| a.map.parent().unwrap_or(Path::new(".")).join("geo.json"));
    if !geo_path.exists() {
        return Err(Error::Config(format!("geo sidecar {} not found", geo_path.display())));
    }
    let map = GeoRefMap::load(&a.map, &geo_path)?;
    let size = a.tile_size.unwrap_or(cfg.tiling.tile_size);
    let stride = a.stride.unwrap_or(cfg.tiling.stride);
    let tiles = make_tiles(&map, size, stride)?;
    fs::create_dir_all(&a.out)?;
    map.raster().save_pgm(a.out.join("map.pgm"))?;
    TileManifest::new(&tiles, &map, Some("map.pgm".into())).save(a.out.join("manifest.json"))?;
    if a.write_crops {
        for t in &tiles.tiles {
            crop(&map, t)?.save_pgm(a.out.join(format!("{:05}.pgm", t.id)))?;
        }
    }
    println!("tiles={} size={} stride={}", tiles.len(), size, stride);
    Ok(())
}

/// Loads a tile manifest and the map it references.
fn load_tiles(dir: &Path) -> Result<(TileManifest, GeoRefMap)> {
    let manifest = TileManifest::load(dir.join("manifest.json"))?;
    let map_path = manifest
        .map_path
        .as_ref()
        .ok_or_else(|| Error::format("map_path", "tile manifest does not reference a map"))?;
    let raster = Raster::load_pnm(dir.join(map_path))?;
    let map = GeoRefMap::from_sidecar(raster, &manifest.map)?;
    if crate::tiler::map_fingerprint(&map) != manifest.map_ref {
        return Err(Error::Incompatible(format!(
            "map {} does not match the tile manifest",
            map_path
        )));
    }
    Ok((manifest, map))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))
}

fn imported_rows(path: &Path, rows: usize) -> Result<Vec<Option<Embedding>>> {
    let t = Tensor::read(path)?;
    if t.rank() != 2 || t.shape[0] != rows || t.shape[1] == 0 {
        return Err(Error::format(
            "shape",
            format!("expected [{rows}, dim], got {:?}", t.shape),
        ));
    }
    Ok(t.data
        .chunks_exact(t.shape[1])
        .map(|r| l2_normalize(&Embedding::new(r.iter().map(|&v| v as f64).collect())).ok())
        .collect())
}

fn cmd_index(cfg: &RunConfig, a: IndexArgs) -> Result<()> {
    let mut emb = cfg.embedding.clone();
    if let Some(p) = &a.provider {
        emb.provider = p.parse()?;
    }
    if let Some(p) = a.gem_p {
        emb.gem_p = p;
    }
    emb.validate()?;
    let (manifest, map) = load_tiles(&a.tiles)?;
    let tiles = manifest.tile_set();
    let index = match emb.provider {
        Provider::Builtin => {
            thread_pool(a.jobs.unwrap_or(cfg.jobs))?.install(|| RetrievalIndex::build(&tiles, &map, &emb))?
        }
        Provider::Import => {
            let path = a
                .embeddings
                .as_ref()
                .ok_or_else(|| Error::Config("--embeddings is required with the import provider".into()))?;
            RetrievalIndex::from_embeddings(&tiles, imported_rows(path, tiles.len())?, emb.fingerprint())?
        }
    };
    let tiles_dir = fs::canonicalize(&a.tiles)?;
    index.save(&a.out, &tiles_dir.to_string_lossy())?;
    println!(
        "indexed={} degenerate={} dim={}",
        index.len(),
        index.entries().iter().filter(|e| e.degenerate).count(),
        index.dim()
    );
    Ok(())
}

/// Frames are the `*.pgm` files of `dir` in name order; a numeric file stem
/// is the frame id, otherwise the position is.
pub fn load_frames(dir: &Path) -> Result<Vec<QueryFrame>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm" || x == "ppm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no frames in {}", dir.display())));
    }
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse().ok())
                .unwrap_or(i);
            Ok(QueryFrame {
                id,
                image: Raster::load_pnm(p)?,
                truth: None,
                embedding: None,
            })
        })
        .collect()
}

fn cmd_localize(cfg: &RunConfig, a: LocalizeArgs) -> Result<()> {
    let mut lc = cfg.localizer();
    if let Some(k) = a.k {
        lc.k = k;
    }
    if let Some(s) = a.seed {
        lc.seed = s;
    }
    let (index, imanifest) = RetrievalIndex::load(&a.index)?;
    if index.fingerprint() == "import" {
        lc.embedding.provider = Provider::Import;
    }
    let (tmanifest, map) = load_tiles(Path::new(&imanifest.tile_manifest))?;
    let tiles = tmanifest.tile_set();

    let mut frames = load_frames(&a.frames)?;
    if let Some(t) = &a.truth {
        let truth: std::collections::HashMap<_, _> = read_truth_csv(t)?.into_iter().collect();
        for f in &mut frames {
            f.truth = truth.get(&f.id).copied();
        }
    }
    if let Some(p) = &a.frame_embeddings {
        let rows = imported_rows(p, frames.len())?;
        for (f, e) in frames.iter_mut().zip(rows) {
            f.embedding = e;
        }
    }
    let ctx = MapContext {
        index: &index,
        tiles: &tiles,
        map: &map,
    };
    let log = run_flight(&frames, ctx, &lc, a.jobs.unwrap_or(cfg.jobs))?;
    save_log(&a.out, &log.results)?;
    let ok = log.results.iter().filter(|r| r.is_ok()).count();
    println!("localized={}/{} config={}", ok, log.results.len(), log.config_fingerprint);
    Ok(())
}

/// The one-line summary printed by `eval`.
pub fn eval_line(results: &[crate::pipeline::LocalizationResult]) -> Result<String> {
    let n = results.len();
    let failures = results.iter().filter(|r| !r.is_ok()).count();
    let ale_m = match ale(results) {
        Ok(v) => format!("{v:.3}"),
        Err(Error::UndefinedMetric(_)) => "nan".to_string(),
        Err(e) => return Err(e),
    };
    let mean = time_stats(results).map(|t| t.mean_s).unwrap_or(f64::NAN);
    Ok(format!("ALE_m={ale_m} failures={failures}/{n} mean_time_s={mean:.3}"))
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let results = crate::pipeline::read_csv(fs::File::open(&a.log)?)?;
    println!("{}", eval_line(&results)?);
    if let Some(dir) = &a.plot {
        let extent = match &a.geo {
            Some(p) => {
                let g = GeoSidecar::load(p)?;
                Some((g.ll, g.ur))
            }
            None => None,
        };
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trajectory.svg"), svg::trajectory_svg(&results, extent))?;
        fs::write(dir.join("errors.svg"), svg::error_scatter_svg(&results))?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => load_spec(p)?,
        None => SceneSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let scene = generate_scene(&spec)?;
    scene.save(&a.out)?;
    println!(
        "map={}x{} frames={} seed={}",
        spec.map_size, spec.map_size, spec.n_frames, spec.seed
    );
    Ok(())
}

fn cmd_match(cfg: &RunConfig, a: MatchArgs) -> Result<()> {
    let img_a = Raster::load_pnm(&a.a)?;
    let img_b = Raster::load_pnm(&a.b)?;
    let mut params = cfg.matching.clone();
    if let Some(r) = a.ratio {
        params.ratio = r;
    }
    let (pa, da) = builtin_detect(&img_a, &cfg.detector)?;
    let (pb, db) = builtin_detect(&img_b, &cfg.detector)?;
    let matches = match_descriptors(&da, &pa, &db, &pb, &params)?;
    let inliers = match ransac_fit(&matches, &cfg.ransac) {
        Ok(fit) => fit.inlier_count(),
        Err(Error::NoConsensus { best, .. }) => best,
        Err(Error::InsufficientMatches(_) | Error::Degenerate(_)) => 0,
        Err(e) => return Err(e),
    };
    if let Some(p) = &a.viz {
        fs::write(p, svg::match_svg(img_a.width(), img_a.height(), &matches))?;
    }
    println!(
        "keypoints_a={} keypoints_b={} matches={} inliers={}",
        pa.len(),
        pb.len(),
        matches.len(),
        inliers
    );
    Ok(())
}
