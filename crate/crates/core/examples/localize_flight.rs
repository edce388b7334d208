//! Generate a synthetic flight, localize every frame against the map, and
//! report accuracy and timing with SVG plots.
//!
//! cargo run --release --example localize_flight [out_dir]

use std::fs;
use std::path::PathBuf;

use ortholoc::pipeline::{ale, failure_rate, run_flight, save_log, time_stats, LocalizerConfig, MapContext};
use ortholoc::retrieval::RetrievalIndex;
use ortholoc::svg::{error_scatter_svg, trajectory_svg};
use ortholoc::synthgen::{generate_scene, SceneSpec};
use ortholoc::tiler::make_tiles;

fn main() -> ortholoc::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "flight-out".into()).into();
    let spec = SceneSpec::default();
    let scene = generate_scene(&spec)?;
    let tiles = make_tiles(&scene.map, 500, 250)?;
    let cfg = LocalizerConfig::default();
    let index = RetrievalIndex::build(&tiles, &scene.map, &cfg.embedding)?;
    let ctx = MapContext { index: &index, tiles: &tiles, map: &scene.map };

    let log = run_flight(&scene.frames, ctx, &cfg, 0)?;
    for r in &log.results {
        println!(
            "frame {:2} {:13} tile {:>3} inliers {:4} error {}",
            r.frame_id,
            r.status.as_str(),
            r.tile_id.map(|t| t.to_string()).unwrap_or_default(),
            r.inliers,
            r.error_m.map(|e| format!("{e:.2} m")).unwrap_or_else(|| "-".into())
        );
    }
    let t = time_stats(&log.results)?;
    println!(
        "ALE {:.3} m, failure rate {:.0}%, time per frame mean {:.3} s / median {:.3} s / max {:.3} s",
        ale(&log.results)?,
        100.0 * failure_rate(&log.results),
        t.mean_s,
        t.median_s,
        t.max_s
    );

    save_log(&out, &log.results)?;
    let extent = Some((scene.map.ll(), scene.map.ur()));
    fs::write(out.join("trajectory.svg"), trajectory_svg(&log.results, extent))?;
    fs::write(out.join("errors.svg"), error_scatter_svg(&log.results))?;
    println!("wrote {}", out.display());
    Ok(())
}
