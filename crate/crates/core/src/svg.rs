//! Plain SVG renderings of flights and match sets.

use std::fmt::Write;

use crate::geo_ref::GeoPoint;
use crate::matching::MatchSet;
use crate::pipeline::LocalizationResult;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 40.0;

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

struct Axis {
    lo: f64,
    hi: f64,
    out_lo: f64,
    out_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, out_lo, out_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.out_lo + (v - self.lo) / (self.hi - self.lo) * (self.out_hi - self.out_lo)
    }
}

fn polyline(out: &mut String, pts: &[(f64, f64)], class: &str, color: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        "<polyline class=\"{class}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
        coords.join(" ")
    );
    for (x, y) in pts {
        let _ = writeln!(out, "<circle class=\"{class}\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{color}\"/>");
    }
}

/// Ground-truth and predicted tracks in frame order over the map extent
/// `(ll, ur)`, or over the points' bounding box when no extent is given.
pub fn trajectory_svg(results: &[LocalizationResult], extent: Option<(GeoPoint, GeoPoint)>) -> String {
    let truth: Vec<GeoPoint> = results.iter().filter_map(|r| r.truth).collect();
    let pred: Vec<GeoPoint> = results.iter().filter_map(|r| r.predicted).collect();
    let (ll, ur) = extent.unwrap_or_else(|| {
        let all = truth.iter().chain(&pred);
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for g in all {
            lo = (lo.0.min(g.lat), lo.1.min(g.lon));
            hi = (hi.0.max(g.lat), hi.1.max(g.lon));
        }
        if !lo.0.is_finite() {
            lo = (0.0, 0.0);
            hi = (1.0, 1.0);
        }
        (GeoPoint { lat: lo.0, lon: lo.1 }, GeoPoint { lat: hi.0, lon: hi.1 })
    });
    let xs = Axis::new(ll.lon, ur.lon, PAD, W - PAD);
    let ys = Axis::new(ll.lat, ur.lat, H - PAD, PAD);
    let project = |g: &GeoPoint| (xs.map(g.lon), ys.map(g.lat));

    let mut out = header(W, H);
    let _ = writeln!(
        out,
        "<rect class=\"extent\" x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    polyline(&mut out, &truth.iter().map(project).collect::<Vec<_>>(), "truth", "#2060c0");
    polyline(&mut out, &pred.iter().map(project).collect::<Vec<_>>(), "predicted", "#d03020");
    let _ = writeln!(out, "<text x=\"{PAD}\" y=\"24\" font-family=\"sans-serif\" font-size=\"13\">truth (blue) vs predicted (red)</text>");
    out.push_str("</svg>\n");
    out
}

/// Localization error against frame id; failed frames are marked on the
/// axis.
pub fn error_scatter_svg(results: &[LocalizationResult]) -> String {
    let max_id = results.iter().map(|r| r.frame_id).max().unwrap_or(0) as f64;
    let max_err = results
        .iter()
        .filter_map(|r| r.error_m)
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let xs = Axis::new(0.0, max_id.max(1.0), PAD, W - PAD);
    let ys = Axis::new(0.0, max_err * 1.1, H - PAD, PAD);

    let mut out = header(W, H);
    let _ = writeln!(
        out,
        "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{y}\" stroke=\"black\"/>",
        y = H - PAD,
        x2 = W - PAD
    );
    for r in results {
        let x = xs.map(r.frame_id as f64);
        match (r.is_ok(), r.error_m) {
            (true, Some(e)) => {
                let _ = writeln!(
                    out,
                    "<circle class=\"error\" cx=\"{x:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#2060c0\"/>",
                    ys.map(e)
                );
            }
            (false, _) => {
                let _ = writeln!(
                    out,
                    "<text class=\"failed\" x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#d03020\">x</text>",
                    H - PAD + 14.0
                );
            }
            _ => {}
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"{PAD}\" y=\"24\" font-family=\"sans-serif\" font-size=\"13\">error per frame, max {max_err:.3} m</text>"
    );
    out.push_str("</svg>\n");
    out
}

/// Each match drawn as the displacement from its point in image A to its
/// point in image B, both in A's pixel frame. A self-match therefore gives
/// zero-length lines.
pub fn match_svg(width: usize, height: usize, matches: &MatchSet) -> String {
    let mut out = header(width as f64, height as f64);
    for m in &matches.pairs {
        let _ = writeln!(
            out,
            "<line class=\"match\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#d03020\"/>",
            m.query.x, m.query.y, m.patch.x, m.patch.y
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::Keypoint;
    use crate::matching::MatchPair;
    use crate::pipeline::Status;

    #[test]
    fn match_lines_follow_displacements() {
        let kp = |x, y| Keypoint { x, y, score: 1.0 };
        let set = MatchSet {
            pairs: vec![MatchPair {
                query_idx: 0,
                patch_idx: 0,
                query: kp(1.0, 2.0),
                patch: kp(1.0, 2.0),
                distance: 0.0,
            }],
        };
        let svg = match_svg(10, 10, &set);
        assert!(svg.contains("<line class=\"match\" x1=\"1.00\" y1=\"2.00\" x2=\"1.00\" y2=\"2.00\""));
    }

    #[test]
    fn plots_render_all_frames() {
        let g = |lat, lon| GeoPoint { lat, lon };
        let results: Vec<_> = (0..3)
            .map(|i| LocalizationResult {
                frame_id: i,
                status: if i == 1 { Status::NoConsensus } else { Status::Ok },
                predicted: (i != 1).then_some(g(0.001 * i as f64, 0.001)),
                truth: Some(g(0.001 * i as f64, 0.001)),
                tile_id: None,
                inliers: 0,
                matches: 0,
                error_m: (i != 1).then_some(i as f64),
                elapsed_s: 0.0,
                predicted_px: None,
            })
            .collect();
        let t = trajectory_svg(&results, None);
        assert_eq!(t.matches("<circle class=\"truth\"").count(), 3);
        assert_eq!(t.matches("<circle class=\"predicted\"").count(), 2);
        let e = error_scatter_svg(&results);
        assert_eq!(e.matches("class=\"error\"").count(), 2);
        assert_eq!(e.matches("class=\"failed\"").count(), 1);
    }
}
