//! Run configuration: one TOML document holding every tunable, with
//! command-line flags taking precedence.
//!
//! ```toml
//! seed = 0              # global seed; per-frame seeds derive from it
//! jobs = 0              # worker threads, 0 = all cores
//! k = 5                 # retrieved candidate tiles
//! min_final_inliers = 15
//!
//! [tiling]
//! tile_size = 500
//! stride = 250
//!
//! [embedding]
//! provider = "builtin"  # or "import"
//! gem_p = 3.0
//! cell = 16
//! orientation_bins = 8
//!
//! [detector]
//! sigma = 1.5
//! threshold = 1e-4
//! nms_radius = 4
//! max_count = 1000
//! border = 10
//!
//! [matching]
//! ratio = 0.8
//! mutual = true
//!
//! [ransac]
//! iterations = 2000
//! inlier_threshold = 3.0
//! min_inliers = 15
//! seed = 0              # replaced per frame during localization
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::homography::RansacConfig;
use crate::keypoints::DetectorConfig;
use crate::matching::MatchParams;
use crate::pipeline::LocalizerConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingConfig {
    pub tile_size: usize,
    pub stride: usize,
}

impl Default for TilingConfig {
    fn default() -> Self {
        Self {
            tile_size: 500,
            stride: 250,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub k: usize,
    pub min_final_inliers: usize,
    pub tiling: TilingConfig,
    pub embedding: EmbeddingConfig,
    pub detector: DetectorConfig,
    pub matching: MatchParams,
    pub ransac: RansacConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let l = LocalizerConfig::default();
        Self {
            seed: 0,
            jobs: 0,
            k: l.k,
            min_final_inliers: l.min_final_inliers,
            tiling: TilingConfig::default(),
            embedding: l.embedding,
            detector: l.detector,
            matching: l.matching,
            ransac: l.ransac,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn localizer(&self) -> LocalizerConfig {
        LocalizerConfig {
            k: self.k,
            embedding: self.embedding.clone(),
            detector: self.detector.clone(),
            matching: self.matching.clone(),
            ransac: self.ransac.clone(),
            min_final_inliers: self.min_final_inliers,
            seed: self.seed,
        }
    }
}

/// Hash of the default configuration document. Changes whenever a key is
/// added, removed, renamed or given a new default.
pub fn schema_hash() -> String {
    let digest = Sha256::digest(RunConfig::default().to_toml().as_bytes());
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_defaults_parse_to_defaults() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start().to_string() + "\n")
            .collect();
        assert_eq!(RunConfig::from_toml(&doc).unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip_and_partial_documents() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        let c = RunConfig::from_toml("seed = 9\n[matching]\nratio = 0.7\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.matching.ratio, 0.7);
        assert!(c.matching.mutual);
        assert_eq!(c.localizer().seed, 9);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("sead = 1\n"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml("[tiling]\nsize = 3\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn schema_hash_is_stable() {
        assert_eq!(schema_hash(), schema_hash());
        assert_eq!(schema_hash().len(), 12);
    }
}
