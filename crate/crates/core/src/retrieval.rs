//! Exact nearest-neighbor retrieval of tiles by global descriptor, and the
//! recall@K metric.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{embed, euclidean, Embedding, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::geo_ref::GeoRefMap;
use crate::tbf::Tensor;
use crate::tiler::{crop, TileSet};

#[derive(Clone, Debug, PartialEq)]
pub struct IndexEntry {
    pub tile_id: usize,
    pub embedding: Embedding,
    /// Set when the tile had no usable descriptor. Flagged entries are never
    /// returned by [`RetrievalIndex::retrieve`].
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalIndex {
    entries: Vec<IndexEntry>,
    dim: usize,
    fingerprint: String,
    map_ref: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub tile_id: usize,
    pub distance: f64,
}

/// Candidates in nondecreasing distance order, ties broken by tile id.
pub type CandidateList = Vec<Candidate>;

impl RetrievalIndex {
    /// Embeds every tile crop with the built-in provider.
    pub fn build(tiles: &TileSet, map: &GeoRefMap, config: &EmbeddingConfig) -> Result<Self> {
        config.validate()?;
        if tiles.is_empty() {
            return Err(Error::Config("cannot index an empty tile set".into()));
        }
        if tiles.map_ref != crate::tiler::map_fingerprint(map) {
            return Err(Error::Incompatible(
                "tile set was cut from a different map".into(),
            ));
        }
        let embeddings = tiles
            .tiles
            .par_iter()
            .map(|t| match embed(&crop(map, t)?, config) {
                Ok(e) => Ok(Some(e)),
                Err(Error::Degenerate(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_embeddings(tiles, embeddings, config.fingerprint())
    }

    /// Assembles an index from per-tile embeddings computed elsewhere. `None`
    /// marks a degenerate tile.
    pub fn from_embeddings(
        tiles: &TileSet,
        embeddings: Vec<Option<Embedding>>,
        fingerprint: String,
    ) -> Result<Self> {
        if tiles.is_empty() {
            return Err(Error::Config("cannot index an empty tile set".into()));
        }
        if embeddings.len() != tiles.len() {
            return Err(Error::Shape(format!(
                "{} embeddings for {} tiles",
                embeddings.len(),
                tiles.len()
            )));
        }
        let dim = embeddings
            .iter()
            .flatten()
            .map(Embedding::dim)
            .next()
            .ok_or_else(|| Error::Degenerate("every tile embedding is degenerate".into()))?;
        let mut entries = Vec::with_capacity(embeddings.len());
        for (tile_id, e) in embeddings.into_iter().enumerate() {
            let entry = match e {
                Some(e) if e.dim() == dim => IndexEntry {
                    tile_id,
                    embedding: e,
                    degenerate: false,
                },
                Some(e) => {
                    return Err(Error::Shape(format!(
                        "tile {tile_id} embedding has dim {}, expected {dim}",
                        e.dim()
                    )))
                }
                None => IndexEntry {
                    tile_id,
                    embedding: Embedding::zeros(dim),
                    degenerate: true,
                },
            };
            entries.push(entry);
        }
        Ok(Self {
            entries,
            dim,
            fingerprint,
            map_ref: tiles.map_ref.clone(),
        })
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn map_ref(&self) -> &str {
        &self.map_ref
    }

    pub fn check_fingerprint(&self, query_fingerprint: &str) -> Result<()> {
        if query_fingerprint != self.fingerprint {
            return Err(Error::Incompatible(format!(
                "index built with `{}`, query embedded with `{}`",
                self.fingerprint, query_fingerprint
            )));
        }
        Ok(())
    }

    /// The `k` nearest tiles by Euclidean distance. Exhaustive scan.
    pub fn retrieve(
        &self,
        query: &Embedding,
        query_fingerprint: &str,
        k: usize,
    ) -> Result<CandidateList> {
        self.check_fingerprint(query_fingerprint)?;
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if query.dim() != self.dim {
            return Err(Error::Shape(format!(
                "query dim {} does not match index dim {}",
                query.dim(),
                self.dim
            )));
        }
        let mut all: Vec<Candidate> = self
            .entries
            .iter()
            .filter(|e| !e.degenerate)
            .map(|e| Candidate {
                tile_id: e.tile_id,
                distance: euclidean(query.as_slice(), e.embedding.as_slice()),
            })
            .collect();
        all.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.tile_id.cmp(&b.tile_id))
        });
        all.truncate(k);
        Ok(all)
    }

    pub fn save(&self, dir: impl AsRef<Path>, tile_manifest: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut data = Vec::with_capacity(self.len() * self.dim);
        for e in &self.entries {
            data.extend(e.embedding.as_slice().iter().map(|&v| v as f32));
        }
        Tensor::new(vec![self.len(), self.dim], data)?.write(dir.join("embeddings.tbf"))?;
        let manifest = IndexManifest {
            dim: self.dim,
            fingerprint: self.fingerprint.clone(),
            map_ref: self.map_ref.clone(),
            tile_manifest: tile_manifest.to_string(),
            degenerate: self
                .entries
                .iter()
                .filter(|e| e.degenerate)
                .map(|e| e.tile_id)
                .collect(),
        };
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)? + "\n",
        )?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, IndexManifest)> {
        let dir = dir.as_ref();
        let manifest: IndexManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let t = Tensor::read(dir.join("embeddings.tbf"))?;
        if t.rank() != 2 || t.shape[1] != manifest.dim || t.shape[0] == 0 {
            return Err(Error::format(
                "shape",
                format!("expected [m, {}], got {:?}", manifest.dim, t.shape),
            ));
        }
        let degenerate: HashSet<usize> = manifest.degenerate.iter().copied().collect();
        let entries = t
            .data
            .chunks_exact(manifest.dim)
            .enumerate()
            .map(|(tile_id, row)| IndexEntry {
                tile_id,
                embedding: Embedding::new(row.iter().map(|&v| v as f64).collect()),
                degenerate: degenerate.contains(&tile_id),
            })
            .collect();
        Ok((
            Self {
                entries,
                dim: manifest.dim,
                fingerprint: manifest.fingerprint.clone(),
                map_ref: manifest.map_ref.clone(),
            },
            manifest,
        ))
    }
}

/// `index/manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexManifest {
    pub dim: usize,
    pub fingerprint: String,
    pub map_ref: String,
    /// Path of the tile manifest the index was built from.
    pub tile_manifest: String,
    pub degenerate: Vec<usize>,
}

/// Fraction of queries whose truth set meets the first `k` candidates.
pub fn recall_at_k(results: &[CandidateList], truth: &[Vec<usize>], k: usize) -> Result<f64> {
    if results.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} result lists for {} truth sets",
            results.len(),
            truth.len()
        )));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if results.is_empty() {
        return Ok(0.0);
    }
    let hits = results
        .iter()
        .zip(truth)
        .filter(|(cands, t)| cands.iter().take(k).any(|c| t.contains(&c.tile_id)))
        .count();
    Ok(hits as f64 / results.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::l2_normalize;
    use crate::geo_ref::GeoPoint;
    use crate::tiler::{Tile, TileOrigin};

    fn tiles(n: usize) -> TileSet {
        TileSet {
            tile_size: 1,
            stride: 1,
            map_ref: "m".into(),
            tiles: (0..n)
                .map(|id| Tile {
                    id,
                    origin: TileOrigin { x: id, y: 0 },
                    width: 1,
                    height: 1,
                    geo_center: GeoPoint { lat: 0.0, lon: 0.0 },
                })
                .collect(),
        }
    }

    fn unit(v: &[f64]) -> Embedding {
        l2_normalize(&Embedding::new(v.to_vec())).unwrap()
    }

    #[test]
    fn self_retrieval_and_exhaustive_k() {
        let embs = [unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), unit(&[1.0, 1.0])];
        let idx = RetrievalIndex::from_embeddings(
            &tiles(3),
            embs.iter().cloned().map(Some).collect(),
            "fp".into(),
        )
        .unwrap();
        let r = idx.retrieve(&embs[1], "fp", 1).unwrap();
        assert_eq!(r[0].tile_id, 1);
        assert_eq!(r[0].distance, 0.0);
        let r = idx.retrieve(&embs[0], "fp", 10).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.windows(2).all(|w| w[0].distance <= w[1].distance));
    }

    #[test]
    fn hand_computed_distances() {
        // Query at origin; entries on the x axis at 0.9, 0.2, 0.5.
        let q = Embedding::new(vec![0.0, 0.0]);
        let embs = [0.9, 0.2, 0.5].map(|d| Some(Embedding::new(vec![d, 0.0])));
        let idx = RetrievalIndex::from_embeddings(&tiles(3), embs.to_vec(), "fp".into()).unwrap();
        let r = idx.retrieve(&q, "fp", 2).unwrap();
        assert_eq!(r.iter().map(|c| c.tile_id).collect::<Vec<_>>(), vec![1, 2]);
        assert!((r[0].distance - 0.2).abs() < 1e-12);
        assert!((r[1].distance - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ties_break_by_tile_id_and_degenerate_is_skipped() {
        let e = unit(&[1.0, 0.0]);
        let idx = RetrievalIndex::from_embeddings(
            &tiles(4),
            vec![Some(e.clone()), None, Some(e.clone()), Some(e.clone())],
            "fp".into(),
        )
        .unwrap();
        let r = idx.retrieve(&e, "fp", 4).unwrap();
        assert_eq!(r.iter().map(|c| c.tile_id).collect::<Vec<_>>(), vec![0, 2, 3]);
        assert!(idx.entries()[1].degenerate);
    }

    #[test]
    fn errors() {
        let idx = RetrievalIndex::from_embeddings(
            &tiles(2),
            vec![Some(unit(&[1.0, 0.0])), Some(unit(&[0.0, 1.0]))],
            "builtin".into(),
        )
        .unwrap();
        assert!(matches!(
            idx.retrieve(&unit(&[1.0, 0.0]), "other", 1),
            Err(Error::Incompatible(_))
        ));
        assert!(matches!(
            idx.retrieve(&unit(&[1.0, 0.0, 0.0]), "builtin", 1),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            idx.retrieve(&unit(&[1.0, 0.0]), "builtin", 0),
            Err(Error::Config(_))
        ));
    }

    fn list(ids: &[usize]) -> CandidateList {
        ids.iter()
            .enumerate()
            .map(|(i, &tile_id)| Candidate { tile_id, distance: i as f64 })
            .collect()
    }

    #[test]
    fn recall_examples() {
        let results = vec![list(&[0, 1]), list(&[1, 0]), list(&[2, 0])];
        let truth = vec![vec![0], vec![1], vec![2]];
        assert_eq!(recall_at_k(&results, &truth, 1).unwrap(), 1.0);

        let results = vec![list(&[0, 1, 2, 3, 4]), list(&[5, 6, 7, 8, 9]), list(&[9, 8, 7, 6, 5])];
        let truth = vec![vec![3], vec![42], vec![5]];
        let r = recall_at_k(&results, &truth, 5).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-9);

        let empty = vec![vec![], vec![], vec![]];
        assert_eq!(recall_at_k(&results, &empty, 5).unwrap(), 0.0);
        assert!(matches!(recall_at_k(&results, &truth[..2], 5), Err(Error::Shape(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let embs = vec![Some(unit(&[1.0, 2.0])), None, Some(unit(&[3.0, 1.0]))];
        let idx = RetrievalIndex::from_embeddings(&tiles(3), embs, "fp".into()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path(), "tiles/manifest.json").unwrap();
        let (back, manifest) = RetrievalIndex::load(dir.path()).unwrap();
        assert_eq!(manifest.degenerate, vec![1]);
        assert_eq!(back.fingerprint(), "fp");
        for (a, b) in idx.entries().iter().zip(back.entries()) {
            assert_eq!(a.degenerate, b.degenerate);
            for (x, y) in a.embedding.as_slice().iter().zip(b.embedding.as_slice()) {
                assert!((x - y).abs() < 1e-7);
            }
        }
    }
}
