//! Absolute visual localization of aerial frames against a geo-referenced
//! orthophoto.
//!
//! The map is cut into overlapping tiles, each tile is summarized by a
//! global descriptor, and a query frame is localized in two stages: the
//! nearest tiles are retrieved by descriptor distance, then local keypoints
//! are matched against each candidate and a homography is fitted with
//! RANSAC. The frame center projected through the best homography gives a
//! map pixel, which the geo reference turns into latitude and longitude.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod embedding;
pub mod error;
pub mod geo_ref;
pub mod homography;
pub mod keypoints;
pub mod matching;
pub mod pipeline;
pub mod raster;
pub mod retrieval;
pub mod svg;
pub mod synthgen;
pub mod tbf;
pub mod tiler;

pub use error::{Error, Result};
