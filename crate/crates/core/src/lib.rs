//! Attention-guided multi-scale crop portfolios.
//!
//! Given an image and a spatial attention grid over the vision encoder's
//! patches, this crate builds a small hierarchy of square crops: a focal crop
//! at the attention centroid plus progressively wider context crops whose
//! size grows with the normalized entropy of the attention and whose centers
//! are re-estimated inside the previous level's crop.
//!
//! The pipeline is split into:
//!
//! - [`attention`]: head averaging, connector composition, normalization and entropy.
//! - [`geometry`]: patch-grid to pixel mapping and square-rectangle clamping.
//! - [`portfolio`]: expansion factors, center refinement, portfolio assembly and
//!   the unstructured top-k baseline.
//! - [`imaging`]: crop extraction, bilinear resizing and overlay rendering.
//! - [`cli`]: attention dump format, run configuration, manifests and the
//!   `generate` / `batch` / `sweep` commands.

pub mod attention;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod portfolio;

pub use attention::{AttentionGrid, ConnectorMatrix, RawHeadAttention, TokenAttention};
pub use error::{Error, Result};
pub use geometry::{CropRect, GridGeometry, Point};
pub use portfolio::{LevelParams, Portfolio, ScaleConfig};
