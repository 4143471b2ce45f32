//! Layer-wise representation geometry of transformer CLS activations.
//!
//! Given per-block CLS vectors for a corpus labeled by narrative and by
//! writing style, this crate computes how well each block separates the two
//! label sets (GDV), how isotropically the vectors fill space (EDD), 2-D
//! MDS projections, and per-class principal-axis ellipses, and renders them
//! as CSV, JSON and SVG.
//!
//! Module map:
//! - [`corpus`]: label registry and manifest validation
//! - [`archive`]: the on-disk activation tensor format
//! - [`metrics`]: z-scaling, distance matrices, GDV, EDD
//! - [`embed`]: classical MDS, SMACOF, class ellipses
//! - [`pipeline`]: per-layer orchestration
//! - [`render`]: tables and figures

pub mod archive;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod render;

pub use error::{Error, Result};
