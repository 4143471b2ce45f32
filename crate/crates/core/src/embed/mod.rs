//! 2-D projections of distance matrices and per-class ellipse summaries.

mod ellipse;
mod linalg;
mod mds;

pub use ellipse::{class_ellipses, principal_axes, ClassEllipse, PrincipalAxes};
pub use linalg::{symmetric_eigen, SymmetricEigen};
pub use mds::{classical_mds, smacof, stress, Embedding, SmacofConfig, SmacofInit};
