//! Cluster-structure measures computed in the original high-dimensional
//! space: z-scaling, Euclidean distance matrices, GDV and EDD.

mod distance;
mod edd;
mod gdv;

pub use distance::{distance_matrix, mean_pairwise_distance, zscale, DistanceMatrix};
pub use edd::{distance_entropy_bits, edd, edd_with_reference, EddConfig, EddReference, EddResult};
pub use gdv::{gdv, ClassPairMean, GdvResult};
