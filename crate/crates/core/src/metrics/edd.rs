//! Entropy of the pairwise distance distribution, normalized against an
//! isotropic reference.
//!
//! Distances from the strict upper triangle are min–max scaled to `[0, 1]`
//! and counted in `bins` equal-width bins (the value 1 falls in the last
//! bin). The Shannon entropy of that histogram, in bits, is divided by the
//! mean entropy of `ref_draws` standard-normal point clouds of the same
//! shape under the same binning. Values near 1 mean the points fill space
//! like an isotropic Gaussian; clustering pushes the value down.
//!
//! Reference clouds come from one `ChaCha8Rng::seed_from_u64(seed)` stream,
//! each draw filled row-major with `StandardNormal` samples.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::distance::{distance_matrix, DistanceMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EddConfig {
    pub bins: usize,
    pub ref_draws: usize,
    pub seed: u64,
}

impl Default for EddConfig {
    fn default() -> Self {
        EddConfig {
            bins: 100,
            ref_draws: 20,
            seed: 42,
        }
    }
}

impl EddConfig {
    fn check(&self) -> Result<()> {
        if self.bins == 0 || self.ref_draws == 0 {
            return Err(Error::InvalidInput(format!(
                "EDD needs bins >= 1 and ref_draws >= 1, got {} and {}",
                self.bins, self.ref_draws
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EddResult {
    pub value: f64,
    pub data_entropy_bits: f64,
    pub reference_entropy_bits: f64,
    pub bins: usize,
    pub ref_draws: usize,
    pub seed: u64,
}

/// Reference entropy for a given point-cloud shape. Depends only on
/// `(n, dim, config)`, so one instance serves every layer of an archive.
#[derive(Debug, Clone, PartialEq)]
pub struct EddReference {
    pub n: usize,
    pub dim: usize,
    pub config: EddConfig,
    pub draw_entropies: Vec<f64>,
    pub mean_entropy_bits: f64,
}

impl EddReference {
    pub fn compute(n: usize, dim: usize, config: EddConfig) -> Result<Self> {
        config.check()?;
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "EDD needs at least 3 points, got {n}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidInput(
                "EDD needs at least one dimension".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut draw_entropies = Vec::with_capacity(config.ref_draws);
        for _ in 0..config.ref_draws {
            let cloud = Array2::from_shape_simple_fn((n, dim), || StandardNormal.sample(&mut rng));
            let dm = distance_matrix(cloud.view())?;
            draw_entropies.push(distance_entropy_bits(&dm, config.bins));
        }
        let mut sum = 0.0;
        for h in &draw_entropies {
            sum += h;
        }
        let mean_entropy_bits = sum / config.ref_draws as f64;
        Ok(EddReference {
            n,
            dim,
            config,
            draw_entropies,
            mean_entropy_bits,
        })
    }
}

/// Shannon entropy (bits) of the range-normalized distance histogram.
/// A zero range gives a single occupied bin and therefore 0 bits.
pub fn distance_entropy_bits(dm: &DistanceMatrix, bins: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut total = 0u64;
    for v in dm.upper_triangle() {
        lo = lo.min(v);
        hi = hi.max(v);
        total += 1;
    }
    let range = hi - lo;
    if total == 0 || range <= 0.0 {
        return 0.0;
    }
    let mut counts = vec![0u64; bins];
    for v in dm.upper_triangle() {
        let x = (v - lo) / range;
        let b = ((x * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = total as f64;
    let mut h = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

pub fn edd_with_reference(dm: &DistanceMatrix, reference: &EddReference) -> Result<EddResult> {
    if dm.n() != reference.n {
        return Err(Error::InvalidInput(format!(
            "reference built for n={} but distance matrix has n={}",
            reference.n,
            dm.n()
        )));
    }
    let data_entropy_bits = distance_entropy_bits(dm, reference.config.bins);
    let reference_entropy_bits = reference.mean_entropy_bits;
    let value = if reference_entropy_bits > 0.0 {
        data_entropy_bits / reference_entropy_bits
    } else {
        0.0
    };
    Ok(EddResult {
        value,
        data_entropy_bits,
        reference_entropy_bits,
        bins: reference.config.bins,
        ref_draws: reference.config.ref_draws,
        seed: reference.config.seed,
    })
}

pub fn edd(points: ArrayView2<'_, f64>, config: EddConfig) -> Result<EddResult> {
    let (n, dim) = points.dim();
    let reference = EddReference::compute(n, dim, config)?;
    edd_with_reference(&distance_matrix(points)?, &reference)
}
