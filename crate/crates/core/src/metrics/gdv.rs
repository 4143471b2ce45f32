//! Generalized discrimination value.
//!
//! After per-dimension z-scaling the GDV is
//!
//! ```text
//! GDV = (1/√D) · [ (1/L) Σ_l d̄(C_l) − 2/(L(L−1)) Σ_{l<m} d̄(C_l, C_m) ]
//! ```
//!
//! where `d̄(C_l)` is the mean pairwise distance inside class `l` and
//! `d̄(C_l, C_m)` the mean distance between points of two classes. Zero means
//! no label structure; more negative means better separated classes.
//!
//! The result is bit-identical under any permutation of the samples and any
//! bijective renaming of class ids: rows are processed in a canonical
//! (lexicographic) order and class means are summed in sorted order.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::distance::{euclidean, zscale};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPairMean {
    pub a: u32,
    pub b: u32,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdvResult {
    pub value: f64,
    pub mean_intra: f64,
    pub mean_inter: f64,
    pub per_class_intra: BTreeMap<u32, f64>,
    /// One entry per unordered class pair, `a < b`.
    pub per_pair_inter: Vec<ClassPairMean>,
    /// Dimensionality D used for the 1/√D normalization.
    pub dims: usize,
    /// Classes with a single member; they contribute intra distance 0.
    pub singleton_classes: Vec<u32>,
}

impl GdvResult {
    pub fn inter(&self, a: u32, b: u32) -> Option<f64> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.per_pair_inter
            .iter()
            .find(|p| p.a == a && p.b == b)
            .map(|p| p.mean)
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn sorted_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

pub fn gdv(points: ArrayView2<'_, f64>, labels: &[u32]) -> Result<GdvResult> {
    let (n, dim) = points.dim();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "GDV needs at least 2 points, got {n}"
        )));
    }
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let k = classes.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "GDV needs at least 2 classes, got {k}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidInput(
            "GDV needs at least one dimension".into(),
        ));
    }

    let src = points.as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let row = |i: usize| &src[i * dim..(i + 1) * dim];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lexicographic(row(i), row(j)));
    let mut canonical = Vec::with_capacity(n * dim);
    for &i in &order {
        canonical.extend_from_slice(row(i));
    }
    let canonical = Array2::from_shape_vec((n, dim), canonical).expect("shape");
    let class_of: Vec<usize> = order
        .iter()
        .map(|&src| classes.binary_search(&labels[src]).expect("label present"))
        .collect();

    let scaled = zscale(canonical.view())?;
    let flat = scaled.as_slice().expect("standard layout");

    // Dense k×k accumulators, lower index first.
    let mut sums = vec![0.0f64; k * k];
    let mut counts = vec![0u64; k * k];
    for i in 0..n {
        let a = &flat[i * dim..(i + 1) * dim];
        for j in i + 1..n {
            let d = euclidean(a, &flat[j * dim..(j + 1) * dim]);
            let (ci, cj) = (class_of[i], class_of[j]);
            let slot = ci.min(cj) * k + ci.max(cj);
            sums[slot] += d;
            counts[slot] += 1;
        }
    }

    let mut per_class_intra = BTreeMap::new();
    let mut singleton_classes = Vec::new();
    for (c, &id) in classes.iter().enumerate() {
        let slot = c * k + c;
        let mean = if counts[slot] == 0 {
            singleton_classes.push(id);
            0.0
        } else {
            sums[slot] / counts[slot] as f64
        };
        per_class_intra.insert(id, mean);
    }
    if !singleton_classes.is_empty() {
        log::warn!(
            "GDV: singleton classes {singleton_classes:?} contribute intra-class distance 0"
        );
    }

    let mut per_pair_inter = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let slot = a * k + b;
            per_pair_inter.push(ClassPairMean {
                a: classes[a],
                b: classes[b],
                mean: sums[slot] / counts[slot] as f64,
            });
        }
    }

    let mean_intra = sorted_sum(per_class_intra.values().copied()) / k as f64;
    let mean_inter =
        sorted_sum(per_pair_inter.iter().map(|p| p.mean)) / per_pair_inter.len() as f64;
    let value = (mean_intra - mean_inter) / (dim as f64).sqrt();

    Ok(GdvResult {
        value,
        mean_intra,
        mean_inter,
        per_class_intra,
        per_pair_inter,
        dims: dim,
        singleton_classes,
    })
}
