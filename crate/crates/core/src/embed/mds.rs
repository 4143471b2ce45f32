//! Metric multidimensional scaling: classical (Torgerson) and SMACOF stress
//! majorization with unit weights.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::symmetric_eigen;
use crate::error::{Error, Result};
use crate::metrics::DistanceMatrix;

/// Normalized stress below which SMACOF stops; the input is reproduced to
/// rounding and further relative changes are noise.
const STRESS_FLOOR: f64 = 1e-12;

/// Low-dimensional configuration with fit statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// n × k, column-centered, first clearly nonzero entry of each column positive.
    pub coords: Array2<f64>,
    /// Σ_{i<j} (d_ij − δ_ij)².
    pub stress: f64,
    /// sqrt(stress / Σ δ_ij²).
    pub normalized_stress: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Raw stress of the initial configuration followed by one entry per iteration.
    pub stress_history: Vec<f64>,
    /// Top-k eigenvalues of the double-centered matrix (classical MDS only).
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }
}

fn row_dist(x: ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..x.ncols() {
        let t = x[[i, c]] - x[[j, c]];
        acc += t * t;
    }
    acc.sqrt()
}

/// Raw and normalized stress of a configuration against target distances.
pub fn stress(coords: ArrayView2<'_, f64>, dm: &DistanceMatrix) -> (f64, f64) {
    let n = dm.n();
    let mut raw = 0.0;
    let mut norm = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let delta = dm.get(i, j);
            let r = row_dist(coords, i, j) - delta;
            raw += r * r;
            norm += delta * delta;
        }
    }
    let normalized = if norm > 0.0 { (raw / norm).sqrt() } else { 0.0 };
    (raw, normalized)
}

/// Centers columns and flips each so its first clearly nonzero entry is positive.
pub(crate) fn normalize_orientation(coords: &mut Array2<f64>) {
    let n = coords.nrows() as f64;
    for mut col in coords.columns_mut() {
        let mut sum = 0.0;
        for &x in col.iter() {
            sum += x;
        }
        let mean = sum / n;
        col.mapv_inplace(|x| x - mean);
        let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(&first) = col.iter().find(|x| x.abs() > 1e-9 * scale) {
            if first < 0.0 {
                col.mapv_inplace(|x| -x);
            }
        }
    }
}

pub fn classical_mds(dm: &DistanceMatrix, k: usize) -> Result<Embedding> {
    let n = dm.n();
    if n < 2 || k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "classical MDS needs n >= 2 and 1 <= k <= n, got n={n}, k={k}"
        )));
    }

    // B = −½ J D² J
    let mut sq = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let d = dm.get(i, j);
            sq[[i, j]] = d * d;
        }
    }
    let mut row_means = vec![0.0; n];
    for (i, m) in row_means.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..n {
            s += sq[[i, j]];
        }
        *m = s / n as f64;
    }
    let mut grand = 0.0;
    for m in &row_means {
        grand += m;
    }
    grand /= n as f64;
    let mut b = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            b[[i, j]] = -0.5 * (sq[[i, j]] - row_means[i] - row_means[j] + grand);
        }
    }

    let eig = symmetric_eigen(&b)?;
    let mut coords = Array2::<f64>::zeros((n, k));
    for axis in 0..k {
        let scale = eig.values[axis].max(0.0).sqrt();
        for i in 0..n {
            coords[[i, axis]] = eig.vectors[[i, axis]] * scale;
        }
    }
    normalize_orientation(&mut coords);
    let (raw, normalized) = stress(coords.view(), dm);
    Ok(Embedding {
        coords,
        stress: raw,
        normalized_stress: normalized,
        iterations: 0,
        converged: true,
        stress_history: vec![raw],
        eigenvalues: eig.values[..k].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SmacofInit {
    /// Classical MDS solution.
    Classical,
    /// Uniform [0, 1) coordinates from `ChaCha8Rng::seed_from_u64(seed)`.
    Random,
    Given(Array2<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmacofConfig {
    pub max_iter: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for SmacofConfig {
    fn default() -> Self {
        SmacofConfig {
            max_iter: 300,
            eps: 1e-6,
            seed: 42,
        }
    }
}

/// X⁺ = n⁻¹ B(X) X, i.e. x⁺_i = n⁻¹ Σ_{j≠i} (δ_ij / d_ij) (x_i − x_j).
fn guttman_transform(x: &Array2<f64>, dm: &DistanceMatrix) -> Array2<f64> {
    let (n, k) = x.dim();
    let mut out = Array2::<f64>::zeros((n, k));
    let mut acc = vec![0.0; k];
    for i in 0..n {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = row_dist(x.view(), i, j);
            if d == 0.0 {
                continue;
            }
            let ratio = dm.get(i, j) / d;
            for (c, a) in acc.iter_mut().enumerate() {
                *a += ratio * (x[[i, c]] - x[[j, c]]);
            }
        }
        for (c, a) in acc.iter().enumerate() {
            out[[i, c]] = a / n as f64;
        }
    }
    out
}

/// Two-dimensional SMACOF. Stops when the relative stress decrease falls
/// below `eps`, when normalized stress reaches 1e-12, or after `max_iter`
/// Guttman transforms.
pub fn smacof(dm: &DistanceMatrix, init: SmacofInit, config: SmacofConfig) -> Result<Embedding> {
    const K: usize = 2;
    let n = dm.n();
    if n < 3 {
        return Err(Error::InvalidInput(format!("SMACOF needs n >= 3, got {n}")));
    }
    if config.eps.is_nan() || config.eps <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "SMACOF eps must be > 0, got {}",
            config.eps
        )));
    }
    if dm.upper_triangle().all(|d| d == 0.0) {
        return Err(Error::InvalidInput(
            "all-zero distance matrix carries no configuration information".into(),
        ));
    }

    let mut x = match init {
        SmacofInit::Classical => classical_mds(dm, K)?.coords,
        SmacofInit::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Array2::from_shape_simple_fn((n, K), || rng.random::<f64>())
        }
        SmacofInit::Given(coords) => {
            if coords.dim() != (n, K) {
                return Err(Error::InvalidInput(format!(
                    "initial configuration must be {n}x{K}, got {:?}",
                    coords.dim()
                )));
            }
            coords
        }
    };

    let (mut current, mut normalized) = stress(x.view(), dm);
    let mut history = vec![current];
    let mut iterations = 0;
    let mut converged = normalized < STRESS_FLOOR;
    while !converged && iterations < config.max_iter {
        x = guttman_transform(&x, dm);
        iterations += 1;
        let (next, next_normalized) = stress(x.view(), dm);
        history.push(next);
        converged = next_normalized < STRESS_FLOOR || (current - next) < config.eps * current;
        current = next;
        normalized = next_normalized;
    }
    log::debug!(
        "smacof: n={n} iterations={iterations} converged={converged} normalized_stress={normalized:e}"
    );

    normalize_orientation(&mut x);
    let (raw, normalized) = stress(x.view(), dm);
    Ok(Embedding {
        coords: x,
        stress: raw,
        normalized_stress: normalized,
        iterations,
        converged,
        stress_history: history,
        eigenvalues: Vec::new(),
    })
}
