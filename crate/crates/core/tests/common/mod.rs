//! Shared helpers for integration tests: the synthetic fixture generator and
//! naive reference implementations used as oracles.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use repgeom::archive::ActivationArchive;
use repgeom::corpus::{CorpusManifest, SampleRecord};

pub const FIXTURE_NARRATIVES: u32 = 10;
pub const FIXTURE_STYLES: u32 = 7;
pub const FIXTURE_LAYERS: usize = 12;
pub const FIXTURE_DIM: usize = 32;
const FIXTURE_SEED: u64 = 20240501;

/// Per-block scale of the style centers and narrative centers. Style is
/// strongest at block 1, narrative at block 4.
const STYLE_AMPLITUDE: [f64; FIXTURE_LAYERS] =
    [3.0, 2.0, 1.4, 0.4, 0.8, 1.0, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6];
const NARRATIVE_AMPLITUDE: [f64; FIXTURE_LAYERS] =
    [0.4, 1.0, 1.8, 3.0, 2.2, 1.8, 1.5, 1.3, 1.2, 1.1, 1.0, 0.9];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_archive")
}

/// Full narrative × style grid with sample_id = (narrative−1)·S + (style−1).
pub fn grid_manifest(narratives: u32, styles: u32) -> CorpusManifest {
    let mut m = CorpusManifest::standard_grid();
    m.narratives.truncate(narratives as usize);
    m.styles.truncate(styles as usize);
    let mut id = 0;
    for n in 1..=narratives {
        for s in 1..=styles {
            let text = format!("synthetic fable {n} told in style {s}");
            m.samples.push(SampleRecord::from_text(id, n, s, &text));
            id += 1;
        }
    }
    m
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// 70 samples, 12 blocks, 32 dims. Each block is
/// `a_n·narrative_center + a_s·style_center + block_offset + noise`.
pub fn synthetic_archive() -> ActivationArchive {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let narrative_centers = gaussian(&mut rng, FIXTURE_NARRATIVES as usize, FIXTURE_DIM);
    let style_centers = gaussian(&mut rng, FIXTURE_STYLES as usize, FIXTURE_DIM);
    let manifest = grid_manifest(FIXTURE_NARRATIVES, FIXTURE_STYLES);
    let n = manifest.samples.len();

    let mut data = vec![0f32; n * FIXTURE_LAYERS * FIXTURE_DIM];
    for l in 0..FIXTURE_LAYERS {
        let offset: Vec<f64> = (0..FIXTURE_DIM)
            .map(|_| rng.random_range(-5.0..5.0))
            .collect();
        for rec in &manifest.samples {
            let nc = narrative_centers.row(rec.narrative_id as usize - 1);
            let sc = style_centers.row(rec.style_id as usize - 1);
            for d in 0..FIXTURE_DIM {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let v =
                    NARRATIVE_AMPLITUDE[l] * nc[d] + STYLE_AMPLITUDE[l] * sc[d] + offset[d] + noise;
                data[(rec.sample_id * FIXTURE_LAYERS + l) * FIXTURE_DIM + d] = v as f32;
            }
        }
    }
    ActivationArchive::new(n, FIXTURE_LAYERS, FIXTURE_DIM, data, manifest).expect("fixture shape")
}

pub fn naive_distances(x: &Array2<f64>) -> Vec<Vec<f64>> {
    let n = x.nrows();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                let t = x[[i, c]] - x[[j, c]];
                s += t * t;
            }
            d[i][j] = s.sqrt();
        }
    }
    d
}

pub fn naive_mean_distance(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut s = 0.0;
    let mut c = 0.0;
    for i in 0..n {
        for j in 0..i {
            s += d[i][j];
            c += 1.0;
        }
    }
    s / c
}

pub fn naive_gdv(x: &Array2<f64>, labels: &[u32]) -> f64 {
    let (n, dim) = x.dim();
    let mut z = Array2::<f64>::zeros((n, dim));
    for c in 0..dim {
        let mean = x.column(c).sum() / n as f64;
        let var = x.column(c).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if var > 0.0 {
            for i in 0..n {
                z[[i, c]] = 0.5 * (x[[i, c]] - mean) / var.sqrt();
            }
        }
    }
    let d = naive_distances(&z);
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mean_between = |a: u32, b: u32| {
        let (mut s, mut c) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let pair = if a == b { i < j } else { true };
                if pair && labels[i] == a && labels[j] == b {
                    s += d[i][j];
                    c += 1.0;
                }
            }
        }
        if c == 0.0 {
            0.0
        } else {
            s / c
        }
    };
    let intra: f64 =
        classes.iter().map(|&a| mean_between(a, a)).sum::<f64>() / classes.len() as f64;
    let mut inter = 0.0;
    let mut pairs = 0.0;
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            inter += mean_between(a, b);
            pairs += 1.0;
        }
    }
    (intra - inter / pairs) / (dim as f64).sqrt()
}

pub fn naive_entropy_bits(d: &[Vec<f64>], bins: usize) -> f64 {
    let n = d.len();
    let mut vals = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            vals.push(d[i][j]);
        }
    }
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return 0.0;
    }
    let mut hist = vec![0usize; bins];
    for v in &vals {
        let b = (((v - lo) / (hi - lo)) * bins as f64).floor() as usize;
        hist[b.min(bins - 1)] += 1;
    }
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / vals.len() as f64;
            -p * p.log2()
        })
        .sum()
}

pub fn naive_edd(x: &Array2<f64>, bins: usize, ref_draws: usize, seed: u64) -> f64 {
    let (n, dim) = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reference = 0.0;
    for _ in 0..ref_draws {
        let mut cloud = Array2::<f64>::zeros((n, dim));
        for i in 0..n {
            for c in 0..dim {
                cloud[[i, c]] = StandardNormal.sample(&mut rng);
            }
        }
        reference += naive_entropy_bits(&naive_distances(&cloud), bins);
    }
    reference /= ref_draws as f64;
    naive_entropy_bits(&naive_distances(x), bins) / reference
}

/// Points drawn uniformly from a square, as a realizable 2-D configuration.
pub fn planar_points(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, 2), || rng.random_range(-10.0..10.0))
}

/// `clusters` tight Gaussian blobs of `per_cluster` points each.
pub fn tight_clusters(
    rng: &mut ChaCha8Rng,
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    sigma: f64,
) -> Array2<f64> {
    let centers = gaussian(rng, clusters, dim);
    let mut x = Array2::<f64>::zeros((clusters * per_cluster, dim));
    for c in 0..clusters {
        for p in 0..per_cluster {
            for d in 0..dim {
                let e: f64 = StandardNormal.sample(rng);
                x[[c * per_cluster + p, d]] = centers[[c, d]] + sigma * e;
            }
        }
    }
    x
}
