//! Per-layer analysis of an activation archive.
//!
//! Layers are independent tasks run on a rayon pool; every per-layer
//! computation is sequential, so results do not depend on the thread count.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{ActivationArchive, LayerSlice};
use crate::corpus::{label_vector, validate_manifest, LabelKey};
use crate::embed::{classical_mds, smacof, Embedding, SmacofConfig, SmacofInit};
use crate::error::{Error, Result};
use crate::metrics::{
    distance_matrix, edd_with_reference, gdv, mean_pairwise_distance, EddConfig, EddReference,
    EddResult, GdvResult,
};

pub const REPORT_FILE: &str = "report.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Classical,
    Smacof,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub bins: usize,
    pub ref_draws: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub eps: f64,
    pub method: EmbedMethod,
    /// Worker threads; `None` uses all cores. Not echoed in reports since
    /// it cannot change any result.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bins: 100,
            ref_draws: 20,
            seed: 42,
            max_iter: 300,
            eps: 1e-6,
            method: EmbedMethod::Smacof,
            threads: None,
        }
    }
}

impl AnalysisConfig {
    pub fn edd(&self) -> EddConfig {
        EddConfig {
            bins: self.bins,
            ref_draws: self.ref_draws,
            seed: self.seed,
        }
    }

    pub fn smacof(&self) -> SmacofConfig {
        SmacofConfig {
            max_iter: self.max_iter,
            eps: self.eps,
            seed: self.seed,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::InvalidInput("--threads must be >= 1".into()));
            }
            builder = builder.num_threads(t);
        }
        builder
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMetrics {
    /// 1-based transformer block number.
    pub block: usize,
    pub edd: EddResult,
    pub gdv_narrative: GdvResult,
    pub gdv_style: GdvResult,
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub num_samples: usize,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub config: AnalysisConfig,
    pub per_layer: Vec<LayerMetrics>,
    pub argmin_gdv_narrative: usize,
    pub argmin_gdv_style: usize,
    pub argmin_tie_rule: String,
    /// Entropy (bits) of each isotropic reference draw used for EDD.
    pub edd_reference_draws: Vec<f64>,
}

impl AnalysisReport {
    pub fn gdv_curve(&self, key: LabelKey) -> Vec<f64> {
        self.per_layer
            .iter()
            .map(|m| match key {
                LabelKey::Narrative => m.gdv_narrative.value,
                LabelKey::Style => m.gdv_style.value,
            })
            .collect()
    }

    pub fn argmin_gdv(&self, key: LabelKey) -> usize {
        match key {
            LabelKey::Narrative => self.argmin_gdv_narrative,
            LabelKey::Style => self.argmin_gdv_style,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// 1-based block of the first minimum.
pub fn argmin_block(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i + 1)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn check_archive(archive: &ActivationArchive) -> Result<()> {
    archive.check_finite()?;
    let report = validate_manifest(archive.manifest());
    if !report.is_valid() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidManifest(msgs.join("; ")));
    }
    for w in report.warnings() {
        log::warn!("{w}");
    }
    Ok(())
}

fn layer_metrics(
    slice: &LayerSlice,
    narrative: &[u32],
    style: &[u32],
    reference: &EddReference,
) -> Result<LayerMetrics> {
    let dm = distance_matrix(slice.points.view())?;
    Ok(LayerMetrics {
        block: slice.block(),
        edd: edd_with_reference(&dm, reference)?,
        gdv_narrative: gdv(slice.points.view(), narrative)?,
        gdv_style: gdv(slice.points.view(), style)?,
        mean_distance: mean_pairwise_distance(&dm)?,
    })
}

pub fn analyze(archive: &ActivationArchive, config: &AnalysisConfig) -> Result<AnalysisReport> {
    check_archive(archive)?;
    let manifest = archive.manifest();
    let narrative = label_vector(manifest, LabelKey::Narrative);
    let style = label_vector(manifest, LabelKey::Style);
    let reference =
        EddReference::compute(archive.num_samples(), archive.hidden_dim(), config.edd())?;

    let pool = config.pool()?;
    let per_layer: Vec<LayerMetrics> = pool.install(|| {
        (0..archive.num_layers())
            .into_par_iter()
            .map(|l| layer_metrics(&archive.layer_slice(l)?, &narrative, &style, &reference))
            .collect::<Result<Vec<_>>>()
    })?;

    let narr_curve: Vec<f64> = per_layer.iter().map(|m| m.gdv_narrative.value).collect();
    let style_curve: Vec<f64> = per_layer.iter().map(|m| m.gdv_style.value).collect();
    Ok(AnalysisReport {
        num_samples: archive.num_samples(),
        num_layers: archive.num_layers(),
        hidden_dim: archive.hidden_dim(),
        config: config.clone(),
        argmin_gdv_narrative: argmin_block(&narr_curve).expect("at least one layer"),
        argmin_gdv_style: argmin_block(&style_curve).expect("at least one layer"),
        argmin_tie_rule: "lowest_block".into(),
        edd_reference_draws: reference.draw_entropies.clone(),
        per_layer,
    })
}

/// 2-D embedding of every layer's distance matrix, in block order.
pub fn project_layers(
    archive: &ActivationArchive,
    config: &AnalysisConfig,
) -> Result<Vec<Embedding>> {
    archive.check_finite()?;
    let pool = config.pool()?;
    pool.install(|| {
        (0..archive.num_layers())
            .into_par_iter()
            .map(|l| {
                let slice = archive.layer_slice(l)?;
                let dm = distance_matrix(slice.points.view())?;
                match config.method {
                    EmbedMethod::Classical => classical_mds(&dm, 2),
                    EmbedMethod::Smacof => smacof(&dm, SmacofInit::Classical, config.smacof()),
                }
            })
            .collect()
    })
}

/// Serialized form of one layer's embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEmbedding {
    pub block: usize,
    pub coords: Vec<[f64; 2]>,
    pub stress: f64,
    pub normalized_stress: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub method: EmbedMethod,
    pub config: AnalysisConfig,
    pub layers: Vec<LayerEmbedding>,
}

impl EmbeddingSet {
    pub fn from_embeddings(embeddings: &[Embedding], config: &AnalysisConfig) -> Self {
        let layers = embeddings
            .iter()
            .enumerate()
            .map(|(l, e)| LayerEmbedding {
                block: l + 1,
                coords: e.coords.rows().into_iter().map(|r| [r[0], r[1]]).collect(),
                stress: e.stress,
                normalized_stress: e.normalized_stress,
                iterations: e.iterations,
                converged: e.converged,
            })
            .collect();
        EmbeddingSet {
            method: config.method,
            config: config.clone(),
            layers,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_takes_first_minimum() {
        assert_eq!(argmin_block(&[0.0, -1.0, -1.0, 2.0]), Some(2));
        assert_eq!(argmin_block(&[3.0]), Some(1));
        assert_eq!(argmin_block(&[]), None);
        assert_eq!(argmin_block(&[-2.0, -1.0, -2.0]), Some(1));
    }

    #[test]
    fn threads_echo_is_not_serialized() {
        let cfg = AnalysisConfig {
            threads: Some(3),
            ..AnalysisConfig::default()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(!json.contains("threads"));
        let back: AnalysisConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.threads, None);
    }

    #[test]
    fn zero_threads_rejected() {
        let cfg = AnalysisConfig {
            threads: Some(0),
            ..AnalysisConfig::default()
        };
        assert!(matches!(cfg.pool(), Err(Error::InvalidInput(_))));
    }
}
