//! On-disk activation archive: `header.json` plus raw little-endian float32
//! values in `activations.f32`, laid out `[sample][layer][dim]`.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusManifest;
use crate::error::{Error, Result};

pub const ARCHIVE_FORMAT_VERSION: u32 = 1;
pub const HEADER_FILE: &str = "header.json";
pub const DATA_FILE: &str = "activations.f32";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub format_version: u32,
    pub num_samples: usize,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    pub manifest: CorpusManifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationArchive {
    num_samples: usize,
    num_layers: usize,
    hidden_dim: usize,
    data: Vec<f32>,
    manifest: CorpusManifest,
}

/// One layer's CLS vectors, widened to f64. Row `i` is sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSlice {
    pub layer_index: usize,
    pub points: Array2<f64>,
}

impl LayerSlice {
    /// 1-based block number used in all user-facing output.
    pub fn block(&self) -> usize {
        self.layer_index + 1
    }
}

impl ActivationArchive {
    /// Checks shape and manifest binding. Finiteness is checked by
    /// [`ActivationArchive::check_finite`], on write and on read.
    pub fn new(
        num_samples: usize,
        num_layers: usize,
        hidden_dim: usize,
        data: Vec<f32>,
        manifest: CorpusManifest,
    ) -> Result<Self> {
        if num_samples == 0 || num_layers == 0 || hidden_dim == 0 {
            return Err(Error::Format(format!(
                "dimensions must be >= 1, got N={num_samples} L={num_layers} H={hidden_dim}"
            )));
        }
        let expected = num_samples
            .checked_mul(num_layers)
            .and_then(|x| x.checked_mul(hidden_dim))
            .ok_or_else(|| Error::Format("tensor size overflows usize".into()))?;
        if data.len() != expected {
            return Err(Error::Format(format!(
                "data has {} elements, shape [{num_samples}, {num_layers}, {hidden_dim}] needs {expected}",
                data.len()
            )));
        }
        if manifest.samples.len() != num_samples {
            return Err(Error::ManifestMismatch {
                manifest: manifest.samples.len(),
                archive: num_samples,
            });
        }
        Ok(ActivationArchive {
            num_samples,
            num_layers,
            hidden_dim,
            data,
            manifest,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }

    #[inline]
    pub fn index(&self, sample: usize, layer: usize, dim: usize) -> usize {
        (sample * self.num_layers + layer) * self.hidden_dim + dim
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn header(&self) -> ArchiveHeader {
        ArchiveHeader {
            format_version: ARCHIVE_FORMAT_VERSION,
            num_samples: self.num_samples,
            num_layers: self.num_layers,
            hidden_dim: self.hidden_dim,
            dtype: "float32".into(),
            byte_order: "little".into(),
            layout: "sample_layer_dim".into(),
            manifest: self.manifest.clone(),
        }
    }

    pub fn layer_slice(&self, layer_index: usize) -> Result<LayerSlice> {
        if layer_index >= self.num_layers {
            return Err(Error::InvalidInput(format!(
                "layer index {layer_index} out of range (archive has {} layers)",
                self.num_layers
            )));
        }
        let h = self.hidden_dim;
        let mut points = Array2::<f64>::zeros((self.num_samples, h));
        for (i, mut row) in points.rows_mut().into_iter().enumerate() {
            let start = self.index(i, layer_index, 0);
            for (dst, src) in row.iter_mut().zip(&self.data[start..start + h]) {
                *dst = f64::from(*src);
            }
        }
        Ok(LayerSlice {
            layer_index,
            points,
        })
    }

    pub fn layer_slices(&self) -> impl Iterator<Item = LayerSlice> + '_ {
        (0..self.num_layers).map(move |l| self.layer_slice(l).expect("index in range"))
    }
}

pub fn write_archive(archive: &ActivationArchive, dir: &Path) -> Result<()> {
    archive.check_finite()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut header = serde_json::to_string_pretty(&archive.header()).expect("header serializes");
    header.push('\n');
    let header_path = dir.join(HEADER_FILE);
    fs::write(&header_path, header).map_err(|e| Error::io(&header_path, e))?;

    let mut bytes = Vec::with_capacity(archive.data.len() * 4);
    for v in &archive.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let data_path = dir.join(DATA_FILE);
    fs::write(&data_path, bytes).map_err(|e| Error::io(&data_path, e))
}

pub fn read_header(dir: &Path) -> Result<ArchiveHeader> {
    let header_path = dir.join(HEADER_FILE);
    let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: header_path.clone(),
        source,
    })?;
    // Check the version before the full schema so a future layout reports
    // a version mismatch rather than a missing field.
    if let Some(v) = raw.get("format_version").and_then(|v| v.as_u64()) {
        if v != u64::from(ARCHIVE_FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: v as u32,
                expected: ARCHIVE_FORMAT_VERSION,
            });
        }
    }
    let header: ArchiveHeader = serde_json::from_value(raw).map_err(|source| Error::Json {
        path: header_path,
        source,
    })?;
    if header.manifest.format_version != crate::corpus::MANIFEST_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: header.manifest.format_version,
            expected: crate::corpus::MANIFEST_FORMAT_VERSION,
        });
    }
    if header.dtype != "float32"
        || header.byte_order != "little"
        || header.layout != "sample_layer_dim"
    {
        return Err(Error::Format(format!(
            "unsupported encoding dtype={} byte_order={} layout={}",
            header.dtype, header.byte_order, header.layout
        )));
    }
    Ok(header)
}

pub fn read_archive(dir: &Path) -> Result<ActivationArchive> {
    let header = read_header(dir)?;
    let data_path = dir.join(DATA_FILE);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;

    let expected = (header.num_samples as u64)
        .saturating_mul(header.num_layers as u64)
        .saturating_mul(header.hidden_dim as u64)
        .saturating_mul(4);
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let archive = ActivationArchive::new(
        header.num_samples,
        header.num_layers,
        header.hidden_dim,
        data,
        header.manifest,
    )?;
    archive.check_finite()?;
    Ok(archive)
}
