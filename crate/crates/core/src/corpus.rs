//! Labeled corpus structure: narratives × writing styles, per-sample digests,
//! and the prompt protocol used to produce the stylistic variants.
//!
//! Texts are never stored, only a SHA-256 digest of the LF-normalized UTF-8
//! text together with its word count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleLabel {
    pub id: u32,
    pub name: String,
    /// Empty for the unmodified original text.
    pub prompt_template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeLabel {
    pub id: u32,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub narrative_id: u32,
    pub style_id: u32,
    pub text_digest: String,
    pub word_count: u32,
}

impl SampleRecord {
    pub fn from_text(sample_id: usize, narrative_id: u32, style_id: u32, text: &str) -> Self {
        SampleRecord {
            sample_id,
            narrative_id,
            style_id,
            text_digest: text_digest(text),
            word_count: word_count(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub format_version: u32,
    pub narratives: Vec<NarrativeLabel>,
    pub styles: Vec<StyleLabel>,
    pub samples: Vec<SampleRecord>,
    /// The three ordered prompt texts of the generation procedure.
    pub protocol: Vec<String>,
}

/// Which label set to group samples by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKey {
    Narrative,
    Style,
}

impl LabelKey {
    pub const ALL: [LabelKey; 2] = [LabelKey::Narrative, LabelKey::Style];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelKey::Narrative => "narrative",
            LabelKey::Style => "style",
        }
    }
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "narrative" => Ok(LabelKey::Narrative),
            "style" => Ok(LabelKey::Style),
            other => Err(Error::InvalidInput(format!("unknown label key {other:?}"))),
        }
    }
}

/// SHA-256 of the UTF-8 text with CRLF and lone CR normalized to LF, as lowercase hex.
pub fn text_digest(text: &str) -> String {
    let normalized = text.replace("\r\n", "\n").replace('\r', "\n");
    hex::encode(Sha256::digest(normalized.as_bytes()))
}

pub fn word_count(text: &str) -> u32 {
    text.split_whitespace().count() as u32
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoSamples,
    DuplicateCell { narrative_id: u32, style_id: u32 },
    DuplicateNarrativeId(u32),
    DuplicateStyleId(u32),
    NonContiguousNarrativeIds,
    NonContiguousStyleIds,
    MultipleOriginalStyles(Vec<u32>),
    UnknownNarrative { sample_id: usize, narrative_id: u32 },
    UnknownStyle { sample_id: usize, style_id: u32 },
    SampleIdOutOfOrder { position: usize, sample_id: usize },
    ZeroWordCount { sample_id: usize },
    BadDigest { sample_id: usize },
    ProtocolLength(usize),
    FormatVersion(u32),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSamples => write!(f, "no samples"),
            Violation::DuplicateCell {
                narrative_id,
                style_id,
            } => write!(
                f,
                "duplicate cell (narrative_id={narrative_id}, style_id={style_id})"
            ),
            Violation::DuplicateNarrativeId(id) => write!(f, "duplicate narrative id {id}"),
            Violation::DuplicateStyleId(id) => write!(f, "duplicate style id {id}"),
            Violation::NonContiguousNarrativeIds => {
                write!(f, "narrative ids are not contiguous from 1")
            }
            Violation::NonContiguousStyleIds => write!(f, "style ids are not contiguous from 1"),
            Violation::MultipleOriginalStyles(ids) => {
                write!(
                    f,
                    "more than one style has an empty prompt_template: {ids:?}"
                )
            }
            Violation::UnknownNarrative {
                sample_id,
                narrative_id,
            } => write!(
                f,
                "sample {sample_id} references unknown narrative_id {narrative_id}"
            ),
            Violation::UnknownStyle {
                sample_id,
                style_id,
            } => write!(
                f,
                "sample {sample_id} references unknown style_id {style_id}"
            ),
            Violation::SampleIdOutOfOrder {
                position,
                sample_id,
            } => write!(
                f,
                "sample at position {position} has sample_id {sample_id} (expected {position})"
            ),
            Violation::ZeroWordCount { sample_id } => {
                write!(f, "sample {sample_id} has word_count 0")
            }
            Violation::BadDigest { sample_id } => {
                write!(
                    f,
                    "sample {sample_id} text_digest is not 64 lowercase hex chars"
                )
            }
            Violation::ProtocolLength(n) => {
                write!(f, "protocol must hold 3 prompt texts, found {n}")
            }
            Violation::FormatVersion(v) => write!(f, "format_version {v} (expected 1)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Every narrative × style cell is present exactly once.
    pub grid_complete: bool,
    /// (narrative_id, style_id) cells absent from a partial grid.
    pub missing_cells: Vec<(u32, u32)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.grid_complete || self.missing_cells.is_empty() {
            return Vec::new();
        }
        let cells: Vec<String> = self
            .missing_cells
            .iter()
            .map(|(n, s)| format!("({n},{s})"))
            .collect();
        vec![format!(
            "partial grid: {} missing (narrative, style) cells: {}",
            cells.len(),
            cells.join(" ")
        )]
    }
}

fn contiguous_from_one(ids: &[u32]) -> bool {
    let set: BTreeSet<u32> = ids.iter().copied().collect();
    set.len() == ids.len() && set.iter().copied().eq(1..=ids.len() as u32)
}

fn duplicates(ids: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let mut seen = BTreeSet::new();
    let mut dup = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dup.insert(id);
        }
    }
    dup.into_iter().collect()
}

pub fn validate_manifest(manifest: &CorpusManifest) -> ValidationReport {
    let mut violations = Vec::new();

    if manifest.format_version != MANIFEST_FORMAT_VERSION {
        violations.push(Violation::FormatVersion(manifest.format_version));
    }
    if manifest.protocol.len() != 3 {
        violations.push(Violation::ProtocolLength(manifest.protocol.len()));
    }

    let narrative_ids: Vec<u32> = manifest.narratives.iter().map(|n| n.id).collect();
    let style_ids: Vec<u32> = manifest.styles.iter().map(|s| s.id).collect();
    for id in duplicates(narrative_ids.iter().copied()) {
        violations.push(Violation::DuplicateNarrativeId(id));
    }
    for id in duplicates(style_ids.iter().copied()) {
        violations.push(Violation::DuplicateStyleId(id));
    }
    if !contiguous_from_one(&narrative_ids) {
        violations.push(Violation::NonContiguousNarrativeIds);
    }
    if !contiguous_from_one(&style_ids) {
        violations.push(Violation::NonContiguousStyleIds);
    }
    let originals: Vec<u32> = manifest
        .styles
        .iter()
        .filter(|s| s.prompt_template.is_empty())
        .map(|s| s.id)
        .collect();
    if originals.len() > 1 {
        violations.push(Violation::MultipleOriginalStyles(originals));
    }

    if manifest.samples.is_empty() {
        violations.push(Violation::NoSamples);
    }

    let known_n: BTreeSet<u32> = narrative_ids.iter().copied().collect();
    let known_s: BTreeSet<u32> = style_ids.iter().copied().collect();
    let mut cells: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (position, sample) in manifest.samples.iter().enumerate() {
        if sample.sample_id != position {
            violations.push(Violation::SampleIdOutOfOrder {
                position,
                sample_id: sample.sample_id,
            });
        }
        if !known_n.contains(&sample.narrative_id) {
            violations.push(Violation::UnknownNarrative {
                sample_id: sample.sample_id,
                narrative_id: sample.narrative_id,
            });
        }
        if !known_s.contains(&sample.style_id) {
            violations.push(Violation::UnknownStyle {
                sample_id: sample.sample_id,
                style_id: sample.style_id,
            });
        }
        if sample.word_count == 0 {
            violations.push(Violation::ZeroWordCount {
                sample_id: sample.sample_id,
            });
        }
        let digest_ok = sample.text_digest.len() == 64
            && sample
                .text_digest
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if !digest_ok {
            violations.push(Violation::BadDigest {
                sample_id: sample.sample_id,
            });
        }
        let count = cells
            .entry((sample.narrative_id, sample.style_id))
            .or_insert(0);
        *count += 1;
        if *count == 2 {
            violations.push(Violation::DuplicateCell {
                narrative_id: sample.narrative_id,
                style_id: sample.style_id,
            });
        }
    }

    let mut missing_cells = Vec::new();
    for n in &known_n {
        for s in &known_s {
            if !cells.contains_key(&(*n, *s)) {
                missing_cells.push((*n, *s));
            }
        }
    }
    let grid_complete = !known_n.is_empty()
        && !known_s.is_empty()
        && missing_cells.is_empty()
        && manifest.samples.len() == known_n.len() * known_s.len()
        && cells.values().all(|&c| c == 1);

    ValidationReport {
        violations,
        grid_complete,
        missing_cells,
    }
}

/// Labels ordered by sample_id.
pub fn label_vector(manifest: &CorpusManifest, key: LabelKey) -> Vec<u32> {
    let mut samples: Vec<&SampleRecord> = manifest.samples.iter().collect();
    samples.sort_by_key(|s| s.sample_id);
    samples
        .into_iter()
        .map(|s| match key {
            LabelKey::Narrative => s.narrative_id,
            LabelKey::Style => s.style_id,
        })
        .collect()
}

impl CorpusManifest {
    /// Table of narratives, styles and protocol without any samples.
    pub fn standard_grid() -> Self {
        CorpusManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            narratives: standard_narratives(),
            styles: standard_styles(),
            samples: Vec::new(),
            protocol: standard_protocol(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: CorpusManifest =
            serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: manifest.format_version,
                expected: MANIFEST_FORMAT_VERSION,
            });
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn narrative_title(&self, id: u32) -> Option<&str> {
        self.narratives
            .iter()
            .find(|n| n.id == id)
            .map(|n| n.title.as_str())
    }

    pub fn style_name(&self, id: u32) -> Option<&str> {
        self.styles
            .iter()
            .find(|s| s.id == id)
            .map(|s| s.name.as_str())
    }

    pub fn label_name(&self, key: LabelKey, id: u32) -> Option<&str> {
        match key {
            LabelKey::Narrative => self.narrative_title(id),
            LabelKey::Style => self.style_name(id),
        }
    }

    /// Samples whose `<narrative_id>_<style_id>.txt` in `dir` is missing or
    /// no longer matches the recorded digest.
    pub fn verify_text_dir(&self, dir: &Path) -> Result<Vec<(usize, String)>> {
        let mut mismatches = Vec::new();
        for sample in &self.samples {
            let path = dir.join(format!("{}_{}.txt", sample.narrative_id, sample.style_id));
            match fs::read_to_string(&path) {
                Ok(text) => {
                    if text_digest(&text) != sample.text_digest {
                        mismatches.push((sample.sample_id, "digest mismatch".to_string()));
                    }
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    mismatches.push((sample.sample_id, format!("missing {}", path.display())));
                }
                Err(e) => return Err(Error::io(path, e)),
            }
        }
        Ok(mismatches)
    }
}

pub fn standard_narratives() -> Vec<NarrativeLabel> {
    [
        "The Town Mouse and the Country Mouse",
        "The Owl and the Grasshopper",
        "Mercury and the Woodman",
        "The Cat, the Cock and the Young Mouse",
        "The Ass and the Lap Dog",
        "The Wolf and the House Dog",
        "The Fox without a Tail",
        "The Bees and Wasps and the Hornet",
        "The Lark and Her Young Ones",
        "The Cat and the Old Rat",
    ]
    .iter()
    .enumerate()
    .map(|(i, title)| NarrativeLabel {
        id: i as u32 + 1,
        title: title.to_string(),
    })
    .collect()
}

pub fn standard_styles() -> Vec<StyleLabel> {
    [
        (
            "Adventure Tale",
            "Rephrase the fable into an adventure tale",
        ),
        (
            "Children Story",
            "Rephrase the fable into a children's story",
        ),
        (
            "Comedy Version",
            "Rephrase the fable into a comedic version",
        ),
        (
            "Historical Context",
            "Rephrase the fable in a historical context",
        ),
        ("Mystery Story", "Rephrase the fable into a mystery story"),
        ("Original", ""),
        (
            "Science-Fiction Setting",
            "Rephrase the fable into a science-fiction setting",
        ),
    ]
    .iter()
    .enumerate()
    .map(|(i, (name, prompt))| StyleLabel {
        id: i as u32 + 1,
        name: name.to_string(),
        prompt_template: prompt.to_string(),
    })
    .collect()
}

/// Step 1 is sent verbatim, step 2 carries the fable text, step 3 the style's
/// `prompt_template`.
pub fn standard_protocol() -> Vec<String> {
    vec![
        "Hello I have a fable that I'd like to present in different narrative styles. \
         My request is for you to creatively rephrase the fable into each of these styles. \
         Please maintain the core message of the fable in each variation but feel free to be \
         creative with the settings and styles."
            .to_string(),
        "{fable}".to_string(),
        "{prompt_template}".to_string(),
    ]
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn full_grid() -> CorpusManifest {
        let mut m = CorpusManifest::standard_grid();
        let mut sample_id = 0;
        for n in 1..=10 {
            for s in 1..=7 {
                m.samples.push(SampleRecord::from_text(
                    sample_id,
                    n,
                    s,
                    &format!("fable {n} told in style {s}"),
                ));
                sample_id += 1;
            }
        }
        m
    }

    #[test]
    fn full_grid_is_valid_and_complete() {
        let report = validate_manifest(&full_grid());
        assert!(report.is_valid(), "{:?}", report.violations);
        assert!(report.grid_complete);
        assert!(report.warnings().is_empty());
    }

    #[test]
    fn empty_samples_reported() {
        let report = validate_manifest(&CorpusManifest::standard_grid());
        assert!(report.violations.contains(&Violation::NoSamples));
        assert_eq!(Violation::NoSamples.to_string(), "no samples");
        assert!(!report.grid_complete);
    }

    #[test]
    fn duplicate_cell_reported() {
        let mut m = full_grid();
        m.samples[1].style_id = 1;
        let report = validate_manifest(&m);
        assert!(report.violations.contains(&Violation::DuplicateCell {
            narrative_id: 1,
            style_id: 1
        }));
        assert!(report
            .violations
            .iter()
            .any(|v| v.to_string().starts_with("duplicate cell")));
        assert!(!report.grid_complete);
    }

    #[test]
    fn partial_grid_is_a_warning() {
        let mut m = full_grid();
        m.samples.pop();
        let report = validate_manifest(&m);
        assert!(report.is_valid());
        assert!(!report.grid_complete);
        assert_eq!(report.missing_cells, vec![(10, 7)]);
        assert_eq!(report.warnings().len(), 1);
    }

    #[test]
    fn id_and_reference_violations() {
        let mut m = full_grid();
        m.styles[0].id = 9;
        m.styles[1].prompt_template.clear();
        m.samples[3].narrative_id = 42;
        m.samples[4].word_count = 0;
        m.samples[5].text_digest = "XYZ".into();
        m.samples[6].sample_id = 99;
        m.protocol.pop();
        let v = validate_manifest(&m).violations;
        assert!(v.contains(&Violation::NonContiguousStyleIds));
        assert!(v.contains(&Violation::MultipleOriginalStyles(vec![2, 6])));
        assert!(v.contains(&Violation::UnknownNarrative {
            sample_id: 3,
            narrative_id: 42
        }));
        assert!(v.contains(&Violation::ZeroWordCount { sample_id: 4 }));
        assert!(v.contains(&Violation::BadDigest { sample_id: 5 }));
        assert!(v.contains(&Violation::SampleIdOutOfOrder {
            position: 6,
            sample_id: 99
        }));
        assert!(v.contains(&Violation::ProtocolLength(2)));
    }

    #[test]
    fn label_vectors_on_full_grid() {
        let m = full_grid();
        let narr = label_vector(&m, LabelKey::Narrative);
        let style = label_vector(&m, LabelKey::Style);
        assert_eq!(narr.len(), 70);
        assert_eq!(style.len(), 70);
        for id in 1..=10 {
            assert_eq!(narr.iter().filter(|&&x| x == id).count(), 7);
        }
        for id in 1..=7 {
            assert_eq!(style.iter().filter(|&&x| x == id).count(), 10);
        }
    }

    #[test]
    fn label_vector_single_sample() {
        let mut m = CorpusManifest::standard_grid();
        m.samples.push(SampleRecord::from_text(0, 3, 5, "one text"));
        assert_eq!(label_vector(&m, LabelKey::Narrative), vec![3]);
        assert_eq!(label_vector(&m, LabelKey::Style), vec![5]);
    }

    #[test]
    fn unknown_label_key_is_error() {
        assert!("genre".parse::<LabelKey>().is_err());
        assert_eq!("style".parse::<LabelKey>().unwrap(), LabelKey::Style);
    }

    #[test]
    fn digest_normalizes_line_endings() {
        let lf = text_digest("a\nb\n");
        assert_eq!(lf, text_digest("a\r\nb\r\n"));
        assert_eq!(lf, text_digest("a\rb\r"));
        assert_eq!(
            text_digest(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(word_count("  The  cat\tsat\n"), 3);
    }

    #[test]
    fn manifest_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = full_grid();
        m.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"format_version\": 1"));
        assert!(text.contains("\"prompt_template\""));
        assert!(!text.contains('\r'));
        assert_eq!(CorpusManifest::load(&path).unwrap(), m);
    }

    #[test]
    fn text_dir_verification_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = CorpusManifest::standard_grid();
        fs::write(dir.path().join("1_1.txt"), "Once upon a time.").unwrap();
        fs::write(dir.path().join("1_2.txt"), "Another telling.").unwrap();
        m.samples
            .push(SampleRecord::from_text(0, 1, 1, "Once upon a time."));
        m.samples
            .push(SampleRecord::from_text(1, 1, 2, "Another telling."));
        assert!(m.verify_text_dir(dir.path()).unwrap().is_empty());
        fs::write(dir.path().join("1_2.txt"), "Edited telling.").unwrap();
        let bad = m.verify_text_dir(dir.path()).unwrap();
        assert_eq!(bad, vec![(1, "digest mismatch".to_string())]);
    }
}
