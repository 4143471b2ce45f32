mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use repgeom::archive::read_archive;
use repgeom::pipeline::{analyze, project_layers, AnalysisConfig, EmbedMethod, EmbeddingSet};
use repgeom::render::{label_color, render, RenderOptions, METRICS_HEADER};

const FIGURES: [&str; 8] = [
    "edd_curve.svg",
    "gdv_curves.svg",
    "scatter_by_narrative.svg",
    "scatter_by_style.svg",
    "ellipses_by_narrative_block1.svg",
    "ellipses_by_style_block4.svg",
    "ellipses_by_style_block12.svg",
    "metrics.csv",
];

fn render_fixture(out: &Path) {
    let archive = read_archive(&common::fixture_dir()).unwrap();
    let config = AnalysisConfig {
        method: EmbedMethod::Classical,
        ..AnalysisConfig::default()
    };
    let report = analyze(&archive, &config).unwrap();
    let set = EmbeddingSet::from_embeddings(&project_layers(&archive, &config).unwrap(), &config);
    render(
        &report,
        Some(&set),
        archive.manifest(),
        out,
        &RenderOptions::default(),
    )
    .unwrap();
}

#[test]
fn scatter_grids_have_one_panel_per_block() {
    let dir = tempfile::tempdir().unwrap();
    render_fixture(dir.path());
    for key in ["narrative", "style"] {
        let svg = fs::read_to_string(dir.path().join(format!("scatter_by_{key}.svg"))).unwrap();
        assert_eq!(svg.matches("<g class=\"panel\"").count(), 12);
        assert!(svg.contains("id=\"block12\""));
        assert!(svg.contains(label_color(1)) && svg.contains(label_color(7)));
    }
}

#[test]
fn metrics_csv_has_header_and_one_row_per_block() {
    let dir = tempfile::tempdir().unwrap();
    render_fixture(dir.path());
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 13);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[12].starts_with("12,"));
}

#[test]
fn rerender_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    render_fixture(a.path());
    render_fixture(b.path());
    for f in FIGURES.iter().chain(["report.json"].iter()) {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

fn repgeom(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_repgeom"))
        .args(args)
        .output()
        .expect("spawn repgeom")
}

#[test]
fn cli_report_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let fixture = common::fixture_dir();
    let o = repgeom(&[
        "report",
        fixture.to_str().unwrap(),
        "--method",
        "classical",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("argmin GDV: narrative block 4, style block 1"),
        "{stdout}"
    );
    for f in FIGURES
        .iter()
        .chain(["report.json", "embeddings.json", "manifest.json"].iter())
    {
        assert!(out.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn cli_analyze_embed_render_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let fixture = common::fixture_dir();
    let fixture = fixture.to_str().unwrap();

    assert!(repgeom(&["analyze", fixture, "--out", out])
        .status
        .success());
    let o = repgeom(&["--label-key", "style", "render", out]);
    assert!(o.status.success());
    assert!(dir.path().join("gdv_curves.svg").is_file());
    assert!(!dir.path().join("scatter_by_style.svg").exists());

    assert!(
        repgeom(&["embed", fixture, "--method", "classical", "--out", out])
            .status
            .success()
    );
    let o = repgeom(&[
        "--label-key",
        "style",
        "--ellipse-blocks",
        "2",
        "render",
        out,
    ]);
    assert!(o.status.success());
    assert!(dir.path().join("scatter_by_style.svg").is_file());
    assert!(dir.path().join("ellipses_by_style_block2.svg").is_file());
    assert!(!dir.path().join("scatter_by_narrative.svg").exists());
}

#[test]
fn cli_render_of_empty_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = repgeom(&["render", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cli_validate_reports_manifest_violations() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::fixture_dir();
    for f in ["header.json", "activations.f32"] {
        fs::copy(fixture.join(f), dir.path().join(f)).unwrap();
    }
    let header = fs::read_to_string(dir.path().join("header.json")).unwrap();
    let broken = header.replacen("\"style_id\": 1,", "\"style_id\": 9,", 1);
    assert_ne!(header, broken);
    fs::write(dir.path().join("header.json"), broken).unwrap();
    let o = repgeom(&["validate", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("violation"));
}

#[test]
fn cli_rejects_zero_threads_as_bad_argument() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::fixture_dir();
    let o = repgeom(&[
        "--threads",
        "0",
        "analyze",
        fixture.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}
