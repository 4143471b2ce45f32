mod common;

use std::fs;

use repgeom::archive::{read_archive, write_archive, DATA_FILE, HEADER_FILE};
use repgeom::corpus::validate_manifest;

/// Set `REPGEOM_WRITE_FIXTURE=1` to rewrite the checked-in archive.
#[test]
fn checked_in_fixture_matches_generator() {
    let archive = common::synthetic_archive();
    let dir = common::fixture_dir();
    if std::env::var_os("REPGEOM_WRITE_FIXTURE").is_some() {
        write_archive(&archive, &dir).unwrap();
    }
    let tmp = tempfile::tempdir().unwrap();
    write_archive(&archive, tmp.path()).unwrap();
    for file in [HEADER_FILE, DATA_FILE] {
        let expected = fs::read(dir.join(file)).unwrap();
        let actual = fs::read(tmp.path().join(file)).unwrap();
        assert!(
            expected == actual,
            "{file} differs from the generator output"
        );
    }
}

#[test]
fn fixture_is_a_complete_grid() {
    let archive = read_archive(&common::fixture_dir()).unwrap();
    assert_eq!(archive.num_samples(), 70);
    assert_eq!(archive.num_layers(), common::FIXTURE_LAYERS);
    assert_eq!(archive.hidden_dim(), common::FIXTURE_DIM);
    let report = validate_manifest(archive.manifest());
    assert!(report.is_valid(), "{:?}", report.violations);
    assert!(report.grid_complete);
}
