mod common;

use std::io::Write;

use fairalign::datasets::load_movielens;
use fairalign::interchange::{dataset_from_records, dataset_records, read_ndjson, write_ndjson, Record};

#[test]
fn movielens_fixture_fields() {
    common::check_movielens_fixture().unwrap();
}

#[test]
fn lastfm_fixture_fields() {
    common::check_lastfm_fixture().unwrap();
}

#[test]
fn activity_filter_keeps_planted_users() {
    common::check_planted_filter().unwrap();
}

#[test]
fn malformed_lines_over_tolerance_fail_with_counts() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.dat");
    let mut f = std::fs::File::create(&ratings).unwrap();
    writeln!(f, "1::122::5::838985046\n1::185::five::838983525\n1::231::4::838983392").unwrap();
    let movies = common::fixture("movielens/movies.dat");
    let err = load_movielens(&ratings, &movies, None, 0.01).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("1") && msg.contains("3"), "{msg}");
    let ok = load_movielens(&ratings, &movies, None, 0.5).unwrap();
    assert_eq!(ok.interactions.len(), 2);
    assert_eq!(ok.reports[0].malformed.len(), 1);
    assert_eq!(ok.reports[0].malformed[0].line, 2);
}

#[test]
fn interchange_round_trips_fixtures() {
    for d in [common::movielens_fixture().unwrap(), common::lastfm_fixture().unwrap()] {
        let mut buf = Vec::new();
        write_ndjson(&mut buf, dataset_records(&d)).unwrap();
        let back: Vec<Record> = read_ndjson(buf.as_slice()).unwrap();
        let again = dataset_from_records(back).unwrap();
        assert_eq!(again.interactions, d.interactions);
        assert_eq!(again.catalog.entries(), d.catalog.entries());
        assert_eq!(again.demographics, d.demographics);
    }
}
