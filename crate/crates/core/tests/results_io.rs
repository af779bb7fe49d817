mod common;

use memsnn::experiment::{
    read_records_json, read_result_rows, run_trial, write_results, ResultFormat, ResultRow, TrialRecord, TrialSpec,
    RESULTS_CSV_HEADER,
};
use memsnn::network::NetworkConfig;

fn records(n: usize) -> Vec<TrialRecord> {
    let ds = common::blocks(3, 4, 1);
    let spec = TrialSpec {
        dataset: "blocks".into(),
        network: NetworkConfig {
            sample_duration: 30.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let rec = run_trial(&spec, &ds).unwrap();
    (0..n)
        .map(|k| {
            let mut r = rec.clone();
            r.spec.seed = k as u64;
            r.accuracy = k as f64 / n as f64;
            r
        })
        .collect()
}

#[test]
fn csv_appends_under_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let recs = records(300);
    write_results(&recs[..120], &path, ResultFormat::Csv).unwrap();
    write_results(&recs[120..], &path, ResultFormat::Csv).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 301);
    assert_eq!(text.lines().next(), Some(RESULTS_CSV_HEADER));

    let rows = read_result_rows(&path).unwrap();
    let want: Vec<ResultRow> = recs.iter().map(ResultRow::from).collect();
    assert_eq!(rows, want);
}

#[test]
fn csv_refuses_foreign_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("other.csv");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    assert!(write_results(&records(1), &path, ResultFormat::Csv).is_err());
    assert!(read_result_rows(&path).is_err());
}

#[test]
fn json_merges_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let recs = records(7);
    write_results(&recs[..3], &path, ResultFormat::Json).unwrap();
    write_results(&recs[3..], &path, ResultFormat::Json).unwrap();

    let back = read_records_json(&path).unwrap();
    assert_eq!(back.len(), recs.len());
    for (a, b) in back.iter().zip(&recs) {
        assert!(a.same_result(b));
    }
    assert_eq!(read_result_rows(&path).unwrap().len(), 7);
}
