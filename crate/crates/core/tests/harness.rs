mod common;

use common::*;
use wordorder::evalharness::{plan, run_matrix, RunConfig, RunSettings, Setup, Sources, SynthSpec};
use wordorder::models::ModelKind;
use wordorder::transform::TransformKind;

fn ci_fixture(dir: &std::path::Path) -> RunConfig {
    SynthSpec::load(&data_dir().join("synthetic-ci.json")).unwrap().materialize(dir).unwrap()
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ci_fixture(dir.path());
    cfg.tasks.truncate(1);
    let sources = Sources::load(&cfg, dir.path()).unwrap();
    let cells = plan(&cfg);
    let one = run_matrix(&cells, &sources, &RunSettings::from_config(&cfg, 1)).unwrap();
    let three = run_matrix(&cells, &sources, &RunSettings::from_config(&cfg, 3)).unwrap();
    assert_eq!(one.report.to_json(), three.report.to_json());
}

#[test]
fn report_covers_every_planned_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ci_fixture(dir.path());
    let sources = Sources::load(&cfg, dir.path()).unwrap();
    let cells = plan(&cfg);
    let out = run_matrix(&cells, &sources, &RunSettings::from_config(&cfg, 1)).unwrap();
    let r = &out.report;
    for c in &cells {
        let res = &r.cells[&c.key()];
        assert!(res.seeds.contains(&c.seed));
        let mean = res.per_seed.iter().sum::<f64>() / res.per_seed.len() as f64;
        assert!((mean - res.mean).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&res.mean));
    }
    assert!(cells.iter().all(|c| c.model != ModelKind::Svm || c.seed == cfg.seeds[0]));
    assert!(!cells.iter().any(|c| c.setup != Setup::Bwe && c.transform == TransformKind::Reordered));
    let columns: std::collections::BTreeSet<String> = cells.iter().map(|c| c.column()).collect();
    assert_eq!(r.best.len(), columns.len());
    assert!(r.pairs["es"].map.is_some());
    assert!(!r.length_buckets.is_empty());

    let t = r.to_table();
    assert!(t.contains("Only-Lexicon") && t.contains("BiLSTM"));
    out.report.write(&out.timing, &dir.path().join("o")).unwrap();
    let json = std::fs::read_to_string(dir.path().join("o/report.json")).unwrap();
    assert!(!json.contains("seconds"));
    assert!(std::fs::read_to_string(dir.path().join("o/timing.json")).unwrap().contains("total_seconds"));
}

#[test]
fn empty_plan_is_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ci_fixture(dir.path());
    cfg.models.clear();
    let sources = Sources::load(&cfg, dir.path()).unwrap();
    let cells = plan(&cfg);
    assert!(cells.is_empty());
    let out = run_matrix(&cells, &sources, &RunSettings::from_config(&cfg, 1)).unwrap();
    assert!(out.report.cells.is_empty() && out.report.best.is_empty());
}
