mod common;

use std::fs;

use cdec::manifest::{manifest_path, RunManifest};
use common::{cli, fixture, run_knn_pipeline, run_lh_pipeline};

fn golden(name: &str) -> String {
    fs::read_to_string(fixture(&format!("golden/{name}"))).unwrap()
}

#[test]
fn lh_pipeline_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_lh_pipeline(dir.path(), cli);
    assert_eq!(fs::read_to_string(&report).unwrap(), golden("lh_lexical_cc.report"));
}

#[test]
fn knn_pipeline_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_knn_pipeline(dir.path(), cli);
    assert_eq!(fs::read_to_string(&report).unwrap(), golden("knn_external_agglo.report"));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        run_lh_pipeline(d.path(), cli);
        run_knn_pipeline(d.path(), cli);
    }
    for name in ["lh.pairs", "lh.scores", "lh.clusters", "knn.pairs", "knn.scores", "knn.clusters"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn every_step_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_lh_pipeline(dir.path(), cli);
    let m = RunManifest::read_file(&manifest_path(&report)).unwrap();
    assert_eq!(m.command[1], "evaluate");
    assert_eq!(m.outputs.len(), 1);
    assert_eq!(m.inputs.len(), 2);
    assert_eq!(m.outputs.values().next().unwrap(), &cdec::manifest::file_digest(&report).unwrap());
    for name in ["lh.pairs", "lh.scores", "lh.clusters"] {
        assert!(manifest_path(&dir.path().join(name)).exists(), "{name}");
    }
}

#[test]
fn diversity_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("div.report");
    let corpus = fixture("fixtures/fixture_corpus.jsonl");
    let code = cli(&["diversity", "--corpus", corpus.to_str().unwrap(), "--split", "test", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(out).unwrap(), golden("diversity_test.report"));
}

#[test]
fn oracle_recall_of_lh_pairs() {
    let dir = tempfile::tempdir().unwrap();
    run_lh_pipeline(dir.path(), cli);
    let corpus = fixture("fixtures/fixture_corpus.jsonl");
    let out = dir.path().join("oracle.tsv");
    let code = cli(&[
        "oracle-recall",
        "--corpus",
        corpus.to_str().unwrap(),
        "--retained",
        dir.path().join("lh.pairs").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(out).unwrap(), "oracle_b3_recall\t0.888889\nretained_pairs\t8\n");
}

#[test]
fn gold_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("fixtures/fixture_corpus.jsonl");
    let gold = dir.path().join("gold.clusters");
    let c = cdec::corpus::read_canonical(&corpus).unwrap();
    c.gold_assignment(Some(cdec::corpus::Split::Test)).write_file(&gold).unwrap();
    let out = dir.path().join("r");
    let code = cli(&[
        "evaluate", "--gold", corpus.to_str().unwrap(), "--pred", gold.to_str().unwrap(),
        "--split", "test", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(out).unwrap().ends_with("conll_f1\t1.000000\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("fixtures/fixture_corpus.jsonl");
    let c = corpus.to_str().unwrap();
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();

    assert_eq!(cli(&["filter", "lh", "--corpus", c]), 1);
    assert_eq!(cli(&["no-such-command"]), 1);
    assert_eq!(cli(&["--help"]), 0);

    // Prediction over the whole corpus against gold restricted to test.
    let all = dir.path().join("all.clusters");
    cdec::corpus::read_canonical(&corpus).unwrap().gold_assignment(None).write_file(&all).unwrap();
    let code = cli(&["evaluate", "--gold", c, "--pred", all.to_str().unwrap(), "--split", "test", "--out", o]);
    assert_eq!(code, 2);

    let bad = dir.path().join("bad.scores");
    fs::write(&bad, "t3_d1_m1 t3_d3_m1 1.7\n").unwrap();
    assert_eq!(cli(&["score", "external", "--scores", bad.to_str().unwrap(), "--out", o]), 2);

    let missing = dir.path().join("missing.jsonl");
    assert_eq!(cli(&["filter", "lh", "--corpus", missing.to_str().unwrap(), "--split", "test", "--out", o]), 3);
}
