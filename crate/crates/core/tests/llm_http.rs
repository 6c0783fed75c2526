//! LLM-backed commands against a local chat-completions mock.

mod common;

use std::fs;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use cdec::corpus::{read_canonical, Split};
use cdec::filters::{all_pairs, Scope};
use cdec::llm::{HttpBackend, LlmConfig};
use cdec::metamorph::{read_cases, read_records, CaseStatus};
use cdec::prompt::PromptTemplate;
use cdec::scoring::llm_classify_pairs;
use common::{cli, fixture, fixture_responder, MockLlm};

fn config(mock: &MockLlm) -> LlmConfig {
    let mut c = LlmConfig::new(mock.endpoint(), "mock-model");
    c.backoff_ms = 1;
    c.max_retries = 2;
    c
}

fn write_config(dir: &std::path::Path, c: &LlmConfig) -> std::path::PathBuf {
    let path = dir.join("llm.json");
    fs::write(&path, serde_json::to_string(c).unwrap()).unwrap();
    path
}

#[test]
fn classifier_keeps_input_order_under_concurrency() {
    // Coreferent iff both marked triggers share the first three letters.
    let mock = MockLlm::spawn(|prompt| {
        let marked: Vec<&str> = prompt
            .lines()
            .filter(|l| l.starts_with("Sentence "))
            .filter_map(|l| l.split("<m>").nth(1))
            .map(|s| s.split("</m>").next().unwrap().trim())
            .collect();
        let same = marked.len() == 2 && marked[0].get(..3) == marked[1].get(..3);
        (200, if same { "Yes." } else { "No" }.to_string())
    });
    let corpus = read_canonical(&fixture("fixtures/fixture_corpus.jsonl")).unwrap();
    let pairs = all_pairs(&corpus, Split::Test, Scope::IntraTopic);
    let mut cfg = config(&mock);
    cfg.max_in_flight = 4;
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let scores = llm_classify_pairs(&corpus, &pairs, &backend, &cfg, &PromptTemplate::coref_pair());
    assert_eq!(scores.len(), pairs.len());
    for (pair, s) in pairs.iter().zip(&scores) {
        let s = s.as_ref().unwrap();
        assert_eq!(&s.pair, pair);
        let ta = &corpus.mention(&pair.a).unwrap().trigger_text;
        let tb = &corpus.mention(&pair.b).unwrap().trigger_text;
        let expect = if ta.get(..3) == tb.get(..3) { 1.0 } else { 0.0 };
        assert_eq!(s.score, expect, "{pair}");
    }
    assert_eq!(mock.hits(), pairs.len());
    assert_eq!(backend.requests_sent(), pairs.len());
}

#[test]
fn server_errors_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let mock = MockLlm::spawn(move |_| {
        if c.fetch_add(1, Ordering::SeqCst) == 0 {
            (503, "busy".into())
        } else {
            (200, "yes".into())
        }
    });
    let corpus = read_canonical(&fixture("fixtures/fixture_corpus.jsonl")).unwrap();
    let pairs = &all_pairs(&corpus, Split::Test, Scope::IntraTopic)[..1];
    let cfg = config(&mock);
    let backend = HttpBackend::new(cfg.clone()).unwrap();
    let scores = llm_classify_pairs(&corpus, pairs, &backend, &cfg, &PromptTemplate::coref_pair());
    assert_eq!(scores[0].as_ref().unwrap().score, 1.0);
    assert_eq!(mock.hits(), 2);
}

#[test]
fn transform_and_align_through_the_cli() {
    let mock = MockLlm::spawn(fixture_responder);
    let dir = tempfile::tempdir().unwrap();
    let llm = write_config(dir.path(), &config(&mock));
    let corpus = fixture("fixtures/metamorph_fixture.jsonl");
    let records = dir.path().join("records.jsonl");
    let cases = dir.path().join("cases.jsonl");
    let code = cli(&[
        "transform",
        "--corpus", corpus.to_str().unwrap(),
        "--mode", "single",
        "--split", "test",
        "--llm-config", llm.to_str().unwrap(),
        "--out", records.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let recs = read_records(&records).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs.iter().all(|r| !r.is_failed() && r.attempts == 1));
    assert_eq!(mock.hits(), 6);

    let code = cli(&[
        "align",
        "--corpus", corpus.to_str().unwrap(),
        "--records", records.to_str().unwrap(),
        "--out", cases.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let cases = read_cases(&cases).unwrap();
    assert_eq!(cases.len(), 6);
    assert!(cases.iter().all(|c| c.status == CaseStatus::AutoAligned));
}

#[test]
fn unreachable_endpoint_exits_with_network_code() {
    // Bind then drop to get a port nobody listens on.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let mut c = LlmConfig::new(format!("http://127.0.0.1:{port}/v1/chat/completions"), "m");
    c.max_retries = 1;
    c.backoff_ms = 1;
    let llm = write_config(dir.path(), &c);
    let corpus = fixture("fixtures/metamorph_fixture.jsonl");
    let records = dir.path().join("records.jsonl");
    let code = cli(&[
        "transform",
        "--corpus", corpus.to_str().unwrap(),
        "--mode", "multi",
        "--split", "test",
        "--llm-config", llm.to_str().unwrap(),
        "--out", records.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}
