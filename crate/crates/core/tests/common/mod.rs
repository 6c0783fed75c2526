#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

type Responder = dyn Fn(&str) -> (u16, String) + Send + Sync;

/// Chat-completions stand-in on a loopback port. The responder sees the user
/// prompt and returns (status, content); 200 replies are wrapped in the
/// usual `choices[0].message.content` envelope.
pub struct MockLlm {
    pub addr: SocketAddr,
    hits: Arc<AtomicUsize>,
}

impl MockLlm {
    pub fn spawn<F>(responder: F) -> MockLlm
    where
        F: Fn(&str) -> (u16, String) + Send + Sync + 'static,
    {
        let hits = Arc::new(AtomicUsize::new(0));
        let state: (Arc<Responder>, Arc<AtomicUsize>) = (Arc::new(responder), hits.clone());
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                let app = Router::new()
                    .route("/v1/chat/completions", post(complete))
                    .with_state(state);
                axum::serve(listener, app).await.unwrap();
            });
        });
        MockLlm {
            addr: rx.recv().unwrap(),
            hits,
        }
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

async fn complete(
    State((responder, hits)): State<(Arc<Responder>, Arc<AtomicUsize>)>,
    Json(body): Json<Value>,
) -> (StatusCode, String) {
    hits.fetch_add(1, Ordering::SeqCst);
    let user = body["messages"][1]["content"].as_str().unwrap_or_default().to_string();
    let (status, content) = responder(&user);
    let status = StatusCode::from_u16(status).unwrap();
    if status.is_success() {
        let envelope = json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
        (status, envelope.to_string())
    } else {
        (status, content)
    }
}

/// A four-field metaphor reply.
pub fn metaphor_reply(orig: &[&str], meta: &[&str], sentence: &str) -> String {
    json!({
        "Original Sentence": "",
        "Original Word List": orig,
        "Metaphoric Word List": meta,
        "Metaphoric Sentence": sentence,
    })
    .to_string()
}

/// Single-word rewrites for every test sentence of the metamorph fixture:
/// (original sentence, trigger, metaphor, rewritten sentence).
pub const FIXTURE_METAPHORS: [(&str, &str, &str, &str); 6] = [
    (
        "A man killed his neighbour in a dispute on Friday .",
        "killed",
        "extinguished",
        "A man extinguished his neighbour in a dispute on Friday .",
    ),
    (
        "Police arrested the man at his home .",
        "arrested",
        "netted",
        "Police netted the man at his home .",
    ),
    (
        "The slaying of the neighbour shocked the town .",
        "slaying",
        "eclipse",
        "The eclipse of the neighbour shocked the town .",
    ),
    (
        "Neighbours said he had killed a dog years ago .",
        "killed",
        "snuffed",
        "Neighbours said he had snuffed a dog years ago .",
    ),
    (
        "The killing happened after a dispute , police said .",
        "killing",
        "harvest",
        "The harvest happened after a dispute , police said .",
    ),
    (
        "The man was detained by police on Friday .",
        "detained",
        "caged",
        "The man was caged by police on Friday .",
    ),
];

/// Responder answering each fixture sentence with its metaphor.
pub fn fixture_responder(prompt: &str) -> (u16, String) {
    for (orig, trigger, meta, rewritten) in FIXTURE_METAPHORS {
        if prompt.contains(orig) {
            return (200, metaphor_reply(&[trigger], &[meta], rewritten));
        }
    }
    (500, "unexpected prompt".into())
}

pub fn cli(args: &[&str]) -> i32 {
    cdec::cli::run(std::iter::once("cdec").chain(args.iter().copied()))
}

/// Runs the built binary with output captured.
pub fn cli_bin(args: &[&str]) -> i32 {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_cdec"))
        .args(args)
        .output()
        .unwrap();
    out.status.code().unwrap_or(-1)
}

fn p(path: &std::path::Path) -> &str {
    path.to_str().unwrap()
}

/// LH → lexical → connected components → evaluate, inside `dir`.
/// Returns the metric report path.
pub fn run_lh_pipeline(dir: &std::path::Path, run: fn(&[&str]) -> i32) -> PathBuf {
    let corpus = fixture("fixtures/fixture_corpus.jsonl");
    let (pairs, scores, clusters, report) = (
        dir.join("lh.pairs"),
        dir.join("lh.scores"),
        dir.join("lh.clusters"),
        dir.join("lh_lexical_cc.report"),
    );
    let steps: [Vec<&str>; 4] = [
        vec!["filter", "lh", "--corpus", p(&corpus), "--split", "test", "--out", p(&pairs)],
        vec!["score", "lexical", "--pairs", p(&pairs), "--out", p(&scores)],
        vec!["cluster", "cc", "--corpus", p(&corpus), "--split", "test", "--scores", p(&scores), "--out", p(&clusters)],
        vec!["evaluate", "--gold", p(&corpus), "--pred", p(&clusters), "--split", "test", "--out", p(&report)],
    ];
    for step in &steps {
        assert_eq!(run(step), 0, "step failed: {step:?}");
    }
    report
}

/// KNN → external scores → agglomeration → evaluate, inside `dir`.
pub fn run_knn_pipeline(dir: &std::path::Path, run: fn(&[&str]) -> i32) -> PathBuf {
    let corpus = fixture("fixtures/fixture_corpus.jsonl");
    let emb = fixture("fixtures/fixture_embeddings.tsv");
    let ext = fixture("fixtures/fixture_scores.tsv");
    let (pairs, scores, clusters, report) = (
        dir.join("knn.pairs"),
        dir.join("knn.scores"),
        dir.join("knn.clusters"),
        dir.join("knn_external_agglo.report"),
    );
    let steps: [Vec<&str>; 4] = [
        vec!["filter", "knn", "--corpus", p(&corpus), "--split", "test", "--embeddings", p(&emb), "--k", "3", "--out", p(&pairs)],
        vec!["score", "external", "--scores", p(&ext), "--pairs", p(&pairs), "--corpus", p(&corpus), "--out", p(&scores)],
        vec!["cluster", "agglo", "--corpus", p(&corpus), "--split", "test", "--scores", p(&scores), "--out", p(&clusters)],
        vec!["evaluate", "--gold", p(&corpus), "--pred", p(&clusters), "--split", "test", "--out", p(&report)],
    ];
    for step in &steps {
        assert_eq!(run(step), 0, "step failed: {step:?}");
    }
    report
}
