//! Turning pair scores into clusters: connected components versus greedy
//! average-linkage agglomeration at several stopping thresholds.

use std::collections::BTreeSet;
use std::error::Error;

use cdec::clustering::{connected_components, greedy_agglomeration, AggloConfig, ClusterAssignment, Linkage};
use cdec::corpus::{read_canonical, Split};
use cdec::metrics::evaluate;
use cdec::scoring::ingest_scores;

fn show(name: &str, a: &ClusterAssignment) {
    let clusters: Vec<String> = a.clusters().values().map(|ms| format!("{{{}}}", ms.join(" "))).collect();
    println!("{name}: {}", clusters.join(" "));
}

fn main() -> Result<(), Box<dyn Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let corpus = read_canonical(format!("{dir}/fixture_corpus.jsonl").as_ref())?;
    let scores = ingest_scores(format!("{dir}/fixture_scores.tsv").as_ref())?;
    let mentions: BTreeSet<String> = corpus.mentions_in_split(Split::Test).map(|m| m.mention_id.clone()).collect();
    let gold = corpus.gold_assignment(Some(Split::Test));
    show("gold", &gold);

    // A single wrong high score chains clusters together.
    let cc = connected_components(&mentions, &scores, 0.5)?;
    show("\ncc@0.5", &cc);
    println!("CoNLL F1 {:.4}", evaluate(&gold, &cc)?.conll_f1);

    for tau in [0.3, 0.5, 0.7] {
        let cfg = AggloConfig { linkage: Linkage::Average, stop_threshold: tau };
        let a = greedy_agglomeration(&mentions, &scores, &cfg);
        show(&format!("\naverage@{tau}"), &a);
        println!("CoNLL F1 {:.4}", evaluate(&gold, &a)?.conll_f1);
    }
    Ok(())
}
