//! Cosine k-nearest-neighbour candidate retrieval over mention embeddings.

use std::error::Error;

use cdec::corpus::{read_canonical, Split};
use cdec::filters::{all_pairs, knn_candidates, EmbeddingTable, KnnConfig, Scope};
use cdec::metrics::oracle_recall;

fn main() -> Result<(), Box<dyn Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let corpus = read_canonical(format!("{dir}/fixture_corpus.jsonl").as_ref())?;
    let table = EmbeddingTable::read_file(format!("{dir}/fixture_embeddings.tsv").as_ref())?;

    let total = all_pairs(&corpus, Split::Test, Scope::IntraTopic).len();
    println!(" k  pairs  oracle B3R");
    for k in 0..=5 {
        let config = KnnConfig { k, scope: Scope::IntraTopic };
        let pairs = knn_candidates(&table, &corpus, Split::Test, &config)?;
        let recall = oracle_recall(&corpus, &pairs, Split::Test)?;
        println!("{k:>2}  {:>2}/{total}  {recall:.4}", pairs.len());
    }

    // Cosine similarity ignores vector length.
    let config = KnnConfig { k: 2, scope: Scope::IntraTopic };
    let a = knn_candidates(&table, &corpus, Split::Test, &config)?;
    let b = knn_candidates(&table.scaled(250.0)?, &corpus, Split::Test, &config)?;
    assert_eq!(a, b);
    Ok(())
}
