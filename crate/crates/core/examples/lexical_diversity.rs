//! MTLD of trigger vocabularies, per gold cluster and weighted by cluster size.

use std::error::Error;

use cdec::corpus::{read_canonical, Split};
use cdec::diversity::{cluster_diversity, mtld, DiversityConfig, DEFAULT_TTR_THRESHOLD};

fn main() -> Result<(), Box<dyn Error>> {
    for text in ["a b a b a b a b a", "a a a a", "kill slay murder shoot stab kill"] {
        let tokens: Vec<&str> = text.split(' ').collect();
        println!("{:>36}  MTLD {:.3}", text, mtld(&tokens, DEFAULT_TTR_THRESHOLD)?);
    }

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fixture_corpus.jsonl");
    let corpus = read_canonical(path.as_ref())?;
    let report = cluster_diversity(&corpus, Split::Test, &DiversityConfig::default())?;
    println!();
    print!("{}", report.to_text());
    Ok(())
}
