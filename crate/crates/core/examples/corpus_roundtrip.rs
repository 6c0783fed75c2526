//! Build a corpus (or ingest ECB+ XML), write it as canonical JSONL and read it back.
//!
//! ```text
//! cargo run --example corpus_roundtrip
//! cargo run --example corpus_roundtrip -- /path/to/ECB+
//! ```

use std::error::Error;

use cdec::corpus::{export_corpus, ingest_ecb_xml, read_canonical, CorpusBuilder, EcbOptions, Split};

fn main() -> Result<(), Box<dyn Error>> {
    let corpus = match std::env::args().nth(1) {
        Some(dir) => ingest_ecb_xml(dir.as_ref(), &EcbOptions::default())?,
        None => {
            let mut b = CorpusBuilder::new("toy");
            b.document("t1", "t1_d1")
                .sentence_text("t1_d1", "A gunman shot two people on Friday .")
                .document("t1", "t1_d2")
                .sentence_text("t1_d2", "Police said the shooting was random .")
                .mention("m1", "t1_d1", 0, 2, 3, "SHOOT", Split::Test)
                .mention("m2", "t1_d2", 0, 3, 4, "SHOOT", Split::Test);
            b.build()?
        }
    };

    for (split, s) in corpus.stats() {
        println!("{split:>9}: {} topics, {} documents, {} mentions", s.topics, s.documents, s.mentions);
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("corpus.jsonl");
    export_corpus(&corpus, &path)?;
    let back = read_canonical(&path)?;
    assert_eq!(back, corpus);
    println!("round trip ok ({} bytes)", std::fs::metadata(&path)?.len());

    let m = corpus.mentions().next().expect("at least one mention");
    println!("first mention: {} `{}` in \"{}\"", m.mention_id, m.trigger_text, corpus.sentence_of(&m.mention_id)?.text());
    Ok(())
}
