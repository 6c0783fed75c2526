//! Rewrite trigger words as metaphors, realign the triggers and build the
//! transformed corpus with the original coreference annotation. Replies are
//! canned here; point an `HttpBackend` at a chat-completions endpoint for
//! real generation.

use std::error::Error;

use cdec::corpus::{read_canonical, Split};
use cdec::filters::{all_pairs, lh_filter, mine_synonym_pairs, LhConfig, Scope};
use cdec::llm::{ChatRequest, FnBackend, LlmConfig, LlmError};
use cdec::metamorph::{
    align_records, build_meta_corpus, sentences_with_mentions, transform_sentences, MetaVersion, MetamorphConfig,
    Mode,
};
use cdec::metrics::oracle_recall;
use serde_json::json;

const METAPHORS: [(&str, &str); 5] = [
    ("killed", "extinguished"),
    ("arrested", "netted"),
    ("slaying", "eclipse"),
    ("killing", "harvest"),
    ("detained", "caged"),
];

/// Answers like a model would: the four-field JSON object.
fn fake_llm(req: &ChatRequest) -> Result<String, LlmError> {
    let sentence = req.user.split("\"\"\"").nth(1).unwrap_or_default();
    let triggers: Vec<String> = serde_json::from_str(req.user.split("\"\"\"").nth(3).unwrap_or("[]")).unwrap();
    let mut rewritten = sentence.to_string();
    let mut words = Vec::new();
    for t in &triggers {
        let meta = METAPHORS.iter().find(|(o, _)| o == t).map_or("blazed", |(_, m)| m);
        rewritten = rewritten.replacen(t.as_str(), meta, 1);
        words.push(meta);
    }
    Ok(json!({
        "Original Sentence": sentence,
        "Original Word List": triggers,
        "Metaphoric Word List": words,
        "Metaphoric Sentence": rewritten,
    })
    .to_string())
}

fn lh_recall(corpus: &cdec::corpus::Corpus) -> Result<f64, Box<dyn Error>> {
    let syn = mine_synonym_pairs(corpus, Split::Train)?;
    let pairs = all_pairs(corpus, Split::Test, Scope::IntraTopic);
    let kept = lh_filter(corpus, &pairs, &syn, &LhConfig::default())?;
    Ok(oracle_recall(corpus, &kept, Split::Test)?)
}

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/metamorph_fixture.jsonl");
    let corpus = read_canonical(path.as_ref())?;

    let config = MetamorphConfig::new(Mode::SingleWord, LlmConfig::new("unused", "canned"));
    let sentences = sentences_with_mentions(&corpus, Split::Test);
    let records = transform_sentences(&corpus, &sentences, &FnBackend(fake_llm), &config)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    for r in &records {
        println!("{}\n  -> {}", r.original_sentence, r.metaphoric_sentence);
    }

    let cases = align_records(&corpus, &records)?;
    for c in &cases {
        println!("{:<10} {:<13} {:?} {:?}", c.mention_id, c.phrase, c.status, c.candidate_span);
    }

    let meta = build_meta_corpus(&corpus, &records, &cases, &[Split::Test], MetaVersion::Meta1)?;
    assert_eq!(meta.gold_assignment(None), corpus.gold_assignment(None));
    println!("\nLH oracle B3 recall: original {:.3}, {} {:.3}", lh_recall(&corpus)?, meta.name(), lh_recall(&meta)?);
    Ok(())
}
