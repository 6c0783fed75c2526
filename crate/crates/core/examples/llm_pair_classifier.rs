//! Yes/No pair classification with an LLM. Without arguments a keyword stub
//! answers; with `<endpoint> <model>` requests go to a chat-completions API
//! (bearer token from COREF_LLM_TOKEN).
//!
//! ```text
//! cargo run --example llm_pair_classifier -- http://localhost:8000/v1/chat/completions my-model
//! ```

use std::error::Error;

use cdec::corpus::{read_canonical, Split};
use cdec::filters::{all_pairs, Scope};
use cdec::llm::{ChatBackend, ChatRequest, FnBackend, HttpBackend, LlmConfig, LlmError};
use cdec::prompt::PromptTemplate;
use cdec::scoring::llm_classify_pairs;

/// Says Yes when the two marked triggers start alike.
fn stub(req: &ChatRequest) -> Result<String, LlmError> {
    let marked: Vec<&str> = req
        .user
        .lines()
        .filter(|l| l.starts_with("Sentence "))
        .filter_map(|l| l.split("<m>").nth(1))
        .filter_map(|s| s.split("</m>").next())
        .map(str::trim)
        .collect();
    let yes = marked.len() == 2 && marked[0].get(..3) == marked[1].get(..3);
    Ok(if yes { "Yes." } else { "No." }.into())
}

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (backend, config): (Box<dyn ChatBackend>, LlmConfig) = match args.as_slice() {
        [endpoint, model] => {
            let config = LlmConfig::new(endpoint.as_str(), model.as_str());
            (Box::new(HttpBackend::new(config.clone())?), config)
        }
        _ => (Box::new(FnBackend(stub)), LlmConfig::new("stub", "stub")),
    };

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fixture_corpus.jsonl");
    let corpus = read_canonical(path.as_ref())?;
    let pairs = all_pairs(&corpus, Split::Test, Scope::IntraTopic);
    let template = PromptTemplate::coref_pair();

    for result in llm_classify_pairs(&corpus, &pairs[..8], backend.as_ref(), &config, &template) {
        let s = result?;
        let (a, b) = (corpus.mention(&s.pair.a)?, corpus.mention(&s.pair.b)?);
        println!("{:<9} {:<9} {}", a.trigger_text, b.trigger_text, s.score);
    }
    Ok(())
}
