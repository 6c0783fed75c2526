//! The hand-correction loop: a store of alignment cases, one correction,
//! and export once nothing is left to review. Pass `--serve` to keep the
//! HTTP API running on 127.0.0.1:8080 afterwards.

use std::error::Error;
use std::sync::Arc;

use cdec::corpus::{CorpusBuilder, Split};
use cdec::metamorph::{align_records, CaseStatus, MetaVersion, Mode, ParaphraseRecord};
use cdec::review::{router, serve, CaseStore};

fn main() -> Result<(), Box<dyn Error>> {
    let mut b = CorpusBuilder::new("storm");
    b.document("t1", "d1")
        .sentence_text("d1", "The storm hit the coast on Monday .")
        .mention("m1", "d1", 0, 2, 3, "HIT", Split::Test);
    let corpus = b.build()?;

    // The metaphor occurs twice, so the alignment needs a human decision.
    let record = ParaphraseRecord {
        doc_id: "d1".into(),
        sentence_index: 0,
        original_sentence: "The storm hit the coast on Monday .".into(),
        original_word_list: vec!["hit".into()],
        metaphoric_word_list: vec!["lashed".into()],
        metaphoric_sentence: "The storm lashed the coast and lashed it on Monday .".into(),
        mode: Mode::SingleWord,
        raw_response: String::new(),
        template_hash: String::new(),
        attempts: 1,
        failure: None,
    };
    let cases = align_records(&corpus, std::slice::from_ref(&record))?;

    let dir = tempfile::tempdir()?;
    let store = CaseStore::init(&dir.path().join("store"), &corpus, &[record], &cases)?;
    let queue = store.list_cases(&[], 0, 50)?;
    println!("{} case(s) to review", queue.total);

    let detail = store.get_case("m1")?;
    println!("\"{}\" occurrences: {:?}", detail.metaphoric_sentence, detail.occurrences);
    assert!(store.export_ready(MetaVersion::Meta1).is_err());

    let fixed = store.submit_correction("m1", detail.occurrences[0], "demo", false)?;
    assert_eq!(fixed.status, CaseStatus::Corrected);
    let out = store.export_ready(MetaVersion::Meta1)?;
    println!("exported {}", out.display());

    if std::env::args().any(|a| a == "--serve") {
        let app = router(Arc::new(store), std::env::var("COREF_REVIEW_TOKEN").ok(), None);
        println!("serving on http://127.0.0.1:8080/cases");
        tokio::runtime::Runtime::new()?.block_on(serve(([127, 0, 0, 1], 8080).into(), app))?;
    }
    Ok(())
}
