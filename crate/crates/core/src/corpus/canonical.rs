//! Canonical line-delimited corpus format.
//!
//! One JSON object per line, discriminated by `kind`:
//!
//! ```text
//! {"kind":"meta","name":"ECB+","splits":["train","dev","dev_small","test"]}
//! {"kind":"topic","topic_id":"36"}
//! {"kind":"document","topic_id":"36","doc_id":"36_1ecb"}
//! {"kind":"sentence","doc_id":"36_1ecb","index":0,"tokens":[..],"lemmas":[..],"is_stopword":[..]}
//! {"kind":"mention","mention_id":"..","doc_id":"..","sentence_index":0,"token_start":3,
//!  "token_end_exclusive":4,"trigger_text":"..","gold_cluster_id":"..","split":"test"}
//! ```
//!
//! Records must appear after the record they refer to (a document after its
//! topic, sentences and mentions after their document).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Document, Mention, Sentence, Split, Token, Topic};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Record {
    Meta {
        name: String,
        splits: Vec<Split>,
    },
    Topic {
        topic_id: String,
    },
    Document {
        topic_id: String,
        doc_id: String,
    },
    Sentence {
        doc_id: String,
        index: usize,
        tokens: Vec<String>,
        #[serde(default)]
        lemmas: Option<Vec<Option<String>>>,
        #[serde(default)]
        is_stopword: Option<Vec<bool>>,
    },
    Mention {
        mention_id: String,
        doc_id: String,
        sentence_index: usize,
        token_start: usize,
        token_end_exclusive: usize,
        trigger_text: String,
        gold_cluster_id: String,
        split: Split,
    },
}

pub fn read_canonical(path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_canonical(&text, &path.display().to_string())
}

pub(crate) fn parse_canonical(text: &str, origin: &str) -> Result<Corpus, CorpusError> {
    let err = |line: usize, message: String| CorpusError::Parse {
        path: origin.to_string(),
        line,
        message,
    };

    let mut name = String::new();
    let mut declared_splits: Option<Vec<Split>> = None;
    let mut topics: Vec<Topic> = Vec::new();
    let mut doc_loc: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut split_map = BTreeMap::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(line).map_err(|e| err(lineno, e.to_string()))?;
        match record {
            Record::Meta { name: n, splits } => {
                if declared_splits.is_some() {
                    return Err(err(lineno, "second meta record".into()));
                }
                name = n;
                declared_splits = Some(splits);
            }
            Record::Topic { topic_id } => {
                if topics.iter().any(|t| t.topic_id == topic_id) {
                    return Err(err(lineno, format!("duplicate topic `{topic_id}`")));
                }
                topics.push(Topic {
                    topic_id,
                    documents: Vec::new(),
                });
            }
            Record::Document { topic_id, doc_id } => {
                let ti = topics
                    .iter()
                    .position(|t| t.topic_id == topic_id)
                    .ok_or_else(|| err(lineno, format!("document names unknown topic `{topic_id}`")))?;
                if doc_loc.contains_key(&doc_id) {
                    return Err(err(lineno, format!("duplicate document `{doc_id}`")));
                }
                doc_loc.insert(doc_id.clone(), (ti, topics[ti].documents.len()));
                topics[ti].documents.push(Document {
                    doc_id,
                    sentences: Vec::new(),
                    mentions: Vec::new(),
                });
            }
            Record::Sentence {
                doc_id,
                index,
                tokens,
                lemmas,
                is_stopword,
            } => {
                let (ti, di) = *doc_loc
                    .get(&doc_id)
                    .ok_or_else(|| err(lineno, format!("sentence names unknown document `{doc_id}`")))?;
                let n = tokens.len();
                let lemmas = lemmas.unwrap_or_else(|| vec![None; n]);
                let stop = is_stopword.unwrap_or_else(|| vec![false; n]);
                if lemmas.len() != n || stop.len() != n {
                    return Err(err(
                        lineno,
                        format!("token/lemma/stopword lengths differ ({n}, {}, {})", lemmas.len(), stop.len()),
                    ));
                }
                let tokens = tokens
                    .into_iter()
                    .zip(lemmas)
                    .zip(stop)
                    .map(|((text, lemma), is_stopword)| Token {
                        text,
                        lemma,
                        is_stopword,
                    })
                    .collect();
                topics[ti].documents[di]
                    .sentences
                    .push(Sentence { index, tokens });
            }
            Record::Mention {
                mention_id,
                doc_id,
                sentence_index,
                token_start,
                token_end_exclusive,
                trigger_text,
                gold_cluster_id,
                split,
            } => {
                let (ti, di) = *doc_loc
                    .get(&doc_id)
                    .ok_or_else(|| err(lineno, format!("mention names unknown document `{doc_id}`")))?;
                if let Some(declared) = &declared_splits {
                    if !declared.contains(&split) {
                        return Err(err(lineno, format!("split `{split}` not declared in meta record")));
                    }
                }
                if split_map.insert(mention_id.clone(), split).is_some() {
                    return Err(err(lineno, format!("duplicate mention id `{mention_id}`")));
                }
                topics[ti].documents[di].mentions.push(Mention {
                    mention_id,
                    doc_id,
                    sentence_index,
                    token_start,
                    token_end_exclusive,
                    trigger_text,
                    gold_cluster_id,
                });
            }
        }
    }
    Corpus::new(name, topics, split_map)
}

/// Serializes a corpus; the output is a pure function of the corpus content.
pub fn write_canonical<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    let mut emit = |r: &Record| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
    };
    emit(&Record::Meta {
        name: corpus.name().to_string(),
        splits: Split::ALL.to_vec(),
    })?;
    for topic in corpus.topics() {
        emit(&Record::Topic {
            topic_id: topic.topic_id.clone(),
        })?;
        for doc in &topic.documents {
            emit(&Record::Document {
                topic_id: topic.topic_id.clone(),
                doc_id: doc.doc_id.clone(),
            })?;
            for s in &doc.sentences {
                emit(&Record::Sentence {
                    doc_id: doc.doc_id.clone(),
                    index: s.index,
                    tokens: s.tokens.iter().map(|t| t.text.clone()).collect(),
                    lemmas: Some(s.tokens.iter().map(|t| t.lemma.clone()).collect()),
                    is_stopword: Some(s.tokens.iter().map(|t| t.is_stopword).collect()),
                })?;
            }
            for m in &doc.mentions {
                emit(&Record::Mention {
                    mention_id: m.mention_id.clone(),
                    doc_id: m.doc_id.clone(),
                    sentence_index: m.sentence_index,
                    token_start: m.token_start,
                    token_end_exclusive: m.token_end_exclusive,
                    trigger_text: m.trigger_text.clone(),
                    gold_cluster_id: m.gold_cluster_id.clone(),
                    split: corpus.split_map()[&m.mention_id],
                })?;
            }
        }
    }
    Ok(())
}

pub fn export_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_canonical(corpus, &mut w).map_err(|e| CorpusError::io(path, e))?;
    w.flush().map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusBuilder;

    fn to_string(c: &Corpus) -> String {
        let mut buf = Vec::new();
        write_canonical(c, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn sample() -> Corpus {
        let mut b = CorpusBuilder::new("sample");
        b.document("1", "1_1ecb");
        b.sentence(
            "1_1ecb",
            vec![
                Token::new("Un").stopword(),
                Token::new("soirée").with_lemma("soirée"),
                Token::new("détruite").with_lemma("détruire"),
            ],
        );
        b.document("2", "2_1ecb");
        b.sentence_text("2_1ecb", "Fire broke out .");
        b.mention("a", "1_1ecb", 0, 1, 3, "C1", Split::Test);
        b.mention("b", "2_1ecb", 0, 0, 2, "C2", Split::Dev);
        b.build().unwrap()
    }

    #[test]
    fn round_trip_preserves_structure_and_unicode() {
        let c = sample();
        let text = to_string(&c);
        assert!(text.contains("soirée détruite"));
        let back = parse_canonical(&text, "mem").unwrap();
        assert_eq!(back, c);
        assert_eq!(back.mention("a").unwrap().trigger_text, "soirée détruite");
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn empty_inputs() {
        let c = parse_canonical("", "mem").unwrap();
        assert_eq!(c.document_count(), 0);
        assert_eq!(c.mention_count(), 0);

        let empty = Corpus::new("none", vec![], BTreeMap::new()).unwrap();
        let back = parse_canonical(&to_string(&empty), "mem").unwrap();
        assert_eq!(back, empty);
    }

    #[test]
    fn parse_error_carries_line() {
        let text = "{\"kind\":\"meta\",\"name\":\"x\",\"splits\":[\"test\"]}\n{\"kind\":\"topic\"}\n";
        match parse_canonical(text, "f.jsonl") {
            Err(CorpusError::Parse { line, path, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(path, "f.jsonl");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_error_names_mention() {
        let text = concat!(
            "{\"kind\":\"topic\",\"topic_id\":\"1\"}\n",
            "{\"kind\":\"document\",\"topic_id\":\"1\",\"doc_id\":\"d\"}\n",
            "{\"kind\":\"sentence\",\"doc_id\":\"d\",\"index\":0,\"tokens\":[\"a\",\"b\"]}\n",
            "{\"kind\":\"mention\",\"mention_id\":\"m9\",\"doc_id\":\"d\",\"sentence_index\":0,",
            "\"token_start\":0,\"token_end_exclusive\":1,\"trigger_text\":\"b\",",
            "\"gold_cluster_id\":\"c\",\"split\":\"test\"}\n"
        );
        let err = parse_canonical(text, "mem").unwrap_err();
        assert!(matches!(err, CorpusError::Validation(ref m) if m.contains("m9")), "{err}");
    }

    #[test]
    fn undeclared_split_rejected() {
        let text = concat!(
            "{\"kind\":\"meta\",\"name\":\"x\",\"splits\":[\"train\"]}\n",
            "{\"kind\":\"topic\",\"topic_id\":\"1\"}\n",
            "{\"kind\":\"document\",\"topic_id\":\"1\",\"doc_id\":\"d\"}\n",
            "{\"kind\":\"sentence\",\"doc_id\":\"d\",\"index\":0,\"tokens\":[\"a\"]}\n",
            "{\"kind\":\"mention\",\"mention_id\":\"m\",\"doc_id\":\"d\",\"sentence_index\":0,",
            "\"token_start\":0,\"token_end_exclusive\":1,\"trigger_text\":\"a\",",
            "\"gold_cluster_id\":\"c\",\"split\":\"test\"}\n"
        );
        assert!(matches!(
            parse_canonical(text, "mem"),
            Err(CorpusError::Parse { line: 5, .. })
        ));
    }

    #[test]
    fn export_to_unwritable_path_is_io_error() {
        let c = sample();
        let err = export_corpus(&c, Path::new("/nonexistent-dir/x/corpus.jsonl")).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }
}
