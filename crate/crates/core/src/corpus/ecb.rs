//! Import adapter for ECB+ XML documents.
//!
//! Event mentions are the `ACTION*` / `NEG_ACTION*` markables that anchor
//! tokens. `CROSS_DOC_COREF` relations give gold cluster ids (their `note`
//! instance id, prefixed by the topic), `INTRA_DOC_COREF` relations give
//! document-local clusters, and everything else becomes a singleton.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use super::{Corpus, CorpusBuilder, CorpusError, Split, Token};

#[derive(Debug, Clone)]
pub struct EcbOptions {
    pub name: String,
    pub test_topics: BTreeSet<u32>,
    pub dev_topics: BTreeSet<u32>,
    /// Validation documents that go to `dev_small` instead of `dev`.
    pub dev_small_docs: BTreeSet<String>,
    /// When set, only mentions in these (doc id, original sentence number)
    /// sentences are kept.
    pub sentence_filter: Option<BTreeSet<(String, usize)>>,
    /// Flag common English function words as stopwords.
    pub builtin_stopwords: bool,
}

impl Default for EcbOptions {
    fn default() -> Self {
        EcbOptions {
            name: "ECB+".to_string(),
            test_topics: (36..=45).collect(),
            dev_topics: [2, 5, 12, 18, 21, 34, 35].into_iter().collect(),
            dev_small_docs: BTreeSet::new(),
            sentence_filter: None,
            builtin_stopwords: true,
        }
    }
}

impl EcbOptions {
    /// Reads a `topic,file,sentence_number` CSV listing annotated sentences.
    pub fn load_sentence_filter(&mut self, path: &Path) -> Result<(), CorpusError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        let mut set = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 {
                continue;
            }
            match fields[2].parse::<usize>() {
                Ok(n) => {
                    set.insert((fields[1].trim_end_matches(".xml").to_string(), n));
                }
                Err(_) if i == 0 => {} // header
                Err(_) => {
                    return Err(CorpusError::Parse {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: format!("bad sentence number `{}`", fields[2]),
                    })
                }
            }
        }
        self.sentence_filter = Some(set);
        Ok(())
    }

    /// Reads one document id per line.
    pub fn load_dev_small_docs(&mut self, path: &Path) -> Result<(), CorpusError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        self.dev_small_docs = text
            .lines()
            .map(|l| l.trim().trim_end_matches(".xml").to_string())
            .filter(|l| !l.is_empty())
            .collect();
        Ok(())
    }

    fn split_for(&self, topic: &str, doc_id: &str) -> Split {
        let n: Option<u32> = topic.parse().ok();
        match n {
            Some(n) if self.test_topics.contains(&n) => Split::Test,
            Some(n) if self.dev_topics.contains(&n) => {
                if self.dev_small_docs.contains(doc_id) {
                    Split::DevSmall
                } else {
                    Split::Dev
                }
            }
            _ => Split::Train,
        }
    }
}

pub fn ingest_ecb_xml(path: &Path, options: &EcbOptions) -> Result<Corpus, CorpusError> {
    let mut files = Vec::new();
    collect_xml(path, &mut files)?;
    files.sort();

    let mut parsed = Vec::new();
    for file in &files {
        let text = fs::read_to_string(file).map_err(|e| CorpusError::io(file, e))?;
        parsed.push(parse_document(&text, file)?);
    }
    // Topics and documents in numeric-aware order.
    parsed.sort_by_key(|d| sort_key(&d.doc_id));

    let mut builder = CorpusBuilder::new(options.name.clone());
    for doc in &parsed {
        builder.document(&doc.topic, &doc.doc_id);
        for sentence in &doc.sentences {
            let tokens = sentence
                .tokens
                .iter()
                .map(|t| {
                    let tok = Token::new(t.text.clone());
                    if options.builtin_stopwords && is_stopword(&t.text) {
                        tok.stopword()
                    } else {
                        tok
                    }
                })
                .collect();
            builder.sentence(&doc.doc_id, tokens);
        }
        let split = options.split_for(&doc.topic, &doc.doc_id);
        for m in &doc.mentions {
            if let Some(filter) = &options.sentence_filter {
                if !filter.contains(&(doc.doc_id.clone(), m.original_sentence)) {
                    continue;
                }
            }
            builder.mention(
                &m.mention_id,
                &doc.doc_id,
                m.sentence_index,
                m.token_start,
                m.token_end_exclusive,
                &m.cluster,
                split,
            );
        }
    }
    builder.build()
}

fn sort_key(doc_id: &str) -> (u32, String) {
    let topic = doc_id.split('_').next().unwrap_or("");
    (topic.parse().unwrap_or(u32::MAX), doc_id.to_string())
}

fn collect_xml(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    if path.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    let entries = fs::read_dir(path).map_err(|e| CorpusError::io(path, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CorpusError::io(path, e))?;
        let p = entry.path();
        if p.is_dir() {
            collect_xml(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "xml") {
            out.push(p);
        }
    }
    Ok(())
}

struct RawToken {
    text: String,
}

struct RawSentence {
    tokens: Vec<RawToken>,
}

struct RawMention {
    mention_id: String,
    original_sentence: usize,
    sentence_index: usize,
    token_start: usize,
    token_end_exclusive: usize,
    cluster: String,
}

struct RawDocument {
    topic: String,
    doc_id: String,
    sentences: Vec<RawSentence>,
    mentions: Vec<RawMention>,
}

fn parse_document(text: &str, file: &Path) -> Result<RawDocument, CorpusError> {
    let xml_err = |message: String| CorpusError::Parse {
        path: file.display().to_string(),
        line: 0,
        message,
    };
    let doc = roxmltree::Document::parse(text).map_err(|e| CorpusError::Parse {
        path: file.display().to_string(),
        line: e.pos().row as usize,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    let doc_name = root
        .attribute("doc_name")
        .map(str::to_string)
        .or_else(|| file.file_name().map(|f| f.to_string_lossy().into_owned()))
        .ok_or_else(|| xml_err("document has no name".into()))?;
    let doc_id = doc_name.trim_end_matches(".xml").to_string();
    let topic = doc_id.split('_').next().unwrap_or(&doc_id).to_string();

    // t_id -> (original sentence number, position within sentence)
    let mut by_sentence: BTreeMap<usize, Vec<(usize, String, String)>> = BTreeMap::new();
    for tok in root.children().filter(|n| n.has_tag_name("token")) {
        let attr = |name: &str| -> Result<&str, CorpusError> {
            tok.attribute(name)
                .ok_or_else(|| xml_err(format!("token without `{name}` attribute")))
        };
        let t_id = attr("t_id")?.to_string();
        let sentence: usize = attr("sentence")?
            .parse()
            .map_err(|_| xml_err("non-numeric sentence attribute".into()))?;
        let number: usize = attr("number")?
            .parse()
            .map_err(|_| xml_err("non-numeric number attribute".into()))?;
        let text = tok.text().unwrap_or("").trim().to_string();
        by_sentence
            .entry(sentence)
            .or_default()
            .push((number, t_id, text));
    }

    let mut token_pos: HashMap<String, (usize, usize, usize)> = HashMap::new();
    let mut sentences = Vec::new();
    for (new_index, (original, mut toks)) in by_sentence.into_iter().enumerate() {
        toks.sort_by_key(|(n, _, _)| *n);
        let mut tokens = Vec::new();
        for (pos, (_, t_id, text)) in toks.into_iter().enumerate() {
            token_pos.insert(t_id, (original, new_index, pos));
            tokens.push(RawToken {
                text: if text.is_empty() { "_".to_string() } else { text },
            });
        }
        sentences.push(RawSentence { tokens });
    }

    let mut clusters: HashMap<String, String> = HashMap::new();
    if let Some(relations) = root.children().find(|n| n.has_tag_name("Relations")) {
        for rel in relations.children().filter(|n| n.is_element()) {
            let tag = rel.tag_name().name();
            let cluster = match tag {
                "CROSS_DOC_COREF" => match rel.attribute("note") {
                    Some(note) => format!("{topic}_{note}"),
                    None => continue,
                },
                "INTRA_DOC_COREF" => format!(
                    "INTRA_{}_{}",
                    doc_id,
                    rel.attribute("r_id").unwrap_or("0")
                ),
                _ => continue,
            };
            for src in rel.children().filter(|n| n.has_tag_name("source")) {
                if let Some(m_id) = src.attribute("m_id") {
                    let entry = clusters.entry(m_id.to_string());
                    // Cross-document chains win over intra-document ones.
                    match entry {
                        std::collections::hash_map::Entry::Occupied(mut o) => {
                            if tag == "CROSS_DOC_COREF" {
                                o.insert(cluster.clone());
                            }
                        }
                        std::collections::hash_map::Entry::Vacant(v) => {
                            v.insert(cluster.clone());
                        }
                    }
                }
            }
        }
    }

    let mut mentions = Vec::new();
    if let Some(markables) = root.children().find(|n| n.has_tag_name("Markables")) {
        for mk in markables.children().filter(|n| n.is_element()) {
            let tag = mk.tag_name().name();
            if !(tag.starts_with("ACTION") || tag.starts_with("NEG_ACTION")) {
                continue;
            }
            let anchors: Vec<(usize, usize, usize)> = mk
                .children()
                .filter(|n| n.has_tag_name("token_anchor"))
                .filter_map(|a| a.attribute("t_id"))
                .filter_map(|t| token_pos.get(t).copied())
                .collect();
            if anchors.is_empty() {
                continue;
            }
            let (original, sentence_index, _) = anchors[0];
            if anchors.iter().any(|(_, s, _)| *s != sentence_index) {
                continue;
            }
            let start = anchors.iter().map(|a| a.2).min().unwrap();
            let end = anchors.iter().map(|a| a.2).max().unwrap() + 1;
            let m_id = mk.attribute("m_id").unwrap_or("0");
            let mention_id = format!("{doc_id}_{m_id}");
            let cluster = clusters
                .get(m_id)
                .cloned()
                .unwrap_or_else(|| format!("SINGLETON_{mention_id}"));
            mentions.push(RawMention {
                mention_id,
                original_sentence: original,
                sentence_index,
                token_start: start,
                token_end_exclusive: end,
                cluster,
            });
        }
    }
    mentions.sort_by(|a, b| {
        (a.sentence_index, a.token_start, &a.mention_id).cmp(&(
            b.sentence_index,
            b.token_start,
            &b.mention_id,
        ))
    });

    Ok(RawDocument {
        topic,
        doc_id,
        sentences,
        mentions,
    })
}

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves", "'s", ".", ",", "\"", "'", "``", "''", "-", "--", ":", ";", "(", ")", "?", "!",
];

fn is_stopword(text: &str) -> bool {
    let lower = text.to_lowercase();
    STOPWORDS.contains(&lower.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<Document doc_name="36_1ecb.xml" doc_id="DOC1">
<token t_id="1" sentence="0" number="0">Police</token>
<token t_id="2" sentence="0" number="1">arrested</token>
<token t_id="3" sentence="0" number="2">a</token>
<token t_id="4" sentence="0" number="3">man</token>
<token t_id="5" sentence="2" number="0">He</token>
<token t_id="6" sentence="2" number="1">was</token>
<token t_id="7" sentence="2" number="2">charged</token>
<Markables>
<ACTION_OCCURRENCE m_id="10"><token_anchor t_id="2"/></ACTION_OCCURRENCE>
<ACTION_OCCURRENCE m_id="11"><token_anchor t_id="6"/><token_anchor t_id="7"/></ACTION_OCCURRENCE>
<HUMAN_PART_PER m_id="12"><token_anchor t_id="4"/></HUMAN_PART_PER>
<ACTION_OCCURRENCE m_id="40" TAG_DESCRIPTOR="t36_arrest" instance_id="ACT123"/>
</Markables>
<Relations>
<CROSS_DOC_COREF r_id="1" note="ACT123"><source m_id="10"/><target m_id="40"/></CROSS_DOC_COREF>
</Relations>
</Document>"#;

    #[test]
    fn parses_mentions_and_clusters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("36_1ecb.xml");
        fs::write(&path, DOC).unwrap();
        let c = ingest_ecb_xml(dir.path(), &EcbOptions::default()).unwrap();
        assert_eq!(c.mention_count(), 2);
        let m = c.mention("36_1ecb_10").unwrap();
        assert_eq!(m.trigger_text, "arrested");
        assert_eq!(m.gold_cluster_id, "36_ACT123");
        let m = c.mention("36_1ecb_11").unwrap();
        assert_eq!(m.trigger_text, "was charged");
        assert_eq!(m.sentence_index, 1);
        assert_eq!(m.gold_cluster_id, "SINGLETON_36_1ecb_11");
        assert_eq!(c.split_of("36_1ecb_10").unwrap(), Split::Test);
        assert_eq!(c.mention_lemma("36_1ecb_11").unwrap(), "charged");
    }

    #[test]
    fn sentence_filter_drops_mentions() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("36_1ecb.xml"), DOC).unwrap();
        let csv = dir.path().join("sentences.csv");
        fs::write(&csv, "Topic,File,Sentence Number\n36,36_1ecb.xml,2\n").unwrap();
        let mut opts = EcbOptions::default();
        opts.load_sentence_filter(&csv).unwrap();
        let c = ingest_ecb_xml(&dir.path().join("36_1ecb.xml"), &opts).unwrap();
        assert_eq!(c.mention_count(), 1);
        assert!(c.contains_mention("36_1ecb_11"));
    }

    #[test]
    fn split_assignment_follows_topics() {
        let mut o = EcbOptions::default();
        o.dev_small_docs.insert("2_3ecb".into());
        assert_eq!(o.split_for("1", "1_1ecb"), Split::Train);
        assert_eq!(o.split_for("2", "2_1ecb"), Split::Dev);
        assert_eq!(o.split_for("2", "2_3ecb"), Split::DevSmall);
        assert_eq!(o.split_for("45", "45_1ecb"), Split::Test);
    }
}
