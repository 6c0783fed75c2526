//! Span-annotated event coreference corpora.
//!
//! A [`Corpus`] is a tree of topics, documents and tokenized sentences with
//! event mentions attached to documents. Every mention carries a gold cluster
//! id and a split label. Corpora are validated on construction and are
//! immutable afterwards.

mod builder;
mod canonical;
mod ecb;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterAssignment;

pub use builder::CorpusBuilder;
pub use canonical::{export_corpus, read_canonical, write_canonical};
pub use ecb::{ingest_ecb_xml, EcbOptions};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid corpus: {0}")]
    Validation(String),
    #[error("unknown mention id `{0}`")]
    UnknownMention(String),
    #[error("unknown document id `{0}`")]
    UnknownDocument(String),
    #[error("unknown split `{0}`")]
    UnknownSplit(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Data split a mention belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    DevSmall,
    Test,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::DevSmall, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::DevSmall => "dev_small",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "dev_small" => Ok(Split::DevSmall),
            "test" => Ok(Split::Test),
            other => Err(CorpusError::UnknownSplit(other.to_string())),
        }
    }
}

/// Input format accepted by [`ingest_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// Line-delimited JSON records (`meta`, `topic`, `document`, `sentence`, `mention`).
    Canonical,
    /// A directory (or single file) of ECB+ XML documents.
    EcbXml,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Lowercased base form supplied by an external tagger.
    pub lemma: Option<String>,
    pub is_stopword: bool,
}

impl Token {
    pub fn new(text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            lemma: None,
            is_stopword: false,
        }
    }

    pub fn with_lemma(mut self, lemma: impl Into<String>) -> Self {
        self.lemma = Some(lemma.into());
        self
    }

    pub fn stopword(mut self) -> Self {
        self.is_stopword = true;
        self
    }

    /// The lowercased lemma, falling back to the lowercased surface text.
    pub fn normalized_lemma(&self) -> String {
        match &self.lemma {
            Some(lemma) => lemma.to_lowercase(),
            None => self.text.to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Whitespace-joined token texts.
    pub fn text(&self) -> String {
        join_tokens(&self.tokens)
    }

    pub fn span_text(&self, start: usize, end: usize) -> String {
        join_tokens(&self.tokens[start..end])
    }
}

fn join_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub mention_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub token_start: usize,
    pub token_end_exclusive: usize,
    pub trigger_text: String,
    pub gold_cluster_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<Mention>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    pub documents: Vec<Document>,
}

#[derive(Debug, Clone, Copy)]
struct MentionLoc {
    topic: usize,
    doc: usize,
    mention: usize,
}

/// Per-split counts of topics, documents and mentions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SplitStats {
    pub topics: usize,
    pub documents: usize,
    pub mentions: usize,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    name: String,
    topics: Vec<Topic>,
    split_map: BTreeMap<String, Split>,
    mentions: HashMap<String, MentionLoc>,
    docs: HashMap<String, (usize, usize)>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.topics == other.topics && self.split_map == other.split_map
    }
}

impl Corpus {
    /// Validates the structure and builds lookup indices.
    pub fn new(
        name: impl Into<String>,
        topics: Vec<Topic>,
        split_map: BTreeMap<String, Split>,
    ) -> Result<Self, CorpusError> {
        let mut mentions = HashMap::new();
        let mut docs = HashMap::new();
        let mut cluster_topic: HashMap<&str, &str> = HashMap::new();
        let mut topic_ids = BTreeSet::new();

        for (ti, topic) in topics.iter().enumerate() {
            if !topic_ids.insert(topic.topic_id.as_str()) {
                return Err(invalid(format!("duplicate topic id `{}`", topic.topic_id)));
            }
            for (di, doc) in topic.documents.iter().enumerate() {
                if docs.insert(doc.doc_id.clone(), (ti, di)).is_some() {
                    return Err(invalid(format!("duplicate document id `{}`", doc.doc_id)));
                }
                for (si, sentence) in doc.sentences.iter().enumerate() {
                    if sentence.index != si {
                        return Err(invalid(format!(
                            "document `{}`: sentence index {} at position {}",
                            doc.doc_id, sentence.index, si
                        )));
                    }
                    if let Some(pos) = sentence.tokens.iter().position(|t| t.text.is_empty()) {
                        return Err(invalid(format!(
                            "document `{}` sentence {}: empty token at {}",
                            doc.doc_id, si, pos
                        )));
                    }
                }
                for (mi, m) in doc.mentions.iter().enumerate() {
                    validate_mention(doc, m)?;
                    let prev = mentions.insert(
                        m.mention_id.clone(),
                        MentionLoc {
                            topic: ti,
                            doc: di,
                            mention: mi,
                        },
                    );
                    if prev.is_some() {
                        return Err(invalid(format!("duplicate mention id `{}`", m.mention_id)));
                    }
                    if !split_map.contains_key(&m.mention_id) {
                        return Err(invalid(format!("mention `{}` has no split label", m.mention_id)));
                    }
                    match cluster_topic.get(m.gold_cluster_id.as_str()) {
                        Some(t) if *t != topic.topic_id => {
                            return Err(invalid(format!(
                                "mention `{}`: cluster `{}` spans topics `{}` and `{}`",
                                m.mention_id, m.gold_cluster_id, t, topic.topic_id
                            )));
                        }
                        _ => {
                            cluster_topic.insert(&m.gold_cluster_id, &topic.topic_id);
                        }
                    }
                }
            }
        }
        if let Some(stray) = split_map.keys().find(|id| !mentions.contains_key(*id)) {
            return Err(invalid(format!("split label for unknown mention `{stray}`")));
        }

        Ok(Corpus {
            name: name.into(),
            topics,
            split_map,
            mentions,
            docs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn split_map(&self) -> &BTreeMap<String, Split> {
        &self.split_map
    }

    pub fn mention_count(&self) -> usize {
        self.mentions.len()
    }

    pub fn document_count(&self) -> usize {
        self.docs.len()
    }

    pub fn mention(&self, id: &str) -> Result<&Mention, CorpusError> {
        let loc = self
            .mentions
            .get(id)
            .ok_or_else(|| CorpusError::UnknownMention(id.to_string()))?;
        Ok(&self.topics[loc.topic].documents[loc.doc].mentions[loc.mention])
    }

    pub fn contains_mention(&self, id: &str) -> bool {
        self.mentions.contains_key(id)
    }

    pub fn document(&self, doc_id: &str) -> Result<&Document, CorpusError> {
        let (t, d) = self
            .docs
            .get(doc_id)
            .ok_or_else(|| CorpusError::UnknownDocument(doc_id.to_string()))?;
        Ok(&self.topics[*t].documents[*d])
    }

    pub fn topic_of_document(&self, doc_id: &str) -> Result<&str, CorpusError> {
        let (t, _) = self
            .docs
            .get(doc_id)
            .ok_or_else(|| CorpusError::UnknownDocument(doc_id.to_string()))?;
        Ok(&self.topics[*t].topic_id)
    }

    pub fn topic_of_mention(&self, id: &str) -> Result<&str, CorpusError> {
        let loc = self
            .mentions
            .get(id)
            .ok_or_else(|| CorpusError::UnknownMention(id.to_string()))?;
        Ok(&self.topics[loc.topic].topic_id)
    }

    pub fn split_of(&self, id: &str) -> Result<Split, CorpusError> {
        self.split_map
            .get(id)
            .copied()
            .ok_or_else(|| CorpusError::UnknownMention(id.to_string()))
    }

    /// The sentence a mention occurs in.
    pub fn sentence_of(&self, id: &str) -> Result<&Sentence, CorpusError> {
        let m = self.mention(id)?;
        let doc = self.document(&m.doc_id)?;
        Ok(&doc.sentences[m.sentence_index])
    }

    /// All mentions in corpus order (topic, document, annotation order).
    pub fn mentions(&self) -> impl Iterator<Item = &Mention> {
        self.topics
            .iter()
            .flat_map(|t| t.documents.iter())
            .flat_map(|d| d.mentions.iter())
    }

    pub fn mentions_in_split(&self, split: Split) -> impl Iterator<Item = &Mention> {
        self.mentions()
            .filter(move |m| self.split_map.get(&m.mention_id) == Some(&split))
    }

    pub fn has_split(&self, split: Split) -> bool {
        self.split_map.values().any(|s| *s == split)
    }

    /// Counts topics and documents that hold at least one mention of each split.
    pub fn stats(&self) -> BTreeMap<Split, SplitStats> {
        let mut out: BTreeMap<Split, SplitStats> =
            Split::ALL.iter().map(|s| (*s, SplitStats::default())).collect();
        for topic in &self.topics {
            let mut topic_splits = BTreeSet::new();
            for doc in &topic.documents {
                let mut doc_splits = BTreeSet::new();
                for m in &doc.mentions {
                    let split = self.split_map[&m.mention_id];
                    out.get_mut(&split).unwrap().mentions += 1;
                    doc_splits.insert(split);
                }
                for s in &doc_splits {
                    out.get_mut(s).unwrap().documents += 1;
                }
                topic_splits.extend(doc_splits);
            }
            for s in topic_splits {
                out.get_mut(&s).unwrap().topics += 1;
            }
        }
        out
    }

    /// Lowercased lemma of the head token of a mention's trigger.
    ///
    /// The head of a multi-token trigger is its last non-stopword token, or
    /// the last token when every token is a stopword.
    pub fn mention_lemma(&self, id: &str) -> Result<String, CorpusError> {
        let m = self.mention(id)?;
        let sentence = self.sentence_of(id)?;
        let span = &sentence.tokens[m.token_start..m.token_end_exclusive];
        let head = span
            .iter()
            .rev()
            .find(|t| !t.is_stopword)
            .unwrap_or_else(|| span.last().expect("validated non-empty span"));
        Ok(head.normalized_lemma())
    }

    /// Gold partition, optionally restricted to one split.
    pub fn gold_assignment(&self, split: Option<Split>) -> ClusterAssignment {
        let members = self
            .mentions()
            .filter(|m| split.is_none_or(|s| self.split_map[&m.mention_id] == s))
            .map(|m| (m.mention_id.clone(), m.gold_cluster_id.clone()));
        ClusterAssignment::from_labels(members)
    }

    /// A copy holding only the mentions of `split`, and only the documents and
    /// topics that still contain mentions.
    pub fn restrict_to_split(&self, split: Split) -> Corpus {
        let topics: Vec<Topic> = self
            .topics
            .iter()
            .filter_map(|t| {
                let documents: Vec<Document> = t
                    .documents
                    .iter()
                    .filter_map(|d| {
                        let mentions: Vec<Mention> = d
                            .mentions
                            .iter()
                            .filter(|m| self.split_map[&m.mention_id] == split)
                            .cloned()
                            .collect();
                        (!mentions.is_empty()).then(|| Document {
                            doc_id: d.doc_id.clone(),
                            sentences: d.sentences.clone(),
                            mentions,
                        })
                    })
                    .collect();
                (!documents.is_empty()).then(|| Topic {
                    topic_id: t.topic_id.clone(),
                    documents,
                })
            })
            .collect();
        let split_map = self
            .split_map
            .iter()
            .filter(|(_, s)| **s == split)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        Corpus::new(self.name.clone(), topics, split_map).expect("subset of a valid corpus")
    }
}

fn invalid(msg: String) -> CorpusError {
    CorpusError::Validation(msg)
}

fn validate_mention(doc: &Document, m: &Mention) -> Result<(), CorpusError> {
    if m.doc_id != doc.doc_id {
        return Err(invalid(format!(
            "mention `{}` is filed under document `{}` but names `{}`",
            m.mention_id, doc.doc_id, m.doc_id
        )));
    }
    if m.gold_cluster_id.is_empty() {
        return Err(invalid(format!("mention `{}` has an empty gold cluster id", m.mention_id)));
    }
    let sentence = doc.sentences.get(m.sentence_index).ok_or_else(|| {
        invalid(format!(
            "mention `{}`: sentence {} out of range",
            m.mention_id, m.sentence_index
        ))
    })?;
    if m.token_start >= m.token_end_exclusive || m.token_end_exclusive > sentence.tokens.len() {
        return Err(invalid(format!(
            "mention `{}`: token span [{}, {}) invalid for sentence of {} tokens",
            m.mention_id,
            m.token_start,
            m.token_end_exclusive,
            sentence.tokens.len()
        )));
    }
    let expected = sentence.span_text(m.token_start, m.token_end_exclusive);
    if expected != m.trigger_text {
        return Err(invalid(format!(
            "mention `{}`: trigger text `{}` does not match span text `{}`",
            m.mention_id, m.trigger_text, expected
        )));
    }
    Ok(())
}

/// Reads and validates a corpus in the given format.
pub fn ingest_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    match format {
        CorpusFormat::Canonical => read_canonical(path),
        CorpusFormat::EcbXml => ingest_ecb_xml(path, &EcbOptions::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Corpus {
        let mut b = CorpusBuilder::new("fixture");
        b.document("t1", "d1");
        b.sentence(
            "d1",
            vec![
                Token::new("The").with_lemma("the").stopword(),
                Token::new("man").with_lemma("man"),
                Token::new("was").with_lemma("be").stopword(),
                Token::new("fired").with_lemma("fire"),
                Token::new("after").with_lemma("after").stopword(),
                Token::new("the").with_lemma("the").stopword(),
                Token::new("killing").with_lemma("kill"),
            ],
        );
        b.document("t1", "d2");
        b.sentence("d2", vec![Token::new("A"), Token::new("slaying"), Token::new(".")]);
        b.mention("m1", "d1", 0, 2, 4, "c1", Split::Test);
        b.mention("m2", "d1", 0, 6, 7, "c2", Split::Test);
        b.mention("m3", "d2", 0, 1, 2, "c2", Split::Test);
        b.build().unwrap()
    }

    #[test]
    fn lemma_of_single_token_trigger() {
        assert_eq!(fixture().mention_lemma("m2").unwrap(), "kill");
    }

    #[test]
    fn lemma_of_multi_token_trigger_uses_last_content_token() {
        let c = fixture();
        assert_eq!(c.mention("m1").unwrap().trigger_text, "was fired");
        assert_eq!(c.mention_lemma("m1").unwrap(), "fire");
    }

    #[test]
    fn lemma_falls_back_to_lowercased_text() {
        assert_eq!(fixture().mention_lemma("m3").unwrap(), "slaying");
    }

    #[test]
    fn lemma_of_all_stopword_span_is_last_token() {
        let mut b = CorpusBuilder::new("x");
        b.document("t", "d");
        b.sentence(
            "d",
            vec![Token::new("It").stopword(), Token::new("Was").stopword()],
        );
        b.mention("m", "d", 0, 0, 2, "c", Split::Dev);
        assert_eq!(b.build().unwrap().mention_lemma("m").unwrap(), "was");
    }

    #[test]
    fn unknown_mention_lemma() {
        assert!(matches!(
            fixture().mention_lemma("nope"),
            Err(CorpusError::UnknownMention(_))
        ));
    }

    #[test]
    fn rejects_cluster_spanning_topics() {
        let mut b = CorpusBuilder::new("x");
        b.document("t1", "d1");
        b.sentence("d1", vec![Token::new("a")]);
        b.document("t2", "d2");
        b.sentence("d2", vec![Token::new("b")]);
        b.mention("m1", "d1", 0, 0, 1, "c", Split::Test);
        b.mention("m2", "d2", 0, 0, 1, "c", Split::Test);
        let err = b.build().unwrap_err().to_string();
        assert!(err.contains("m2"), "{err}");
    }

    #[test]
    fn rejects_bad_span_and_duplicate_ids() {
        let mut b = CorpusBuilder::new("x");
        b.document("t1", "d1");
        b.sentence("d1", vec![Token::new("a")]);
        b.mention("m1", "d1", 0, 0, 2, "c", Split::Test);
        assert!(b.build().unwrap_err().to_string().contains("m1"));

        let mut b = CorpusBuilder::new("x");
        b.document("t1", "d1");
        b.sentence("d1", vec![Token::new("a"), Token::new("b")]);
        b.mention("m1", "d1", 0, 0, 1, "c", Split::Test);
        b.mention("m1", "d1", 0, 1, 2, "c", Split::Test);
        assert!(b.build().unwrap_err().to_string().contains("duplicate mention id"));
    }

    #[test]
    fn stats_and_restriction() {
        let c = fixture();
        let stats = c.stats();
        assert_eq!(
            stats[&Split::Test],
            SplitStats {
                topics: 1,
                documents: 2,
                mentions: 3
            }
        );
        assert_eq!(stats[&Split::Train], SplitStats::default());
        let r = c.restrict_to_split(Split::Train);
        assert_eq!(r.mention_count(), 0);
        assert_eq!(c.restrict_to_split(Split::Test), c);
    }

    #[test]
    fn split_names_round_trip() {
        for s in Split::ALL {
            assert_eq!(s.as_str().parse::<Split>().unwrap(), s);
        }
        assert!("validation".parse::<Split>().is_err());
    }
}
