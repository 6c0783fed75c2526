use std::collections::BTreeMap;

use super::{Corpus, CorpusError, Document, Mention, Sentence, Split, Token, Topic};

/// Incremental corpus construction. Trigger texts are derived from the token
/// spans, sentence indices are assigned in insertion order, and everything is
/// validated by [`CorpusBuilder::build`].
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    name: String,
    topics: Vec<Topic>,
    pending: Vec<(Mention, Split)>,
    errors: Vec<String>,
}

impl CorpusBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        CorpusBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Adds an empty document under `topic_id`, creating the topic on first use.
    pub fn document(&mut self, topic_id: &str, doc_id: &str) -> &mut Self {
        let doc = Document {
            doc_id: doc_id.to_string(),
            sentences: Vec::new(),
            mentions: Vec::new(),
        };
        match self.topics.iter_mut().find(|t| t.topic_id == topic_id) {
            Some(topic) => topic.documents.push(doc),
            None => self.topics.push(Topic {
                topic_id: topic_id.to_string(),
                documents: vec![doc],
            }),
        }
        self
    }

    pub fn sentence(&mut self, doc_id: &str, tokens: Vec<Token>) -> &mut Self {
        match self.doc_mut(doc_id) {
            Some(doc) => {
                let index = doc.sentences.len();
                doc.sentences.push(Sentence { index, tokens });
            }
            None => self.errors.push(format!("sentence for unknown document `{doc_id}`")),
        }
        self
    }

    /// Adds a sentence tokenized on whitespace, without annotations.
    pub fn sentence_text(&mut self, doc_id: &str, text: &str) -> &mut Self {
        let tokens = text.split_whitespace().map(Token::new).collect();
        self.sentence(doc_id, tokens)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn mention(
        &mut self,
        mention_id: &str,
        doc_id: &str,
        sentence_index: usize,
        token_start: usize,
        token_end_exclusive: usize,
        gold_cluster_id: &str,
        split: Split,
    ) -> &mut Self {
        self.pending.push((
            Mention {
                mention_id: mention_id.to_string(),
                doc_id: doc_id.to_string(),
                sentence_index,
                token_start,
                token_end_exclusive,
                trigger_text: String::new(),
                gold_cluster_id: gold_cluster_id.to_string(),
            },
            split,
        ));
        self
    }

    pub fn build(&mut self) -> Result<Corpus, CorpusError> {
        if let Some(e) = self.errors.first() {
            return Err(CorpusError::Validation(e.clone()));
        }
        let mut split_map = BTreeMap::new();
        for (mut m, split) in std::mem::take(&mut self.pending) {
            let doc = self
                .doc_mut(&m.doc_id)
                .ok_or_else(|| {
                    CorpusError::Validation(format!(
                        "mention `{}` names unknown document `{}`",
                        m.mention_id, m.doc_id
                    ))
                })?;
            if let Some(s) = doc.sentences.get(m.sentence_index) {
                if m.token_start < m.token_end_exclusive && m.token_end_exclusive <= s.tokens.len() {
                    m.trigger_text = s.span_text(m.token_start, m.token_end_exclusive);
                }
            }
            split_map.insert(m.mention_id.clone(), split);
            doc.mentions.push(m);
        }
        Corpus::new(std::mem::take(&mut self.name), std::mem::take(&mut self.topics), split_map)
    }

    fn doc_mut(&mut self, doc_id: &str) -> Option<&mut Document> {
        self.topics
            .iter_mut()
            .flat_map(|t| t.documents.iter_mut())
            .find(|d| d.doc_id == doc_id)
    }
}
