//! Constrained metaphoric paraphrasing of trigger words, trigger realignment
//! in the rewritten sentences, and assembly of the transformed corpus.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Document, Mention, Sentence, Split, Token, Topic};
use crate::llm::{map_bounded, request_with_retries, ChatBackend, ChatRequest, LlmConfig, LlmFailure};
use crate::prompt::{PromptTemplate, TemplateError};

pub const METAPHOR_SYSTEM_PROMPT: &str =
    "You are a metaphor expert. Reply with a single JSON object and no other text.";

#[derive(Debug, Error)]
pub enum MetamorphError {
    #[error("refusing to render a prompt with no triggers")]
    EmptyTriggers,
    #[error("trigger `{0}` does not occur in the sentence")]
    TriggerNotInSentence(String),
    #[error("candidates_per_trigger must be at least 1")]
    NoCandidates,
    #[error("sentence {doc_id}#{sentence_index} has no mentions")]
    NoMentions { doc_id: String, sentence_index: usize },
    #[error("sentence {doc_id}#{sentence_index} does not exist")]
    UnknownSentence { doc_id: String, sentence_index: usize },
    #[error("record has {words} trigger words but {mentions} mentions were given")]
    MentionCountMismatch { words: usize, mentions: usize },
    #[error("unresolved alignment cases block the build: {}", .0.join(", "))]
    Unresolved(Vec<String>),
    #[error("aligned spans overlap in {doc_id}#{sentence_index}: `{a}` and `{b}`")]
    OverlappingSpans {
        doc_id: String,
        sentence_index: usize,
        a: String,
        b: String,
    },
    #[error("span {span} of `{mention_id}` lies outside its sentence ({len} chars)")]
    SpanOutOfBounds {
        mention_id: String,
        span: CharSpan,
        len: usize,
    },
    #[error("LLM request for {doc_id}#{sentence_index} failed: {failure}")]
    Llm {
        doc_id: String,
        sentence_index: usize,
        failure: LlmFailure,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SingleWord,
    MultiWord,
}

impl Mode {
    pub fn template(self) -> PromptTemplate {
        match self {
            Mode::SingleWord => PromptTemplate::metaphor_single(),
            Mode::MultiWord => PromptTemplate::metaphor_multi(),
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single" | "single-word" => Ok(Mode::SingleWord),
            "multi" | "multi-word" => Ok(Mode::MultiWord),
            _ => Err(format!("unknown mode `{s}` (expected single or multi)")),
        }
    }
}

/// Which transformed corpus is being assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetaVersion {
    Meta1,
    MetaM,
}

impl MetaVersion {
    pub fn tag(self) -> &'static str {
        match self {
            MetaVersion::Meta1 => "META_1",
            MetaVersion::MetaM => "META_m",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            MetaVersion::Meta1 => Mode::SingleWord,
            MetaVersion::MetaM => Mode::MultiWord,
        }
    }
}

impl FromStr for MetaVersion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "meta1" | "meta_1" => Ok(MetaVersion::Meta1),
            "metam" | "meta_m" => Ok(MetaVersion::MetaM),
            _ => Err(format!("unknown version `{s}` (expected meta1 or metam)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetamorphConfig {
    pub mode: Mode,
    pub candidates_per_trigger: usize,
    pub llm: LlmConfig,
}

impl MetamorphConfig {
    pub fn new(mode: Mode, llm: LlmConfig) -> Self {
        MetamorphConfig {
            mode,
            candidates_per_trigger: 5,
            llm,
        }
    }
}

/// Renders the mode's template for one sentence. The trigger list is given to
/// the model as a JSON array.
pub fn render_prompt(
    sentence: &str,
    triggers: &[String],
    config: &MetamorphConfig,
) -> Result<String, MetamorphError> {
    render_with(&config.mode.template(), sentence, triggers, config)
}

fn render_with(
    template: &PromptTemplate,
    sentence: &str,
    triggers: &[String],
    config: &MetamorphConfig,
) -> Result<String, MetamorphError> {
    if config.candidates_per_trigger == 0 {
        return Err(MetamorphError::NoCandidates);
    }
    if triggers.is_empty() {
        return Err(MetamorphError::EmptyTriggers);
    }
    if let Some(t) = triggers.iter().find(|t| !sentence.contains(t.as_str())) {
        return Err(MetamorphError::TriggerNotInSentence(t.clone()));
    }
    let list = serde_json::to_string(triggers).expect("strings serialize");
    let n = config.candidates_per_trigger.to_string();
    Ok(template.render(&[
        ("sentence", sentence),
        ("trigger_list", &list),
        ("candidates", &n),
    ])?)
}

/// One model rewrite of one sentence. Failed records keep the sentence and
/// triggers literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseRecord {
    pub doc_id: String,
    pub sentence_index: usize,
    pub original_sentence: String,
    pub original_word_list: Vec<String>,
    pub metaphoric_word_list: Vec<String>,
    pub metaphoric_sentence: String,
    pub mode: Mode,
    pub raw_response: String,
    pub template_hash: String,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ParaphraseRecord {
    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Deserialize)]
struct Reply {
    #[serde(rename = "Original Sentence")]
    _original_sentence: String,
    #[serde(rename = "Original Word List")]
    original_word_list: Vec<String>,
    #[serde(rename = "Metaphoric Word List")]
    metaphoric_word_list: Vec<String>,
    #[serde(rename = "Metaphoric Sentence")]
    metaphoric_sentence: String,
}

/// Parses the four-field JSON reply (tolerating prose or code fences around
/// the object) and checks it against the expected trigger list.
pub fn parse_reply(raw: &str, expected: &[String]) -> Result<(Vec<String>, String), String> {
    let start = raw.find('{').ok_or("reply contains no JSON object")?;
    let end = raw.rfind('}').ok_or("reply contains no JSON object")?;
    if end < start {
        return Err("reply contains no JSON object".into());
    }
    let reply: Reply = serde_json::from_str(&raw[start..=end]).map_err(|e| e.to_string())?;
    if reply.original_word_list.len() != reply.metaphoric_word_list.len() {
        return Err(format!(
            "{} original words but {} metaphors",
            reply.original_word_list.len(),
            reply.metaphoric_word_list.len()
        ));
    }
    let got: Vec<&str> = reply.original_word_list.iter().map(|w| w.trim()).collect();
    let want: Vec<&str> = expected.iter().map(|w| w.trim()).collect();
    if got != want {
        return Err(format!("original word list {got:?} does not match triggers {want:?}"));
    }
    if reply.metaphoric_word_list.iter().any(|w| w.trim().is_empty()) {
        return Err("empty metaphor in word list".into());
    }
    if reply.metaphoric_sentence.trim().is_empty() {
        return Err("empty metaphoric sentence".into());
    }
    Ok((
        reply.metaphoric_word_list.into_iter().map(|w| w.trim().to_string()).collect(),
        reply.metaphoric_sentence.trim().to_string(),
    ))
}

fn sentence_mentions<'c>(corpus: &'c Corpus, doc_id: &str, sentence_index: usize) -> Result<(&'c Sentence, Vec<&'c Mention>), MetamorphError> {
    let doc = corpus.document(doc_id)?;
    let sentence = doc
        .sentences
        .get(sentence_index)
        .ok_or_else(|| MetamorphError::UnknownSentence {
            doc_id: doc_id.to_string(),
            sentence_index,
        })?;
    let mut mentions: Vec<&Mention> = doc
        .mentions
        .iter()
        .filter(|m| m.sentence_index == sentence_index)
        .collect();
    mentions.sort_by(|a, b| {
        (a.token_start, a.token_end_exclusive, &a.mention_id).cmp(&(b.token_start, b.token_end_exclusive, &b.mention_id))
    });
    Ok((sentence, mentions))
}

/// Sentences holding at least one mention of `split`, in document order.
pub fn sentences_with_mentions(corpus: &Corpus, split: Split) -> Vec<(String, usize)> {
    let set: BTreeSet<(String, usize)> = corpus
        .mentions_in_split(split)
        .map(|m| (m.doc_id.clone(), m.sentence_index))
        .collect();
    set.into_iter().collect()
}

/// Rewrites the triggers of one sentence. Malformed or mismatching replies
/// are retried; once retries run out the record is returned marked failed.
/// Transport failures are errors.
pub fn transform_sentence(
    corpus: &Corpus,
    doc_id: &str,
    sentence_index: usize,
    backend: &dyn ChatBackend,
    config: &MetamorphConfig,
) -> Result<ParaphraseRecord, MetamorphError> {
    let (sentence, mentions) = sentence_mentions(corpus, doc_id, sentence_index)?;
    if mentions.is_empty() {
        return Err(MetamorphError::NoMentions {
            doc_id: doc_id.to_string(),
            sentence_index,
        });
    }
    let text = sentence.text();
    let triggers: Vec<String> = mentions.iter().map(|m| m.trigger_text.clone()).collect();
    let template = config.mode.template();
    let user = render_with(&template, &text, &triggers, config)?;
    let request = ChatRequest {
        system: METAPHOR_SYSTEM_PROMPT.to_string(),
        user,
    };
    let mut record = ParaphraseRecord {
        doc_id: doc_id.to_string(),
        sentence_index,
        original_sentence: text.clone(),
        original_word_list: triggers.clone(),
        metaphoric_word_list: triggers.clone(),
        metaphoric_sentence: text,
        mode: config.mode,
        raw_response: String::new(),
        template_hash: template.hash(),
        attempts: 0,
        failure: None,
    };
    match request_with_retries(backend, &request, &config.llm, |raw| parse_reply(raw, &triggers)) {
        Ok(ex) => {
            (record.metaphoric_word_list, record.metaphoric_sentence) = ex.value;
            record.raw_response = ex.raw;
            record.attempts = ex.attempts;
        }
        Err(LlmFailure::Malformed {
            attempts,
            last_reply,
            reason,
        }) => {
            record.raw_response = last_reply;
            record.attempts = attempts;
            record.failure = Some(reason);
        }
        Err(failure) => {
            return Err(MetamorphError::Llm {
                doc_id: doc_id.to_string(),
                sentence_index,
                failure,
            })
        }
    }
    Ok(record)
}

/// Transforms many sentences with at most `llm.max_in_flight` requests in
/// flight; results are in input order.
pub fn transform_sentences(
    corpus: &Corpus,
    sentences: &[(String, usize)],
    backend: &dyn ChatBackend,
    config: &MetamorphConfig,
) -> Vec<Result<ParaphraseRecord, MetamorphError>> {
    map_bounded(sentences, config.llm.max_in_flight, |(doc, idx)| {
        transform_sentence(corpus, doc, *idx, backend, config)
    })
}

/// Half-open character range (Unicode scalar values).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for CharSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    AutoAligned,
    Ambiguous,
    Missing,
    Corrected,
}

impl CaseStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseStatus::AutoAligned => "auto_aligned",
            CaseStatus::Ambiguous => "ambiguous",
            CaseStatus::Missing => "missing",
            CaseStatus::Corrected => "corrected",
        }
    }
}

impl FromStr for CaseStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto_aligned" => Ok(CaseStatus::AutoAligned),
            "ambiguous" => Ok(CaseStatus::Ambiguous),
            "missing" => Ok(CaseStatus::Missing),
            "corrected" => Ok(CaseStatus::Corrected),
            _ => Err(format!("unknown case status `{s}`")),
        }
    }
}

/// Where one original mention landed in the rewritten sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentCase {
    pub mention_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    /// The metaphoric phrase searched for.
    pub phrase: String,
    pub candidate_span: Option<CharSpan>,
    pub status: CaseStatus,
    #[serde(default)]
    pub correction: Option<CharSpan>,
    #[serde(default)]
    pub reviewer: Option<String>,
    #[serde(default)]
    pub timestamp: Option<String>,
}

impl AlignmentCase {
    pub fn case_id(&self) -> &str {
        &self.mention_id
    }

    /// The span to use when building, if the case is settled.
    pub fn resolved_span(&self) -> Option<CharSpan> {
        match self.status {
            CaseStatus::Corrected => self.correction,
            CaseStatus::AutoAligned => self.candidate_span,
            CaseStatus::Ambiguous | CaseStatus::Missing => None,
        }
    }

    pub fn needs_review(&self) -> bool {
        self.resolved_span().is_none()
    }
}

/// Every case-insensitive occurrence of `phrase`, leftmost first.
pub fn occurrences(sentence: &str, phrase: &str) -> Vec<CharSpan> {
    let fold = |s: &str| -> Vec<char> {
        s.chars().map(|c| c.to_lowercase().next().unwrap_or(c)).collect()
    };
    let hay = fold(sentence);
    let needle = fold(phrase.trim());
    if needle.is_empty() || needle.len() > hay.len() {
        return Vec::new();
    }
    (0..=hay.len() - needle.len())
        .filter(|&i| hay[i..i + needle.len()] == needle[..])
        .map(|i| CharSpan::new(i, i + needle.len()))
        .collect()
}

/// Tokenizes a rewritten sentence: whitespace splitting, with leading and
/// trailing punctuation runs split off as tokens of their own.
pub fn meta_tokens(sentence: &str) -> Vec<(String, CharSpan)> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let word = &chars[start..i];
        let lead = word.iter().take_while(|c| !c.is_alphanumeric()).count();
        if lead == word.len() {
            out.push((word.iter().collect(), CharSpan::new(start, i)));
            continue;
        }
        let trail = word.iter().rev().take_while(|c| !c.is_alphanumeric()).count();
        let mut push = |a: usize, b: usize| {
            if a < b {
                out.push((chars[a..b].iter().collect(), CharSpan::new(a, b)));
            }
        };
        push(start, start + lead);
        push(start + lead, i - trail);
        push(i - trail, i);
    }
    out
}

/// Range of token indices overlapping `span`, if any.
fn token_range(tokens: &[(String, CharSpan)], span: CharSpan) -> Option<(usize, usize)> {
    let hit: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, (_, s))| s.overlaps(&span))
        .map(|(i, _)| i)
        .collect();
    Some((*hit.first()?, *hit.last()? + 1))
}

/// Widens `span` to whole tokens. `None` when it touches no token.
pub fn round_to_tokens(sentence: &str, span: CharSpan) -> Option<CharSpan> {
    let tokens = meta_tokens(sentence);
    let (a, b) = token_range(&tokens, span)?;
    Some(CharSpan::new(tokens[a].1.start, tokens[b - 1].1.end))
}

/// Char span of a mention inside its whitespace-joined original sentence.
pub fn mention_char_span(sentence: &Sentence, mention: &Mention) -> CharSpan {
    let offset = |t: usize| -> usize {
        sentence.tokens[..t].iter().map(|tok| tok.text.chars().count() + 1).sum()
    };
    let start = offset(mention.token_start);
    let end = offset(mention.token_end_exclusive) - 1;
    CharSpan::new(start, end)
}

/// Locates each original mention's metaphor in the rewritten sentence.
///
/// The k-th mention takes the leftmost occurrence of the k-th metaphoric
/// phrase not consumed by an earlier mention. It is auto-aligned when the
/// unconsumed occurrences can all be explained by the list entries still
/// waiting for that phrase, and when the occurrence sits on token
/// boundaries; otherwise it is flagged for review.
pub fn align_triggers(
    record: &ParaphraseRecord,
    mentions: &[&Mention],
) -> Result<Vec<AlignmentCase>, MetamorphError> {
    if mentions.len() != record.metaphoric_word_list.len() {
        return Err(MetamorphError::MentionCountMismatch {
            words: record.metaphoric_word_list.len(),
            mentions: mentions.len(),
        });
    }
    let sentence = &record.metaphoric_sentence;
    let tokens = meta_tokens(sentence);
    let starts: BTreeSet<usize> = tokens.iter().map(|(_, s)| s.start).collect();
    let ends: BTreeSet<usize> = tokens.iter().map(|(_, s)| s.end).collect();
    let folded: Vec<String> = record
        .metaphoric_word_list
        .iter()
        .map(|p| p.trim().to_lowercase())
        .collect();
    let mut consumed: Vec<CharSpan> = Vec::new();
    let mut cases = Vec::with_capacity(mentions.len());
    for (k, (mention, phrase)) in mentions.iter().zip(&record.metaphoric_word_list).enumerate() {
        let free: Vec<CharSpan> = occurrences(sentence, phrase)
            .into_iter()
            .filter(|o| !consumed.iter().any(|c| c.overlaps(o)))
            .collect();
        let waiting = folded[k..].iter().filter(|p| **p == folded[k]).count();
        let (candidate, status) = match free.first() {
            None => (None, CaseStatus::Missing),
            Some(&span) => {
                consumed.push(span);
                let on_tokens = starts.contains(&span.start) && ends.contains(&span.end);
                if free.len() <= waiting && on_tokens {
                    (Some(span), CaseStatus::AutoAligned)
                } else {
                    (Some(span), CaseStatus::Ambiguous)
                }
            }
        };
        cases.push(AlignmentCase {
            mention_id: mention.mention_id.clone(),
            doc_id: record.doc_id.clone(),
            sentence_index: record.sentence_index,
            phrase: phrase.trim().to_string(),
            candidate_span: candidate,
            status,
            correction: None,
            reviewer: None,
            timestamp: None,
        });
    }
    Ok(cases)
}

/// Aligns every record against the mentions of its sentence.
pub fn align_records(
    corpus: &Corpus,
    records: &[ParaphraseRecord],
) -> Result<Vec<AlignmentCase>, MetamorphError> {
    let mut cases = Vec::new();
    for r in records {
        let (_, mentions) = sentence_mentions(corpus, &r.doc_id, r.sentence_index)?;
        cases.extend(align_triggers(r, &mentions)?);
    }
    Ok(cases)
}

/// Surface form → (lemma, stopword) from the first occurrence in the corpus.
fn lexicon(corpus: &Corpus) -> HashMap<String, (Option<String>, bool)> {
    let mut lex = HashMap::new();
    for t in corpus.topics() {
        for d in &t.documents {
            for s in &d.sentences {
                for tok in &s.tokens {
                    lex.entry(tok.text.clone())
                        .or_insert_with(|| (tok.lemma.clone(), tok.is_stopword));
                }
            }
        }
    }
    lex
}

/// Assembles the transformed corpus: rewritten sentences replace their
/// originals, mention spans move to the aligned tokens, and ids, clusters,
/// splits and topics are carried over. Every mention of `splits` (and of any
/// rewritten sentence) needs a settled case.
pub fn build_meta_corpus(
    corpus: &Corpus,
    records: &[ParaphraseRecord],
    cases: &[AlignmentCase],
    splits: &[Split],
    version: MetaVersion,
) -> Result<Corpus, MetamorphError> {
    let by_sentence: BTreeMap<(&str, usize), &ParaphraseRecord> = records
        .iter()
        .map(|r| ((r.doc_id.as_str(), r.sentence_index), r))
        .collect();
    let by_mention: HashMap<&str, &AlignmentCase> =
        cases.iter().map(|c| (c.mention_id.as_str(), c)).collect();

    let mut blocking = Vec::new();
    for m in corpus.mentions() {
        let needed = splits.contains(&corpus.split_of(&m.mention_id)?)
            || by_sentence.contains_key(&(m.doc_id.as_str(), m.sentence_index));
        if needed && by_mention.get(m.mention_id.as_str()).and_then(|c| c.resolved_span()).is_none() {
            blocking.push(m.mention_id.clone());
        }
    }
    if !blocking.is_empty() {
        blocking.sort();
        return Err(MetamorphError::Unresolved(blocking));
    }

    let lex = lexicon(corpus);
    let make_token = |text: &str| -> Token {
        let (lemma, stop) = lex.get(text).cloned().unwrap_or((None, false));
        Token {
            text: text.to_string(),
            lemma,
            is_stopword: stop,
        }
    };

    let mut topics = Vec::new();
    for topic in corpus.topics() {
        let mut docs = Vec::new();
        for doc in &topic.documents {
            let mut sentences = doc.sentences.clone();
            let mut mentions = doc.mentions.clone();
            for s in &mut sentences {
                let Some(record) = by_sentence.get(&(doc.doc_id.as_str(), s.index)) else {
                    continue;
                };
                let text = &record.metaphoric_sentence;
                let len = text.chars().count();
                let toks = meta_tokens(text);
                let mut placed: Vec<(CharSpan, &str)> = Vec::new();
                for m in mentions.iter_mut().filter(|m| m.sentence_index == s.index) {
                    let span = by_mention[m.mention_id.as_str()]
                        .resolved_span()
                        .expect("checked above");
                    if span.start >= span.end || span.end > len {
                        return Err(MetamorphError::SpanOutOfBounds {
                            mention_id: m.mention_id.clone(),
                            span,
                            len,
                        });
                    }
                    let (a, b) = token_range(&toks, span).ok_or_else(|| MetamorphError::SpanOutOfBounds {
                        mention_id: m.mention_id.clone(),
                        span,
                        len,
                    })?;
                    let widened = CharSpan::new(toks[a].1.start, toks[b - 1].1.end);
                    if let Some((_, other)) = placed.iter().find(|(p, _)| p.overlaps(&widened)) {
                        return Err(MetamorphError::OverlappingSpans {
                            doc_id: doc.doc_id.clone(),
                            sentence_index: s.index,
                            a: other.to_string(),
                            b: m.mention_id.clone(),
                        });
                    }
                    placed.push((widened, &by_mention[m.mention_id.as_str()].mention_id));
                    m.token_start = a;
                    m.token_end_exclusive = b;
                }
                s.tokens = toks.iter().map(|(t, _)| make_token(t)).collect();
                for m in mentions.iter_mut().filter(|m| m.sentence_index == s.index) {
                    m.trigger_text = s.span_text(m.token_start, m.token_end_exclusive);
                }
            }
            docs.push(Document {
                doc_id: doc.doc_id.clone(),
                sentences,
                mentions,
            });
        }
        topics.push(Topic {
            topic_id: topic.topic_id.clone(),
            documents: docs,
        });
    }
    let name = format!("{}+{}", corpus.name(), version.tag());
    Ok(Corpus::new(name, topics, corpus.split_map().clone())?)
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, MetamorphError> {
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| MetamorphError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T], append: bool) -> Result<(), MetamorphError> {
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ParaphraseRecord>, MetamorphError> {
    read_jsonl(path)
}

/// Appends records to a JSONL side file, creating it if needed.
pub fn append_records(path: &Path, records: &[ParaphraseRecord]) -> Result<(), MetamorphError> {
    write_jsonl(path, records, true)
}

pub fn read_cases(path: &Path) -> Result<Vec<AlignmentCase>, MetamorphError> {
    read_jsonl(path)
}

pub fn write_cases(path: &Path, cases: &[AlignmentCase]) -> Result<(), MetamorphError> {
    write_jsonl(path, cases, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusBuilder;
    use crate::llm::{LlmError, ScriptedBackend};

    fn llm() -> LlmConfig {
        let mut c = LlmConfig::new("http://unused", "m");
        c.backoff_ms = 0;
        c.max_retries = 1;
        c
    }

    fn corpus() -> Corpus {
        let mut b = CorpusBuilder::new("fx");
        b.document("t", "d1")
            .sentence_text("d1", "Police said the killing of the guard was planned .")
            .document("t", "d2")
            .sentence_text("d2", "The guard 's killing shocked the town .")
            .mention("m1", "d1", 0, 3, 4, "K", Split::Test)
            .mention("m2", "d1", 0, 1, 2, "S", Split::Test)
            .mention("m3", "d2", 0, 3, 4, "K", Split::Test);
        b.build().unwrap()
    }

    fn reply(orig: &[&str], meta: &[&str], sentence: &str) -> String {
        serde_json::json!({
            "Original Sentence": "x",
            "Original Word List": orig,
            "Metaphoric Word List": meta,
            "Metaphoric Sentence": sentence,
        })
        .to_string()
    }

    #[test]
    fn render_multi_word_prompt() {
        let cfg = MetamorphConfig::new(Mode::MultiWord, llm());
        let triggers: Vec<String> = ["killing", "charged", "party"].map(String::from).to_vec();
        let s = "The killing at the party left one man charged";
        let p = render_prompt(s, &triggers, &cfg).unwrap();
        assert!(p.contains(s) && p.contains("multi-word"));
        assert!(p.contains(r#"["killing","charged","party"]"#));
        assert!(p.contains(" 5 "));
        assert!(matches!(render_prompt(s, &[], &cfg), Err(MetamorphError::EmptyTriggers)));
        assert!(matches!(
            render_prompt(s, &["fled".to_string()], &cfg),
            Err(MetamorphError::TriggerNotInSentence(_))
        ));
        let broken = PromptTemplate::new("b", "{{sentence}} {{trigger_list}} {{candidates}} {{other}}");
        assert!(matches!(
            render_with(&broken, s, &triggers, &cfg),
            Err(MetamorphError::Template(TemplateError::Unfilled { .. }))
        ));
    }

    #[test]
    fn transform_single_word() {
        let c = corpus();
        let backend = ScriptedBackend::new([format!(
            "Here you go:\n```json\n{}\n```",
            reply(&["said", "killing"], &["whispered", "slaying"], "Police whispered the slaying of the guard was planned .")
        )]);
        let cfg = MetamorphConfig::new(Mode::SingleWord, llm());
        let r = transform_sentence(&c, "d1", 0, &backend, &cfg).unwrap();
        assert!(!r.is_failed());
        assert_eq!(r.metaphoric_word_list, vec!["whispered", "slaying"]);
        assert_eq!(r.attempts, 1);
        assert_eq!(r.template_hash, PromptTemplate::metaphor_single().hash());
        let sent = &backend.requests()[0];
        assert!(sent.user.contains(r#"["said","killing"]"#));
    }

    #[test]
    fn schema_violations_retry_then_fail() {
        let c = corpus();
        let missing_field = r#"{"Original Sentence":"x","Original Word List":["said","killing"],"Metaphoric Word List":["a","b"]}"#;
        let short = reply(&["said", "killing"], &["a"], "y");
        let backend = ScriptedBackend::new([missing_field.to_string(), short.clone()]);
        let cfg = MetamorphConfig::new(Mode::SingleWord, llm());
        let r = transform_sentence(&c, "d1", 0, &backend, &cfg).unwrap();
        assert!(r.is_failed());
        assert_eq!(r.attempts, 2);
        assert_eq!(r.raw_response, short);
        assert_eq!(r.metaphoric_sentence, r.original_sentence);
        assert_eq!(r.metaphoric_word_list, r.original_word_list);

        // Wrong trigger list, then a good reply.
        let backend = ScriptedBackend::new([
            reply(&["said", "killed"], &["a", "b"], "y"),
            reply(&["said", "killing"], &["a", "b"], "Police a the b"),
        ]);
        let r = transform_sentence(&c, "d1", 0, &backend, &cfg).unwrap();
        assert_eq!((r.attempts, r.is_failed()), (2, false));
    }

    #[test]
    fn transport_failure_is_an_error() {
        let c = corpus();
        let backend = ScriptedBackend::new(Vec::<String>::new());
        backend.push_error(LlmError::Status {
            status: 401,
            body: "no".into(),
        });
        let cfg = MetamorphConfig::new(Mode::SingleWord, llm());
        assert!(matches!(
            transform_sentence(&c, "d1", 0, &backend, &cfg),
            Err(MetamorphError::Llm { .. })
        ));
    }

    fn record(sentence: &str, words: &[&str]) -> ParaphraseRecord {
        ParaphraseRecord {
            doc_id: "d".into(),
            sentence_index: 0,
            original_sentence: String::new(),
            original_word_list: words.iter().map(|w| w.to_string()).collect(),
            metaphoric_word_list: words.iter().map(|w| w.to_string()).collect(),
            metaphoric_sentence: sentence.into(),
            mode: Mode::SingleWord,
            raw_response: String::new(),
            template_hash: String::new(),
            attempts: 1,
            failure: None,
        }
    }

    fn mentions(n: usize) -> Vec<Mention> {
        (0..n)
            .map(|i| Mention {
                mention_id: format!("m{i}"),
                doc_id: "d".into(),
                sentence_index: 0,
                token_start: i,
                token_end_exclusive: i + 1,
                trigger_text: String::new(),
                gold_cluster_id: "c".into(),
            })
            .collect()
    }

    #[test]
    fn unique_phrase_auto_aligns() {
        let s = "A man was detained hours after the cruel slaying of his neighbour";
        assert_eq!(s.find("slaying"), Some(41));
        let ms = mentions(1);
        let cases = align_triggers(&record(s, &["slaying"]), &ms.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(cases[0].status, CaseStatus::AutoAligned);
        assert_eq!(cases[0].candidate_span, Some(CharSpan::new(41, 48)));
    }

    #[test]
    fn repeated_phrase_consumed_in_order() {
        let s = "The storm struck the coast and then struck again";
        let ms = mentions(2);
        let refs: Vec<&Mention> = ms.iter().collect();
        let cases = align_triggers(&record(s, &["struck", "struck"]), &refs).unwrap();
        assert_eq!(cases[0].candidate_span, Some(CharSpan::new(10, 16)));
        assert_eq!(cases[1].candidate_span, Some(CharSpan::new(36, 42)));
        assert!(cases.iter().all(|c| c.status == CaseStatus::AutoAligned));

        // One trigger, two occurrences: a human has to choose.
        let cases = align_triggers(&record(s, &["struck"]), &refs[..1]).unwrap();
        assert_eq!(cases[0].status, CaseStatus::Ambiguous);
        assert_eq!(cases[0].candidate_span, Some(CharSpan::new(10, 16)));
    }

    #[test]
    fn absent_and_partial_phrases() {
        let ms = mentions(2);
        let refs: Vec<&Mention> = ms.iter().collect();
        let cases = align_triggers(&record("Flames devoured the town", &["ate", "Flame"]), &refs).unwrap();
        assert_eq!(cases[0].status, CaseStatus::Missing);
        assert_eq!(cases[0].candidate_span, None);
        assert_eq!(cases[1].status, CaseStatus::Ambiguous);
        assert!(matches!(
            align_triggers(&record("x", &["x"]), &refs),
            Err(MetamorphError::MentionCountMismatch { .. })
        ));
    }

    #[test]
    fn tokens_split_edge_punctuation() {
        let t: Vec<String> = meta_tokens("He said: \"stop,\" — twice.").into_iter().map(|(t, _)| t).collect();
        assert_eq!(t, vec!["He", "said", ":", "\"", "stop", ",\"", "—", "twice", "."]);
        assert_eq!(round_to_tokens("the slaying ended", CharSpan::new(6, 8)), Some(CharSpan::new(4, 11)));
        assert_eq!(round_to_tokens("the slaying", CharSpan::new(3, 4)), None);
    }

    #[test]
    fn mention_offsets_in_original_sentence() {
        let c = corpus();
        let doc = c.document("d1").unwrap();
        let m = c.mention("m1").unwrap();
        let span = mention_char_span(&doc.sentences[0], m);
        let text: String = doc.sentences[0].text().chars().skip(span.start).take(span.end - span.start).collect();
        assert_eq!(text, "killing");
    }

    fn meta_inputs() -> (Corpus, Vec<ParaphraseRecord>) {
        let c = corpus();
        let mut r1 = record("Police whispered the slaying of the guard was planned.", &["whispered", "slaying"]);
        r1.doc_id = "d1".into();
        r1.original_word_list = vec!["said".into(), "killing".into()];
        let mut r2 = record("The guard 's snuffing out shocked the town .", &["snuffing out"]);
        r2.doc_id = "d2".into();
        r2.original_word_list = vec!["killing".into()];
        (c, vec![r1, r2])
    }

    #[test]
    fn build_preserves_gold_structure() {
        let (c, records) = meta_inputs();
        let cases = align_records(&c, &records).unwrap();
        assert!(cases.iter().all(|c| c.status == CaseStatus::AutoAligned));
        let meta = build_meta_corpus(&c, &records, &cases, &[Split::Test], MetaVersion::MetaM).unwrap();
        assert_eq!(meta.gold_assignment(None), c.gold_assignment(None));
        assert_eq!(meta.mention("m1").unwrap().trigger_text, "slaying");
        assert_eq!(meta.mention("m3").unwrap().trigger_text, "snuffing out");
        assert_eq!(meta.sentence_of("m1").unwrap().tokens.last().unwrap().text, ".");
        assert_eq!(meta.name(), "fx+META_m");
    }

    #[test]
    fn build_gates_and_corrections() {
        let (c, records) = meta_inputs();
        let mut cases = align_records(&c, &records).unwrap();
        cases[2].status = CaseStatus::Ambiguous;
        match build_meta_corpus(&c, &records, &cases, &[Split::Test], MetaVersion::Meta1) {
            Err(MetamorphError::Unresolved(ids)) => assert_eq!(ids, vec!["m3"]),
            other => panic!("{other:?}"),
        }
        // A correction takes precedence over the candidate.
        let at = records[1].metaphoric_sentence.find("shocked").unwrap();
        cases[2].status = CaseStatus::Corrected;
        cases[2].correction = Some(CharSpan::new(at, at + 7));
        let meta = build_meta_corpus(&c, &records, &cases, &[Split::Test], MetaVersion::Meta1).unwrap();
        assert_eq!(meta.mention("m3").unwrap().trigger_text, "shocked");

        // m1 corrected onto m2's word.
        assert_eq!(cases[1].mention_id, "m1");
        cases[1].status = CaseStatus::Corrected;
        cases[1].correction = cases[0].candidate_span;
        assert!(matches!(
            build_meta_corpus(&c, &records, &cases, &[Split::Test], MetaVersion::Meta1),
            Err(MetamorphError::OverlappingSpans { .. })
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (c, records) = meta_inputs();
        let p = dir.path().join("records.jsonl");
        append_records(&p, &records[..1]).unwrap();
        append_records(&p, &records[1..]).unwrap();
        assert_eq!(read_records(&p).unwrap(), records);
        let cases = align_records(&c, &records).unwrap();
        let q = dir.path().join("cases.jsonl");
        write_cases(&q, &cases).unwrap();
        assert_eq!(read_cases(&q).unwrap(), cases);
    }
}
