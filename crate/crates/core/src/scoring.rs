//! Pairwise coreference scores.
//!
//! Scores come from four places: the lexical baseline (every pair that
//! survived the lemma heuristic links), a logistic head over the joint pair
//! representation `[v_a, v_b, v_a * v_b]` of externally encoded mention
//! vectors, score files produced elsewhere, and a Yes/No LLM classifier.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::filters::{format_vector, parse_vector, FilterError, MentionPair};
use crate::llm::{map_bounded, request_with_retries, ChatBackend, ChatRequest, LlmConfig, LlmFailure};
use crate::prompt::{PromptTemplate, TemplateError};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty vector")]
    EmptyVector,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{path}:{line}: score {score} outside [0, 1]")]
    OutOfRange { path: String, line: usize, score: f64 },
    #[error("duplicate pair {0}")]
    Duplicate(MentionPair),
    #[error("unknown mention `{0}`")]
    UnknownMention(String),
    #[error("no vectors or score for pair {0}")]
    MissingPair(MentionPair),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("unresolved pair {pair}: {failure}")]
    Unresolved { pair: MentionPair, failure: LlmFailure },
}

fn io_err(path: &Path, source: std::io::Error) -> ScoringError {
    ScoringError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    Lexical,
    Eq1,
    External,
    Llm,
}

impl fmt::Display for ScoreSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreSource::Lexical => "lexical",
            ScoreSource::Eq1 => "eq1",
            ScoreSource::External => "external",
            ScoreSource::Llm => "llm",
        })
    }
}

impl FromStr for ScoreSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexical" => Ok(ScoreSource::Lexical),
            "eq1" => Ok(ScoreSource::Eq1),
            "external" => Ok(ScoreSource::External),
            "llm" => Ok(ScoreSource::Llm),
            other => Err(format!("unknown score source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair: MentionPair,
    pub score: f64,
    pub source: ScoreSource,
}

/// `[v_a | v_b | v_a ⊙ v_b]` for one mention pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRepresentation {
    pub v_a: Vec<f64>,
    pub v_b: Vec<f64>,
    pub joint: Vec<f64>,
}

impl PairRepresentation {
    pub fn dim(&self) -> usize {
        self.v_a.len()
    }
}

pub fn joint_pair_representation(v_a: &[f64], v_b: &[f64]) -> Result<PairRepresentation, ScoringError> {
    if v_a.is_empty() {
        return Err(ScoringError::EmptyVector);
    }
    if v_a.len() != v_b.len() {
        return Err(ScoringError::DimensionMismatch {
            expected: v_a.len(),
            got: v_b.len(),
        });
    }
    let mut joint = Vec::with_capacity(3 * v_a.len());
    joint.extend_from_slice(v_a);
    joint.extend_from_slice(v_b);
    joint.extend(v_a.iter().zip(v_b).map(|(x, y)| x * y));
    Ok(PairRepresentation {
        v_a: v_a.to_vec(),
        v_b: v_b.to_vec(),
        joint,
    })
}

/// Logistic regression weights over the joint representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticHead {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticHead {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if !self.bias.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(ScoringError::NonFinite("logistic head"));
        }
        Ok(())
    }

    /// Reads `{"weights": [...], "bias": b}`.
    pub fn from_file(path: &Path) -> Result<Self, ScoringError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let head: LogisticHead = serde_json::from_str(&text).map_err(|e| ScoringError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        head.validate()?;
        Ok(head)
    }

    pub fn logit(&self, rep: &PairRepresentation) -> Result<f64, ScoringError> {
        if self.weights.len() != rep.joint.len() {
            return Err(ScoringError::DimensionMismatch {
                expected: rep.joint.len(),
                got: self.weights.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&rep.joint)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(weights · joint + bias)`.
pub fn eq1_score(rep: &PairRepresentation, head: &LogisticHead) -> Result<f64, ScoringError> {
    Ok(sigmoid(head.logit(rep)?))
}

/// Per-pair mention vectors from an external pair encoder.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairVectorTable {
    dim: usize,
    rows: BTreeMap<MentionPair, (Vec<f64>, Vec<f64>)>,
}

impl PairVectorTable {
    pub fn new(dim: usize) -> Self {
        PairVectorTable {
            dim,
            rows: BTreeMap::new(),
        }
    }

    /// Stores the vectors of `first` and `second`, aligned to the canonical
    /// pair order.
    pub fn insert(&mut self, first: &str, second: &str, v_first: Vec<f64>, v_second: Vec<f64>) -> Result<(), ScoringError> {
        for v in [&v_first, &v_second] {
            if v.len() != self.dim {
                return Err(ScoringError::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ScoringError::NonFinite("pair vector"));
            }
        }
        let pair = MentionPair::new(first, second).map_err(filter_to_parse)?;
        let row = if pair.a == first {
            (v_first, v_second)
        } else {
            (v_second, v_first)
        };
        if self.rows.insert(pair.clone(), row).is_some() {
            return Err(ScoringError::Duplicate(pair));
        }
        Ok(())
    }

    pub fn get(&self, pair: &MentionPair) -> Option<(&[f64], &[f64])> {
        self.rows.get(pair).map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &MentionPair> {
        self.rows.keys()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Header line `d`, then `id_a|id_b<TAB>va_1,..,va_d<TAB>vb_1,..,vb_d`.
    pub fn read_file(path: &Path) -> Result<Self, ScoringError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let err = |line: usize, message: String| ScoringError::Parse {
            path: path.display().to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing dimension header".into()))?;
        let dim: usize = header
            .trim()
            .parse()
            .map_err(|_| err(1, format!("bad dimension header `{header}`")))?;
        let mut table = PairVectorTable::new(dim);
        for (i, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(i + 1, "expected `id_a|id_b<TAB>va<TAB>vb`".into()));
            }
            let (a, b) = fields[0]
                .split_once('|')
                .ok_or_else(|| err(i + 1, format!("bad pair key `{}`", fields[0])))?;
            let va = parse_vector(fields[1]).map_err(|m| err(i + 1, m))?;
            let vb = parse_vector(fields[2]).map_err(|m| err(i + 1, m))?;
            table.insert(a, b, va, vb).map_err(|e| err(i + 1, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), ScoringError> {
        let mut out = format!("{}\n", self.dim);
        for (p, (va, vb)) in &self.rows {
            out.push_str(&format!("{}|{}\t{}\t{}\n", p.a, p.b, format_vector(va), format_vector(vb)));
        }
        fs::write(path, out).map_err(|e| io_err(path, e))
    }
}

fn filter_to_parse(e: FilterError) -> ScoringError {
    ScoringError::Parse {
        path: String::new(),
        line: 0,
        message: e.to_string(),
    }
}

/// Scores every pair of `pairs` (or every pair in the table when `None`).
pub fn eq1_scores(
    table: &PairVectorTable,
    head: &LogisticHead,
    pairs: Option<&[MentionPair]>,
) -> Result<Vec<PairScore>, ScoringError> {
    let selected: Vec<&MentionPair> = match pairs {
        Some(ps) => ps.iter().collect(),
        None => table.pairs().collect(),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(selected.len());
    for pair in selected {
        if !seen.insert(pair) {
            return Err(ScoringError::Duplicate(pair.clone()));
        }
        let (va, vb) = table
            .get(pair)
            .ok_or_else(|| ScoringError::MissingPair(pair.clone()))?;
        let rep = joint_pair_representation(va, vb)?;
        out.push(PairScore {
            pair: pair.clone(),
            score: eq1_score(&rep, head)?,
            source: ScoreSource::Eq1,
        });
    }
    Ok(out)
}

/// The lemma-heuristic baseline: every surviving pair is a link.
pub fn lexical_score(filtered: &[MentionPair]) -> Result<Vec<PairScore>, ScoringError> {
    let mut seen = BTreeSet::new();
    filtered
        .iter()
        .map(|p| {
            if !seen.insert(p) {
                return Err(ScoringError::Duplicate(p.clone()));
            }
            Ok(PairScore {
                pair: p.clone(),
                score: 1.0,
                source: ScoreSource::Lexical,
            })
        })
        .collect()
}

/// Reads `id_a<TAB>id_b<TAB>score` lines. Pairs are canonicalized, so a pair
/// listed in both orders is a duplicate.
pub fn ingest_scores(path: &Path) -> Result<Vec<PairScore>, ScoringError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let display = path.display().to_string();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ScoringError::Parse {
            path: display.clone(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err("expected `id_a<TAB>id_b<TAB>score`".into()));
        }
        let score: f64 = fields[2]
            .parse()
            .map_err(|_| err(format!("bad score `{}`", fields[2])))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(ScoringError::OutOfRange {
                path: display.clone(),
                line: i + 1,
                score,
            });
        }
        let pair = MentionPair::new(fields[0], fields[1]).map_err(|e| err(e.to_string()))?;
        if !seen.insert(pair.clone()) {
            return Err(ScoringError::Duplicate(pair));
        }
        out.push(PairScore {
            pair,
            score,
            source: ScoreSource::External,
        });
    }
    Ok(out)
}

/// Checks that every endpoint is a mention of `corpus`.
pub fn check_scores_against(corpus: &Corpus, scores: &[PairScore]) -> Result<(), ScoringError> {
    for s in scores {
        for id in [&s.pair.a, &s.pair.b] {
            if !corpus.contains_mention(id) {
                return Err(ScoringError::UnknownMention(id.clone()));
            }
        }
    }
    Ok(())
}

/// Restricts scores to `pairs`, in the order of `pairs`. Every pair must be scored.
pub fn select_scores(scores: &[PairScore], pairs: &[MentionPair]) -> Result<Vec<PairScore>, ScoringError> {
    let by_pair: BTreeMap<&MentionPair, &PairScore> = scores.iter().map(|s| (&s.pair, s)).collect();
    pairs
        .iter()
        .map(|p| {
            by_pair
                .get(p)
                .map(|s| (*s).clone())
                .ok_or_else(|| ScoringError::MissingPair(p.clone()))
        })
        .collect()
}

pub fn scores_to_tsv(scores: &[PairScore]) -> String {
    let mut out = String::new();
    for s in scores {
        out.push_str(&format!("{}\t{}\t{}\n", s.pair.a, s.pair.b, s.score));
    }
    out
}

pub fn write_scores(path: &Path, scores: &[PairScore]) -> Result<(), ScoringError> {
    fs::write(path, scores_to_tsv(scores)).map_err(|e| io_err(path, e))
}

/// The mention's sentence with its trigger wrapped in `<m> ... </m>`.
pub fn marked_sentence(corpus: &Corpus, mention_id: &str) -> Result<String, ScoringError> {
    let m = corpus.mention(mention_id)?;
    let sentence = corpus.sentence_of(mention_id)?;
    let mut words: Vec<String> = Vec::with_capacity(sentence.tokens.len() + 2);
    for (i, t) in sentence.tokens.iter().enumerate() {
        if i == m.token_start {
            words.push("<m>".into());
        }
        words.push(t.text.clone());
        if i + 1 == m.token_end_exclusive {
            words.push("</m>".into());
        }
    }
    Ok(words.join(" "))
}

/// `true` for yes, `false` for no, judged by the first alphabetic word.
pub fn parse_yes_no(reply: &str) -> Result<bool, String> {
    let word: String = reply
        .chars()
        .skip_while(|c| !c.is_alphabetic())
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err(format!("expected Yes or No, got `{}`", reply.trim())),
    }
}

pub const CLASSIFIER_SYSTEM_PROMPT: &str =
    "You are an expert annotator of cross-document event coreference. Answer only Yes or No.";

pub fn llm_classify_pair(
    corpus: &Corpus,
    pair: &MentionPair,
    backend: &dyn ChatBackend,
    config: &LlmConfig,
    template: &PromptTemplate,
) -> Result<PairScore, ScoringError> {
    let sa = marked_sentence(corpus, &pair.a)?;
    let sb = marked_sentence(corpus, &pair.b)?;
    let user = template.render(&[("sentence_a", &sa), ("sentence_b", &sb)])?;
    let request = ChatRequest {
        system: CLASSIFIER_SYSTEM_PROMPT.to_string(),
        user,
    };
    let exchange = request_with_retries(backend, &request, config, parse_yes_no).map_err(|failure| {
        ScoringError::Unresolved {
            pair: pair.clone(),
            failure,
        }
    })?;
    Ok(PairScore {
        pair: pair.clone(),
        score: if exchange.value { 1.0 } else { 0.0 },
        source: ScoreSource::Llm,
    })
}

/// Classifies pairs concurrently (bounded by `config.max_in_flight`); results
/// are in input order.
pub fn llm_classify_pairs(
    corpus: &Corpus,
    pairs: &[MentionPair],
    backend: &dyn ChatBackend,
    config: &LlmConfig,
    template: &PromptTemplate,
) -> Vec<Result<PairScore, ScoringError>> {
    map_bounded(pairs, config.max_in_flight, |p| {
        llm_classify_pair(corpus, p, backend, config, template)
    })
}
