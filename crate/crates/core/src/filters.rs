//! Mention-pair candidate generation and pruning.
//!
//! Two filters are provided: the lemma heuristic ([`lh_filter`]), which keeps
//! pairs whose head lemmas are equal or known synonyms and whose sentences
//! share enough vocabulary, and nearest-neighbour retrieval over mention
//! embeddings ([`knn_candidates`]).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Split};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("a mention cannot be paired with itself (`{0}`)")]
    SelfPair(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("split `{0}` has no mentions")]
    EmptySplit(Split),
    #[error("no embedding for mention `{0}`")]
    MissingEmbedding(String),
    #[error("invalid embedding for `{id}`: {reason}")]
    InvalidEmbedding { id: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
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
}

fn io_err(path: &Path, source: std::io::Error) -> FilterError {
    FilterError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Unordered mention pair stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MentionPair {
    pub a: String,
    pub b: String,
}

impl MentionPair {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Result<Self, FilterError> {
        let (x, y) = (x.into(), y.into());
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(MentionPair { a: x, b: y }),
            std::cmp::Ordering::Greater => Ok(MentionPair { a: y, b: x }),
            std::cmp::Ordering::Equal => Err(FilterError::SelfPair(x)),
        }
    }
}

impl fmt::Display for MentionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Whether pairs may cross topic boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    #[default]
    IntraTopic,
    CorpusWide,
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intra-topic" => Ok(Scope::IntraTopic),
            "corpus-wide" => Ok(Scope::CorpusWide),
            other => Err(format!("unknown scope `{other}` (expected intra-topic|corpus-wide)")),
        }
    }
}

/// Unordered pairs of distinct lowercased lemmas.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymSet {
    pairs: BTreeSet<(String, String)>,
}

impl SynonymSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an unordered pair; `(x, x)` is ignored.
    pub fn insert(&mut self, x: &str, y: &str) -> bool {
        let (x, y) = (x.to_lowercase(), y.to_lowercase());
        match x.cmp(&y) {
            std::cmp::Ordering::Less => self.pairs.insert((x, y)),
            std::cmp::Ordering::Greater => self.pairs.insert((y, x)),
            std::cmp::Ordering::Equal => false,
        }
    }

    pub fn contains(&self, x: &str, y: &str) -> bool {
        let (x, y) = (x.to_lowercase(), y.to_lowercase());
        if x < y {
            self.pairs.contains(&(x, y))
        } else {
            self.pairs.contains(&(y, x))
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn extend(&mut self, other: &SynonymSet) {
        self.pairs.extend(other.pairs.iter().cloned());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LhConfig {
    pub overlap_threshold: f64,
    pub use_stopwords: bool,
}

impl Default for LhConfig {
    fn default() -> Self {
        LhConfig {
            overlap_threshold: 0.005,
            use_stopwords: false,
        }
    }
}

impl LhConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            return Err(FilterError::Config(format!(
                "overlap threshold {} outside [0, 1]",
                self.overlap_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub scope: Scope,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 10,
            scope: Scope::IntraTopic,
        }
    }
}

/// For every gold cluster restricted to `split`, all pairs of distinct head lemmas.
pub fn mine_synonym_pairs(corpus: &Corpus, split: Split) -> Result<SynonymSet, FilterError> {
    if !corpus.has_split(split) {
        return Err(FilterError::EmptySplit(split));
    }
    let mut by_cluster: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for m in corpus.mentions_in_split(split) {
        by_cluster
            .entry(m.gold_cluster_id.as_str())
            .or_default()
            .insert(corpus.mention_lemma(&m.mention_id)?);
    }
    let mut set = SynonymSet::new();
    for lemmas in by_cluster.values() {
        let lemmas: Vec<&String> = lemmas.iter().collect();
        for i in 0..lemmas.len() {
            for j in i + 1..lemmas.len() {
                set.insert(lemmas[i], lemmas[j]);
            }
        }
    }
    Ok(set)
}

fn sentence_lemmas(corpus: &Corpus, id: &str, use_stopwords: bool) -> Result<HashSet<String>, FilterError> {
    Ok(corpus
        .sentence_of(id)?
        .tokens
        .iter()
        .filter(|t| use_stopwords || !t.is_stopword)
        .map(|t| t.normalized_lemma())
        .collect())
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Jaccard overlap of the lemma sets of the two mentions' sentences. Two empty
/// lemma sets overlap by 0.
pub fn sentence_overlap_ratio(
    corpus: &Corpus,
    pair: &MentionPair,
    config: &LhConfig,
) -> Result<f64, FilterError> {
    let la = sentence_lemmas(corpus, &pair.a, config.use_stopwords)?;
    let lb = sentence_lemmas(corpus, &pair.b, config.use_stopwords)?;
    Ok(jaccard(&la, &lb))
}

/// Keeps pairs whose head lemmas are equal or synonymous and whose sentence
/// overlap reaches the threshold. Output is sorted and deduplicated.
pub fn lh_filter(
    corpus: &Corpus,
    candidates: &[MentionPair],
    syn: &SynonymSet,
    config: &LhConfig,
) -> Result<Vec<MentionPair>, FilterError> {
    config.validate()?;
    let mut out = BTreeSet::new();
    for pair in candidates {
        let la = corpus.mention_lemma(&pair.a)?;
        let lb = corpus.mention_lemma(&pair.b)?;
        if la != lb && !syn.contains(&la, &lb) {
            continue;
        }
        if sentence_overlap_ratio(corpus, pair, config)? >= config.overlap_threshold {
            out.insert(pair.clone());
        }
    }
    Ok(out.into_iter().collect())
}

/// Every unordered mention pair of `split` within the scope.
pub fn all_pairs(corpus: &Corpus, split: Split, scope: Scope) -> Vec<MentionPair> {
    let groups = scoped_groups(corpus, split, scope);
    let mut out = BTreeSet::new();
    for ids in groups.values() {
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                out.insert(MentionPair::new(ids[i].clone(), ids[j].clone()).expect("distinct ids"));
            }
        }
    }
    out.into_iter().collect()
}

fn scoped_groups(corpus: &Corpus, split: Split, scope: Scope) -> BTreeMap<String, Vec<String>> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for m in corpus.mentions_in_split(split) {
        let key = match scope {
            Scope::IntraTopic => corpus
                .topic_of_mention(&m.mention_id)
                .expect("mention from corpus")
                .to_string(),
            Scope::CorpusWide => String::new(),
        };
        groups.entry(key).or_default().push(m.mention_id.clone());
    }
    for ids in groups.values_mut() {
        ids.sort();
    }
    groups
}

/// Mention vectors of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, vectors: BTreeMap<String, Vec<f64>>) -> Result<Self, FilterError> {
        for (id, v) in &vectors {
            validate_vector(id, v, dim)?;
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, FilterError> {
        let vectors = self
            .vectors
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect()))
            .collect();
        EmbeddingTable::new(self.dim, vectors)
    }

    /// Header line with the dimension, then `mention_id<TAB>v1,...,vd`.
    pub fn read_file(path: &Path) -> Result<Self, FilterError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let err = |line: usize, message: String| FilterError::Parse {
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
        let mut vectors = BTreeMap::new();
        for (i, line) in lines {
            let (id, values) = line
                .split_once('\t')
                .ok_or_else(|| err(i + 1, "expected `mention_id<TAB>values`".into()))?;
            let v = parse_vector(values).map_err(|m| err(i + 1, m))?;
            if vectors.insert(id.to_string(), v).is_some() {
                return Err(err(i + 1, format!("duplicate mention `{id}`")));
            }
        }
        EmbeddingTable::new(dim, vectors)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), FilterError> {
        let mut out = format!("{}\n", self.dim);
        for (id, v) in &self.vectors {
            out.push_str(id);
            out.push('\t');
            out.push_str(&format_vector(v));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| io_err(path, e))
    }
}

pub(crate) fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.trim()
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{x}`"))
        })
        .collect()
}

pub(crate) fn format_vector(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn validate_vector(id: &str, v: &[f64], dim: usize) -> Result<(), FilterError> {
    let bad = |reason: String| FilterError::InvalidEmbedding {
        id: id.to_string(),
        reason,
    };
    if v.len() != dim {
        return Err(bad(format!("dimension {} != {}", v.len(), dim)));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad("non-finite component".into()));
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(bad("zero vector".into()));
    }
    Ok(())
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// For each mention of `split`, pairs with its `k` most cosine-similar
/// mentions in scope. Ties go to the smaller mention id; the result is the
/// deduplicated, sorted union.
pub fn knn_candidates(
    embeddings: &EmbeddingTable,
    corpus: &Corpus,
    split: Split,
    config: &KnnConfig,
) -> Result<Vec<MentionPair>, FilterError> {
    let groups = scoped_groups(corpus, split, config.scope);
    let mut unit: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for ids in groups.values() {
        for id in ids {
            let v = embeddings
                .get(id)
                .ok_or_else(|| FilterError::MissingEmbedding(id.clone()))?;
            unit.insert(id.as_str(), normalized(v));
        }
    }
    if config.k == 0 {
        return Ok(Vec::new());
    }

    let queries: Vec<(&Vec<String>, &String)> = groups
        .values()
        .flat_map(|ids| ids.iter().map(move |id| (ids, id)))
        .collect();
    let neighbours: Vec<Vec<MentionPair>> = queries
        .par_iter()
        .map(|(scope, query)| {
            let q = &unit[query.as_str()];
            let mut ranked: Vec<(f64, &String)> = scope
                .iter()
                .filter(|other| *other != *query)
                .map(|other| {
                    let o = &unit[other.as_str()];
                    (q.iter().zip(o).map(|(x, y)| x * y).sum::<f64>(), other)
                })
                .collect();
            ranked.sort_by(|x, y| y.0.total_cmp(&x.0).then_with(|| x.1.cmp(y.1)));
            ranked
                .into_iter()
                .take(config.k)
                .map(|(_, other)| MentionPair::new((*query).clone(), other.clone()).expect("distinct"))
                .collect()
        })
        .collect();

    let out: BTreeSet<MentionPair> = neighbours.into_iter().flatten().collect();
    Ok(out.into_iter().collect())
}

/// `id_a<TAB>id_b` per line.
pub fn write_pairs(path: &Path, pairs: &[MentionPair]) -> Result<(), FilterError> {
    fs::write(path, pairs_to_tsv(pairs)).map_err(|e| io_err(path, e))
}

pub fn pairs_to_tsv(pairs: &[MentionPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&p.a);
        out.push('\t');
        out.push_str(&p.b);
        out.push('\n');
    }
    out
}

/// Reads a pair file; pairs are canonicalized, sorted and deduplicated.
pub fn read_pairs(path: &Path) -> Result<Vec<MentionPair>, FilterError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(FilterError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: "expected `id_a<TAB>id_b`".into(),
            });
        }
        out.insert(MentionPair::new(fields[0], fields[1])?);
    }
    Ok(out.into_iter().collect())
}
