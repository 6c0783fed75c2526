//! MTLD lexical diversity over gold event clusters.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Split};

pub const DEFAULT_TTR_THRESHOLD: f64 = 0.72;

#[derive(Debug, Error)]
pub enum DiversityError {
    #[error("mtld of an empty token sequence is undefined")]
    EmptyInput,
    #[error("TTR threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
    #[error("split `{0}` has no mentions")]
    EmptySplit(Split),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityConfig {
    pub ttr_threshold: f64,
    /// Strip punctuation at token edges after whitespace splitting.
    pub strip_punctuation: bool,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        DiversityConfig {
            ttr_threshold: DEFAULT_TTR_THRESHOLD,
            strip_punctuation: true,
        }
    }
}

fn one_pass<'a>(tokens: impl Iterator<Item = &'a str>, threshold: f64, n: usize) -> f64 {
    let mut types: HashSet<&str> = HashSet::new();
    let mut count = 0usize;
    let mut factors = 0.0;
    for t in tokens {
        types.insert(t);
        count += 1;
        if (types.len() as f64 / count as f64) < threshold {
            factors += 1.0;
            types.clear();
            count = 0;
        }
    }
    if count > 0 {
        let ttr = types.len() as f64 / count as f64;
        factors += (1.0 - ttr) / (1.0 - threshold);
    }
    // Fewer than one factor would put the estimate above the sequence length.
    if factors < 1.0 {
        n as f64
    } else {
        n as f64 / factors
    }
}

/// Bidirectional MTLD: the mean of the forward and backward factor-length
/// estimates.
pub fn mtld<S: AsRef<str>>(tokens: &[S], ttr_threshold: f64) -> Result<f64, DiversityError> {
    if tokens.is_empty() {
        return Err(DiversityError::EmptyInput);
    }
    if !(ttr_threshold > 0.0 && ttr_threshold < 1.0) {
        return Err(DiversityError::BadThreshold(ttr_threshold));
    }
    let n = tokens.len();
    let fwd = one_pass(tokens.iter().map(AsRef::as_ref), ttr_threshold, n);
    let bwd = one_pass(tokens.iter().rev().map(AsRef::as_ref), ttr_threshold, n);
    Ok((fwd + bwd) / 2.0)
}

/// Lowercase, split on whitespace, optionally trim edge punctuation.
pub fn trigger_tokens(text: &str, strip_punctuation: bool) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|t| {
            if strip_punctuation {
                t.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
            } else {
                t.to_string()
            }
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiversity {
    pub size: usize,
    pub mtld: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub per_cluster: BTreeMap<String, ClusterDiversity>,
    pub corpus_weighted_mtld: f64,
    /// Set when every cluster was a singleton and nothing was measured.
    pub no_clusters: bool,
}

impl DiversityReport {
    pub fn from_clusters(per_cluster: BTreeMap<String, ClusterDiversity>) -> Self {
        let total: usize = per_cluster.values().map(|c| c.size).sum();
        let weighted = if total == 0 {
            0.0
        } else {
            per_cluster.values().map(|c| c.size as f64 * c.mtld).sum::<f64>() / total as f64
        };
        DiversityReport {
            no_clusters: per_cluster.is_empty(),
            per_cluster,
            corpus_weighted_mtld: weighted,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, c) in &self.per_cluster {
            let _ = writeln!(out, "{id}\t{}\t{:.6}", c.size, c.mtld);
        }
        let _ = writeln!(out, "WEIGHTED\t{:.6}", self.corpus_weighted_mtld);
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<(), DiversityError> {
        fs::write(path, self.to_text()).map_err(|e| CorpusError::io(path, e))?;
        Ok(())
    }
}

/// Per-cluster MTLD over the non-singleton gold clusters of `split`, with
/// members' triggers concatenated in document order.
pub fn cluster_diversity(
    corpus: &Corpus,
    split: Split,
    config: &DiversityConfig,
) -> Result<DiversityReport, DiversityError> {
    let mut members: BTreeMap<&str, Vec<(&str, usize, usize, &str)>> = BTreeMap::new();
    for m in corpus.mentions_in_split(split) {
        members.entry(&m.gold_cluster_id).or_default().push((
            &m.doc_id,
            m.sentence_index,
            m.token_start,
            &m.trigger_text,
        ));
    }
    if members.is_empty() {
        return Err(DiversityError::EmptySplit(split));
    }
    let mut per_cluster = BTreeMap::new();
    for (id, mut list) in members {
        if list.len() < 2 {
            continue;
        }
        list.sort();
        let mut tokens = Vec::new();
        for (.., trigger) in &list {
            let mut t = trigger_tokens(trigger, config.strip_punctuation);
            if t.is_empty() {
                t.push(trigger.to_lowercase());
            }
            tokens.extend(t);
        }
        let value = mtld(&tokens, config.ttr_threshold)?;
        per_cluster.insert(
            id.to_string(),
            ClusterDiversity {
                size: list.len(),
                mtld: value,
            },
        );
    }
    Ok(DiversityReport::from_clusters(per_cluster))
}
