//! From pairwise links and scores to a partition of mentions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Split};
use crate::filters::MentionPair;
use crate::scoring::PairScore;

#[derive(Debug, Error)]
pub enum ClusteringError {
    #[error("pair endpoint `{0}` is not in the mention set")]
    UnknownEndpoint(String),
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

/// A partition of mentions: mention id to cluster id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: BTreeMap<String, String>,
}

impl ClusterAssignment {
    /// Uses the given cluster labels verbatim.
    pub fn from_labels<I, K, V>(labels: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        ClusterAssignment {
            labels: labels
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    /// Builds an assignment from groups; each cluster is named after its
    /// smallest member id.
    pub fn from_groups<I, G, S>(groups: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels = BTreeMap::new();
        for group in groups {
            let members: Vec<String> = group.into_iter().map(Into::into).collect();
            if let Some(min) = members.iter().min().cloned() {
                for m in members {
                    labels.insert(m, min.clone());
                }
            }
        }
        ClusterAssignment { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_of(&self, mention: &str) -> Option<&str> {
        self.labels.get(mention).map(String::as_str)
    }

    pub fn mentions(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn labels(&self) -> &BTreeMap<String, String> {
        &self.labels
    }

    /// Clusters keyed by label, members sorted.
    pub fn clusters(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (m, c) in &self.labels {
            out.entry(c.as_str()).or_default().push(m.as_str());
        }
        out
    }

    /// Renames clusters to their smallest member id.
    pub fn canonicalized(&self) -> ClusterAssignment {
        ClusterAssignment::from_groups(self.clusters().into_values())
    }

    /// `mention_id<TAB>cluster_id` lines sorted by mention id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.labels {
            out.push_str(m);
            out.push('\t');
            out.push_str(c);
            out.push('\n');
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<(), ClusteringError> {
        fs::write(path, self.to_tsv()).map_err(|source| ClusteringError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_file(path: &Path) -> Result<Self, ClusteringError> {
        let text = fs::read_to_string(path).map_err(|source| ClusteringError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut labels = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |message: String| ClusteringError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message,
            };
            if fields.len() != 2 || fields[0].is_empty() || fields[1].is_empty() {
                return Err(err("expected `mention_id<TAB>cluster_id`".into()));
            }
            if labels.insert(fields[0].to_string(), fields[1].to_string()).is_some() {
                return Err(err(format!("mention `{}` assigned twice", fields[0])));
            }
        }
        Ok(ClusterAssignment { labels })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root; ids are sorted so it is the smaller mention id.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn components<'a>(
    mentions: &BTreeSet<String>,
    edges: impl Iterator<Item = (&'a str, &'a str)>,
) -> Result<ClusterAssignment, ClusteringError> {
    let ids: Vec<&String> = mentions.iter().collect();
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, m)| (m.as_str(), i))
        .collect();
    let mut uf = UnionFind::new(ids.len());
    for (a, b) in edges {
        let ia = *index
            .get(a)
            .ok_or_else(|| ClusteringError::UnknownEndpoint(a.to_string()))?;
        let ib = *index
            .get(b)
            .ok_or_else(|| ClusteringError::UnknownEndpoint(b.to_string()))?;
        uf.union(ia, ib);
    }
    let labels = (0..ids.len())
        .map(|i| {
            let root = uf.find(i);
            (ids[i].clone(), ids[root].clone())
        })
        .collect();
    Ok(ClusterAssignment { labels })
}

/// Two mentions share a cluster iff they are connected through links scoring
/// at least `link_threshold`.
pub fn connected_components(
    mentions: &BTreeSet<String>,
    links: &[PairScore],
    link_threshold: f64,
) -> Result<ClusterAssignment, ClusteringError> {
    for l in links {
        for id in [&l.pair.a, &l.pair.b] {
            if !mentions.contains(id) {
                return Err(ClusteringError::UnknownEndpoint(id.clone()));
            }
        }
    }
    components(
        mentions,
        links
            .iter()
            .filter(|l| l.score >= link_threshold)
            .map(|l| (l.pair.a.as_str(), l.pair.b.as_str())),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Average,
    Max,
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(Linkage::Average),
            "max" => Ok(Linkage::Max),
            other => Err(format!("unknown linkage `{other}` (expected average|max)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggloConfig {
    pub linkage: Linkage,
    /// Merging stops once the best linkage falls below this value.
    pub stop_threshold: f64,
}

impl Default for AggloConfig {
    fn default() -> Self {
        AggloConfig {
            linkage: Linkage::Average,
            stop_threshold: 0.5,
        }
    }
}

/// Greedy agglomerative clustering over pair scores.
///
/// Starts from singletons and repeatedly merges the two clusters with the
/// highest linkage. Unscored pairs count as 0 (duplicated pairs keep their
/// highest score, pairs with unknown endpoints are ignored). Ties go to the
/// lexicographically smallest (min member id, min member id) cluster pair.
pub fn greedy_agglomeration(
    mentions: &BTreeSet<String>,
    scores: &[PairScore],
    config: &AggloConfig,
) -> ClusterAssignment {
    let ids: Vec<&String> = mentions.iter().collect();
    let n = ids.len();
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, m)| (m.as_str(), i))
        .collect();

    // Cluster k is identified by its smallest member index, which is also the
    // position of its smallest mention id.
    let mut size = vec![1usize; n];
    let mut alive = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    // Per-cluster neighbour statistics: sum and max of member-pair scores.
    let mut links: Vec<BTreeMap<usize, (f64, f64)>> = vec![BTreeMap::new(); n];

    let mut pair_scores: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for s in scores {
        let (Some(&a), Some(&b)) = (index.get(s.pair.a.as_str()), index.get(s.pair.b.as_str())) else {
            continue;
        };
        let key = (a.min(b), a.max(b));
        let e = pair_scores.entry(key).or_insert(s.score);
        if s.score > *e {
            *e = s.score;
        }
    }
    for (&(a, b), &s) in &pair_scores {
        links[a].insert(b, (s, s));
        links[b].insert(a, (s, s));
    }

    let linkage_of = |sum: f64, max: f64, sa: usize, sb: usize| match config.linkage {
        Linkage::Average => sum / (sa * sb) as f64,
        Linkage::Max => max,
    };

    loop {
        // Best scored cluster pair.
        let mut best: Option<(f64, usize, usize)> = None;
        for a in (0..n).filter(|&a| alive[a]) {
            for (&b, &(sum, max)) in links[a].range(a + 1..) {
                let value = linkage_of(sum, max, size[a], size[b]);
                let better = match best {
                    None => true,
                    Some((bv, ba, bb)) => value > bv || (value == bv && (a, b) < (ba, bb)),
                };
                if better {
                    best = Some((value, a, b));
                }
            }
        }
        // Unscored pairs have linkage 0; they only merge when the threshold allows 0.
        let fallback = if config.stop_threshold <= 0.0 {
            let mut live = (0..n).filter(|&a| alive[a]);
            match (live.next(), live.next()) {
                (Some(a), Some(b)) => Some((0.0, a, b)),
                _ => None,
            }
        } else {
            None
        };
        let chosen = match (best, fallback) {
            (Some(b), Some(f)) if f.0 > b.0 || (f.0 == b.0 && (f.1, f.2) < (b.1, b.2)) => Some(f),
            (b, f) => b.or(f),
        };
        let Some((value, a, b)) = chosen else { break };
        if value < config.stop_threshold {
            break;
        }

        // Merge b into a (a < b, so a keeps the smallest member).
        alive[b] = false;
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        size[a] += size[b];
        let b_links = std::mem::take(&mut links[b]);
        links[a].remove(&b);
        for (c, (sum, max)) in b_links {
            if c == a {
                continue;
            }
            links[c].remove(&b);
            let e = links[a].entry(c).or_insert((0.0, f64::NEG_INFINITY));
            e.0 += sum;
            e.1 = e.1.max(max);
            let copy = *e;
            links[c].insert(a, copy);
        }
    }

    let groups = (0..n)
        .filter(|&a| alive[a])
        .map(|a| members[a].iter().map(|&i| ids[i].clone()).collect::<Vec<_>>());
    ClusterAssignment::from_groups(groups)
}

/// Connected components over retained pairs that are gold-coreferent: the
/// partition a perfect pairwise classifier would produce after filtering.
pub fn oracle_components(
    corpus: &Corpus,
    retained: &[MentionPair],
    split: Split,
) -> Result<ClusterAssignment, ClusteringError> {
    let mentions: BTreeSet<String> = corpus
        .mentions_in_split(split)
        .map(|m| m.mention_id.clone())
        .collect();
    let mut edges = Vec::new();
    for p in retained {
        for id in [&p.a, &p.b] {
            if !mentions.contains(id) {
                return Err(ClusteringError::UnknownEndpoint(id.clone()));
            }
        }
        let ga = &corpus.mention(&p.a).expect("checked").gold_cluster_id;
        let gb = &corpus.mention(&p.b).expect("checked").gold_cluster_id;
        if ga == gb {
            edges.push((p.a.as_str(), p.b.as_str()));
        }
    }
    components(&mentions, edges.into_iter())
}
