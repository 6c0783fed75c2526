//! Coreference evaluation: MUC, B³, CEAF-e and the CoNLL average.
//!
//! All metrics compare two partitions of the same mention set. Singletons are
//! scored as given.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{oracle_components, ClusterAssignment, ClusteringError};
use crate::corpus::{Corpus, Split};
use crate::filters::MentionPair;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gold and predicted mention sets differ (e.g. `{0}`)")]
    MentionSetMismatch(String),
    #[error("cannot evaluate an empty mention set")]
    Empty,
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
}

/// Recall, precision and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(recall: f64, precision: f64) -> Self {
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * recall * precision / (recall + precision)
        };
        Prf {
            recall,
            precision,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub muc: Prf,
    pub b3: Prf,
    pub ceaf_e: Prf,
    pub conll_f1: f64,
}

impl MetricReport {
    /// `key<TAB>value` lines, six decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, m) in [("muc", self.muc), ("b3", self.b3), ("ceaf_e", self.ceaf_e)] {
            let _ = writeln!(out, "{name}_recall\t{:.6}", m.recall);
            let _ = writeln!(out, "{name}_precision\t{:.6}", m.precision);
            let _ = writeln!(out, "{name}_f1\t{:.6}", m.f1);
        }
        let _ = writeln!(out, "conll_f1\t{:.6}", self.conll_f1);
        out
    }
}

/// Both partitions as lists of clusters over shared mention indices.
struct Aligned {
    gold: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    gold_of: Vec<usize>,
    pred_of: Vec<usize>,
}

fn align(gold: &ClusterAssignment, pred: &ClusterAssignment) -> Result<Aligned, MetricsError> {
    if let Some(m) = gold.mentions().find(|m| pred.cluster_of(m).is_none()) {
        return Err(MetricsError::MentionSetMismatch(m.to_string()));
    }
    if let Some(m) = pred.mentions().find(|m| gold.cluster_of(m).is_none()) {
        return Err(MetricsError::MentionSetMismatch(m.to_string()));
    }
    if gold.is_empty() {
        return Err(MetricsError::Empty);
    }
    let index: HashMap<&str, usize> = gold.mentions().enumerate().map(|(i, m)| (m, i)).collect();
    let group = |a: &ClusterAssignment| -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut of = vec![0; index.len()];
        let clusters: Vec<Vec<usize>> = a
            .clusters()
            .into_values()
            .enumerate()
            .map(|(ci, members)| {
                members
                    .into_iter()
                    .map(|m| {
                        let i = index[m];
                        of[i] = ci;
                        i
                    })
                    .collect()
            })
            .collect();
        (clusters, of)
    };
    let (gold_c, gold_of) = group(gold);
    let (pred_c, pred_of) = group(pred);
    Ok(Aligned {
        gold: gold_c,
        pred: pred_c,
        gold_of,
        pred_of,
    })
}

fn overlap(a: &Aligned) -> BTreeMap<(usize, usize), usize> {
    let mut m = BTreeMap::new();
    for i in 0..a.gold_of.len() {
        *m.entry((a.gold_of[i], a.pred_of[i])).or_insert(0) += 1;
    }
    m
}

pub fn b3(gold: &ClusterAssignment, pred: &ClusterAssignment) -> Result<Prf, MetricsError> {
    let a = align(gold, pred)?;
    let inter = overlap(&a);
    let n = a.gold_of.len() as f64;
    let (mut r, mut p) = (0.0, 0.0);
    for i in 0..a.gold_of.len() {
        let (g, q) = (a.gold_of[i], a.pred_of[i]);
        let common = inter[&(g, q)] as f64;
        r += common / a.gold[g].len() as f64;
        p += common / a.pred[q].len() as f64;
    }
    Ok(Prf::new(r / n, p / n))
}

fn muc_side(keys: &[Vec<usize>], other_of: &[usize]) -> (usize, usize) {
    let mut num = 0;
    let mut den = 0;
    for k in keys {
        let parts: BTreeSet<usize> = k.iter().map(|&i| other_of[i]).collect();
        num += k.len() - parts.len();
        den += k.len() - 1;
    }
    (num, den)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn muc(gold: &ClusterAssignment, pred: &ClusterAssignment) -> Result<Prf, MetricsError> {
    let a = align(gold, pred)?;
    let (rn, rd) = muc_side(&a.gold, &a.pred_of);
    let (pn, pd) = muc_side(&a.pred, &a.gold_of);
    Ok(Prf::new(ratio(rn, rd), ratio(pn, pd)))
}

/// Entity similarity `2|g ∩ p| / (|g| + |p|)`.
pub fn phi4(common: usize, gold_size: usize, pred_size: usize) -> f64 {
    2.0 * common as f64 / (gold_size + pred_size) as f64
}

pub fn ceaf_e(gold: &ClusterAssignment, pred: &ClusterAssignment) -> Result<Prf, MetricsError> {
    let a = align(gold, pred)?;
    let mut sim = vec![vec![0.0; a.pred.len()]; a.gold.len()];
    for ((g, p), common) in overlap(&a) {
        sim[g][p] = phi4(common, a.gold[g].len(), a.pred[p].len());
    }
    let (_, total) = max_weight_assignment(&sim);
    Ok(Prf::new(total / a.gold.len() as f64, total / a.pred.len() as f64))
}

pub fn conll_f1(muc_f1: f64, b3_f1: f64, ceaf_e_f1: f64) -> f64 {
    (muc_f1 + b3_f1 + ceaf_e_f1) / 3.0
}

pub fn evaluate(gold: &ClusterAssignment, pred: &ClusterAssignment) -> Result<MetricReport, MetricsError> {
    let muc = muc(gold, pred)?;
    let b3 = b3(gold, pred)?;
    let ceaf_e = ceaf_e(gold, pred)?;
    Ok(MetricReport {
        muc,
        b3,
        ceaf_e,
        conll_f1: conll_f1(muc.f1, b3.f1, ceaf_e.f1),
    })
}

/// B³ recall of the oracle partition over retained pairs of `split`.
pub fn oracle_recall(corpus: &Corpus, retained: &[MentionPair], split: Split) -> Result<f64, MetricsError> {
    let pred = oracle_components(corpus, retained, split)?;
    let gold = corpus.gold_assignment(Some(split));
    Ok(b3(&gold, &pred)?.recall)
}

/// Maximum-weight one-to-one matching between rows and columns of a
/// (possibly rectangular) weight matrix, via the O(n²m) shortest augmenting
/// path form of the Hungarian method. Returns the column matched to each row
/// and the total weight.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|j| (0..rows).map(|i| weights[i][j]).collect())
            .collect();
        let (col_to_row, total) = max_weight_assignment(&transposed);
        let mut row_to_col = vec![None; rows];
        for (j, r) in col_to_row.into_iter().enumerate() {
            if let Some(i) = r {
                row_to_col[i] = Some(j);
            }
        }
        return (row_to_col, total);
    }

    // Minimize negated weights; 1-based indices with 0 as the virtual column.
    let (n, m) = (rows, cols);
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![None; n];
    let mut total = 0.0;
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = Some(j - 1);
            total += weights[p[j] - 1][j - 1];
        }
    }
    (row_to_col, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(groups: &[&[&str]]) -> ClusterAssignment {
        ClusterAssignment::from_groups(groups.iter().map(|g| g.iter().copied()))
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn perfect_prediction() {
        let g = part(&[&["a", "b", "c"], &["d"]]);
        let r = evaluate(&g, &g).unwrap();
        for m in [r.muc, r.b3, r.ceaf_e] {
            assert_eq!((m.recall, m.precision, m.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.conll_f1, 1.0);
    }

    #[test]
    fn worked_example() {
        let g = part(&[&["a", "b", "c"], &["d"]]);
        let p = part(&[&["a", "b"], &["c", "d"]]);
        let b = b3(&g, &p).unwrap();
        assert!(close(b.recall, 2.0 / 3.0) && close(b.precision, 0.75));
        assert!(close(b.f1, 12.0 / 17.0));
        let m = muc(&g, &p).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (0.5, 0.5, 0.5));
        let c = ceaf_e(&g, &p).unwrap();
        assert!(close(c.recall, 11.0 / 15.0) && close(c.precision, 11.0 / 15.0));
        let r = evaluate(&g, &p).unwrap();
        assert!(close(r.conll_f1, (0.5 + 12.0 / 17.0 + 11.0 / 15.0) / 3.0));
        // 0.64640 when averaged from five-decimal components.
        assert!((r.conll_f1 - 0.6464052).abs() < 1e-7);
    }

    #[test]
    fn singletons_against_one_cluster() {
        let ids = ["a", "b", "c", "d", "e"];
        let g = part(&[&ids]);
        let p = ClusterAssignment::from_groups(ids.iter().map(|i| vec![*i]));
        let b = b3(&g, &p).unwrap();
        assert!(close(b.recall, 1.0 / 5.0) && b.precision == 1.0);
    }

    #[test]
    fn muc_without_links_is_zero() {
        let s = part(&[&["a"], &["b"]]);
        assert_eq!(muc(&s, &s).unwrap(), Prf::new(0.0, 0.0));
        assert_eq!(Prf::new(0.0, 0.0).f1, 0.0);
    }

    #[test]
    fn ceaf_picks_larger_half() {
        let g = part(&[&["a", "b", "c", "d", "e"]]);
        let p = part(&[&["a", "b", "c"], &["d", "e"]]);
        let c = ceaf_e(&g, &p).unwrap();
        // phi4 with the 3-member half = 6/8, with the 2-member half = 4/7.
        assert!(close(c.recall, 0.75));
        assert!(close(c.precision, 0.375));
    }

    #[test]
    fn mismatched_or_empty_sets() {
        let g = part(&[&["a", "b"]]);
        let p = part(&[&["a", "c"]]);
        assert!(matches!(b3(&g, &p), Err(MetricsError::MentionSetMismatch(_))));
        let e = ClusterAssignment::default();
        assert!(matches!(b3(&e, &e), Err(MetricsError::Empty)));
    }

    #[test]
    fn conll_examples() {
        assert_eq!(conll_f1(1.0, 1.0, 1.0), 1.0);
        assert_eq!(conll_f1(0.0, 0.0, 0.0), 0.0);
        assert!((conll_f1(0.5, 0.70588, 0.73333) - 0.64640).abs() < 1e-5);
    }

    #[test]
    fn assignment_rectangular() {
        let w = vec![vec![0.1, 0.9, 0.3], vec![0.8, 0.85, 0.0]];
        let (rows, total) = max_weight_assignment(&w);
        assert_eq!(rows, vec![Some(1), Some(0)]);
        assert!(close(total, 1.7));
        let wt: Vec<Vec<f64>> = (0..3).map(|j| (0..2).map(|i| w[i][j]).collect()).collect();
        let (rows, total) = max_weight_assignment(&wt);
        assert_eq!(rows, vec![Some(1), Some(0), None]);
        assert!(close(total, 1.7));
        assert_eq!(max_weight_assignment(&[]).1, 0.0);
    }
}
