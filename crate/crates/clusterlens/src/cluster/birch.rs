//! BIRCH: single-pass CF-tree insertion followed by a ward agglomerative
//! global step over the leaf-entry centroids.
//!
//! A leaf entry absorbs a point when the merged entry's radius stays within
//! the threshold; nodes split when their child count exceeds the branching
//! factor (farthest-pair seeding, entries reassigned to the nearest seed).
//! Every choice breaks ties toward the lowest index, so the tree build is
//! fully deterministic. With threshold 0 each distinct point gets its own
//! leaf entry and the result degenerates to plain ward agglomerative.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::stats;

use super::{agglomerative::agglomerate, check_k, AlgorithmInfo, ClusterError, ClusteringResult, Linkage};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_BRANCHING_FACTOR: usize = 50;

/// Clustering feature: point count, linear sum, and scalar squared sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfEntry {
    pub n: usize,
    pub ls: Vec<f64>,
    pub ss: f64,
}

impl CfEntry {
    pub fn from_point(x: &[f64]) -> Self {
        Self {
            n: 1,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).sum(),
        }
    }

    /// Sums the fields of two entries exactly.
    pub fn merge(&self, other: &CfEntry) -> CfEntry {
        CfEntry {
            n: self.n + other.n,
            ls: self
                .ls
                .iter()
                .zip(&other.ls)
                .map(|(a, b)| a + b)
                .collect(),
            ss: self.ss + other.ss,
        }
    }

    pub fn add_point(&mut self, x: &[f64]) {
        self.n += 1;
        for (l, v) in self.ls.iter_mut().zip(x) {
            *l += v;
        }
        self.ss += x.iter().map(|v| v * v).sum::<f64>();
    }

    pub fn centroid(&self) -> Vec<f64> {
        let inv = 1.0 / self.n as f64;
        self.ls.iter().map(|l| l * inv).collect()
    }

    /// Squared radius SS/N − ‖LS/N‖², clamped at zero against rounding.
    pub fn radius_sq(&self) -> f64 {
        let inv = 1.0 / self.n as f64;
        let centroid_norm_sq: f64 = self.ls.iter().map(|l| l * inv).map(|c| c * c).sum();
        (self.ss * inv - centroid_norm_sq).max(0.0)
    }

    fn centroid_dist_sq(&self, x: &[f64]) -> f64 {
        let inv = 1.0 / self.n as f64;
        self.ls
            .iter()
            .zip(x)
            .map(|(l, v)| {
                let d = l * inv - v;
                d * d
            })
            .sum()
    }
}

#[derive(Debug)]
struct LeafEntry {
    cf: CfEntry,
    /// Row indices absorbed by this entry, in insertion order; rows arrive
    /// in ascending order so `members[0]` is the smallest.
    members: Vec<usize>,
}

#[derive(Debug)]
enum Node {
    Leaf(Vec<LeafEntry>),
    Internal(Vec<Child>),
}

#[derive(Debug)]
struct Child {
    summary: CfEntry,
    node: Box<Node>,
}

impl Node {
    fn summarize(&self) -> CfEntry {
        match self {
            Node::Leaf(entries) => {
                let mut acc = entries[0].cf.clone();
                for e in &entries[1..] {
                    acc = acc.merge(&e.cf);
                }
                acc
            }
            Node::Internal(children) => {
                let mut acc = children[0].summary.clone();
                for c in &children[1..] {
                    acc = acc.merge(&c.summary);
                }
                acc
            }
        }
    }
}

/// Builds the CF tree over all rows, runs ward agglomerative on the leaf
/// entry centroids down to `k` clusters, and labels each row by its leaf
/// entry's cluster.
pub fn birch_fit(
    d: &Dataset,
    threshold: f64,
    branching_factor: usize,
    k: usize,
) -> Result<ClusteringResult, ClusterError> {
    let n = d.n_rows();
    check_k(k, n)?;
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(ClusterError::BadThreshold(threshold));
    }
    if branching_factor < 2 {
        return Err(ClusterError::BadBranchingFactor(branching_factor));
    }

    let threshold_sq = threshold * threshold;
    let mut root = Node::Leaf(Vec::new());
    for (idx, row) in d.rows().iter().enumerate() {
        if let Some(sibling) = insert(&mut root, idx, row, threshold_sq, branching_factor) {
            let old = std::mem::replace(&mut root, Node::Leaf(Vec::new()));
            root = Node::Internal(vec![
                Child {
                    summary: old.summarize(),
                    node: Box::new(old),
                },
                Child {
                    summary: sibling.summarize(),
                    node: Box::new(sibling),
                },
            ]);
        }
    }

    let mut entries = Vec::new();
    collect_leaf_entries(root, &mut entries);
    entries.sort_by_key(|e| e.members[0]);
    debug_assert_eq!(entries.iter().map(|e| e.cf.n).sum::<usize>(), n);

    if k > entries.len() {
        return Err(ClusterError::TooFewLeafEntries {
            k,
            entries: entries.len(),
        });
    }

    let centroids: Vec<Vec<f64>> = entries.iter().map(|e| e.cf.centroid()).collect();
    let entry_labels = agglomerate(&centroids, k, Linkage::Ward)?;

    let mut assignments = vec![0usize; n];
    for (entry, &label) in entries.iter().zip(&entry_labels) {
        for &row in &entry.members {
            assignments[row] = label;
        }
    }
    let (labels, _) = super::canonical_labels(&assignments);

    // Cluster centroids from the CF sums of each cluster's entries.
    let m = d.n_cols();
    let mut sums = vec![vec![0.0; m]; k];
    let mut counts = vec![0usize; k];
    for (entry, &raw_label) in entries.iter().zip(&entry_labels) {
        let cluster = labels[entry.members[0]];
        let _ = raw_label;
        counts[cluster] += entry.cf.n;
        for (j, l) in entry.cf.ls.iter().enumerate() {
            sums[cluster][j] += l;
        }
    }
    for c in 0..k {
        for j in 0..m {
            sums[c][j] /= counts[c] as f64;
        }
    }

    let leaf_entries = entries.len();
    Ok(ClusteringResult {
        k,
        assignments: labels,
        algorithm: AlgorithmInfo::Birch {
            threshold,
            branching_factor,
            leaf_entries,
        },
        centroids: Some(sums),
        seed: None,
    })
}

/// Inserts one point; returns the sibling node when this node had to split.
fn insert(
    node: &mut Node,
    idx: usize,
    x: &[f64],
    threshold_sq: f64,
    branching: usize,
) -> Option<Node> {
    match node {
        Node::Leaf(entries) => {
            if entries.is_empty() {
                entries.push(LeafEntry {
                    cf: CfEntry::from_point(x),
                    members: vec![idx],
                });
                return None;
            }
            let nearest = nearest_index(entries.iter().map(|e| e.cf.centroid_dist_sq(x)));
            let mut candidate = entries[nearest].cf.clone();
            candidate.add_point(x);
            if candidate.radius_sq() <= threshold_sq {
                entries[nearest].cf = candidate;
                entries[nearest].members.push(idx);
                return None;
            }
            entries.push(LeafEntry {
                cf: CfEntry::from_point(x),
                members: vec![idx],
            });
            if entries.len() > branching {
                let second = split_leaf(entries);
                return Some(Node::Leaf(second));
            }
            None
        }
        Node::Internal(children) => {
            let nearest = nearest_index(
                children
                    .iter()
                    .map(|c| c.summary.centroid_dist_sq(x)),
            );
            let outcome = insert(&mut children[nearest].node, idx, x, threshold_sq, branching);
            match outcome {
                None => {
                    children[nearest].summary.add_point(x);
                    None
                }
                Some(sibling) => {
                    children[nearest].summary = children[nearest].node.summarize();
                    children.insert(
                        nearest + 1,
                        Child {
                            summary: sibling.summarize(),
                            node: Box::new(sibling),
                        },
                    );
                    if children.len() > branching {
                        let second = split_internal(children);
                        return Some(Node::Internal(second));
                    }
                    None
                }
            }
        }
    }
}

fn nearest_index(dists: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, d) in dists.enumerate() {
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Farthest-pair seeds; every other item joins its nearest seed. Ties go to
/// the first seed. Returns the second group, leaving the first in place.
fn split_by_seeds(centroids: &[Vec<f64>]) -> Vec<bool> {
    let n = centroids.len();
    let (mut si, mut sj) = (0, 1);
    let mut worst = -1.0;
    for i in 0..n {
        for j in i + 1..n {
            let dsq = stats::dist_sq(&centroids[i], &centroids[j]);
            if dsq > worst {
                worst = dsq;
                si = i;
                sj = j;
            }
        }
    }
    (0..n)
        .map(|i| {
            let di = stats::dist_sq(&centroids[i], &centroids[si]);
            let dj = stats::dist_sq(&centroids[i], &centroids[sj]);
            dj < di // true = second group
        })
        .collect()
}

fn split_leaf(entries: &mut Vec<LeafEntry>) -> Vec<LeafEntry> {
    let centroids: Vec<Vec<f64>> = entries.iter().map(|e| e.cf.centroid()).collect();
    let to_second = split_by_seeds(&centroids);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (entry, go) in entries.drain(..).zip(to_second) {
        if go {
            second.push(entry);
        } else {
            first.push(entry);
        }
    }
    *entries = first;
    second
}

fn split_internal(children: &mut Vec<Child>) -> Vec<Child> {
    let centroids: Vec<Vec<f64>> = children.iter().map(|c| c.summary.centroid()).collect();
    let to_second = split_by_seeds(&centroids);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (child, go) in children.drain(..).zip(to_second) {
        if go {
            second.push(child);
        } else {
            first.push(child);
        }
    }
    *children = first;
    second
}

fn collect_leaf_entries(node: Node, out: &mut Vec<LeafEntry>) {
    match node {
        Node::Leaf(entries) => out.extend(entries),
        Node::Internal(children) => {
            for child in children {
                collect_leaf_entries(*child.node, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::agglomerative_fit;
    use crate::dataset::Dataset;
    use crate::synth::{gen_blobs, BlobSpec};
    use crate::validity::{contingency_table, external_metrics};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cf_entry_merge_sums_exactly() {
        let a = CfEntry::from_point(&[1.0, 2.0]);
        let b = CfEntry::from_point(&[3.0, 4.0]);
        let merged = a.merge(&b);
        assert_eq!(merged.n, 2);
        assert_eq!(merged.ls, vec![4.0, 6.0]);
        assert_eq!(merged.ss, 1.0 + 4.0 + 9.0 + 16.0);
    }

    #[test]
    fn cf_radius_of_duplicates_is_exactly_zero() {
        let mut e = CfEntry::from_point(&[2.5, -1.5]);
        e.add_point(&[2.5, -1.5]);
        assert_eq!(e.radius_sq(), 0.0);
    }

    #[test]
    fn single_point_is_one_cluster() {
        let d = Dataset::new(vec!["x".into()], vec![vec![7.0]], None).unwrap();
        let r = birch_fit(&d, 0.5, 50, 1).unwrap();
        assert_eq!(r.assignments, vec![0]);
    }

    #[test]
    fn threshold_zero_equals_ward_agglomerative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let d = Dataset::new(vec!["x".into(), "y".into()], rows, None).unwrap();
        for k in [2, 3, 5] {
            let b = birch_fit(&d, 0.0, 4, k).unwrap();
            let w = agglomerative_fit(&d, k, Linkage::Ward).unwrap();
            assert_eq!(b.assignments, w.assignments, "k={k}");
        }
    }

    #[test]
    fn recovers_two_separated_blobs() {
        let (d, truth) = gen_blobs(&BlobSpec {
            n_per_cluster: 40,
            k: 2,
            informative: 3,
            noise: 1,
            separation: 100.0,
            seed: 21,
        })
        .unwrap();
        let r = birch_fit(&d, 1.0, 50, 2).unwrap();
        let ct = contingency_table(&truth, &r.assignments).unwrap();
        let rep = external_metrics(&ct).unwrap();
        assert!((rep.adjusted_rand - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leaf_counts_sum_to_n_and_labels_cover() {
        let (d, _) = gen_blobs(&BlobSpec {
            n_per_cluster: 30,
            k: 3,
            informative: 2,
            noise: 2,
            separation: 4.0,
            seed: 2,
        })
        .unwrap();
        let r = birch_fit(&d, 0.8, 5, 3).unwrap();
        assert!(r.validate(d.n_rows()));
        if let AlgorithmInfo::Birch { leaf_entries, .. } = r.algorithm {
            assert!(leaf_entries >= 3);
        }
    }

    #[test]
    fn error_when_k_exceeds_leaf_entries() {
        // A huge threshold folds everything into one entry.
        let d = Dataset::new(
            vec!["x".into()],
            vec![vec![0.0], vec![0.1], vec![0.2]],
            None,
        )
        .unwrap();
        let err = birch_fit(&d, 1e6, 50, 2).unwrap_err();
        match err {
            ClusterError::TooFewLeafEntries { k, entries } => {
                assert_eq!(k, 2);
                assert_eq!(entries, 1);
            }
            other => panic!("expected TooFewLeafEntries, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = Dataset::new(vec!["x".into()], vec![vec![0.0], vec![1.0]], None).unwrap();
        assert!(matches!(
            birch_fit(&d, -1.0, 50, 1),
            Err(ClusterError::BadThreshold(_))
        ));
        assert!(matches!(
            birch_fit(&d, 0.5, 1, 1),
            Err(ClusterError::BadBranchingFactor(_))
        ));
    }
}
