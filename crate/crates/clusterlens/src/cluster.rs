//! Partitioning of the feature table: K-Means, agglomerative (ward and
//! single linkage), and BIRCH, all taking the target cluster count as input.
//!
//! Every fit is deterministic given its data, parameters, and seed. Cluster
//! ids are assigned in order of each cluster's smallest member row, so two
//! runs over the same input produce identical label vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

mod agglomerative;
mod birch;
mod kmeans;

pub use agglomerative::{agglomerative_fit, Linkage};
pub use birch::{birch_fit, CfEntry, DEFAULT_BRANCHING_FACTOR, DEFAULT_THRESHOLD};
pub use kmeans::{kmeans_fit, DEFAULT_KMEANS_MAX_ITER, DEFAULT_KMEANS_TOL};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k={k} out of range for n={n} rows: need 1 <= k <= n")]
    BadK { k: usize, n: usize },
    #[error("branching factor {0} too small: need at least 2")]
    BadBranchingFactor(usize),
    #[error("threshold {0} must be a non-negative finite number")]
    BadThreshold(f64),
    #[error(
        "k={k} exceeds the {entries} leaf entries produced by the CF tree; \
         lower the threshold to split the data further"
    )]
    TooFewLeafEntries { k: usize, entries: usize },
}

/// Algorithm tag with the parameters that produced a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AlgorithmInfo {
    KMeans {
        max_iter: usize,
        tol: f64,
        n_iter: usize,
        inertia: f64,
        /// Inertia after each Lloyd iteration; non-increasing.
        inertia_trace: Vec<f64>,
    },
    Agglomerative {
        linkage: Linkage,
    },
    Birch {
        threshold: f64,
        branching_factor: usize,
        leaf_entries: usize,
    },
}

impl AlgorithmInfo {
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmInfo::KMeans { .. } => "kmeans",
            AlgorithmInfo::Agglomerative {
                linkage: Linkage::Ward,
            } => "agglomerative_ward",
            AlgorithmInfo::Agglomerative {
                linkage: Linkage::Single,
            } => "agglomerative_single",
            AlgorithmInfo::Birch { .. } => "birch",
        }
    }
}

/// A flat partition of the dataset rows into `k` clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    /// Per-row cluster id in `{0..k-1}`; every id occurs at least once.
    pub assignments: Vec<usize>,
    pub algorithm: AlgorithmInfo,
    /// Cluster centroids (K-Means and BIRCH only).
    pub centroids: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
}

impl ClusteringResult {
    /// Checks the structural invariants: assignment length n, ids within
    /// range, every id used.
    pub fn validate(&self, n: usize) -> bool {
        if self.assignments.len() != n || self.k == 0 {
            return false;
        }
        let mut used = vec![false; self.k];
        for &a in &self.assignments {
            if a >= self.k {
                return false;
            }
            used[a] = true;
        }
        used.iter().all(|&u| u)
    }

    /// Row indices grouped per cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (row, &c) in self.assignments.iter().enumerate() {
            groups[c].push(row);
        }
        groups
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<(), ClusterError> {
    if k == 0 || k > n {
        return Err(ClusterError::BadK { k, n });
    }
    Ok(())
}

/// Relabels an arbitrary partition so cluster ids run 0..k-1 in order of
/// each cluster's smallest member row.
pub(crate) fn canonical_labels(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut remap: Vec<Option<usize>> = vec![None; raw.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    let mut labels = Vec::with_capacity(raw.len());
    for &r in raw {
        let id = *remap[r].get_or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        labels.push(id);
    }
    (labels, next)
}

pub(crate) fn data_matrix(d: &Dataset) -> &[Vec<f64>] {
    d.rows()
}
