//! Bottom-up agglomerative clustering with ward or single linkage.
//!
//! Ward dissimilarity is the variance-increase form maintained with the
//! Lance-Williams recurrence on squared Euclidean distances; the initial
//! pairwise dissimilarity between singletons is d²/2, so the recurrence
//! reproduces |A||B|/(|A|+|B|) · ‖c_A − c_B‖² exactly at every step.
//! Single linkage keeps the minimum inter-set Euclidean distance.
//!
//! Determinism: a cluster's id is its smallest member row; slots are merged
//! so the slot index always equals that id. When two merge candidates are
//! equally dissimilar within 1e-12, the lexicographically smallest
//! (min-id, max-id) pair merges first.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::stats;

use super::{check_k, AlgorithmInfo, ClusterError, ClusteringResult};

/// Inter-cluster dissimilarity rule used during merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Ward,
    Single,
}

const TIE_TOL: f64 = 1e-12;

/// Merges singletons bottom-up until `k` clusters remain.
pub fn agglomerative_fit(
    d: &Dataset,
    k: usize,
    linkage: Linkage,
) -> Result<ClusteringResult, ClusterError> {
    let labels = agglomerate(d.rows(), k, linkage)?;
    Ok(ClusteringResult {
        k,
        assignments: labels,
        algorithm: AlgorithmInfo::Agglomerative { linkage },
        centroids: None,
        seed: None,
    })
}

/// Core merging loop shared with the BIRCH global step.
pub(crate) fn agglomerate(
    data: &[Vec<f64>],
    k: usize,
    linkage: Linkage,
) -> Result<Vec<usize>, ClusterError> {
    let n = data.len();
    check_k(k, n)?;

    // diss[i][j] for active slots; slot index == cluster id == min member.
    let mut diss = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = match linkage {
                Linkage::Ward => stats::dist_sq(&data[i], &data[j]) / 2.0,
                Linkage::Single => stats::dist(&data[i], &data[j]),
            };
            diss[i][j] = v;
            diss[j][i] = v;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut sizes: Vec<usize> = vec![1; n];
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut remaining = n;

    while remaining > k {
        let (a, b) = closest_pair(&diss, &active);
        // Merge b into a (a < b, so the merged cluster keeps id a).
        match linkage {
            Linkage::Ward => {
                let (na, nb) = (sizes[a] as f64, sizes[b] as f64);
                let dab = diss[a][b];
                for c in 0..diss.len() {
                    if !active[c] || c == a || c == b {
                        continue;
                    }
                    let nc = sizes[c] as f64;
                    let updated = ((na + nc) * diss[a][c] + (nb + nc) * diss[b][c] - nc * dab)
                        / (na + nb + nc);
                    diss[a][c] = updated;
                    diss[c][a] = updated;
                }
            }
            Linkage::Single => {
                for c in 0..diss.len() {
                    if !active[c] || c == a || c == b {
                        continue;
                    }
                    let updated = diss[a][c].min(diss[b][c]);
                    diss[a][c] = updated;
                    diss[c][a] = updated;
                }
            }
        }
        sizes[a] += sizes[b];
        active[b] = false;
        for slot in assignment.iter_mut() {
            if *slot == b {
                *slot = a;
            }
        }
        remaining -= 1;
    }

    let (labels, observed_k) = super::canonical_labels(&assignment);
    debug_assert_eq!(observed_k, k);
    Ok(labels)
}

/// Smallest-dissimilarity active pair; ties within 1e-12 resolve to the
/// lexicographically smallest (min-id, max-id).
fn closest_pair(diss: &[Vec<f64>], active: &[bool]) -> (usize, usize) {
    let n = active.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        if !active[i] {
            continue;
        }
        for j in i + 1..n {
            if active[j] && diss[i][j] < best {
                best = diss[i][j];
            }
        }
    }
    for i in 0..n {
        if !active[i] {
            continue;
        }
        for j in i + 1..n {
            if active[j] && diss[i][j] <= best + TIE_TOL {
                return (i, j);
            }
        }
    }
    unreachable!("no active pair");
}
