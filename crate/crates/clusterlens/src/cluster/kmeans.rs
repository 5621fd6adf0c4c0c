//! Lloyd iterations from k-means++ initialization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::stats;

use super::{check_k, AlgorithmInfo, ClusterError, ClusteringResult};

pub const DEFAULT_KMEANS_MAX_ITER: usize = 300;
pub const DEFAULT_KMEANS_TOL: f64 = 1e-4;

/// K-Means with k-means++ (D² sampling) initialization. Iterates until the
/// largest centroid shift drops below `tol` or `max_iter` is reached.
/// Deterministic for a fixed seed; empty clusters are repaired by moving in
/// the point currently farthest from its centroid.
pub fn kmeans_fit(
    d: &Dataset,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusteringResult, ClusterError> {
    let n = d.n_rows();
    check_k(k, n)?;
    let data = d.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids = plus_plus_init(data, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut inertia_trace = Vec::new();
    let mut n_iter = 0;

    for _ in 0..max_iter.max(1) {
        n_iter += 1;
        assign_nearest(data, &centroids, &mut assignments);
        repair_empty_clusters(data, &centroids, &mut assignments, k);

        let old = centroids.clone();
        update_centroids(data, &assignments, &mut centroids, k);

        inertia_trace.push(inertia(data, &centroids, &assignments));

        let shift = old
            .iter()
            .zip(&centroids)
            .map(|(a, b)| stats::dist(a, b))
            .fold(0.0f64, f64::max);
        if shift < tol {
            break;
        }
    }
    // Final assignment against the converged centroids so labels and
    // centroids agree.
    assign_nearest(data, &centroids, &mut assignments);
    repair_empty_clusters(data, &centroids, &mut assignments, k);
    update_centroids(data, &assignments, &mut centroids, k);
    inertia_trace.push(inertia(data, &centroids, &assignments));

    let (labels, _) = super::canonical_labels(&assignments);
    let mut ordered_centroids = vec![Vec::new(); k];
    for (row, (&raw, &canon)) in assignments.iter().zip(&labels).enumerate() {
        let _ = row;
        if ordered_centroids[canon].is_empty() {
            ordered_centroids[canon] = centroids[raw].clone();
        }
    }
    let final_inertia = *inertia_trace.last().unwrap();
    Ok(ClusteringResult {
        k,
        assignments: labels,
        algorithm: AlgorithmInfo::KMeans {
            max_iter,
            tol,
            n_iter,
            inertia: final_inertia,
            inertia_trace,
        },
        centroids: Some(ordered_centroids),
        seed: Some(seed),
    })
}

/// D² sampling: the first center is uniform, each next one is drawn with
/// probability proportional to the squared distance to the nearest chosen
/// center. Falls back to the lowest-index unchosen point when all remaining
/// weights are zero (duplicate-heavy data).
fn plus_plus_init(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![data[first].clone()];
    let mut best_sq: Vec<f64> = data.iter().map(|x| stats::dist_sq(x, &centers[0])).collect();

    while centers.len() < k {
        let total: f64 = best_sq.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in best_sq.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| best_sq.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[idx] = true;
        centers.push(data[idx].clone());
        let newest = centers.last().unwrap();
        for (i, x) in data.iter().enumerate() {
            let dsq = stats::dist_sq(x, newest);
            if dsq < best_sq[i] {
                best_sq[i] = dsq;
            }
        }
    }
    centers
}

fn assign_nearest(data: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize]) {
    for (i, x) in data.iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let dsq = stats::dist_sq(x, centroid);
            if dsq < best_d {
                best_d = dsq;
                best = c;
            }
        }
        assignments[i] = best;
    }
}

/// Gives every empty cluster the point farthest from its current centroid
/// (ties broken toward the lowest row index). Inertia cannot increase: the
/// moved point's cost drops to zero once centroids are recomputed.
fn repair_empty_clusters(
    data: &[Vec<f64>],
    centroids: &[Vec<f64>],
    assignments: &mut [usize],
    k: usize,
) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut worst_row = 0;
        let mut worst_d = -1.0;
        for (i, x) in data.iter().enumerate() {
            if counts[assignments[i]] <= 1 {
                continue; // keep donor clusters non-empty
            }
            let dsq = stats::dist_sq(x, &centroids[assignments[i]]);
            if dsq > worst_d {
                worst_d = dsq;
                worst_row = i;
            }
        }
        assignments[worst_row] = empty;
    }
}

fn update_centroids(
    data: &[Vec<f64>],
    assignments: &[usize],
    centroids: &mut [Vec<f64>],
    k: usize,
) {
    let m = data[0].len();
    let mut sums = vec![vec![0.0; m]; k];
    let mut counts = vec![0usize; k];
    for (x, &a) in data.iter().zip(assignments) {
        counts[a] += 1;
        for (j, v) in x.iter().enumerate() {
            sums[a][j] += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue; // unreachable after repair; keep old centroid
        }
        for j in 0..m {
            sums[c][j] /= counts[c] as f64;
        }
        centroids[c] = std::mem::take(&mut sums[c]);
    }
}

fn inertia(data: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    data.iter()
        .zip(assignments)
        .map(|(x, &a)| stats::dist_sq(x, &centroids[a]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::synth::{gen_blobs, BlobSpec};
    use crate::validity::{contingency_table, external_metrics};

    fn dataset_1d(points: &[f64]) -> Dataset {
        Dataset::new(
            vec!["x".into()],
            points.iter().map(|&p| vec![p]).collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn two_separated_points_split_exactly() {
        let d = dataset_1d(&[0.0, 10.0]);
        let r = kmeans_fit(&d, 2, 0, 300, 1e-4).unwrap();
        assert_eq!(r.assignments.len(), 2);
        assert_ne!(r.assignments[0], r.assignments[1]);
        if let AlgorithmInfo::KMeans { inertia, .. } = r.algorithm {
            assert_eq!(inertia, 0.0);
        } else {
            panic!("wrong tag");
        }
    }

    #[test]
    fn k_equals_n_gives_singletons_with_zero_inertia() {
        let d = dataset_1d(&[0.0, 3.0, 7.0, 11.0]);
        let r = kmeans_fit(&d, 4, 42, 300, 1e-4).unwrap();
        let mut sorted = r.assignments.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        if let AlgorithmInfo::KMeans { inertia, .. } = r.algorithm {
            assert_eq!(inertia, 0.0);
        }
    }

    #[test]
    fn recovers_well_separated_blobs() {
        let (d, truth) = gen_blobs(&BlobSpec {
            n_per_cluster: 30,
            k: 3,
            informative: 2,
            noise: 1,
            separation: 100.0,
            seed: 5,
        })
        .unwrap();
        let r = kmeans_fit(&d, 3, 9, 300, 1e-4).unwrap();
        let ct = contingency_table(&truth, &r.assignments).unwrap();
        let report = external_metrics(&ct).unwrap();
        assert!((report.adjusted_rand - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inertia_trace_is_non_increasing() {
        let (d, _) = gen_blobs(&BlobSpec {
            n_per_cluster: 40,
            k: 4,
            informative: 3,
            noise: 2,
            separation: 2.0,
            seed: 17,
        })
        .unwrap();
        for seed in 0..5 {
            let r = kmeans_fit(&d, 4, seed, 300, 1e-4).unwrap();
            if let AlgorithmInfo::KMeans { inertia_trace, .. } = &r.algorithm {
                for w in inertia_trace.windows(2) {
                    assert!(
                        w[1] <= w[0] + 1e-9,
                        "inertia increased: {} -> {}",
                        w[0],
                        w[1]
                    );
                }
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (d, _) = gen_blobs(&BlobSpec {
            n_per_cluster: 25,
            k: 3,
            informative: 2,
            noise: 2,
            separation: 3.0,
            seed: 3,
        })
        .unwrap();
        let a = kmeans_fit(&d, 3, 11, 300, 1e-4).unwrap();
        let b = kmeans_fit(&d, 3, 11, 300, 1e-4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_k() {
        let d = dataset_1d(&[0.0, 1.0]);
        assert!(matches!(
            kmeans_fit(&d, 0, 0, 10, 1e-4),
            Err(ClusterError::BadK { .. })
        ));
        assert!(matches!(
            kmeans_fit(&d, 3, 0, 10, 1e-4),
            Err(ClusterError::BadK { .. })
        ));
    }

    #[test]
    fn result_invariants_hold() {
        let d = dataset_1d(&[0.0, 0.1, 5.0, 5.1, 9.0]);
        let r = kmeans_fit(&d, 3, 1, 300, 1e-4).unwrap();
        assert!(r.validate(5));
    }
}
