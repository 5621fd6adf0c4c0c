//! Clustering validity scores: six external metrics computed from a
//! contingency table, plus the internal silhouette coefficient.
//!
//! Conventions, pinned here and mirrored by the reference oracles in
//! [`crate::synth::oracle`]:
//!
//! * entropies use natural log with 0·log 0 := 0;
//! * AMI normalizes by the arithmetic mean of the two entropies and uses
//!   the exact hypergeometric expected mutual information;
//! * when both partitions are trivial in the same way (each a single
//!   cluster, or each all singletons) they are identical up to relabeling
//!   and the chance-corrected scores are 1;
//! * Fowlkes-Mallows is 0 when either partition produces no same-cluster
//!   pairs (unless the perfect-agreement convention above applies);
//! * silhouette gives singleton clusters s(i) = 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DistanceMatrix;
use crate::render;

#[derive(Debug, Error)]
pub enum ValidityError {
    #[error("label vectors differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty label vectors")]
    Empty,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("assignments length {got} does not match distance matrix size {expected}")]
    AssignmentLength { expected: usize, got: usize },
}

/// Cross-tabulation of two labelings with marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    n: usize,
}

impl ContingencyTable {
    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Swaps the two labelings.
    pub fn transpose(&self) -> ContingencyTable {
        let r = self.counts.len();
        let c = self.col_sums.len();
        let mut counts = vec![vec![0usize; r]; c];
        for i in 0..r {
            for j in 0..c {
                counts[j][i] = self.counts[i][j];
            }
        }
        ContingencyTable {
            counts,
            row_sums: self.col_sums.clone(),
            col_sums: self.row_sums.clone(),
            n: self.n,
        }
    }
}

/// Builds the contingency table n_ij = |{t : a(t)=i ∧ b(t)=j}|. Labels are
/// dense ids; gaps simply produce empty rows/columns.
pub fn contingency_table(
    labels_a: &[usize],
    labels_b: &[usize],
) -> Result<ContingencyTable, ValidityError> {
    if labels_a.len() != labels_b.len() {
        return Err(ValidityError::LengthMismatch {
            a: labels_a.len(),
            b: labels_b.len(),
        });
    }
    if labels_a.is_empty() {
        return Err(ValidityError::Empty);
    }
    let r = labels_a.iter().max().unwrap() + 1;
    let c = labels_b.iter().max().unwrap() + 1;
    let mut counts = vec![vec![0usize; c]; r];
    for (&i, &j) in labels_a.iter().zip(labels_b) {
        counts[i][j] += 1;
    }
    let row_sums: Vec<usize> = counts.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..c).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        n: labels_a.len(),
    })
}

/// The Table-1 metric set; silhouette is filled in separately because it
/// needs distances rather than a second labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub adjusted_mutual_info: f64,
    pub adjusted_rand: f64,
    pub completeness: f64,
    pub fowlkes_mallows: f64,
    pub homogeneity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub silhouette: Option<f64>,
    pub v_measure: f64,
}

impl ValidityReport {
    /// Metric values in column order (silhouette included when set).
    pub fn named_values(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("adj_mutual_info", Some(self.adjusted_mutual_info)),
            ("adj_rand", Some(self.adjusted_rand)),
            ("completeness", Some(self.completeness)),
            ("fowlkes_mallows", Some(self.fowlkes_mallows)),
            ("homogeneity", Some(self.homogeneity)),
            ("silhouette", self.silhouette),
            ("v_measure", Some(self.v_measure)),
        ]
    }
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

fn entropy(marginals: &[usize], n: usize) -> f64 {
    let n = n as f64;
    marginals
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(ct: &ContingencyTable) -> f64 {
    let n = ct.n as f64;
    let mut mi = 0.0;
    for (i, row) in ct.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            let ai = ct.row_sums[i] as f64;
            let bj = ct.col_sums[j] as f64;
            mi += (nij / n) * ((n * nij) / (ai * bj)).ln();
        }
    }
    mi
}

/// Exact expected mutual information under the hypergeometric model,
/// evaluated with a log-factorial table.
fn expected_mutual_information(ct: &ContingencyTable) -> f64 {
    let n = ct.n;
    let nf = n as f64;
    // ln_fact[x] = ln(x!)
    let mut ln_fact = vec![0.0f64; n + 1];
    for x in 1..=n {
        ln_fact[x] = ln_fact[x - 1] + (x as f64).ln();
    }
    let mut emi = 0.0;
    for &ai in &ct.row_sums {
        if ai == 0 {
            continue;
        }
        for &bj in &ct.col_sums {
            if bj == 0 {
                continue;
            }
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            for nij in lo..=hi {
                let nij_f = nij as f64;
                let term = (nij_f / nf) * ((nf * nij_f) / (ai as f64 * bj as f64)).ln();
                let ln_prob = ln_fact[ai] + ln_fact[bj] + ln_fact[n - ai] + ln_fact[n - bj]
                    - ln_fact[n]
                    - ln_fact[nij]
                    - ln_fact[ai - nij]
                    - ln_fact[bj - nij]
                    - ln_fact[n - ai - bj + nij];
                emi += term * ln_prob.exp();
            }
        }
    }
    emi
}

fn active_clusters(marginals: &[usize]) -> usize {
    marginals.iter().filter(|&&c| c > 0).count()
}

fn all_singletons(marginals: &[usize]) -> bool {
    marginals.iter().all(|&c| c <= 1)
}

/// Computes ARI, AMI, homogeneity, completeness, v-measure, and
/// Fowlkes-Mallows from a contingency table. Rows play the class role and
/// columns the cluster role for the two asymmetric metrics.
pub fn external_metrics(ct: &ContingencyTable) -> Result<ValidityReport, ValidityError> {
    if ct.n < 2 {
        return Err(ValidityError::TooFewSamples { needed: 2, got: ct.n });
    }
    let n = ct.n as f64;

    let sum_nij: f64 = ct
        .counts
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| comb2(c))
        .sum();
    let sum_ai: f64 = ct.row_sums.iter().map(|&c| comb2(c)).sum();
    let sum_bj: f64 = ct.col_sums.iter().map(|&c| comb2(c)).sum();
    let total_pairs = comb2(ct.n);

    // ARI with the expected-index correction; when the index cannot vary
    // (both partitions trivial in the same way) agreement is perfect.
    let expected = sum_ai * sum_bj / total_pairs;
    let max_index = 0.5 * (sum_ai + sum_bj);
    let adjusted_rand = if (max_index - expected).abs() < 1e-15 {
        1.0
    } else {
        (sum_nij - expected) / (max_index - expected)
    };

    let h_a = entropy(&ct.row_sums, ct.n);
    let h_b = entropy(&ct.col_sums, ct.n);
    let mi = mutual_information(ct);

    let single_a = active_clusters(&ct.row_sums) == 1;
    let single_b = active_clusters(&ct.col_sums) == 1;

    let adjusted_mutual_info = if (single_a && single_b)
        || (all_singletons(&ct.row_sums) && all_singletons(&ct.col_sums))
    {
        1.0
    } else {
        let emi = expected_mutual_information(ct);
        let denom = 0.5 * (h_a + h_b) - emi;
        if denom.abs() < 1e-12 {
            0.0
        } else {
            (mi - emi) / denom
        }
    };

    // homogeneity = 1 − H(A|B)/H(A); the conditional entropy of classes
    // (rows) given clusters (columns).
    let mut h_a_given_b = 0.0;
    let mut h_b_given_a = 0.0;
    for (i, row) in ct.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            h_a_given_b -= (nij / n) * (nij / ct.col_sums[j] as f64).ln();
            h_b_given_a -= (nij / n) * (nij / ct.row_sums[i] as f64).ln();
        }
    }
    let homogeneity = if h_a == 0.0 { 1.0 } else { 1.0 - h_a_given_b / h_a };
    let completeness = if h_b == 0.0 { 1.0 } else { 1.0 - h_b_given_a / h_b };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };

    // Pair counting: TP = pairs together in both partitions.
    let fowlkes_mallows = if single_a && single_b {
        1.0
    } else if sum_ai == 0.0 || sum_bj == 0.0 {
        if all_singletons(&ct.row_sums) && all_singletons(&ct.col_sums) {
            1.0
        } else {
            0.0
        }
    } else {
        sum_nij / (sum_ai * sum_bj).sqrt()
    };

    Ok(ValidityReport {
        adjusted_mutual_info,
        adjusted_rand,
        completeness,
        fowlkes_mallows,
        homogeneity,
        silhouette: None,
        v_measure,
    })
}

/// Mean silhouette s(i) = (b(i) − a(i)) / max(a(i), b(i)) over all points,
/// from a precomputed distance matrix. Singleton clusters contribute 0.
pub fn silhouette_score(
    dm: &DistanceMatrix,
    assignments: &[usize],
) -> Result<f64, ValidityError> {
    let n = dm.n();
    if assignments.len() != n {
        return Err(ValidityError::AssignmentLength {
            expected: n,
            got: assignments.len(),
        });
    }
    if n < 3 {
        return Err(ValidityError::TooFewSamples { needed: 3, got: n });
    }
    let k = assignments.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    let active = counts.iter().filter(|&&c| c > 0).count();
    if active < 2 {
        return Err(ValidityError::TooFewClusters(active));
    }

    let mut total = 0.0;
    let mut sums = vec![0.0f64; k];
    for i in 0..n {
        let own = assignments[i];
        if counts[own] == 1 {
            continue; // singleton: s(i) = 0
        }
        for s in sums.iter_mut() {
            *s = 0.0;
        }
        for j in 0..n {
            if j != i {
                sums[assignments[j]] += dm.get(i, j);
            }
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && counts[c] > 0 {
                b = b.min(sums[c] / counts[c] as f64);
            }
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Renders algorithm-by-metric rows as a markdown table, bolding the best
/// value per metric column.
pub fn render_validity_table(rows: &[(String, ValidityReport)]) -> String {
    let headers: Vec<&str> = std::iter::once("algorithm")
        .chain(
            rows.first()
                .map(|(_, r)| r.named_values())
                .unwrap_or_default()
                .iter()
                .map(|(name, _)| *name),
        )
        .collect();
    let n_metrics = headers.len() - 1;
    let mut best = vec![f64::NEG_INFINITY; n_metrics];
    for (_, report) in rows {
        for (idx, (_, value)) in report.named_values().iter().enumerate() {
            if let Some(v) = value {
                if *v > best[idx] {
                    best[idx] = *v;
                }
            }
        }
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, report)| {
            let mut cells = vec![name.clone()];
            for (idx, (_, value)) in report.named_values().iter().enumerate() {
                cells.push(match value {
                    Some(v) if rows.len() > 1 && (*v - best[idx]).abs() < 1e-15 => {
                        format!("**{}**", render::fmt_metric(*v))
                    }
                    Some(v) => render::fmt_metric(*v),
                    None => "-".to_string(),
                });
            }
            cells
        })
        .collect();
    render::markdown_table(&headers, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{pairwise_distances, Dataset};
    use crate::synth::oracle;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn contingency_diagonal_and_column_shapes() {
        let ct = contingency_table(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        assert_eq!(ct.counts(), &[vec![2, 0], vec![0, 2]]);

        let ct = contingency_table(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap();
        assert_eq!(ct.counts(), &[vec![2], vec![2]]);
        assert_eq!(ct.col_sums(), &[4]);
    }

    #[test]
    fn contingency_marginals_sum_to_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<usize> = (0..20).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<usize> = (0..20).map(|_| rng.random_range(0..4)).collect();
        let ct = contingency_table(&a, &b).unwrap();
        assert_eq!(ct.row_sums().iter().sum::<usize>(), 20);
        assert_eq!(ct.col_sums().iter().sum::<usize>(), 20);
        assert_eq!(ct.n(), 20);
    }

    #[test]
    fn contingency_rejects_mismatch_and_empty() {
        assert!(matches!(
            contingency_table(&[0, 1], &[0]),
            Err(ValidityError::LengthMismatch { .. })
        ));
        assert!(matches!(
            contingency_table(&[], &[]),
            Err(ValidityError::Empty)
        ));
    }

    #[test]
    fn perfect_match_up_to_relabeling_scores_one() {
        let ct = contingency_table(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap();
        let r = external_metrics(&ct).unwrap();
        assert_eq!(r.adjusted_rand, 1.0);
        assert!((r.adjusted_mutual_info - 1.0).abs() < 1e-12);
        assert_eq!(r.homogeneity, 1.0);
        assert_eq!(r.completeness, 1.0);
        assert_eq!(r.v_measure, 1.0);
        assert_eq!(r.fowlkes_mallows, 1.0);
    }

    #[test]
    fn single_cluster_prediction_limits() {
        let ct = contingency_table(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap();
        let r = external_metrics(&ct).unwrap();
        assert!(r.homogeneity.abs() < 1e-12);
        assert_eq!(r.completeness, 1.0);
        assert!(r.v_measure.abs() < 1e-12);
        // Pair-counting by hand: TP=2, same-pred pairs=6, same-true pairs=2.
        assert!((r.fowlkes_mallows - 2.0 / 12.0f64.sqrt()).abs() < 1e-12);
        assert!((r.fowlkes_mallows - 0.57735).abs() < 1e-5);
    }

    #[test]
    fn both_trivial_partitions_are_perfect_agreement() {
        let ct = contingency_table(&[0, 0, 0], &[0, 0, 0]).unwrap();
        let r = external_metrics(&ct).unwrap();
        assert_eq!(r.adjusted_rand, 1.0);
        assert_eq!(r.adjusted_mutual_info, 1.0);
        assert_eq!(r.homogeneity, 1.0);
        assert_eq!(r.completeness, 1.0);
        assert_eq!(r.fowlkes_mallows, 1.0);

        let ct = contingency_table(&[0, 1, 2], &[2, 0, 1]).unwrap();
        let r = external_metrics(&ct).unwrap();
        assert_eq!(r.adjusted_rand, 1.0);
        assert_eq!(r.adjusted_mutual_info, 1.0);
        assert_eq!(r.fowlkes_mallows, 1.0);
    }

    #[test]
    fn matches_brute_force_oracle_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..60 {
            let n = rng.random_range(2..=10);
            let ka = rng.random_range(1..=4);
            let kb = rng.random_range(1..=4);
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
            let ct = contingency_table(&a, &b).unwrap();
            let got = external_metrics(&ct).unwrap();
            let want = oracle::brute_force_external_metrics(&a, &b);
            for ((name, g), w) in got
                .named_values()
                .iter()
                .zip(want.named_values().iter().map(|(_, w)| *w))
            {
                if let (Some(g), Some(w)) = (g, w) {
                    assert!(
                        (g - w).abs() < 1e-9,
                        "{name}: impl {g} vs oracle {w} for a={a:?} b={b:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn metrics_invariant_under_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a: Vec<usize> = (0..30).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<usize> = (0..30).map(|_| rng.random_range(0..3)).collect();
        let perm = [2usize, 0, 1];
        let b_relabeled: Vec<usize> = b.iter().map(|&x| perm[x]).collect();
        let r1 = external_metrics(&contingency_table(&a, &b).unwrap()).unwrap();
        let r2 = external_metrics(&contingency_table(&a, &b_relabeled).unwrap()).unwrap();
        for ((_, x), (_, y)) in r1.named_values().iter().zip(r2.named_values().iter()) {
            if let (Some(x), Some(y)) = (x, y) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_symmetry_and_homogeneity_completeness_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<usize> = (0..25).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<usize> = (0..25).map(|_| rng.random_range(0..4)).collect();
        let ct = contingency_table(&a, &b).unwrap();
        let fwd = external_metrics(&ct).unwrap();
        let rev = external_metrics(&ct.transpose()).unwrap();
        assert!((fwd.adjusted_rand - rev.adjusted_rand).abs() < 1e-12);
        assert!((fwd.adjusted_mutual_info - rev.adjusted_mutual_info).abs() < 1e-9);
        assert!((fwd.fowlkes_mallows - rev.fowlkes_mallows).abs() < 1e-12);
        assert!((fwd.v_measure - rev.v_measure).abs() < 1e-12);
        assert!((fwd.homogeneity - rev.completeness).abs() < 1e-12);
        assert!((fwd.completeness - rev.homogeneity).abs() < 1e-12);
    }

    #[test]
    fn random_partitions_have_near_zero_ari_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 1000;
        let n = 50;
        let mut acc = 0.0;
        for _ in 0..trials {
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let ct = contingency_table(&a, &b).unwrap();
            acc += external_metrics(&ct).unwrap().adjusted_rand;
        }
        let mean = acc / trials as f64;
        assert!(mean.abs() < 0.02, "mean ARI {mean}");
    }

    fn square_dataset(points: &[[f64; 2]]) -> Dataset {
        Dataset::new(
            vec!["x".into(), "y".into()],
            points.iter().map(|p| p.to_vec()).collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn silhouette_perfect_for_duplicated_pairs() {
        let d = square_dataset(&[[0.0, 0.0], [0.0, 0.0], [10.0, 10.0], [10.0, 10.0]]);
        let dm = pairwise_distances(&d);
        let s = silhouette_score(&dm, &[0, 0, 1, 1]).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn silhouette_rejects_single_cluster() {
        let d = square_dataset(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let dm = pairwise_distances(&d);
        assert!(matches!(
            silhouette_score(&dm, &[0, 0, 0]),
            Err(ValidityError::TooFewClusters(1))
        ));
    }

    #[test]
    fn silhouette_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.random_range(4..=30);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            if labels.iter().collect::<std::collections::HashSet<_>>().len() < 2 {
                continue;
            }
            let d = Dataset::new(vec!["x".into(), "y".into()], rows.clone(), None).unwrap();
            let dm = pairwise_distances(&d);
            let got = silhouette_score(&dm, &labels).unwrap();
            let want = oracle::naive_silhouette(&rows, &labels);
            assert!((got - want).abs() < 1e-9, "impl {got} oracle {want}");
        }
    }

    #[test]
    fn silhouette_invariant_under_uniform_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let d1 = Dataset::new(vec!["x".into(), "y".into()], rows.clone(), None).unwrap();
        let scaled_rows: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| v * 7.5).collect()).collect();
        let d2 = Dataset::new(vec!["x".into(), "y".into()], scaled_rows, None).unwrap();
        let s1 = silhouette_score(&pairwise_distances(&d1), &labels).unwrap();
        let s2 = silhouette_score(&pairwise_distances(&d2), &labels).unwrap();
        assert!((s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn v_measure_is_harmonic_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let a: Vec<usize> = (0..15).map(|_| rng.random_range(0..3)).collect();
            let b: Vec<usize> = (0..15).map(|_| rng.random_range(0..3)).collect();
            let r = external_metrics(&contingency_table(&a, &b).unwrap()).unwrap();
            let expected = if r.homogeneity + r.completeness == 0.0 {
                0.0
            } else {
                2.0 * r.homogeneity * r.completeness / (r.homogeneity + r.completeness)
            };
            assert!((r.v_measure - expected).abs() < 1e-12);
        }
    }
}
