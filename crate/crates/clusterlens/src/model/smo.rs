//! Binary SVM training by sequential minimal optimization.
//!
//! This is the simplified SMO variant: sweep over the first index, examine
//! the KKT conditions within `tol`, and pick the second index uniformly at
//! random (seeded, so training is deterministic). A pair step with a flat
//! curvature (identical points) moves the second multiplier to whichever
//! box endpoint improves the dual objective, which is what lets training
//! terminate on contradictory duplicates. Training only returns once every
//! multiplier satisfies its KKT condition within `tol`; if that state is
//! not reached within the sweep cap, training fails as non-convergent.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{KernelSpec, ModelError};

/// Trained binary classifier: the support-vector subset of the training
/// rows with their dual coefficients α·y, the bias, and the kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// Row indices of the support vectors in the training matrix.
    pub sv_indices: Vec<usize>,
    /// α_i · y_i per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
}

impl BinarySvm {
    /// Decision value Σ αᵢyᵢ K(xᵢ, x) + b.
    pub fn decision(&self, x: &[f64]) -> Result<f64, ModelError> {
        let dim = self.support_vectors.first().map_or(x.len(), |sv| sv.len());
        if x.len() != dim {
            return Err(ModelError::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }
}

/// Decision value of a trained binary model at `x`.
pub fn svm_decision(model: &BinarySvm, x: &[f64]) -> Result<f64, ModelError> {
    model.decision(x)
}

const ALPHA_CHANGE_MIN: f64 = 1e-8;
const SLOPE_EPS: f64 = 1e-12;

/// Trains a binary SVM with labels in {−1, +1}.
pub fn svm_train_binary(
    x: &[Vec<f64>],
    y: &[f64],
    kernel: KernelSpec,
    c: f64,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<BinarySvm, ModelError> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(ModelError::BadTrainingSet {
            reason: format!("need n >= 2 rows with matching labels, got {} / {}", n, y.len()),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(ModelError::BadTrainingSet {
            reason: "labels must be -1 or +1".into(),
        });
    }
    if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(ModelError::SingleClass);
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(ModelError::BadParameter {
            name: "C",
            value: c,
        });
    }

    let mut kmat = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&x[i], &x[j]);
            kmat[i][j] = v;
            kmat[j][i] = v;
        }
    }

    let mut alpha = vec![0.0f64; n];
    let mut bias = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let decision = |alpha: &[f64], bias: f64, i: usize| -> f64 {
        let mut acc = bias;
        for (j, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                acc += a * y[j] * kmat[i][j];
            }
        }
        acc
    };

    let hard_cap = 200.max(20 * max_passes.max(1));
    let mut quiet_passes = 0;
    let mut sweeps = 0;
    loop {
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = decision(&alpha, bias, i) - y[i];
            let r_i = y[i] * e_i;
            let violating = (r_i < -tol && alpha[i] < c) || (r_i > tol && alpha[i] > 0.0);
            if !violating {
                continue;
            }
            let j = loop {
                let j = rng.random_range(0..n);
                if j != i {
                    break j;
                }
            };
            if pair_step(i, j, &kmat, y, c, &mut alpha, &mut bias, &decision) {
                changed += 1;
            }
        }
        sweeps += 1;
        if changed == 0 {
            quiet_passes += 1;
        } else {
            quiet_passes = 0;
        }
        if quiet_passes >= max_passes.max(1) {
            let clean = (0..n).all(|i| {
                let r = y[i] * (decision(&alpha, bias, i) - y[i]);
                !((r < -tol && alpha[i] < c) || (r > tol && alpha[i] > 0.0))
            });
            if clean {
                break;
            }
            quiet_passes = 0;
        }
        if sweeps >= hard_cap {
            return Err(ModelError::SmoNoConvergence { sweeps });
        }
    }

    let mut support_vectors = Vec::new();
    let mut sv_indices = Vec::new();
    let mut dual_coefs = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x[i].clone());
            sv_indices.push(i);
            dual_coefs.push(a * y[i]);
        }
    }
    Ok(BinarySvm {
        support_vectors,
        sv_indices,
        dual_coefs,
        bias,
        kernel,
        c,
        tol,
    })
}

/// One two-multiplier optimization step. Returns whether alphas moved.
#[allow(clippy::too_many_arguments)]
fn pair_step(
    i: usize,
    j: usize,
    kmat: &[Vec<f64>],
    y: &[f64],
    c: f64,
    alpha: &mut [f64],
    bias: &mut f64,
    decision: &dyn Fn(&[f64], f64, usize) -> f64,
) -> bool {
    let e_i = decision(alpha, *bias, i) - y[i];
    let e_j = decision(alpha, *bias, j) - y[j];
    let (ai_old, aj_old) = (alpha[i], alpha[j]);

    let (lo, hi) = if y[i] != y[j] {
        ((aj_old - ai_old).max(0.0), (c + aj_old - ai_old).min(c))
    } else {
        ((ai_old + aj_old - c).max(0.0), (ai_old + aj_old).min(c))
    };
    if lo >= hi {
        return false;
    }

    // Curvature of the dual objective along the constraint line.
    let eta = 2.0 * kmat[i][j] - kmat[i][i] - kmat[j][j];
    let aj_new = if eta < 0.0 {
        (aj_old - y[j] * (e_i - e_j) / eta).clamp(lo, hi)
    } else {
        // Flat direction: the objective is linear in α_j, so move to the
        // endpoint the gradient favors.
        let slope = y[j] * (e_i - e_j);
        if slope > SLOPE_EPS {
            hi
        } else if slope < -SLOPE_EPS {
            lo
        } else {
            aj_old
        }
    };
    if (aj_new - aj_old).abs() < ALPHA_CHANGE_MIN {
        return false;
    }
    let ai_new = ai_old + y[i] * y[j] * (aj_old - aj_new);
    alpha[i] = ai_new;
    alpha[j] = aj_new;

    let b1 = *bias
        - e_i
        - y[i] * (ai_new - ai_old) * kmat[i][i]
        - y[j] * (aj_new - aj_old) * kmat[i][j];
    let b2 = *bias
        - e_j
        - y[i] * (ai_new - ai_old) * kmat[i][j]
        - y[j] * (aj_new - aj_old) * kmat[j][j];
    *bias = if ai_new > 0.0 && ai_new < c {
        b1
    } else if aj_new > 0.0 && aj_new < c {
        b2
    } else {
        (b1 + b2) / 2.0
    };
    true
}
