//! Platt scaling: a sigmoid p(f) = 1/(1+exp(A·f+B)) mapping decision values
//! to calibrated probabilities, fit by Newton iterations with backtracking
//! on the cross-entropy against the smoothed targets t₊=(N₊+1)/(N₊+2) and
//! t₋=1/(N₋+2).

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibration {
    pub a: f64,
    pub b: f64,
    /// Set when A came out non-negative, i.e. probability would not
    /// increase with the decision value (anti-correlated decisions).
    pub orientation_warning: bool,
}

impl PlattCalibration {
    /// Calibrated probability, computed overflow-safe.
    pub fn probability(&self, decision: f64) -> f64 {
        let f_ap_b = self.a * decision + self.b;
        if f_ap_b >= 0.0 {
            let e = (-f_ap_b).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + f_ap_b.exp())
        }
    }
}

const GRAD_EPS: f64 = 1e-10;
const MIN_STEP: f64 = 1e-10;
const HESSIAN_SIGMA: f64 = 1e-12;

/// Cross-entropy objective of (A, B) on decisions with smoothed targets.
pub(crate) fn platt_objective(a: f64, b: f64, decisions: &[f64], targets: &[f64]) -> f64 {
    decisions
        .iter()
        .zip(targets)
        .map(|(&d, &t)| {
            let f_ap_b = a * d + b;
            if f_ap_b >= 0.0 {
                t * f_ap_b + (1.0 + (-f_ap_b).exp()).ln()
            } else {
                (t - 1.0) * f_ap_b + (1.0 + f_ap_b.exp()).ln()
            }
        })
        .sum()
}

pub(crate) fn smoothed_targets(y: &[f64]) -> Result<Vec<f64>, ModelError> {
    let n_pos = y.iter().filter(|&&v| v > 0.0).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ModelError::SingleClass);
    }
    let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let t_neg = 1.0 / (n_neg as f64 + 2.0);
    Ok(y.iter()
        .map(|&v| if v > 0.0 { t_pos } else { t_neg })
        .collect())
}

/// Fits (A, B) by Newton's method. Labels are {−1, +1}.
pub fn platt_fit(
    decisions: &[f64],
    y: &[f64],
    max_newton: usize,
) -> Result<PlattCalibration, ModelError> {
    if decisions.len() != y.len() {
        return Err(ModelError::BadTrainingSet {
            reason: format!(
                "decision/label length mismatch: {} vs {}",
                decisions.len(),
                y.len()
            ),
        });
    }
    let targets = smoothed_targets(y)?;
    let n_pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let n_neg = y.len() as f64 - n_pos;

    let mut a = 0.0f64;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = platt_objective(a, b, decisions, &targets);

    for _ in 0..max_newton {
        let mut h11 = HESSIAN_SIGMA;
        let mut h22 = HESSIAN_SIGMA;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for (&d, &t) in decisions.iter().zip(&targets) {
            let f_ap_b = a * d + b;
            let (p, q) = if f_ap_b >= 0.0 {
                let e = (-f_ap_b).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f_ap_b.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += d * d * d2;
            h22 += d2;
            h21 += d * d2;
            let d1 = t - p;
            g1 += d * d1;
            g2 += d1;
        }
        if g1.abs() < GRAD_EPS && g2.abs() < GRAD_EPS {
            return Ok(PlattCalibration {
                a,
                b,
                orientation_warning: a >= 0.0,
            });
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0f64;
        loop {
            let new_a = a + step * da;
            let new_b = b + step * db;
            let new_f = platt_objective(new_a, new_b, decisions, &targets);
            if new_f < fval + 1e-4 * step * gd {
                a = new_a;
                b = new_b;
                fval = new_f;
                break;
            }
            step /= 2.0;
            if step < MIN_STEP {
                return Err(ModelError::PlattNoConvergence {
                    iterations: max_newton,
                });
            }
        }
    }
    Err(ModelError::PlattNoConvergence {
        iterations: max_newton,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::oracle;

    #[test]
    fn symmetric_configuration_crosses_half_at_zero() {
        let decisions = [-2.0, -1.0, 1.0, 2.0];
        let y = [-1.0, -1.0, 1.0, 1.0];
        let cal = platt_fit(&decisions, &y, 100).unwrap();
        assert!(!cal.orientation_warning);
        assert!((cal.probability(0.0) - 0.5).abs() < 1e-9);
        // Monotone increasing in the decision value.
        let probs: Vec<f64> = (-20..=20).map(|i| cal.probability(i as f64 / 5.0)).collect();
        for w in probs.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn anti_correlated_decisions_raise_orientation_warning() {
        let decisions = [2.0, 1.0, -1.0, -2.0];
        let y = [-1.0, -1.0, 1.0, 1.0];
        let cal = platt_fit(&decisions, &y, 100).unwrap();
        assert!(cal.a > 0.0);
        assert!(cal.orientation_warning);
    }

    #[test]
    fn matches_independent_gradient_descent_fit() {
        let decisions = [-3.0, -1.5, -0.2, 0.4, 1.8, 2.7];
        let y = [-1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
        let cal = platt_fit(&decisions, &y, 200).unwrap();
        let (a_gd, b_gd) = oracle::gradient_descent_platt(&decisions, &y);
        assert!(
            (cal.a - a_gd).abs() < 1e-6 && (cal.b - b_gd).abs() < 1e-6,
            "newton ({}, {}) vs gd ({}, {})",
            cal.a,
            cal.b,
            a_gd,
            b_gd
        );
    }

    #[test]
    fn rejects_single_class() {
        assert!(matches!(
            platt_fit(&[0.1, 0.5], &[1.0, 1.0], 100),
            Err(ModelError::SingleClass)
        ));
    }

    #[test]
    fn probability_is_stable_for_extreme_decisions() {
        let cal = PlattCalibration {
            a: -2.0,
            b: 0.0,
            orientation_warning: false,
        };
        assert!(cal.probability(1e6) > 1.0 - 1e-12);
        assert!(cal.probability(-1e6) < 1e-12);
    }
}
