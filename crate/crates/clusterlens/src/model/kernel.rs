//! Kernel functions for the SVM surrogate.

use serde::{Deserialize, Serialize};

use crate::stats;

/// Fully resolved kernel (rbf gamma already fixed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelSpec::Rbf { gamma } => (-gamma * stats::dist_sq(a, b)).exp(),
        }
    }
}

/// Kernel choice as configured; rbf gamma defaults to 1/(m·Var(X)) over all
/// matrix entries when unset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Rbf {
        #[serde(skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

impl KernelChoice {
    pub fn resolve(&self, data: &[Vec<f64>]) -> KernelSpec {
        match self {
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Rbf { gamma: Some(g) } => KernelSpec::Rbf { gamma: *g },
            KernelChoice::Rbf { gamma: None } => KernelSpec::Rbf {
                gamma: auto_gamma(data),
            },
        }
    }
}

/// 1/(m·Var(X)) with the population variance of all matrix entries;
/// falls back to 1/m for constant data.
pub fn auto_gamma(data: &[Vec<f64>]) -> f64 {
    let m = data[0].len();
    let count = (data.len() * m) as f64;
    let mean: f64 = data.iter().flatten().sum::<f64>() / count;
    let var: f64 = data
        .iter()
        .flatten()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / count;
    if var > 0.0 {
        1.0 / (m as f64 * var)
    } else {
        1.0 / m as f64
    }
}
