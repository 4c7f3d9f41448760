//! Solvers for F_T = A * F: the min-norm pseudo-inverse solution and the
//! constrained re-solve that suppresses negative and sub-threshold sizes.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bank::FormFactorBank;
use crate::error::{Error, Result};
use crate::phantom::{SpectrumKind, SpectrumVector};

/// Default relative singular-value cutoff for the pseudo-inverse.
pub const DEFAULT_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Unconstrained,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressionMode {
    Threshold,
    ContiguousRun,
}

/// Which sizes get zeroed before the constrained re-solve.
///
/// Negative entries are always suppressed; the threshold is
/// `threshold_fraction * max_i A_i`. `ContiguousRun` instead zeroes the
/// single sub-threshold run with the largest total fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuppressionPolicy {
    pub mode: SuppressionMode,
    pub threshold_fraction: f64,
    pub max_iterations: usize,
}

impl Default for SuppressionPolicy {
    fn default() -> Self {
        SuppressionPolicy {
            mode: SuppressionMode::Threshold,
            threshold_fraction: 0.05,
            max_iterations: 50,
        }
    }
}

impl SuppressionPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_fraction >= 0.0 && self.threshold_fraction < 1.0) {
            return Err(Error::Config(
                "threshold fraction must lie in [0, 1)".into(),
            ));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of either solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistributionEstimate {
    pub weights: Vec<f64>,
    pub suppressed: BTreeSet<usize>,
    pub residual_l2: f64,
    pub method: Method,
    /// False only when the constrained solver hit its iteration cap with
    /// suppressions still pending.
    pub converged: bool,
    pub iterations: usize,
}

impl SizeDistributionEstimate {
    /// Clip-and-normalize probability view of the weights.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        normalize_distribution(&self.weights)
    }
}

/// p_i = max(A_i, 0) / sum_k max(A_k, 0).
pub fn normalize_distribution(weights: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateEstimate);
    }
    Ok(weights
        .iter()
        .map(|w| if *w > 0.0 { w / total } else { 0.0 })
        .collect())
}

fn check_inputs(f_t: &SpectrumVector, bank: &FormFactorBank) -> Result<()> {
    if f_t.kind != SpectrumKind::FormFactor {
        return Err(Error::Domain(
            "estimators expect a form-factor spectrum".into(),
        ));
    }
    if f_t.frequencies != *bank.frequencies() {
        return Err(Error::GridMismatch(
            "spectrum frequency grid differs from the bank's".into(),
        ));
    }
    if bank.matrix().iter().all(|row| row.iter().all(|v| *v == 0.0)) {
        return Err(Error::Domain("bank matrix is identically zero".into()));
    }
    Ok(())
}

/// Transpose of the bank matrix (N_f x N_a), the design matrix of the
/// least-squares problem F^T a = F_T^T.
fn design_matrix(bank: &FormFactorBank) -> DMatrix<f64> {
    let rows = bank.num_frequencies();
    let cols = bank.num_sizes();
    DMatrix::from_fn(rows, cols, |j, i| bank.matrix()[i][j])
}

/// Min-norm least-squares solve via SVD with singular values below
/// rcond * sigma_max treated as zero.
fn min_norm_solve(design: &DMatrix<f64>, rhs: &DVector<f64>, rcond: f64) -> Result<Vec<f64>> {
    let svd = design.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (rcond * sigma_max).max(f64::MIN_POSITIVE);
    let solution = svd
        .solve(rhs, eps)
        .map_err(|e| Error::Domain(format!("SVD solve failed: {e}")))?;
    Ok(solution.iter().cloned().collect())
}

fn residual_l2(design: &DMatrix<f64>, weights: &[f64], rhs: &DVector<f64>) -> f64 {
    let a = DVector::from_column_slice(weights);
    (design * a - rhs).norm()
}

/// Method 1: A = F_T F^+, the minimum-norm least-squares solution.
/// Entries may be negative; nothing is clipped here.
pub fn estimate_unconstrained(
    f_t: &SpectrumVector,
    bank: &FormFactorBank,
) -> Result<SizeDistributionEstimate> {
    estimate_unconstrained_with_rcond(f_t, bank, DEFAULT_RCOND)
}

pub fn estimate_unconstrained_with_rcond(
    f_t: &SpectrumVector,
    bank: &FormFactorBank,
    rcond: f64,
) -> Result<SizeDistributionEstimate> {
    check_inputs(f_t, bank)?;
    let design = design_matrix(bank);
    let rhs = DVector::from_column_slice(&f_t.values);
    let weights = min_norm_solve(&design, &rhs, rcond)?;
    let residual = residual_l2(&design, &weights, &rhs);
    Ok(SizeDistributionEstimate {
        weights,
        suppressed: BTreeSet::new(),
        residual_l2: residual,
        method: Method::Unconstrained,
        converged: true,
        iterations: 1,
    })
}

/// Indices to zero out for the constrained re-solve.
pub fn select_suppression(weights: &[f64], policy: &SuppressionPolicy) -> Result<BTreeSet<usize>> {
    policy.validate()?;
    if weights.is_empty() {
        return Err(Error::Domain("empty weight vector".into()));
    }
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = policy.threshold_fraction * max;

    let mut set: BTreeSet<usize> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w < 0.0)
        .map(|(i, _)| i)
        .collect();

    match policy.mode {
        SuppressionMode::Threshold => {
            for (i, w) in weights.iter().enumerate() {
                if *w < threshold {
                    set.insert(i);
                }
            }
        }
        SuppressionMode::ContiguousRun => {
            // Maximal runs of consecutive sub-threshold entries; pick the
            // one with the largest summed |A_{i+1} - A_i|, first run on a
            // tie.
            let below: Vec<bool> = weights.iter().map(|w| *w < threshold).collect();
            let mut best: Option<(f64, usize, usize)> = None;
            let mut i = 0;
            while i < weights.len() {
                if below[i] {
                    let start = i;
                    while i < weights.len() && below[i] {
                        i += 1;
                    }
                    let end = i; // exclusive
                    let fluctuation: f64 = (start..end.saturating_sub(1))
                        .map(|k| (weights[k + 1] - weights[k]).abs())
                        .sum();
                    let better = match best {
                        None => true,
                        Some((bf, bs, _)) => {
                            fluctuation > bf || (fluctuation == bf && start < bs)
                        }
                    };
                    if better {
                        best = Some((fluctuation, start, end));
                    }
                } else {
                    i += 1;
                }
            }
            if let Some((_, start, end)) = best {
                for k in start..end {
                    set.insert(k);
                }
            }
        }
    }

    if set.len() == weights.len() {
        return Err(Error::FullSuppression);
    }
    Ok(set)
}

/// Method 2: iterate suppression and min-norm re-solve on the reduced
/// bank until the suppression set stops growing (or the iteration cap is
/// hit, in which case the last iterate is returned unconverged).
pub fn estimate_constrained(
    f_t: &SpectrumVector,
    bank: &FormFactorBank,
    policy: &SuppressionPolicy,
) -> Result<SizeDistributionEstimate> {
    estimate_constrained_with_rcond(f_t, bank, policy, DEFAULT_RCOND)
}

pub fn estimate_constrained_with_rcond(
    f_t: &SpectrumVector,
    bank: &FormFactorBank,
    policy: &SuppressionPolicy,
    rcond: f64,
) -> Result<SizeDistributionEstimate> {
    policy.validate()?;
    check_inputs(f_t, bank)?;
    let design = design_matrix(bank);
    let rhs = DVector::from_column_slice(&f_t.values);
    let n = bank.num_sizes();

    let mut weights = min_norm_solve(&design, &rhs, rcond)?;
    let mut suppressed: BTreeSet<usize> = BTreeSet::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..policy.max_iterations {
        iterations += 1;
        let new_set = select_suppression(&weights, policy)?;
        let grew = new_set.iter().any(|i| !suppressed.contains(i));
        suppressed.extend(new_set);
        if suppressed.len() == n {
            return Err(Error::FullSuppression);
        }
        if !grew && iterations > 1 {
            converged = true;
            break;
        }

        // Reduced solve on the active columns of the design matrix, then
        // re-embed exact zeros at the suppressed indices.
        let active: Vec<usize> = (0..n).filter(|i| !suppressed.contains(i)).collect();
        let reduced = design.select_columns(active.iter());
        let reduced_weights = min_norm_solve(&reduced, &rhs, rcond)?;
        weights = vec![0.0; n];
        for (k, &i) in active.iter().enumerate() {
            weights[i] = reduced_weights[k];
        }
        if !grew {
            converged = true;
            break;
        }
    }

    let residual = residual_l2(&design, &weights, &rhs);
    Ok(SizeDistributionEstimate {
        weights,
        suppressed,
        residual_l2: residual,
        method: Method::Constrained,
        converged,
        iterations,
    })
}

/// Invert the bank normalization: n_i = max(A_i, 0) * s_T / s_i, where
/// s_T is the normalization constant carried with the measured form
/// factor.
pub fn weights_to_number_density(
    estimate: &SizeDistributionEstimate,
    bank: &FormFactorBank,
    form_factor_scale: f64,
) -> Result<Vec<f64>> {
    if !(form_factor_scale > 0.0) {
        return Err(Error::Domain(
            "form factor scale must be positive".into(),
        ));
    }
    if estimate.weights.len() != bank.num_sizes() {
        return Err(Error::GridMismatch(
            "estimate length differs from bank size grid".into(),
        ));
    }
    Ok(estimate
        .weights
        .iter()
        .zip(bank.row_scales())
        .map(|(w, s)| w.max(0.0) * form_factor_scale / s)
        .collect())
}
