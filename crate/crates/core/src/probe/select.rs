use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ridge::{NormalEquations, RidgeProbe};
use crate::error::{Error, Result};
use crate::metrics::r2_percent;
use crate::rng::permutation;

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_CV_SEED: u64 = 42;

/// Base grid 10⁻³ … 10⁴; the default policy multiplies it by the feature count.
pub const BASE_GRID: [f64; 8] = [1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3, 1e4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed { lambda: f64 },
    CrossValidated { grid: Vec<f64>, folds: usize, seed: u64 },
}

impl LambdaPolicy {
    pub fn default_for_dim(d: usize) -> Self {
        LambdaPolicy::CrossValidated {
            grid: BASE_GRID.iter().map(|g| g * d as f64).collect(),
            folds: DEFAULT_FOLDS,
            seed: DEFAULT_CV_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub lambda_grid: Vec<f64>,
    /// Mean validation R² (percent) per grid entry.
    pub cv_scores: Vec<f64>,
    pub chosen_lambda: f64,
    pub folds: usize,
    pub seed: u64,
    pub condition_warning: bool,
}

/// Deterministic k-fold assignment: rows are permuted with the split RNG and
/// cut into `k` contiguous chunks whose sizes differ by at most one.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("{n} rows cannot fill {k} folds")));
    }
    let perm = permutation(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

fn mean_r2(truth: ArrayView2<f64>, pred: ArrayView2<f64>) -> Result<f64> {
    let mut total = 0.0;
    for (c, name) in ["latitude", "longitude"].iter().enumerate() {
        let t = truth.column(c).to_vec();
        let p = pred.column(c).to_vec();
        total += r2_percent(&t, &p)
            .ok_or_else(|| Error::ZeroVariance(format!("validation {name}")))?;
    }
    Ok(total / 2.0)
}

/// Picks λ by k-fold cross-validated mean R². Ties go to the larger λ, and
/// among equal λ to the later grid entry.
pub fn select_lambda(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    lambda_grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<FitReport> {
    if lambda_grid.is_empty() {
        return Err(Error::invalid("λ grid is empty"));
    }
    if let Some(bad) = lambda_grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::invalid(format!("λ grid entry {bad} is not a finite value ≥ 0")));
    }
    let folds = kfold_partition(x.nrows(), k, seed)?;
    let mut sums = vec![0.0; lambda_grid.len()];
    let mut warned = vec![false; lambda_grid.len()];
    for fold in &folds {
        let mut in_fold = vec![false; x.nrows()];
        fold.iter().for_each(|&i| in_fold[i] = true);
        let train: Vec<usize> = (0..x.nrows()).filter(|&i| !in_fold[i]).collect();
        let eq = NormalEquations::new(x.select(Axis(0), &train).view(), y.select(Axis(0), &train).view())?;
        let xv = x.select(Axis(0), fold);
        let yv = y.select(Axis(0), fold);
        for (g, &lambda) in lambda_grid.iter().enumerate() {
            let sol = eq.solve(lambda)?;
            warned[g] |= sol.jittered;
            let pred = eq.probe(lambda, sol.weights).predict(xv.view())?;
            sums[g] += mean_r2(yv.view(), pred.view())?;
        }
    }
    let cv_scores: Vec<f64> = sums.iter().map(|s| s / k as f64).collect();
    let mut best = 0;
    for g in 1..lambda_grid.len() {
        let (s, b) = (cv_scores[g], cv_scores[best]);
        if s > b || (s == b && lambda_grid[g] >= lambda_grid[best]) {
            best = g;
        }
    }
    Ok(FitReport {
        lambda_grid: lambda_grid.to_vec(),
        cv_scores,
        chosen_lambda: lambda_grid[best],
        folds: k,
        seed,
        condition_warning: warned[best],
    })
}

/// Fits on all of `x` under `policy`; the report is present for CV policies.
pub fn fit_with_policy(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    policy: &LambdaPolicy,
) -> Result<(RidgeProbe, Option<FitReport>)> {
    let (lambda, mut report) = match policy {
        LambdaPolicy::Fixed { lambda } => (*lambda, None),
        LambdaPolicy::CrossValidated { grid, folds, seed } => {
            let r = select_lambda(x, y, grid, *folds, *seed)?;
            (r.chosen_lambda, Some(r))
        }
    };
    let eq = NormalEquations::new(x, y)?;
    let sol = eq.solve(lambda)?;
    if let Some(r) = report.as_mut() {
        r.condition_warning |= sol.jittered;
    }
    Ok((eq.probe(lambda, sol.weights), report))
}

/// Stacks `(latitude, longitude)` pairs into an n×2 matrix.
pub fn targets_matrix(targets: &[[f64; 2]]) -> Array2<f64> {
    Array2::from_shape_fn((targets.len(), 2), |(i, j)| targets[i][j])
}
