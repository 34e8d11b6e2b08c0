//! Ridge probes from representations to (latitude, longitude).

mod cholesky;
mod ridge;
mod select;
mod sweep;

pub use ridge::{fit_ridge, RidgeProbe};
pub use select::{
    fit_with_policy, kfold_partition, select_lambda, targets_matrix, FitReport, LambdaPolicy,
    BASE_GRID, DEFAULT_CV_SEED, DEFAULT_FOLDS,
};
pub use sweep::{layer_sweep, layer_sweep_matrices, LayerScore, SweepSummary};
