//! Evaluation and bias statistics: R², per-location error, grouped means,
//! Gini coefficient, Pearson correlation with significance, and gridded
//! log-error.

mod correlation;
mod eval;
mod gini;
mod grid;
mod groups;
pub mod special;
pub mod sum;

pub use correlation::{
    correlate_covariates, correlation, country_level_correlations, p_value_two_sided, pearson,
    CorrelationResult, CorrelationRow, CovariateOutcome, SIGNIFICANCE_LEVEL,
};
pub use eval::{
    evaluate, r2_percent, report_from_predictions, squared_error, EvalReport, LocationError,
};
pub use gini::gini;
pub use grid::{band_index, grid_log_mse, BandProfile, GridCell, HeatmapGrid};
pub use groups::{group_error_stats, log_error, GroupBy, GroupStats, LOG_EPSILON};

use serde::Serialize;

use crate::error::{Error, Result};

/// Serializes `rows` as CSV with a header derived from the field names.
pub fn write_csv<T: Serialize>(rows: &[T], what: &str) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Csv {
            context: what.to_string(),
            source: e,
        })?;
    }
    w.into_inner()
        .map_err(|e| Error::invalid(format!("flushing {what} csv: {e}")))
}
