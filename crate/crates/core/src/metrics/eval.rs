use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::sum::{mean, sum};
use crate::error::{Error, Result};
use crate::geodata::{Dataset, EmbeddingMatrix, SplitIndices};
use crate::probe::RidgeProbe;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationError {
    pub row_index: usize,
    pub predicted_lat: f64,
    pub predicted_lon: f64,
    pub true_lat: f64,
    pub true_lon: f64,
    /// Mean of the two squared coordinate errors, degrees².
    pub squared_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub layer: u32,
    pub locations_digest: u64,
    pub per_location: Vec<LocationError>,
    pub r2_lat: f64,
    pub r2_lon: f64,
    pub r2_mean: f64,
    pub mse_overall: f64,
}

/// ((Δlat)² + (Δlon)²) / 2
pub fn squared_error(pred: [f64; 2], truth: [f64; 2]) -> f64 {
    let dlat = pred[0] - truth[0];
    let dlon = pred[1] - truth[1];
    (dlat * dlat + dlon * dlon) / 2.0
}

/// Coefficient of determination in percent, against the mean of `truth`.
/// `None` when `truth` has zero variance.
pub fn r2_percent(truth: &[f64], pred: &[f64]) -> Option<f64> {
    assert_eq!(truth.len(), pred.len());
    let m = mean(truth);
    let ss_tot = sum(truth.iter().map(|t| (t - m) * (t - m)));
    if ss_tot == 0.0 || truth.is_empty() {
        return None;
    }
    let ss_res = sum(truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)));
    Some(100.0 * (1.0 - ss_res / ss_tot))
}

/// Builds a report from predictions already aligned with `rows`.
pub fn report_from_predictions(
    model_id: &str,
    layer: u32,
    dataset: &Dataset,
    rows: &[usize],
    predictions: ArrayView2<f64>,
) -> Result<EvalReport> {
    if predictions.nrows() != rows.len() || predictions.ncols() != 2 {
        return Err(Error::RowMismatch {
            what: "predictions".into(),
            expected: rows.len(),
            found: predictions.nrows(),
        });
    }
    let mut per_location = Vec::with_capacity(rows.len());
    for (k, &i) in rows.iter().enumerate() {
        let rec = dataset
            .records
            .get(i)
            .ok_or_else(|| Error::invalid(format!("row {i} is outside the locations table")))?;
        let pred = [predictions[[k, 0]], predictions[[k, 1]]];
        let truth = [rec.latitude, rec.longitude];
        per_location.push(LocationError {
            row_index: i,
            predicted_lat: pred[0],
            predicted_lon: pred[1],
            true_lat: truth[0],
            true_lon: truth[1],
            squared_error: squared_error(pred, truth),
        });
    }
    let column = |f: fn(&LocationError) -> f64| per_location.iter().map(f).collect::<Vec<_>>();
    let r2_lat = r2_percent(&column(|l| l.true_lat), &column(|l| l.predicted_lat))
        .ok_or_else(|| Error::ZeroVariance("test-set latitude; R² is undefined".into()))?;
    let r2_lon = r2_percent(&column(|l| l.true_lon), &column(|l| l.predicted_lon))
        .ok_or_else(|| Error::ZeroVariance("test-set longitude; R² is undefined".into()))?;
    let mse_overall = mean(&column(|l| l.squared_error));
    Ok(EvalReport {
        model_id: model_id.to_string(),
        layer,
        locations_digest: dataset.source_digest,
        per_location,
        r2_lat,
        r2_lon,
        r2_mean: (r2_lat + r2_lon) / 2.0,
        mse_overall,
    })
}

/// Scores `probe` on the test rows of `split`.
pub fn evaluate(
    probe: &RidgeProbe,
    embeddings: &EmbeddingMatrix,
    dataset: &Dataset,
    split: &SplitIndices,
) -> Result<EvalReport> {
    embeddings.check_alignment(dataset.len(), dataset.source_digest)?;
    split.validate(dataset.len())?;
    if probe.dim() != embeddings.cols {
        return Err(Error::ColumnMismatch {
            expected: probe.dim(),
            found: embeddings.cols,
        });
    }
    let x = embeddings.rows_f64(&split.test_rows);
    let pred = probe.predict(x.view())?;
    report_from_predictions(
        &embeddings.model_id,
        embeddings.layer,
        dataset,
        &split.test_rows,
        pred.view(),
    )
}

impl EvalReport {
    /// Errors unless the report was produced against `dataset`.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if self.locations_digest != dataset.source_digest {
            return Err(Error::DigestMismatch {
                expected: dataset.source_digest,
                found: self.locations_digest,
            });
        }
        if let Some(bad) = self.per_location.iter().find(|l| l.row_index >= dataset.len()) {
            return Err(Error::invalid(format!(
                "report row {} is outside the locations table",
                bad.row_index
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            context: "eval report".into(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            context: path.display().to_string(),
            source: e,
        })
    }

    /// One row per evaluated location.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        super::write_csv(&self.per_location, "eval report")
    }
}
