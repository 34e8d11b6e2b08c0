use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::select::{fit_with_policy, targets_matrix, LambdaPolicy};
use crate::error::{Error, Result};
use crate::geodata::{read_embeddings, Dataset, EmbeddingMatrix, SplitIndices};
use crate::metrics::evaluate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerScore {
    pub layer: u32,
    pub model_id: String,
    pub lambda: f64,
    pub r2_mean: f64,
    pub mse_overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Ordered by layer.
    pub layers: Vec<LayerScore>,
    /// Highest test R²; ties go to the deepest layer.
    pub best_layer: u32,
}

fn score_layer(
    m: &EmbeddingMatrix,
    dataset: &Dataset,
    split: &SplitIndices,
    policy: &LambdaPolicy,
) -> Result<LayerScore> {
    let x = m.rows_f64(&split.train_rows);
    let y = targets_matrix(&dataset.targets(&split.train_rows));
    let (probe, _) = fit_with_policy(x.view(), y.view(), policy)?;
    let probe = probe.with_provenance(&m.model_id, m.layer);
    let report = evaluate(&probe, m, dataset, split)?;
    Ok(LayerScore {
        layer: m.layer,
        model_id: m.model_id.clone(),
        lambda: probe.lambda,
        r2_mean: report.r2_mean,
        mse_overall: report.mse_overall,
    })
}

/// Fits and scores one probe per layer. Layers are fitted concurrently but
/// reported in layer order.
pub fn layer_sweep_matrices(
    matrices: &[EmbeddingMatrix],
    dataset: &Dataset,
    split: &SplitIndices,
    policy: &LambdaPolicy,
) -> Result<SweepSummary> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::invalid("layer sweep needs at least one embedding file"))?;
    for m in matrices {
        if m.locations_digest != first.locations_digest {
            return Err(Error::DigestMismatch {
                expected: first.locations_digest,
                found: m.locations_digest,
            });
        }
        m.check_alignment(dataset.len(), dataset.source_digest)?;
    }
    let mut layers_seen: Vec<u32> = matrices.iter().map(|m| m.layer).collect();
    layers_seen.sort_unstable();
    if let Some(w) = layers_seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("layer {} appears twice", w[0])));
    }

    let mut layers: Vec<LayerScore> = matrices
        .par_iter()
        .map(|m| score_layer(m, dataset, split, policy))
        .collect::<Result<_>>()?;
    layers.sort_by_key(|l| l.layer);
    let best = layers
        .iter()
        .fold(&layers[0], |best, l| if l.r2_mean >= best.r2_mean { l } else { best });
    Ok(SweepSummary {
        best_layer: best.layer,
        layers,
    })
}

pub fn layer_sweep(
    embedding_paths: &[PathBuf],
    dataset: &Dataset,
    split: &SplitIndices,
    policy: &LambdaPolicy,
) -> Result<SweepSummary> {
    let matrices = embedding_paths
        .iter()
        .map(read_embeddings)
        .collect::<Result<Vec<_>>>()?;
    layer_sweep_matrices(&matrices, dataset, split, policy)
}
