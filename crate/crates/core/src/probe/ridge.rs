use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::cholesky::Cholesky;
use crate::error::{Error, Result};

const GRAM_BLOCK_ROWS: usize = 1024;

/// Linear map from representation space to (latitude, longitude).
///
/// Predictions are computed in centered form, `ȳ + (x − x̄)·W`, which equals
/// `x·W + b` with `b = ȳ − x̄·W` and returns `ȳ` exactly at `x = x̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeProbe {
    pub model_id: String,
    pub layer: u32,
    pub lambda: f64,
    pub feature_means: Array1<f64>,
    pub target_means: [f64; 2],
    pub intercept: [f64; 2],
    /// d×2
    pub weights: Array2<f64>,
}

/// Centered sufficient statistics of a training set: solving for any λ only
/// needs the d×d Gram matrix and the d×2 cross-moment.
#[derive(Debug, Clone)]
pub(crate) struct NormalEquations {
    pub feature_means: Array1<f64>,
    pub target_means: [f64; 2],
    pub gram: Array2<f64>,
    pub cross: Array2<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub weights: Array2<f64>,
    pub jittered: bool,
}

fn check_finite(a: ArrayView2<f64>, what: &str) -> Result<()> {
    match a.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, col), _)) => Err(Error::invalid(format!(
            "non-finite {what} value at row {row}, column {col}"
        ))),
        None => Ok(()),
    }
}

impl NormalEquations {
    pub(crate) fn new(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Self> {
        let (n, d) = x.dim();
        if y.nrows() != n {
            return Err(Error::RowMismatch {
                what: "targets".into(),
                expected: n,
                found: y.nrows(),
            });
        }
        if y.ncols() != 2 {
            return Err(Error::ColumnMismatch {
                expected: 2,
                found: y.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::invalid(format!("ridge fit needs at least 2 rows, got {n}")));
        }
        if d == 0 {
            return Err(Error::invalid("ridge fit needs at least one feature"));
        }
        check_finite(x, "feature")?;
        check_finite(y, "target")?;

        let feature_means = x.mean_axis(Axis(0)).expect("n >= 2");
        let y_means = y.mean_axis(Axis(0)).expect("n >= 2");
        let target_means = [y_means[0], y_means[1]];

        let mut gram = Array2::<f64>::zeros((d, d));
        let mut cross = Array2::<f64>::zeros((d, 2));
        let mut start = 0;
        while start < n {
            let end = (start + GRAM_BLOCK_ROWS).min(n);
            let xc = &x.slice(s![start..end, ..]) - &feature_means;
            let yc = &y.slice(s![start..end, ..]) - &y_means;
            gram += &xc.t().dot(&xc);
            cross += &xc.t().dot(&yc);
            start = end;
        }
        // exact symmetry for the factorization
        for i in 0..d {
            for j in 0..i {
                let v = 0.5 * (gram[[i, j]] + gram[[j, i]]);
                gram[[i, j]] = v;
                gram[[j, i]] = v;
            }
        }
        Ok(Self {
            feature_means,
            target_means,
            gram,
            cross,
        })
    }

    fn factor_with(&self, lambda: f64) -> Option<Cholesky> {
        let mut a = self.gram.clone();
        a.diag_mut().mapv_inplace(|v| v + lambda);
        Cholesky::factor(a.view())
    }

    /// Solves `(XcᵀXc + λI) W = XcᵀYc`. At λ > 0 a failed factorization is
    /// retried once at `λ·(1 + 1e-10·trace)`.
    pub(crate) fn solve(&self, lambda: f64) -> Result<Solution> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!("λ must be a finite value ≥ 0, got {lambda}")));
        }
        if let Some(chol) = self.factor_with(lambda) {
            return Ok(Solution {
                weights: chol.solve(self.cross.view()),
                jittered: false,
            });
        }
        if lambda == 0.0 {
            return Err(Error::Singular);
        }
        let trace: f64 = self.gram.diag().sum();
        let jittered = lambda * (1.0 + 1e-10 * trace);
        match self.factor_with(jittered) {
            Some(chol) => Ok(Solution {
                weights: chol.solve(self.cross.view()),
                jittered: true,
            }),
            None => Err(Error::FactorizationFailed(lambda)),
        }
    }

    pub(crate) fn probe(&self, lambda: f64, weights: Array2<f64>) -> RidgeProbe {
        let offset = self.feature_means.dot(&weights);
        RidgeProbe {
            model_id: String::new(),
            layer: 0,
            lambda,
            feature_means: self.feature_means.clone(),
            target_means: self.target_means,
            intercept: [
                self.target_means[0] - offset[0],
                self.target_means[1] - offset[1],
            ],
            weights,
        }
    }
}

/// Ridge regression of the two target columns on `x`, with the intercept
/// left unpenalized by centering both sides on their training means.
pub fn fit_ridge(x: ArrayView2<f64>, y: ArrayView2<f64>, lambda: f64) -> Result<RidgeProbe> {
    let eq = NormalEquations::new(x, y)?;
    let sol = eq.solve(lambda)?;
    Ok(eq.probe(lambda, sol.weights))
}

impl RidgeProbe {
    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn with_provenance(mut self, model_id: impl Into<String>, layer: u32) -> Self {
        self.model_id = model_id.into();
        self.layer = layer;
        self
    }

    /// n×2 predictions `(latitude, longitude)`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::ColumnMismatch {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let centered = &x - &self.feature_means;
        let mut out = centered.dot(&self.weights);
        for mut row in out.rows_mut() {
            row[0] += self.target_means[0];
            row[1] += self.target_means[1];
        }
        check_finite(out.view(), "prediction")?;
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&ProbeFile::from(self)).map_err(|e| Error::Json {
            context: "probe".into(),
            source: e,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProbeFile = serde_json::from_str(text).map_err(|e| Error::Json {
            context: "probe".into(),
            source: e,
        })?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            other => other,
        })
    }
}

/// On-disk probe layout; `weights` is the d×2 matrix flattened row-major.
#[derive(Serialize, Deserialize)]
struct ProbeFile {
    model_id: String,
    layer: u32,
    lambda: f64,
    feature_means: Vec<f64>,
    target_means: [f64; 2],
    intercept: [f64; 2],
    weights: Vec<f64>,
}

impl From<&RidgeProbe> for ProbeFile {
    fn from(p: &RidgeProbe) -> Self {
        ProbeFile {
            model_id: p.model_id.clone(),
            layer: p.layer,
            lambda: p.lambda,
            feature_means: p.feature_means.to_vec(),
            target_means: p.target_means,
            intercept: p.intercept,
            weights: p.weights.iter().copied().collect(),
        }
    }
}

impl TryFrom<ProbeFile> for RidgeProbe {
    type Error = Error;

    fn try_from(f: ProbeFile) -> Result<Self> {
        let d = f.feature_means.len();
        if f.weights.len() != 2 * d {
            return Err(Error::invalid(format!(
                "probe has {} weights for {d} features",
                f.weights.len()
            )));
        }
        let weights = Array2::from_shape_vec((d, 2), f.weights).expect("length checked");
        Ok(RidgeProbe {
            model_id: f.model_id,
            layer: f.layer,
            lambda: f.lambda,
            feature_means: Array1::from(f.feature_means),
            target_means: f.target_means,
            intercept: f.intercept,
            weights,
        })
    }
}
