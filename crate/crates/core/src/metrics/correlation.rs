use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::eval::EvalReport;
use super::special::student_t_two_sided;
use super::sum::{mean, sum};
use crate::corpuscount::CountTable;
use crate::error::{Error, Result};
use crate::geodata::Dataset;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub covariate_name: String,
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

impl CorrelationResult {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

/// One covariate's correlation, or why it could not be computed.
#[derive(Debug)]
pub struct CovariateOutcome {
    pub covariate_name: String,
    pub n: usize,
    pub result: Result<CorrelationResult>,
}

/// Flat form of [`CovariateOutcome`] for JSON and CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub level: String,
    pub covariate_name: String,
    pub n: usize,
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: Option<bool>,
    pub error: Option<String>,
}

impl CovariateOutcome {
    pub fn to_row(&self, level: &str) -> CorrelationRow {
        let ok = self.result.as_ref().ok();
        CorrelationRow {
            level: level.to_string(),
            covariate_name: self.covariate_name.clone(),
            n: self.n,
            r: ok.map(|c| c.r),
            p_value: ok.map(|c| c.p_value),
            significant: ok.map(CorrelationResult::significant),
            error: self.result.as_ref().err().map(ToString::to_string),
        }
    }
}

/// Pearson product-moment correlation, clamped to [−1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "pearson inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::invalid(format!(
            "pearson needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("pearson inputs must be finite"));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx = sum(x.iter().map(|v| (v - mx) * (v - mx)));
    let syy = sum(y.iter().map(|v| (v - my) * (v - my)));
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y".into()));
    }
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of H₀: ρ = 0 via t = r·√((n−2)/(1−r²)) on n−2 degrees
/// of freedom.
pub fn p_value_two_sided(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid(format!("p-value needs n ≥ 3, got {n}")));
    }
    if r.is_nan() || r.abs() > 1.0 {
        return Err(Error::invalid(format!("correlation {r} is outside [-1, 1]")));
    }
    let a = r.abs();
    if a == 1.0 {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    let dof = (n - 2) as f64;
    let t = a * (dof / ((1.0 - a) * (1.0 + a))).sqrt();
    Ok(student_t_two_sided(t, dof).clamp(0.0, 1.0))
}

/// Pearson r with its p-value; a zero-variance failure is renamed after the
/// offending input.
pub fn correlation(name: &str, covariate: &[f64], response: &[f64], response_name: &str) -> Result<CorrelationResult> {
    let r = pearson(covariate, response).map_err(|e| match e {
        Error::ZeroVariance(which) if which == "x" => Error::ZeroVariance(name.to_string()),
        Error::ZeroVariance(_) => Error::ZeroVariance(response_name.to_string()),
        other => other,
    })?;
    Ok(CorrelationResult {
        covariate_name: name.to_string(),
        r,
        p_value: p_value_two_sided(r, covariate.len())?,
        n: covariate.len(),
    })
}

fn outcome(name: &str, pairs: Vec<(f64, f64)>, response_name: &str) -> CovariateOutcome {
    let n = pairs.len();
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let result = if n < 3 {
        Err(Error::invalid(format!(
            "{name}: only {n} observations remain after dropping missing values"
        )))
    } else {
        correlation(name, &x, &y, response_name)
    };
    CovariateOutcome {
        covariate_name: name.to_string(),
        n,
        result,
    }
}

fn log_plus_one(v: u64) -> f64 {
    (v as f64 + 1.0).log10()
}

/// Correlates each location's squared error with latitude, longitude,
/// log₁₀(population+1) and, when counts are given, log₁₀(country count+1).
/// Rows missing a covariate are dropped for that covariate only; a country
/// with no matches counts as missing.
pub fn correlate_covariates(
    report: &EvalReport,
    dataset: &Dataset,
    counts: Option<&CountTable>,
) -> Result<Vec<CovariateOutcome>> {
    report.check_dataset(dataset)?;
    let mut rows: Vec<_> = report.per_location.iter().collect();
    rows.sort_by_key(|l| l.row_index);
    let record = |i: usize| &dataset.records[i];

    let collect = |f: &dyn Fn(usize) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|l| f(l.row_index).map(|c| (c, l.squared_error)))
            .collect()
    };
    let response = "squared_error";
    let mut out = vec![
        outcome("latitude", collect(&|i| Some(record(i).latitude)), response),
        outcome("longitude", collect(&|i| Some(record(i).longitude)), response),
        outcome(
            "log10_population",
            collect(&|i| record(i).population.map(log_plus_one)),
            response,
        ),
    ];
    if let Some(counts) = counts {
        out.push(outcome(
            "log10_country_count",
            collect(&|i| {
                counts
                    .get(&record(i).country)
                    .filter(|&c| c > 0)
                    .map(log_plus_one)
            }),
            response,
        ));
    }
    Ok(out)
}

/// Country-level associations of log₁₀(count+1) with the mean latitude, the
/// largest listed population and the mean longitude of each country.
pub fn country_level_correlations(
    counts: &CountTable,
    dataset: &Dataset,
) -> Vec<CovariateOutcome> {
    struct Agg {
        lat: Vec<f64>,
        lon: Vec<f64>,
        max_pop: Option<u64>,
    }
    let mut by_country: BTreeMap<&str, Agg> = BTreeMap::new();
    for rec in &dataset.records {
        let agg = by_country.entry(rec.country.as_str()).or_insert(Agg {
            lat: Vec::new(),
            lon: Vec::new(),
            max_pop: None,
        });
        agg.lat.push(rec.latitude);
        agg.lon.push(rec.longitude);
        if let Some(p) = rec.population {
            agg.max_pop = Some(agg.max_pop.map_or(p, |m| m.max(p)));
        }
    }
    let mut lat = Vec::new();
    let mut lon = Vec::new();
    let mut pop = Vec::new();
    for (country, agg) in &by_country {
        let Some(count) = counts.get(country).filter(|&c| c > 0) else {
            continue;
        };
        let lc = log_plus_one(count);
        lat.push((mean(&agg.lat), lc));
        lon.push((mean(&agg.lon), lc));
        if let Some(p) = agg.max_pop {
            pop.push((log_plus_one(p), lc));
        }
    }
    let response = "log10_country_count";
    vec![
        outcome("mean_latitude", lat, response),
        outcome("log10_population", pop, response),
        outcome("mean_longitude", lon, response),
    ]
}
