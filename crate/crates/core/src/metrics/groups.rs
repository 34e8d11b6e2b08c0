use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::eval::EvalReport;
use super::sum::mean;
use crate::error::{Error, Result};
use crate::geodata::{Dataset, LocationRecord};

/// Offset inside log₁₀ so that exact predictions stay finite.
pub const LOG_EPSILON: f64 = 1e-12;

pub fn log_error(squared_error: f64) -> f64 {
    (squared_error + LOG_EPSILON).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Country,
    Continent,
}

impl GroupBy {
    pub fn key<'a>(&self, rec: &'a LocationRecord) -> &'a str {
        match self {
            GroupBy::Country => &rec.country,
            GroupBy::Continent => &rec.continent,
        }
    }
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "country" => Ok(GroupBy::Country),
            "continent" => Ok(GroupBy::Continent),
            other => Err(Error::invalid(format!(
                "unknown grouping key {other:?}; use country or continent"
            ))),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::Country => "country",
            GroupBy::Continent => "continent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group_key: String,
    pub n: usize,
    pub mean_mse: f64,
    pub mean_log_mse: f64,
}

/// Per-group mean squared error and mean log₁₀ error, sorted by key.
/// Rows inside a group are reduced in row order, so the result does not
/// depend on the order of the report.
pub fn group_error_stats(
    report: &EvalReport,
    dataset: &Dataset,
    by: GroupBy,
) -> Result<Vec<GroupStats>> {
    report.check_dataset(dataset)?;
    let mut groups: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for loc in &report.per_location {
        let rec = &dataset.records[loc.row_index];
        let key = by.key(rec);
        if key.is_empty() {
            return Err(Error::invalid(format!(
                "location {:?} (row {}) has no {by}",
                rec.name, rec.row_index
            )));
        }
        groups.entry(key).or_default().push((loc.row_index, loc.squared_error));
    }
    Ok(groups
        .into_iter()
        .map(|(key, mut rows)| {
            rows.sort_by_key(|r| r.0);
            let errors: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let logs: Vec<f64> = errors.iter().map(|&e| log_error(e)).collect();
            GroupStats {
                group_key: key.to_string(),
                n: errors.len(),
                mean_mse: mean(&errors),
                mean_log_mse: mean(&logs),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::parse_locations;
    use crate::metrics::LocationError;

    fn setup(errors: &[(usize, f64)], csv_rows: &str) -> (EvalReport, Dataset) {
        let csv = format!("name,country,continent,latitude,longitude,population\n{csv_rows}");
        let ds = parse_locations(csv.as_bytes()).unwrap();
        let report = EvalReport {
            model_id: "m".into(),
            layer: 0,
            locations_digest: ds.source_digest,
            per_location: errors
                .iter()
                .map(|&(i, e)| LocationError {
                    row_index: i,
                    predicted_lat: 0.0,
                    predicted_lon: 0.0,
                    true_lat: 0.0,
                    true_lon: 0.0,
                    squared_error: e,
                })
                .collect(),
            r2_lat: 0.0,
            r2_lon: 0.0,
            r2_mean: 0.0,
            mse_overall: 0.0,
        };
        (report, ds)
    }

    #[test]
    fn single_group_mean() {
        let (rep, ds) = setup(&[(0, 2.0), (1, 4.0)], "a,X,Europe,0,0,\nb,X,Europe,1,1,\n");
        let g = group_error_stats(&rep, &ds, GroupBy::Continent).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].mean_mse, 3.0);
        assert_eq!(g[0].n, 2);
        assert!((g[0].mean_log_mse - (2f64.log10() + 4f64.log10()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_errors_identical_stats() {
        let (rep, ds) = setup(
            &[(0, 1.5), (1, 7.0), (2, 1.5), (3, 7.0)],
            "a,X,Europe,0,0,\nb,X,Europe,1,1,\nc,Y,Asia,0,0,\nd,Y,Asia,1,1,\n",
        );
        let g = group_error_stats(&rep, &ds, GroupBy::Country).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(
            (g[0].n, g[0].mean_mse, g[0].mean_log_mse),
            (g[1].n, g[1].mean_mse, g[1].mean_log_mse)
        );
    }

    #[test]
    fn order_independent() {
        let rows = "a,X,Europe,0,0,\nb,X,Europe,1,1,\nc,Y,Asia,0,0,\nd,X,Asia,1,1,\n";
        let (rep, ds) = setup(&[(0, 0.1), (1, 0.7), (2, 3.0), (3, 1e-3)], rows);
        let (mut rev, _) = setup(&[(0, 0.1), (1, 0.7), (2, 3.0), (3, 1e-3)], rows);
        rev.per_location.reverse();
        assert_eq!(
            group_error_stats(&rep, &ds, GroupBy::Country).unwrap(),
            group_error_stats(&rev, &ds, GroupBy::Country).unwrap()
        );
    }

    #[test]
    fn exact_prediction_has_finite_log() {
        assert_eq!(log_error(0.0), -12.0);
    }

    #[test]
    fn unknown_key() {
        assert!("planet".parse::<GroupBy>().is_err());
        assert_eq!("country".parse::<GroupBy>().unwrap(), GroupBy::Country);
    }

    #[test]
    fn missing_attribute_is_an_error() {
        let (rep, ds) = setup(&[(0, 2.0)], "a,,Europe,0,0,\n");
        assert!(group_error_stats(&rep, &ds, GroupBy::Country).is_err());
    }
}
