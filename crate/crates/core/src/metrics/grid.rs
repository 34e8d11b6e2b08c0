use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::eval::EvalReport;
use super::groups::log_error;
use super::sum::mean;
use crate::error::{Error, Result};
use crate::geodata::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lat_band: usize,
    pub lon_band: usize,
    /// South-west corner of the cell, degrees.
    pub lat_min: f64,
    pub lon_min: f64,
    pub n: usize,
    pub mean_log_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandProfile {
    pub band: usize,
    pub min_deg: f64,
    pub n: usize,
    pub mean_log_mse: f64,
}

/// Mean log₁₀ error on a regular latitude/longitude grid, with marginal
/// profiles over latitude bands and longitude bands. Only populated cells
/// and bands are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub cell_degrees: f64,
    pub lat_bands: usize,
    pub lon_bands: usize,
    pub cells: Vec<GridCell>,
    pub lat_profile: Vec<BandProfile>,
    pub lon_profile: Vec<BandProfile>,
}

pub fn band_index(deg: f64, offset: f64, cell: f64, bands: usize) -> usize {
    (((deg + offset) / cell).floor().max(0.0) as usize).min(bands - 1)
}

fn bands_for(cell_degrees: f64) -> Result<(usize, usize)> {
    if !(cell_degrees.is_finite() && cell_degrees > 0.0) || cell_degrees > 180.0 {
        return Err(Error::invalid(format!("invalid cell size {cell_degrees}°")));
    }
    let lat = 180.0 / cell_degrees;
    if (lat - lat.round()).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "cell size {cell_degrees}° does not divide 180° evenly"
        )));
    }
    let lat = lat.round() as usize;
    Ok((lat, 2 * lat))
}

/// Bins each evaluated location by its true coordinates.
pub fn grid_log_mse(report: &EvalReport, dataset: &Dataset, cell_degrees: f64) -> Result<HeatmapGrid> {
    let (lat_bands, lon_bands) = bands_for(cell_degrees)?;
    report.check_dataset(dataset)?;
    let mut rows: Vec<_> = report.per_location.iter().collect();
    rows.sort_by_key(|l| l.row_index);

    let mut cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut lat_prof: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut lon_prof: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for l in rows {
        let rec = &dataset.records[l.row_index];
        let i = band_index(rec.latitude, 90.0, cell_degrees, lat_bands);
        let j = band_index(rec.longitude, 180.0, cell_degrees, lon_bands);
        let v = log_error(l.squared_error);
        cells.entry((i, j)).or_default().push(v);
        lat_prof.entry(i).or_default().push(v);
        lon_prof.entry(j).or_default().push(v);
    }
    let profile = |m: BTreeMap<usize, Vec<f64>>, offset: f64| -> Vec<BandProfile> {
        m.into_iter()
            .map(|(band, v)| BandProfile {
                band,
                min_deg: band as f64 * cell_degrees - offset,
                n: v.len(),
                mean_log_mse: mean(&v),
            })
            .collect()
    };
    Ok(HeatmapGrid {
        cell_degrees,
        lat_bands,
        lon_bands,
        cells: cells
            .into_iter()
            .map(|((i, j), v)| GridCell {
                lat_band: i,
                lon_band: j,
                lat_min: i as f64 * cell_degrees - 90.0,
                lon_min: j as f64 * cell_degrees - 180.0,
                n: v.len(),
                mean_log_mse: mean(&v),
            })
            .collect(),
        lat_profile: profile(lat_prof, 90.0),
        lon_profile: profile(lon_prof, 180.0),
    })
}

impl HeatmapGrid {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            context: "heatmap grid".into(),
            source: e,
        })
    }

    /// One row per populated cell.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        super::write_csv(&self.cells, "heatmap grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::parse_locations;
    use crate::metrics::LocationError;

    fn setup(points: &[(f64, f64, f64)]) -> (EvalReport, Dataset) {
        let mut csv = String::from("name,country,continent,latitude,longitude,population\n");
        for (k, (lat, lon, _)) in points.iter().enumerate() {
            csv.push_str(&format!("p{k},X,Europe,{lat},{lon},\n"));
        }
        let ds = parse_locations(csv.as_bytes()).unwrap();
        let report = EvalReport {
            model_id: "m".into(),
            layer: 0,
            locations_digest: ds.source_digest,
            per_location: points
                .iter()
                .enumerate()
                .map(|(k, &(lat, lon, e))| LocationError {
                    row_index: k,
                    predicted_lat: lat,
                    predicted_lon: lon,
                    true_lat: lat,
                    true_lon: lon,
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
    fn one_cell_equals_global_mean() {
        let (rep, ds) = setup(&[(1.0, 1.0, 2.0), (2.0, 3.0, 8.0), (4.0, 4.5, 0.5)]);
        let g = grid_log_mse(&rep, &ds, 5.0).unwrap();
        assert_eq!(g.cells.len(), 1);
        let global = mean(&[2f64, 8.0, 0.5].map(log_error));
        assert_eq!(g.cells[0].mean_log_mse, global);
        assert_eq!((g.cells[0].lat_band, g.cells[0].lon_band), (18, 36));
    }

    #[test]
    fn north_pole_and_antimeridian_clamp() {
        let (rep, ds) = setup(&[(90.0, 180.0, 1.0), (-90.0, -180.0, 1.0)]);
        let g = grid_log_mse(&rep, &ds, 10.0).unwrap();
        assert_eq!((g.cells[1].lat_band, g.cells[1].lon_band), (17, 35));
        assert_eq!((g.cells[0].lat_band, g.cells[0].lon_band), (0, 0));
    }

    #[test]
    fn four_points_two_cells() {
        let pts = [(10.0, 10.0, 1.0), (12.0, 14.0, 100.0), (-50.0, 100.0, 3.0), (-51.0, 101.0, 7.0)];
        let (rep, ds) = setup(&pts);
        let g = grid_log_mse(&rep, &ds, 5.0).unwrap();
        // naive binning
        let mut naive: Vec<((i64, i64), Vec<f64>)> = Vec::new();
        for (lat, lon, e) in pts {
            let key = (((lat + 90.0) / 5.0) as i64, ((lon + 180.0) / 5.0) as i64);
            match naive.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push((e + 1e-12f64).log10()),
                None => naive.push((key, vec![(e + 1e-12f64).log10()])),
            }
        }
        naive.sort_by_key(|(k, _)| *k);
        assert_eq!(g.cells.len(), naive.len());
        for (cell, (key, vals)) in g.cells.iter().zip(&naive) {
            assert_eq!((cell.lat_band as i64, cell.lon_band as i64), *key);
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((cell.mean_log_mse - m).abs() < 1e-12);
        }
        assert_eq!(g.cells.iter().map(|c| c.n).sum::<usize>(), 4);
        assert_eq!(g.lat_profile.iter().map(|c| c.n).sum::<usize>(), 4);
        assert_eq!(g.lon_profile.iter().map(|c| c.n).sum::<usize>(), 4);
    }

    #[test]
    fn invalid_cell_sizes() {
        let (rep, ds) = setup(&[(0.0, 0.0, 1.0)]);
        for c in [0.0, -5.0, 7.0, 200.0, f64::NAN] {
            assert!(grid_log_mse(&rep, &ds, c).is_err(), "{c}");
        }
        assert!(grid_log_mse(&rep, &ds, 2.5).is_ok());
    }
}
