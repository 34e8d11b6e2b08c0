use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const LOCATION_COLUMNS: [&str; 6] = [
    "name",
    "country",
    "continent",
    "latitude",
    "longitude",
    "population",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub row_index: usize,
    pub name: String,
    pub country: String,
    pub continent: String,
    pub latitude: f64,
    pub longitude: f64,
    pub population: Option<u64>,
}

/// The location table, in source-file order, tagged with a digest of the
/// exact bytes it was parsed from.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<LocationRecord>,
    pub source_digest: u64,
}

/// First eight bytes of the SHA-256 of `bytes`, read little-endian.
pub fn digest64(bytes: &[u8]) -> u64 {
    let hash = Sha256::digest(bytes);
    let mut head = [0u8; 8];
    head.copy_from_slice(&hash[..8]);
    u64::from_le_bytes(head)
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Dataset {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_locations(&bytes)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Targets as `(latitude, longitude)` rows for the given indices.
    pub fn targets(&self, rows: &[usize]) -> Vec<[f64; 2]> {
        rows.iter()
            .map(|&i| [self.records[i].latitude, self.records[i].longitude])
            .collect()
    }

    /// Distinct continents in order of first appearance.
    pub fn continents(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.continent.as_str()) {
                seen.push(r.continent.as_str());
            }
        }
        seen
    }
}

pub fn parse_locations(csv_bytes: &[u8]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(csv_bytes);
    let headers = reader.headers().map_err(|e| Error::Csv {
        context: "locations header".into(),
        source: e,
    })?;
    let column: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(LOCATION_COLUMNS) {
        *slot = *column
            .get(name)
            .ok_or_else(|| Error::invalid(format!("locations header lacks column {name:?}")))?;
    }
    let [i_name, i_country, i_continent, i_lat, i_lon, i_pop] = idx;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::MalformedRow {
                line,
                message: e.to_string(),
            }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| Error::MalformedRow {
                line,
                message: format!("missing column {}", LOCATION_COLUMNS[i.min(5)]),
            })
        };
        let name = field(i_name)?.to_string();
        if name.trim().is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "empty name".into(),
            });
        }
        let parse_deg = |i: usize, what: &'static str| -> Result<f64> {
            let raw = field(i)?.trim();
            raw.parse::<f64>().map_err(|_| Error::MalformedRow {
                line,
                message: format!("{what} {raw:?} is not a number"),
            })
        };
        let latitude = parse_deg(i_lat, "latitude")?;
        let longitude = parse_deg(i_lon, "longitude")?;
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(Error::CoordinateOutOfRange {
                name,
                line,
                field: "latitude",
                value: latitude,
            });
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::CoordinateOutOfRange {
                name,
                line,
                field: "longitude",
                value: longitude,
            });
        }
        let population = parse_population(field(i_pop)?.trim()).ok_or_else(|| {
            Error::MalformedRow {
                line,
                message: format!("population {:?} is not a non-negative integer", row.get(i_pop)),
            }
        })?;
        records.push(LocationRecord {
            row_index: records.len(),
            name,
            country: field(i_country)?.to_string(),
            continent: field(i_continent)?.to_string(),
            latitude,
            longitude,
            population,
        });
    }
    Ok(Dataset {
        records,
        source_digest: digest64(csv_bytes),
    })
}

/// `Some(None)` for an empty cell; integral floats such as `"1200.0"` are accepted.
fn parse_population(raw: &str) -> Option<Option<u64>> {
    if raw.is_empty() {
        return Some(None);
    }
    if let Ok(v) = raw.parse::<u64>() {
        return Some(Some(v));
    }
    let v = raw.parse::<f64>().ok()?;
    (v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64).then_some(Some(v as u64))
}

/// Serializes records back to the locations CSV layout.
pub fn write_locations_csv(records: &[LocationRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e| Error::Csv {
        context: "locations".into(),
        source: e,
    };
    w.write_record(LOCATION_COLUMNS).map_err(csv_err)?;
    for r in records {
        let pop = r.population.map(|p| p.to_string()).unwrap_or_default();
        w.write_record([
            r.name.as_str(),
            r.country.as_str(),
            r.continent.as_str(),
            &r.latitude.to_string(),
            &r.longitude.to_string(),
            &pop,
        ])
        .map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::invalid(format!("flushing locations csv: {e}")))
}
