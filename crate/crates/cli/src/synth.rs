//! Synthetic locations with embeddings that encode coordinates linearly.

use std::fmt;
use std::str::FromStr;

use geoprobe::geodata::{digest64, write_locations_csv, EmbeddingMatrix, LocationRecord};
use geoprobe::rng::SplitMix64;
use geoprobe::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MODEL_ID: &str = "synthetic";

/// Standard deviations of a uniform latitude and longitude in degrees.
pub const LAT_SCALE: f64 = 90.0 / 1.732_050_807_568_877_2;
pub const LON_SCALE: f64 = 180.0 / 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SkewProfile {
    #[default]
    None,
    /// Southern locations are sampled at half the rate and carry up to three
    /// times the noise at the pole.
    South,
}

impl SkewProfile {
    fn keep(self, lat: f64, u: f64) -> bool {
        match self {
            SkewProfile::None => true,
            SkewProfile::South => lat >= 0.0 || u < 0.5,
        }
    }

    pub fn noise_multiplier(self, lat: f64) -> f64 {
        match self {
            SkewProfile::None => 1.0,
            SkewProfile::South => 1.0 + 2.0 * (-lat / 90.0).clamp(0.0, 1.0),
        }
    }
}

impl FromStr for SkewProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SkewProfile::None),
            "south" => Ok(SkewProfile::South),
            other => Err(Error::invalid(format!(
                "unknown skew profile {other:?}; use none or south"
            ))),
        }
    }
}

impl fmt::Display for SkewProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkewProfile::None => "none",
            SkewProfile::South => "south",
        })
    }
}

/// Noise level whose expected per-coordinate R² (in percent) is `r2`.
pub fn sigma_for_r2(r2: f64) -> f64 {
    (100.0 / r2 - 1.0).sqrt()
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub records: Vec<LocationRecord>,
    pub csv: Vec<u8>,
    pub embeddings: EmbeddingMatrix,
    /// 2×d, orthonormal rows.
    pub mixing: [Vec<f64>; 2],
}

fn continent_of(lat: f64, lon: f64) -> &'static str {
    if lat < -60.0 {
        "Antarctica"
    } else if lon < -30.0 {
        if lat >= 12.0 {
            "North America"
        } else {
            "South America"
        }
    } else if lon < 60.0 {
        if lat >= 35.0 {
            "Europe"
        } else {
            "Africa"
        }
    } else if lat < -10.0 {
        "Oceania"
    } else {
        "Asia"
    }
}

fn orthonormal_rows(d: usize, rng: &mut SplitMix64) -> [Vec<f64>; 2] {
    let unit = |v: Vec<f64>| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect::<Vec<_>>()
    };
    let a = unit((0..d).map(|_| rng.next_gaussian()).collect());
    loop {
        let b: Vec<f64> = (0..d).map(|_| rng.next_gaussian()).collect();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let b: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - dot * x).collect();
        if b.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            return [a, unit(b)];
        }
    }
}

/// Draws `n` locations and a `d`-dimensional embedding for each:
/// e = [lat/LAT_SCALE, lon/LON_SCALE]·A + σ·m(lat)·g, with g standard normal
/// and m the skew profile's noise multiplier. With no skew and orthonormal A
/// the best linear read-out of each coordinate has R² = 1/(1+σ²).
///
/// Countries are 30° boxes; continents come from the box center.
pub fn gen_synthetic(n: usize, d: usize, sigma: f64, seed: u64, skew: SkewProfile) -> Result<Synthetic> {
    if n < 10 {
        return Err(Error::invalid(format!("need at least 10 locations, got {n}")));
    }
    if d < 2 {
        return Err(Error::invalid(format!("need at least 2 dimensions, got {d}")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!("noise sigma must be finite and ≥ 0, got {sigma}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mixing = orthonormal_rows(d, &mut rng);

    let mut records = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let (lat, lon) = loop {
            let lat = rng.next_f64() * 180.0 - 90.0;
            let lon = rng.next_f64() * 360.0 - 180.0;
            if skew.keep(lat, rng.next_f64()) {
                break (lat, lon);
            }
        };
        let lat_box = (((lat + 90.0) / 30.0) as usize).min(5);
        let lon_box = (((lon + 180.0) / 30.0) as usize).min(11);
        let center = (
            lat_box as f64 * 30.0 - 75.0,
            lon_box as f64 * 30.0 - 165.0,
        );
        let population = if rng.next_f64() < 0.1 {
            None
        } else {
            Some(10f64.powf(3.0 + 4.0 * rng.next_f64()).round() as u64)
        };
        // Round-trip the coordinates through their CSV form so the targets
        // the probe sees are exactly the ones that generated the features.
        let lat: f64 = format!("{lat:.6}").parse().unwrap();
        let lon: f64 = format!("{lon:.6}").parse().unwrap();
        let z = [lat / LAT_SCALE, lon / LON_SCALE];
        let noise = sigma * skew.noise_multiplier(lat);
        for (a, b) in mixing[0].iter().zip(&mixing[1]) {
            let signal = z[0] * a + z[1] * b;
            data.push((signal + noise * rng.next_gaussian()) as f32);
        }
        records.push(LocationRecord {
            row_index: i,
            name: format!("synth-{i:05}"),
            country: format!("Country-{lat_box}-{lon_box:02}"),
            continent: continent_of(center.0, center.1).to_string(),
            latitude: lat,
            longitude: lon,
            population,
        });
    }
    let csv = write_locations_csv(&records)?;
    let embeddings = EmbeddingMatrix::new(MODEL_ID, 0, n, d, data, digest64(&csv))?;
    Ok(Synthetic {
        records,
        csv,
        embeddings,
        mixing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use geoprobe::geodata::parse_locations;

    #[test]
    fn rows_are_orthonormal() {
        let s = gen_synthetic(10, 16, 0.1, 3, SkewProfile::None).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&s.mixing[0], &s.mixing[0]) - 1.0).abs() < 1e-12);
        assert!((dot(&s.mixing[1], &s.mixing[1]) - 1.0).abs() < 1e-12);
        assert!(dot(&s.mixing[0], &s.mixing[1]).abs() < 1e-12);
    }

    #[test]
    fn csv_parses_back_to_the_same_records() {
        let s = gen_synthetic(200, 4, 0.5, 9, SkewProfile::South).unwrap();
        let ds = parse_locations(&s.csv).unwrap();
        assert_eq!(ds.records, s.records);
        assert_eq!(ds.source_digest, s.embeddings.locations_digest);
        assert!(s.records.iter().any(|r| r.population.is_none()));
    }

    #[test]
    fn south_profile_thins_the_south() {
        let s = gen_synthetic(4000, 2, 0.0, 1, SkewProfile::South).unwrap();
        let south = s.records.iter().filter(|r| r.latitude < 0.0).count() as f64;
        let frac = south / 4000.0;
        assert!((frac - 1.0 / 3.0).abs() < 0.03, "{frac}");
    }

    #[test]
    fn noiseless_features_are_exact() {
        let s = gen_synthetic(10, 3, 0.0, 5, SkewProfile::None).unwrap();
        for (i, r) in s.records.iter().enumerate() {
            for j in 0..3 {
                let want = r.latitude / LAT_SCALE * s.mixing[0][j] + r.longitude / LON_SCALE * s.mixing[1][j];
                assert_eq!(s.embeddings.row(i)[j], want as f32);
            }
        }
    }

    #[test]
    fn sigma_for_three_quarters() {
        assert!((sigma_for_r2(75.0) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((1.0 / (1.0 + sigma_for_r2(75.0).powi(2)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(gen_synthetic(9, 4, 0.1, 1, SkewProfile::None).is_err());
        assert!(gen_synthetic(10, 1, 0.1, 1, SkewProfile::None).is_err());
        assert!(gen_synthetic(10, 4, -1.0, 1, SkewProfile::None).is_err());
        assert!(gen_synthetic(10, 4, f64::NAN, 1, SkewProfile::None).is_err());
    }

    #[test]
    fn continents_cover_the_table() {
        let mut seen: Vec<&str> = Vec::new();
        for lat in (-75..=75).step_by(30) {
            for lon in (-165..=165).step_by(30) {
                seen.push(continent_of(lat as f64, lon as f64));
            }
        }
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 7);
    }
}
