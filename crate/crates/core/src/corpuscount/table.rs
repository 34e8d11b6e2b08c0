use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Occurrences per country over a corpus, with scan totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub corpus_id: String,
    pub counts: BTreeMap<String, u64>,
    pub docs_scanned: u64,
    pub docs_skipped: u64,
    pub bytes_scanned: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSummary {
    pub corpus_id: String,
    pub docs_scanned: u64,
    pub docs_skipped: u64,
    pub bytes_scanned: u64,
    pub total_matches: u64,
    pub countries_covered_fraction: f64,
}

#[derive(Serialize, Deserialize)]
struct CountRow {
    country: String,
    count: u64,
}

fn merge_ids(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.to_string(),
        (_, true) => a.to_string(),
        _ if a == b => a.to_string(),
        _ => {
            let mut parts: Vec<&str> = a.split('+').chain(b.split('+')).collect();
            parts.sort_unstable();
            parts.dedup();
            parts.join("+")
        }
    }
}

impl CountTable {
    /// All-zero table over the given pattern universe.
    pub fn empty<S: AsRef<str>>(corpus_id: &str, countries: &[S]) -> Self {
        Self {
            corpus_id: corpus_id.to_string(),
            counts: countries.iter().map(|c| (c.as_ref().to_string(), 0)).collect(),
            docs_scanned: 0,
            docs_skipped: 0,
            bytes_scanned: 0,
        }
    }

    pub fn get(&self, country: &str) -> Option<u64> {
        self.counts.get(country).copied()
    }

    pub fn total_matches(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn covered_fraction(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        self.counts.values().filter(|&&c| c > 0).count() as f64 / self.counts.len() as f64
    }

    pub fn summary(&self) -> CountSummary {
        CountSummary {
            corpus_id: self.corpus_id.clone(),
            docs_scanned: self.docs_scanned,
            docs_skipped: self.docs_skipped,
            bytes_scanned: self.bytes_scanned,
            total_matches: self.total_matches(),
            countries_covered_fraction: self.covered_fraction(),
        }
    }

    /// `country,count` rows in name order.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let rows: Vec<CountRow> = self
            .counts
            .iter()
            .map(|(c, &n)| CountRow {
                country: c.clone(),
                count: n,
            })
            .collect();
        crate::metrics::write_csv(&rows, "counts")
    }

    /// Reads a `country,count` CSV; scan totals are not recorded there and
    /// come back as zero.
    pub fn from_csv(bytes: &[u8], corpus_id: &str) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for row in csv::Reader::from_reader(bytes).deserialize::<CountRow>() {
            let row = row.map_err(|e| Error::Csv {
                context: "counts".into(),
                source: e,
            })?;
            if counts.insert(row.country.clone(), row.count).is_some() {
                return Err(Error::invalid(format!("duplicate country {:?} in counts", row.country)));
            }
        }
        Ok(Self {
            corpus_id: corpus_id.to_string(),
            counts,
            docs_scanned: 0,
            docs_skipped: 0,
            bytes_scanned: 0,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&bytes, &path.display().to_string())
    }
}

/// Entrywise sum of two tables over the same pattern universe.
pub fn merge_counts(a: &CountTable, b: &CountTable) -> Result<CountTable> {
    if a.counts.len() != b.counts.len() || a.counts.keys().ne(b.counts.keys()) {
        return Err(Error::invalid("count tables cover different pattern sets"));
    }
    Ok(CountTable {
        corpus_id: merge_ids(&a.corpus_id, &b.corpus_id),
        counts: a
            .counts
            .iter()
            .zip(b.counts.values())
            .map(|((k, x), y)| (k.clone(), x + y))
            .collect(),
        docs_scanned: a.docs_scanned + b.docs_scanned,
        docs_skipped: a.docs_skipped + b.docs_skipped,
        bytes_scanned: a.bytes_scanned + b.bytes_scanned,
    })
}
