//! Exact-match counting of country names over a sharded text corpus.

mod patterns;
mod scan;
mod table;

pub use patterns::{build_patterns, PatternSet};
pub use scan::{count_corpus, extract_text, list_shards, CorpusFormat, ScanOptions};
pub use table::{merge_counts, CountSummary, CountTable};
