use std::fs;
use std::io::Write;
use std::path::Path;

use flate2::write::GzEncoder;
use flate2::Compression;
use geoprobe::corpuscount::{build_patterns, count_corpus, CorpusFormat, ScanOptions};
use geoprobe::rng::SplitMix64;
use proptest::prelude::*;

fn is_word(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

/// Position-by-position scan, one pattern at a time.
fn naive_counts(patterns: &[&str], text: &str, boundary: bool) -> Vec<u64> {
    let t = text.as_bytes();
    patterns
        .iter()
        .map(|p| {
            let p = p.as_bytes();
            let mut count = 0;
            let mut next_free = 0;
            let mut i = 0;
            while i + p.len() <= t.len() {
                if i >= next_free && &t[i..i + p.len()] == p {
                    let end = i + p.len();
                    let ok = !boundary
                        || ((i == 0 || !is_word(t[i - 1])) && (end == t.len() || !is_word(t[end])));
                    if ok {
                        count += 1;
                        next_free = end;
                    }
                }
                i += 1;
            }
            count
        })
        .collect()
}

const NAMES: &[&str] = &["Chad", "Niger", "Nigeria", "Oman", "Romania", "Guinea", "Papua New Guinea", "Mali", "aa", "aaa"];
const FILLER: &[&str] = &[" ", "-", "x", "ia", ", ", "\u{e9}", "a", "Ro", "New ", "7", "."];

fn random_text(rng: &mut SplitMix64, pieces: usize) -> String {
    let mut s = String::new();
    for _ in 0..pieces {
        if rng.next_f64() < 0.4 {
            s.push_str(NAMES[rng.below(NAMES.len() as u64) as usize]);
        } else {
            s.push_str(FILLER[rng.below(FILLER.len() as u64) as usize]);
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn automaton_matches_naive(seed in any::<u64>(), pieces in 0usize..300, boundary in any::<bool>()) {
        let mut rng = SplitMix64::new(seed);
        let text = random_text(&mut rng, pieces);
        let set = build_patterns(NAMES).unwrap().with_boundary(boundary);
        prop_assert_eq!(set.count_document(&text), naive_counts(NAMES, &text, boundary));
    }
}

fn write_shards(dir: &Path, docs: &[String], shards: usize) {
    for s in 0..shards {
        let mut body = String::new();
        for doc in docs.iter().skip(s).step_by(shards) {
            body.push_str(&serde_json::json!({ "id": 1, "text": doc }).to_string());
            body.push('\n');
        }
        if s % 2 == 0 {
            fs::write(dir.join(format!("shard-{s:03}.jsonl")), body).unwrap();
        } else {
            let f = fs::File::create(dir.join(format!("shard-{s:03}.jsonl.gz"))).unwrap();
            let mut gz = GzEncoder::new(f, Compression::fast());
            gz.write_all(body.as_bytes()).unwrap();
            gz.finish().unwrap();
        }
    }
}

#[test]
fn corpus_totals_independent_of_sharding_and_workers() {
    let mut rng = SplitMix64::new(7);
    let docs: Vec<String> = (0..600).map(|_| random_text(&mut rng, 80)).collect();
    let mut expected = vec![0u64; NAMES.len()];
    for d in &docs {
        for (e, c) in expected.iter_mut().zip(naive_counts(NAMES, d, true)) {
            *e += c;
        }
    }
    let set = build_patterns(NAMES).unwrap();
    let mut tables = Vec::new();
    for shards in [1, 8] {
        let dir = tempfile::tempdir().unwrap();
        write_shards(dir.path(), &docs, shards);
        for workers in [1, 8] {
            let opts = ScanOptions {
                format: CorpusFormat::default(),
                workers,
            };
            let mut t = count_corpus(&set, dir.path(), &opts).unwrap();
            assert_eq!(t.docs_scanned, 600);
            assert_eq!(t.docs_skipped, 0);
            for (name, e) in NAMES.iter().zip(&expected) {
                assert_eq!(t.get(name), Some(*e), "{name} shards={shards} workers={workers}");
            }
            t.corpus_id.clear();
            t.bytes_scanned = 0;
            tables.push(t);
        }
    }
    assert!(tables.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn documents_do_not_join_across_lines() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{}\n{}\n",
        serde_json::json!({"text": "Papua New"}),
        serde_json::json!({"text": "Guinea"})
    );
    fs::write(dir.path().join("a.jsonl"), body).unwrap();
    let set = build_patterns(&["Papua New Guinea", "Guinea"]).unwrap();
    let t = count_corpus(&set, dir.path(), &ScanOptions::default()).unwrap();
    assert_eq!(t.get("Papua New Guinea"), Some(0));
    assert_eq!(t.get("Guinea"), Some(1));
}

#[test]
fn plain_files_are_whole_documents() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "Chad\nChad and Mali\n").unwrap();
    fs::write(dir.path().join("b.txt"), "Chadian Mali").unwrap();
    let set = build_patterns(&["Chad", "Mali"]).unwrap();
    let opts = ScanOptions {
        format: CorpusFormat::Plain,
        workers: 2,
    };
    let t = count_corpus(&set, dir.path(), &opts).unwrap();
    assert_eq!(t.get("Chad"), Some(2));
    assert_eq!(t.get("Mali"), Some(2));
    assert_eq!(t.docs_scanned, 2);
}
