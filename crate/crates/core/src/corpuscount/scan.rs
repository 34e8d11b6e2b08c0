use std::borrow::Cow;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;
use serde::de::{self, DeserializeSeed, IgnoredAny, MapAccess, Visitor};
use walkdir::WalkDir;

use super::patterns::PatternSet;
use super::table::CountTable;
use crate::error::{Error, Result};

const BATCH_BYTES: usize = 4 << 20;
const READ_BUFFER: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `*.jsonl` / `*.jsonl.gz`, one record per line, text under `field`.
    Jsonl { field: String },
    /// Every file is one plain-text document.
    Plain,
}

impl Default for CorpusFormat {
    fn default() -> Self {
        CorpusFormat::Jsonl {
            field: "text".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub format: CorpusFormat,
    pub workers: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            format: CorpusFormat::default(),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Partial {
    counts: Vec<u64>,
    docs: u64,
    skipped: u64,
    bytes: u64,
}

impl Partial {
    fn new(n: usize) -> Self {
        Self {
            counts: vec![0; n],
            docs: 0,
            skipped: 0,
            bytes: 0,
        }
    }

    fn absorb(mut self, other: Partial) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.docs += other.docs;
        self.skipped += other.skipped;
        self.bytes += other.bytes;
        self
    }
}

/// Shard files under `root` in path order.
pub fn list_shards(root: &Path, format: &CorpusFormat) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        let keep = match format {
            CorpusFormat::Jsonl { .. } => name.ends_with(".jsonl") || name.ends_with(".jsonl.gz"),
            CorpusFormat::Plain => !name.starts_with('.'),
        };
        if keep {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

fn open_shard(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    Ok(if gz {
        Box::new(BufReader::with_capacity(READ_BUFFER, MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::with_capacity(READ_BUFFER, file))
    })
}

/// Reads whole lines until roughly `BATCH_BYTES` have been collected.
fn next_batch(reader: &mut dyn BufRead, path: &Path) -> Result<Vec<Vec<u8>>> {
    let mut batch = Vec::new();
    let mut size = 0;
    while size < BATCH_BYTES {
        let mut line = Vec::new();
        let n = reader
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        size += n;
        batch.push(line);
    }
    Ok(batch)
}

/// Pulls one string field out of a JSON object, skipping everything else.
struct FieldSeed<'f>(&'f str);

impl<'de> DeserializeSeed<'de> for FieldSeed<'_> {
    type Value = Option<Cow<'de, str>>;

    fn deserialize<D: de::Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for FieldSeed<'_> {
    type Value = Option<Cow<'de, str>>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON object")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut found = None;
        while let Some(key) = map.next_key::<Cow<'de, str>>()? {
            if key == self.0 && found.is_none() {
                found = map.next_value::<MaybeStr<'de>>()?.0;
            } else {
                map.next_value::<IgnoredAny>()?;
            }
        }
        Ok(found)
    }
}

/// A string, or `None` for any other JSON value.
struct MaybeStr<'de>(Option<Cow<'de, str>>);

impl<'de> de::Deserialize<'de> for MaybeStr<'de> {
    fn deserialize<D: de::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = MaybeStr<'de>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("any JSON value")
            }
            fn visit_borrowed_str<E>(self, v: &'de str) -> Result<Self::Value, E> {
                Ok(MaybeStr(Some(Cow::Borrowed(v))))
            }
            fn visit_str<E>(self, v: &str) -> Result<Self::Value, E> {
                Ok(MaybeStr(Some(Cow::Owned(v.to_string()))))
            }
            fn visit_string<E>(self, v: String) -> Result<Self::Value, E> {
                Ok(MaybeStr(Some(Cow::Owned(v))))
            }
            fn visit_bool<E>(self, _: bool) -> Result<Self::Value, E> {
                Ok(MaybeStr(None))
            }
            fn visit_i64<E>(self, _: i64) -> Result<Self::Value, E> {
                Ok(MaybeStr(None))
            }
            fn visit_u64<E>(self, _: u64) -> Result<Self::Value, E> {
                Ok(MaybeStr(None))
            }
            fn visit_f64<E>(self, _: f64) -> Result<Self::Value, E> {
                Ok(MaybeStr(None))
            }
            fn visit_unit<E>(self) -> Result<Self::Value, E> {
                Ok(MaybeStr(None))
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut s: A) -> Result<Self::Value, A::Error> {
                while s.next_element::<IgnoredAny>()?.is_some() {}
                Ok(MaybeStr(None))
            }
            fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<Self::Value, A::Error> {
                while m.next_entry::<IgnoredAny, IgnoredAny>()?.is_some() {}
                Ok(MaybeStr(None))
            }
        }
        d.deserialize_any(V)
    }
}

/// Extracts the text field of one JSONL record; `None` if the line is not an
/// object or the field is missing or not a string.
pub fn extract_text<'a>(line: &'a str, field: &str) -> Option<Cow<'a, str>> {
    let mut de = serde_json::Deserializer::from_str(line);
    let text = FieldSeed(field).deserialize(&mut de).ok()?;
    de.end().ok()?;
    text
}

fn count_jsonl_lines(patterns: &PatternSet, lines: &[Vec<u8>], field: &str) -> Partial {
    let mut part = Partial::new(patterns.len());
    let mut scratch = Vec::new();
    for raw in lines {
        let line = String::from_utf8_lossy(raw);
        if line.trim().is_empty() {
            continue;
        }
        match extract_text(&line, field) {
            Some(text) => {
                part.docs += 1;
                part.bytes += text.len() as u64;
                patterns.count_into(text.as_bytes(), &mut part.counts, &mut scratch);
            }
            None => part.skipped += 1,
        }
    }
    part
}

fn count_plain_lines(patterns: &PatternSet, lines: &[Vec<u8>]) -> Partial {
    let mut part = Partial::new(patterns.len());
    let mut scratch = Vec::new();
    let mut chunk = Vec::new();
    for raw in lines {
        part.bytes += raw.len() as u64;
        chunk.clear();
        chunk.extend_from_slice(String::from_utf8_lossy(raw).as_bytes());
        patterns.count_into(&chunk, &mut part.counts, &mut scratch);
    }
    part
}

const LINES_PER_TASK: usize = 512;

fn scan_shard(patterns: &PatternSet, path: &Path, format: &CorpusFormat) -> Result<Partial> {
    let mut reader = open_shard(path)?;
    let mut total = Partial::new(patterns.len());
    loop {
        let batch = next_batch(reader.as_mut(), path)?;
        if batch.is_empty() {
            break;
        }
        // Lines never straddle a task, and no pattern contains a line break,
        // so splitting a plain-text file at lines does not change its counts.
        let part = batch
            .par_chunks(LINES_PER_TASK)
            .map(|lines| match format {
                CorpusFormat::Jsonl { field } => count_jsonl_lines(patterns, lines, field),
                CorpusFormat::Plain => count_plain_lines(patterns, lines),
            })
            .reduce(|| Partial::new(patterns.len()), Partial::absorb);
        total = total.absorb(part);
    }
    if *format == CorpusFormat::Plain {
        total.docs += 1;
    }
    Ok(total)
}

/// Counts pattern occurrences over every shard under `corpus`. Shard results
/// are integer sums, so the table does not depend on `workers` or on the
/// order in which shards finish.
pub fn count_corpus(patterns: &PatternSet, corpus: &Path, options: &ScanOptions) -> Result<CountTable> {
    let shards = list_shards(corpus, &options.format)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("starting worker pool: {e}")))?;
    let partials: Vec<Partial> = pool.install(|| {
        shards
            .par_iter()
            .map(|p| scan_shard(patterns, p, &options.format))
            .collect::<Result<_>>()
    })?;
    let total = partials
        .into_iter()
        .fold(Partial::new(patterns.len()), Partial::absorb);
    Ok(CountTable {
        corpus_id: corpus.display().to_string(),
        counts: patterns
            .names()
            .iter()
            .cloned()
            .zip(total.counts)
            .collect(),
        docs_scanned: total.docs,
        docs_skipped: total.skipped,
        bytes_scanned: total.bytes,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpuscount::build_patterns;
    use std::io::Write;

    #[test]
    fn extracts_text_field() {
        assert_eq!(extract_text(r#"{"text":"hi","meta":{"a":[1,2]}}"#, "text").as_deref(), Some("hi"));
        assert_eq!(extract_text(r#"{"meta":{"text":"no"},"text":"yes"}"#, "text").as_deref(), Some("yes"));
        assert_eq!(extract_text(r#"{"body":"x"}"#, "body").as_deref(), Some("x"));
        assert_eq!(extract_text(r#"{"text":"a\nb é"}"#, "text").as_deref(), Some("a\nb é"));
        assert_eq!(extract_text(r#"{"meta":1}"#, "text"), None);
        assert_eq!(extract_text(r#"{"text":null}"#, "text"), None);
        assert_eq!(extract_text(r#"[1,2]"#, "text"), None);
        assert_eq!(extract_text(r#"{"text":"x"} trailing"#, "text"), None);
        assert_eq!(extract_text("not json", "text"), None);
    }

    #[test]
    fn empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let p = build_patterns(&["France"]).unwrap();
        let t = count_corpus(&p, dir.path(), &ScanOptions::default()).unwrap();
        assert_eq!(t.get("France"), Some(0));
        assert_eq!(t.docs_scanned, 0);
    }

    #[test]
    fn missing_directory() {
        let p = build_patterns(&["France"]).unwrap();
        let err = count_corpus(&p, Path::new("/nonexistent/corpus"), &ScanOptions::default()).unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn jsonl_gzip_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("a.jsonl"),
            "{\"text\":\"France and Chad\"}\n{\"meta\":1}\n\n{\"text\":\"Chad.\"}\n",
        )
        .unwrap();
        let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        gz.write_all(b"{\"text\":\"Chad, Chadian\"}\nbroken{\n").unwrap();
        std::fs::write(dir.path().join("b.jsonl.gz"), gz.finish().unwrap()).unwrap();
        std::fs::write(dir.path().join("ignored.txt"), "Chad Chad Chad").unwrap();
        let p = build_patterns(&["France", "Chad"]).unwrap();
        let t = count_corpus(&p, dir.path(), &ScanOptions::default()).unwrap();
        assert_eq!(t.get("Chad"), Some(3));
        assert_eq!(t.get("France"), Some(1));
        assert_eq!(t.docs_scanned, 3);
        assert_eq!(t.docs_skipped, 2);
        assert_eq!(t.bytes_scanned, (15 + 5 + 13) as u64);
    }

    #[test]
    fn plain_mode() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("one.txt"), "Peru\nPeru's coast\nPeruvian\n").unwrap();
        std::fs::write(dir.path().join("two"), "Peru").unwrap();
        let p = build_patterns(&["Peru"]).unwrap();
        let opts = ScanOptions {
            format: CorpusFormat::Plain,
            workers: 2,
        };
        let t = count_corpus(&p, dir.path(), &opts).unwrap();
        assert_eq!(t.get("Peru"), Some(3));
        assert_eq!(t.docs_scanned, 2);
        assert_eq!(t.bytes_scanned, 27 + 4);
    }

    #[test]
    fn custom_field() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.jsonl"), "{\"body\":\"Chad\",\"text\":\"France\"}\n").unwrap();
        let p = build_patterns(&["France", "Chad"]).unwrap();
        let opts = ScanOptions {
            format: CorpusFormat::Jsonl { field: "body".into() },
            workers: 1,
        };
        let t = count_corpus(&p, dir.path(), &opts).unwrap();
        assert_eq!((t.get("Chad"), t.get("France")), (Some(1), Some(0)));
    }
}
