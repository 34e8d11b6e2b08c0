use std::collections::HashSet;

use aho_corasick::{AhoCorasick, MatchKind};

use crate::error::{Error, Result};

/// Country names compiled into one automaton for a single pass over text.
#[derive(Debug, Clone)]
pub struct PatternSet {
    names: Vec<String>,
    automaton: AhoCorasick,
    boundary: bool,
}

pub fn build_patterns<S: AsRef<str>>(countries: &[S]) -> Result<PatternSet> {
    if countries.is_empty() {
        return Err(Error::invalid("pattern list is empty"));
    }
    let mut seen = HashSet::new();
    let mut names = Vec::with_capacity(countries.len());
    for (i, c) in countries.iter().enumerate() {
        let name = c.as_ref();
        if name.is_empty() {
            return Err(Error::invalid(format!("pattern {i} is empty")));
        }
        if name.contains(['\n', '\r']) {
            return Err(Error::invalid(format!("pattern {name:?} contains a line break")));
        }
        if !seen.insert(name) {
            return Err(Error::invalid(format!("duplicate pattern {name:?}")));
        }
        names.push(name.to_string());
    }
    let automaton = AhoCorasick::builder()
        .match_kind(MatchKind::Standard)
        .build(&names)
        .map_err(|e| Error::invalid(format!("building pattern automaton: {e}")))?;
    Ok(PatternSet {
        names,
        automaton,
        boundary: true,
    })
}

#[inline]
fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

impl PatternSet {
    /// Toggles the word-boundary requirement (on by default).
    pub fn with_boundary(mut self, boundary: bool) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn boundary(&self) -> bool {
        self.boundary
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Adds the occurrences in `text` to `counts` (indexed like `names()`).
    ///
    /// An occurrence is kept when the bytes just outside it are absent or not
    /// ASCII alphanumeric (if boundaries are on), and when it starts at or
    /// after the end of the previous kept occurrence of the same pattern.
    /// Different patterns are counted independently even if they overlap.
    pub fn count_into(&self, text: &[u8], counts: &mut [u64], last_end: &mut Vec<usize>) {
        debug_assert_eq!(counts.len(), self.names.len());
        last_end.clear();
        last_end.resize(self.names.len(), 0);
        // Overlapping matches arrive ordered by end offset, which for a single
        // pattern is also start order.
        for m in self.automaton.find_overlapping_iter(text) {
            let (start, end) = (m.start(), m.end());
            let p = m.pattern().as_usize();
            if start < last_end[p] {
                continue;
            }
            if self.boundary
                && ((start > 0 && is_word_byte(text[start - 1]))
                    || (end < text.len() && is_word_byte(text[end])))
            {
                continue;
            }
            counts[p] += 1;
            last_end[p] = end;
        }
    }

    pub fn count_document(&self, text: &str) -> Vec<u64> {
        let mut counts = vec![0; self.names.len()];
        self.count_into(text.as_bytes(), &mut counts, &mut Vec::new());
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(patterns: &[&str], text: &str) -> Vec<u64> {
        build_patterns(patterns).unwrap().count_document(text)
    }

    #[test]
    fn build_errors() {
        assert_eq!(build_patterns(&["France", "United States"]).unwrap().len(), 2);
        assert!(build_patterns(&["France", "France"]).is_err());
        assert!(build_patterns(&["France", ""]).is_err());
        assert!(build_patterns::<&str>(&[]).is_err());
    }

    #[test]
    fn boundary_rule() {
        assert_eq!(count(&["France"], "France and Francemania; France."), vec![2]);
        assert_eq!(count(&["Chad"], "Chad? Chad! chad"), vec![2]);
        assert_eq!(count(&["Chad"], "Chadwick NotChad Chad2 _Chad_"), vec![1]);
    }

    #[test]
    fn case_sensitive() {
        assert_eq!(count(&["France"], "france FRANCE"), vec![0]);
    }

    #[test]
    fn without_boundary() {
        let p = build_patterns(&["France"]).unwrap().with_boundary(false);
        assert_eq!(p.count_document("France and Francemania; France."), vec![3]);
    }

    #[test]
    fn different_patterns_overlap_independently() {
        assert_eq!(
            count(&["Guinea", "Papua New Guinea", "New Guinea"], "Papua New Guinea."),
            vec![1, 1, 1]
        );
        assert_eq!(count(&["Niger", "Nigeria"], "Nigeria, Niger"), vec![1, 1]);
    }

    #[test]
    fn same_pattern_does_not_overlap() {
        // both windows pass the boundary test, only the first is kept
        assert_eq!(count(&["a a"], "a a a"), vec![1]);
        let p = build_patterns(&["aa"]).unwrap().with_boundary(false);
        assert_eq!(p.count_document("aaaaa"), vec![2]);
    }

    #[test]
    fn multibyte_neighbours_are_boundaries() {
        assert_eq!(count(&["Peru"], "éPeruü"), vec![1]);
        assert_eq!(count(&["Côte d'Ivoire"], "la Côte d'Ivoire!"), vec![1]);
    }
}
