use std::collections::BTreeMap;

use super::SegmentArchive;
use crate::{Error, Result};

/// Word label to class index, assigned in sorted label order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let sorted: std::collections::BTreeSet<&str> = labels.into_iter().collect();
        Self {
            index: sorted
                .into_iter()
                .enumerate()
                .map(|(i, l)| (l.to_string(), i))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn class_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Labels in class-index order.
    pub fn labels(&self) -> Vec<&str> {
        self.index.keys().map(String::as_str).collect()
    }
}

/// Keeps the segments whose label occurs at least `min_count` times.
pub fn vocab_filter(
    archive: &SegmentArchive,
    min_count: usize,
) -> Result<(SegmentArchive, Vocabulary)> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be >= 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in archive.iter() {
        *counts.entry(s.word_label.as_str()).or_default() += 1;
    }
    let keep: Vec<usize> = archive
        .iter()
        .enumerate()
        .filter(|(_, s)| counts[s.word_label.as_str()] >= min_count)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::Data(format!(
            "no word type occurs at least {min_count} times"
        )));
    }
    let filtered = archive.select(&keep);
    let vocab = Vocabulary::from_labels(filtered.iter().map(|s| s.word_label.as_str()));
    Ok((filtered, vocab))
}
