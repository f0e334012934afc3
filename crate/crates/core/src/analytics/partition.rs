use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::tokenizer::Vocabulary;

/// Bitmask of sources; bit `i` stands for `sources[i]`.
pub type SourceMask = u64;

pub const MAX_SOURCES: usize = 64;

/// Assignment of every element of a union to the cell naming exactly the
/// sources that contain it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    pub sources: Vec<String>,
    pub universe_size: usize,
    /// Non-empty cells only.
    pub cells: BTreeMap<SourceMask, BTreeSet<String>>,
}

impl PartitionReport {
    pub fn cell_names(&self, mask: SourceMask) -> Vec<&str> {
        mask_names(&self.sources, mask)
    }

    pub fn cell_sizes(&self) -> BTreeMap<SourceMask, usize> {
        self.cells.iter().map(|(m, s)| (*m, s.len())).collect()
    }

    /// Size of one source's own set, recovered from the cells.
    pub fn source_size(&self, index: usize) -> usize {
        self.cells
            .iter()
            .filter(|(m, _)| *m & (1 << index) != 0)
            .map(|(_, s)| s.len())
            .sum()
    }
}

pub(crate) fn mask_names(sources: &[String], mask: SourceMask) -> Vec<&str> {
    sources
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, s)| s.as_str())
        .collect()
}

fn check_sources(n: usize, needed: usize) -> Result<(), AnalyticsError> {
    if n < needed {
        return Err(AnalyticsError::TooFewSources { needed, found: n });
    }
    if n > MAX_SOURCES {
        return Err(AnalyticsError::TooManySources { found: n });
    }
    Ok(())
}

/// Partitions the union of named sets. Needs at least two sets.
pub fn partition_sets<S: AsRef<str>>(
    named: &[(String, Vec<S>)],
) -> Result<PartitionReport, AnalyticsError> {
    check_sources(named.len(), 2)?;
    let mut membership: BTreeMap<&str, SourceMask> = BTreeMap::new();
    for (i, (_, items)) in named.iter().enumerate() {
        for item in items {
            *membership.entry(item.as_ref()).or_insert(0) |= 1 << i;
        }
    }
    let mut cells: BTreeMap<SourceMask, BTreeSet<String>> = BTreeMap::new();
    for (item, mask) in &membership {
        cells.entry(*mask).or_default().insert(item.to_string());
    }
    Ok(PartitionReport {
        sources: named.iter().map(|(n, _)| n.clone()).collect(),
        universe_size: membership.len(),
        cells,
    })
}

/// Partitions the token sets of two or more vocabularies.
pub fn vocab_overlap(vocabs: &[(&str, &Vocabulary)]) -> Result<PartitionReport, AnalyticsError> {
    let named: Vec<(String, Vec<&str>)> = vocabs
        .iter()
        .map(|(name, v)| (name.to_string(), v.tokens().collect()))
        .collect();
    partition_sets(&named)
}

/// Per-example correctness of several models on one test set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessMatrix {
    pub models: Vec<String>,
    pub rows: Vec<Vec<bool>>,
}

impl CorrectnessMatrix {
    pub fn new(models: Vec<String>, rows: Vec<Vec<bool>>) -> Result<Self, AnalyticsError> {
        check_sources(models.len(), 1).map_err(|e| match e {
            AnalyticsError::TooFewSources { .. } => AnalyticsError::NoModels,
            other => other,
        })?;
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != models.len()) {
            return Err(AnalyticsError::RaggedMatrix {
                row,
                expected: models.len(),
                found: r.len(),
            });
        }
        Ok(Self { models, rows })
    }

    /// Builds the matrix from per-model correctness columns.
    pub fn from_columns(columns: Vec<(String, Vec<bool>)>) -> Result<Self, AnalyticsError> {
        let n = columns.first().map_or(0, |(_, c)| c.len());
        if let Some((i, (_, c))) = columns.iter().enumerate().find(|(_, (_, c))| c.len() != n) {
            return Err(AnalyticsError::RaggedMatrix {
                row: i,
                expected: n,
                found: c.len(),
            });
        }
        let rows = (0..n).map(|r| columns.iter().map(|(_, c)| c[r]).collect()).collect();
        Self::new(columns.into_iter().map(|(m, _)| m).collect(), rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessReport {
    pub models: Vec<String>,
    pub total: usize,
    /// Example indices per mask of models that got them right; mask 0 holds
    /// the examples no model got right.
    pub cells: BTreeMap<SourceMask, Vec<usize>>,
    pub model_accuracy: Vec<f64>,
    /// Examples at least one model got right.
    pub any_correct: usize,
    /// `any_correct / total`: accuracy of an oracle that picks a right model
    /// whenever one exists.
    pub oracle_bound: f64,
}

impl CorrectnessReport {
    pub fn cell_names(&self, mask: SourceMask) -> Vec<&str> {
        mask_names(&self.models, mask)
    }
}

/// Ratio of examples some model got right; 0 for an empty test set.
pub fn oracle_ceiling(any_correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        any_correct as f64 / total as f64
    }
}

pub fn correctness_sets(matrix: &CorrectnessMatrix) -> CorrectnessReport {
    let mut cells: BTreeMap<SourceMask, Vec<usize>> = BTreeMap::new();
    let mut right = vec![0usize; matrix.models.len()];
    for (i, row) in matrix.rows.iter().enumerate() {
        let mut mask = 0;
        for (m, ok) in row.iter().enumerate() {
            if *ok {
                mask |= 1 << m;
                right[m] += 1;
            }
        }
        cells.entry(mask).or_default().push(i);
    }
    let total = matrix.rows.len();
    let any_correct = total - cells.get(&0).map_or(0, Vec::len);
    CorrectnessReport {
        models: matrix.models.clone(),
        total,
        model_accuracy: right.iter().map(|r| oracle_ceiling(*r, total)).collect(),
        any_correct,
        oracle_bound: oracle_ceiling(any_correct, total),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(sets: &[(&str, &[&str])]) -> Vec<(String, Vec<String>)> {
        sets.iter()
            .map(|(n, s)| (n.to_string(), s.iter().map(|t| t.to_string()).collect()))
            .collect()
    }

    #[test]
    fn identical_and_disjoint() {
        let r = partition_sets(&named(&[("A", &["x", "y"]), ("B", &["y", "x"])])).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[&0b11].len(), 2);
        assert_eq!(r.cell_names(0b11), ["A", "B"]);

        let r = partition_sets(&named(&[("A", &["x"]), ("B", &["y", "z"])])).unwrap();
        assert_eq!(r.cell_sizes(), BTreeMap::from([(0b01, 1), (0b10, 2)]));
        assert_eq!(r.universe_size, 3);
        assert_eq!(r.source_size(1), 2);
    }

    #[test]
    fn needs_two_sources() {
        assert!(matches!(
            partition_sets(&named(&[("A", &["x"])])),
            Err(AnalyticsError::TooFewSources { found: 1, .. })
        ));
    }

    #[test]
    fn correctness_examples() {
        let m = CorrectnessMatrix::new(vec!["m".into()], vec![vec![true]; 4]).unwrap();
        let r = correctness_sets(&m);
        assert_eq!(r.oracle_bound, r.model_accuracy[0]);

        let m = CorrectnessMatrix::from_columns(vec![
            ("a".into(), vec![true, true, false, false]),
            ("b".into(), vec![false, false, true, true]),
        ])
        .unwrap();
        let r = correctness_sets(&m);
        assert_eq!(r.oracle_bound, 1.0);
        assert!(!r.cells.contains_key(&0));

        assert!(matches!(
            CorrectnessMatrix::new(vec!["a".into(), "b".into()], vec![vec![true, false], vec![true]]),
            Err(AnalyticsError::RaggedMatrix { row: 1, expected: 2, found: 1 })
        ));
        assert!(matches!(CorrectnessMatrix::new(vec![], vec![]), Err(AnalyticsError::NoModels)));
    }

    #[test]
    fn reference_ceiling() {
        assert!((oracle_ceiling(4345, 5314) - 0.818).abs() < 5e-4);
    }
}
