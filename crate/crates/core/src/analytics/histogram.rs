use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::attribution::ScoredRecord;

pub const DEFAULT_BIN_WIDTH: f64 = 0.01;

/// Closed score window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self, AnalyticsError> {
        if !(lo <= hi) {
            return Err(AnalyticsError::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Counts per half-open bin `[k·w, (k+1)·w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub range: Option<Window>,
    pub bins: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn new(bin_width: f64, range: Option<Window>) -> Result<Self, AnalyticsError> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(AnalyticsError::NonpositiveBin(bin_width));
        }
        Ok(Self {
            bin_width,
            range,
            bins: BTreeMap::new(),
        })
    }

    pub fn bin_bounds(&self, k: i64) -> (f64, f64) {
        (k as f64 * self.bin_width, (k + 1) as f64 * self.bin_width)
    }

    /// Bin holding `v`, consistent with [`Histogram::bin_bounds`] even where
    /// `v / w` rounds across an edge.
    pub fn bin_of(&self, v: f64) -> i64 {
        let mut k = (v / self.bin_width).floor() as i64;
        let (lo, hi) = self.bin_bounds(k);
        if v < lo {
            k -= 1;
        } else if v >= hi {
            k += 1;
        }
        k
    }

    /// Adds `v` if it is finite and inside the window; returns whether it was counted.
    pub fn add(&mut self, v: f64) -> bool {
        if !v.is_finite() || self.range.is_some_and(|r| !r.contains(v)) {
            return false;
        }
        *self.bins.entry(self.bin_of(v)).or_insert(0) += 1;
        true
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }
}

pub fn histogram(
    scores: impl IntoIterator<Item = f64>,
    bin_width: f64,
    range: Option<Window>,
) -> Result<Histogram, AnalyticsError> {
    let mut h = Histogram::new(bin_width, range)?;
    for s in scores {
        h.add(s);
    }
    Ok(h)
}

/// Histograms of token attribution scores, overall and per token string.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenHistograms {
    pub overall: Histogram,
    pub per_token: BTreeMap<String, Histogram>,
}

/// Bins every non-special token score of `records` (specials too when
/// `include_specials`), optionally restricted to a window.
pub fn attribution_histogram(
    records: &[ScoredRecord],
    bin_width: f64,
    range: Option<Window>,
    include_specials: bool,
) -> Result<TokenHistograms, AnalyticsError> {
    let mut overall = Histogram::new(bin_width, range)?;
    let mut per_token: BTreeMap<String, Histogram> = BTreeMap::new();
    for t in records
        .iter()
        .flat_map(|r| &r.tokens)
        .filter(|t| include_specials || !t.is_special)
    {
        if overall.add(t.score) {
            per_token
                .entry(t.token.clone())
                .or_insert_with(|| empty_like(&overall))
                .add(t.score);
        }
    }
    Ok(TokenHistograms { overall, per_token })
}

fn empty_like(h: &Histogram) -> Histogram {
    Histogram {
        bin_width: h.bin_width,
        range: h.range,
        bins: BTreeMap::new(),
    }
}
