//! Year vocabulary: the domain of time instances and the unit-scaled
//! distance between them.
//!
//! Distances operate on vocabulary ids, not raw years: the distinct years of
//! the TKG are sorted ascending, assigned ids 0..n-1, and the distance
//! between two years is their id difference divided by the maximum possible
//! id difference (n-1), so it always lies in [0, 1].

use serde::{Deserialize, Serialize};

use super::{TkgDataset, Year};
use crate::error::{Result, TkgcError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeVocab {
    years: Vec<Year>,
}

/// Collect every year occurring as an interval endpoint anywhere in the
/// dataset. Fails when fewer than two distinct years exist (the id-space
/// distance would be undefined).
pub fn build_time_vocab(dataset: &TkgDataset) -> Result<TimeVocab> {
    let mut years: Vec<Year> = [&dataset.train, &dataset.valid, &dataset.test]
        .into_iter()
        .flatten()
        .flat_map(|q| [q.interval.start, q.interval.end])
        .collect();
    years.sort_unstable();
    years.dedup();
    TimeVocab::from_years(years)
}

impl TimeVocab {
    /// Build from an explicit year list (deduplicated and sorted here).
    pub fn from_years(mut years: Vec<Year>) -> Result<Self> {
        years.sort_unstable();
        years.dedup();
        if years.len() < 2 {
            return Err(TkgcError::DegenerateVocab(years.len()));
        }
        Ok(Self { years })
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn max_id_diff(&self) -> usize {
        self.years.len() - 1
    }

    pub fn years(&self) -> &[Year] {
        &self.years
    }

    pub fn min_year(&self) -> Year {
        self.years[0]
    }

    pub fn max_year(&self) -> Year {
        *self.years.last().unwrap()
    }

    pub fn id_of(&self, year: Year) -> Option<usize> {
        self.years.binary_search(&year).ok()
    }

    pub fn contains(&self, year: Year) -> bool {
        self.id_of(year).is_some()
    }

    pub fn year(&self, id: usize) -> Year {
        self.years[id]
    }

    /// Ids of all vocabulary years strictly inside the open range `(lo, hi)`.
    pub fn ids_in_open(&self, lo: Year, hi: Year) -> std::ops::Range<usize> {
        let a = self.years.partition_point(|&y| y <= lo);
        let b = self.years.partition_point(|&y| y < hi);
        a..b.max(a)
    }

    /// Ids of vocabulary years `< hi`.
    pub fn ids_below(&self, hi: Year) -> std::ops::Range<usize> {
        0..self.years.partition_point(|&y| y < hi)
    }

    /// Ids of vocabulary years `> lo`.
    pub fn ids_above(&self, lo: Year) -> std::ops::Range<usize> {
        self.years.partition_point(|&y| y <= lo)..self.years.len()
    }

    /// Ids of vocabulary years `<= hi`.
    pub fn ids_at_most(&self, hi: Year) -> std::ops::Range<usize> {
        0..self.years.partition_point(|&y| y <= hi)
    }

    /// Ids of vocabulary years `>= lo`.
    pub fn ids_at_least(&self, lo: Year) -> std::ops::Range<usize> {
        self.years.partition_point(|&y| y < lo)..self.years.len()
    }
}

/// Unit-scaled id-space distance between two vocabulary years.
pub fn time_distance(vocab: &TimeVocab, a: Year, b: Year) -> Result<f64> {
    let ia = vocab.id_of(a).ok_or(TkgcError::UnknownYear(a))?;
    let ib = vocab.id_of(b).ok_or(TkgcError::UnknownYear(b))?;
    Ok(ia.abs_diff(ib) as f64 / vocab.max_id_diff() as f64)
}
