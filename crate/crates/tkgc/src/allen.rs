//! Allen's interval calculus: classification of interval pairs into exactly
//! one of the 13 relations, converse inversion, and the candidate-year
//! ranges implied by a grounded Allen constraint.
//!
//! Classification uses raw endpoint comparisons in a guarded order so that
//! the 13 relations stay exhaustive and pairwise disjoint even for instant
//! intervals `[y, y]`: equality of both endpoints is checked first, then the
//! disjoint/adjacent cases, then the nine interior cases. The order is
//! converse-consistent: `classify(a, b)` is always the converse of
//! `classify(b, a)`.

use serde::{Deserialize, Serialize};

use crate::tkg::{TimeInterval, TimeVocab, Year};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllenRelation {
    Before,
    After,
    Meets,
    MetBy,
    Overlaps,
    OverlappedBy,
    Starts,
    StartedBy,
    During,
    Contains,
    Finishes,
    FinishedBy,
    Equals,
}

pub const ALL_ALLEN: [AllenRelation; 13] = [
    AllenRelation::Before,
    AllenRelation::After,
    AllenRelation::Meets,
    AllenRelation::MetBy,
    AllenRelation::Overlaps,
    AllenRelation::OverlappedBy,
    AllenRelation::Starts,
    AllenRelation::StartedBy,
    AllenRelation::During,
    AllenRelation::Contains,
    AllenRelation::Finishes,
    AllenRelation::FinishedBy,
    AllenRelation::Equals,
];

impl AllenRelation {
    /// Stable index into embedding tables.
    pub fn idx(self) -> usize {
        self as usize
    }

    /// Lowercase serialization name.
    pub fn name(self) -> &'static str {
        match self {
            AllenRelation::Before => "before",
            AllenRelation::After => "after",
            AllenRelation::Meets => "meets",
            AllenRelation::MetBy => "met_by",
            AllenRelation::Overlaps => "overlaps",
            AllenRelation::OverlappedBy => "overlapped_by",
            AllenRelation::Starts => "starts",
            AllenRelation::StartedBy => "started_by",
            AllenRelation::During => "during",
            AllenRelation::Contains => "contains",
            AllenRelation::Finishes => "finishes",
            AllenRelation::FinishedBy => "finished_by",
            AllenRelation::Equals => "equals",
        }
    }

    /// CamelCase name used when rendering rules for humans.
    pub fn display_name(self) -> &'static str {
        match self {
            AllenRelation::Before => "Before",
            AllenRelation::After => "After",
            AllenRelation::Meets => "Meets",
            AllenRelation::MetBy => "MetBy",
            AllenRelation::Overlaps => "Overlaps",
            AllenRelation::OverlappedBy => "OverlappedBy",
            AllenRelation::Starts => "Starts",
            AllenRelation::StartedBy => "StartedBy",
            AllenRelation::During => "During",
            AllenRelation::Contains => "Contains",
            AllenRelation::Finishes => "Finishes",
            AllenRelation::FinishedBy => "FinishedBy",
            AllenRelation::Equals => "Equals",
        }
    }
}

impl std::fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AllenRelation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_ALLEN
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown Allen relation `{s}`"))
    }
}

/// The unique Allen relation holding between `p` and `q`.
pub fn classify(p: TimeInterval, q: TimeInterval) -> AllenRelation {
    debug_assert!(p.start <= p.end && q.start <= q.end);
    if p.start == q.start && p.end == q.end {
        AllenRelation::Equals
    } else if p.end < q.start {
        AllenRelation::Before
    } else if q.end < p.start {
        AllenRelation::After
    } else if p.end == q.start {
        AllenRelation::Meets
    } else if q.end == p.start {
        AllenRelation::MetBy
    } else if p.start == q.start {
        if p.end < q.end {
            AllenRelation::Starts
        } else {
            AllenRelation::StartedBy
        }
    } else if p.end == q.end {
        if p.start > q.start {
            AllenRelation::Finishes
        } else {
            AllenRelation::FinishedBy
        }
    } else if p.start < q.start {
        if p.end < q.end {
            AllenRelation::Overlaps
        } else {
            AllenRelation::Contains
        }
    } else if p.end > q.end {
        AllenRelation::OverlappedBy
    } else {
        AllenRelation::During
    }
}

/// Converse relation: `invert(classify(a, b)) == classify(b, a)`.
pub fn invert(a: AllenRelation) -> AllenRelation {
    match a {
        AllenRelation::Before => AllenRelation::After,
        AllenRelation::After => AllenRelation::Before,
        AllenRelation::Meets => AllenRelation::MetBy,
        AllenRelation::MetBy => AllenRelation::Meets,
        AllenRelation::Overlaps => AllenRelation::OverlappedBy,
        AllenRelation::OverlappedBy => AllenRelation::Overlaps,
        AllenRelation::Starts => AllenRelation::StartedBy,
        AllenRelation::StartedBy => AllenRelation::Starts,
        AllenRelation::During => AllenRelation::Contains,
        AllenRelation::Contains => AllenRelation::During,
        AllenRelation::Finishes => AllenRelation::FinishedBy,
        AllenRelation::FinishedBy => AllenRelation::Finishes,
        AllenRelation::Equals => AllenRelation::Equals,
    }
}

fn years(vocab: &TimeVocab, ids: std::ops::Range<usize>) -> Vec<Year> {
    vocab.years()[ids].to_vec()
}

/// All vocabulary years `t` such that some valid `T1` starting at `t`
/// satisfies `a(T1, t2)`, with the unknown end existentially quantified over
/// the vocabulary. Empty when the constraint is unsatisfiable.
pub fn candidate_start_range(a: AllenRelation, t2: TimeInterval, vocab: &TimeVocab) -> Vec<Year> {
    let (b, e) = (t2.start, t2.end);
    let instant = b == e;
    let some_inside = !vocab.ids_in_open(b, e).is_empty();
    let some_above_end = !vocab.ids_above(e).is_empty();
    match a {
        AllenRelation::Equals => {
            if vocab.contains(b) && vocab.contains(e) {
                vec![b]
            } else {
                vec![]
            }
        }
        AllenRelation::Before => years(vocab, vocab.ids_below(b)),
        AllenRelation::After => years(vocab, vocab.ids_above(e)),
        AllenRelation::Meets => {
            if !vocab.contains(b) {
                vec![]
            } else if instant {
                years(vocab, vocab.ids_below(b))
            } else {
                years(vocab, vocab.ids_at_most(b))
            }
        }
        AllenRelation::MetBy => {
            let ok = vocab.contains(e) && (!instant || some_above_end);
            if ok {
                vec![e]
            } else {
                vec![]
            }
        }
        AllenRelation::Starts => {
            if vocab.contains(b) && some_inside {
                vec![b]
            } else {
                vec![]
            }
        }
        AllenRelation::StartedBy => {
            if !instant && vocab.contains(b) && some_above_end {
                vec![b]
            } else {
                vec![]
            }
        }
        AllenRelation::Finishes => {
            if vocab.contains(e) {
                years(vocab, vocab.ids_in_open(b, e))
            } else {
                vec![]
            }
        }
        AllenRelation::FinishedBy => {
            if !instant && vocab.contains(e) {
                years(vocab, vocab.ids_below(b))
            } else {
                vec![]
            }
        }
        AllenRelation::Overlaps => {
            if some_inside {
                years(vocab, vocab.ids_below(b))
            } else {
                vec![]
            }
        }
        AllenRelation::OverlappedBy => {
            if some_above_end {
                years(vocab, vocab.ids_in_open(b, e))
            } else {
                vec![]
            }
        }
        AllenRelation::During => years(vocab, vocab.ids_in_open(b, e)),
        AllenRelation::Contains => {
            if some_above_end {
                years(vocab, vocab.ids_below(b))
            } else {
                vec![]
            }
        }
    }
}

/// Mirror of [`candidate_start_range`] for the unknown end year, with the
/// unknown start existentially quantified over the vocabulary.
pub fn candidate_end_range(a: AllenRelation, t2: TimeInterval, vocab: &TimeVocab) -> Vec<Year> {
    let (b, e) = (t2.start, t2.end);
    let instant = b == e;
    let some_inside = !vocab.ids_in_open(b, e).is_empty();
    let some_below_start = !vocab.ids_below(b).is_empty();
    match a {
        AllenRelation::Equals => {
            if vocab.contains(b) && vocab.contains(e) {
                vec![e]
            } else {
                vec![]
            }
        }
        AllenRelation::Before => years(vocab, vocab.ids_below(b)),
        AllenRelation::After => years(vocab, vocab.ids_above(e)),
        AllenRelation::Meets => {
            let ok = vocab.contains(b) && (!instant || some_below_start);
            if ok {
                vec![b]
            } else {
                vec![]
            }
        }
        AllenRelation::MetBy => {
            if !vocab.contains(e) {
                vec![]
            } else if instant {
                years(vocab, vocab.ids_above(e))
            } else {
                years(vocab, vocab.ids_at_least(e))
            }
        }
        AllenRelation::Starts => {
            if vocab.contains(b) {
                years(vocab, vocab.ids_in_open(b, e))
            } else {
                vec![]
            }
        }
        AllenRelation::StartedBy => {
            if !instant && vocab.contains(b) {
                years(vocab, vocab.ids_above(e))
            } else {
                vec![]
            }
        }
        AllenRelation::Finishes => {
            if vocab.contains(e) && some_inside {
                vec![e]
            } else {
                vec![]
            }
        }
        AllenRelation::FinishedBy => {
            if !instant && vocab.contains(e) && some_below_start {
                vec![e]
            } else {
                vec![]
            }
        }
        AllenRelation::Overlaps => {
            if some_below_start {
                years(vocab, vocab.ids_in_open(b, e))
            } else {
                vec![]
            }
        }
        AllenRelation::OverlappedBy => {
            if some_inside {
                years(vocab, vocab.ids_above(e))
            } else {
                vec![]
            }
        }
        AllenRelation::During => years(vocab, vocab.ids_in_open(b, e)),
        AllenRelation::Contains => {
            if some_below_start {
                years(vocab, vocab.ids_above(e))
            } else {
                vec![]
            }
        }
    }
}
