//! Pessimistic post-processing and ranking recovery.
//!
//! A pair survives only if every surviving report agrees on it. Once two
//! reports disagree the pair is dropped for good, even if a later majority
//! would restore it.

use serde::Serialize;

use crate::engine::ComparisonReport;
use crate::simagents::{GroundTruth, Orientation};
use crate::{pair_count, Pair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Missing,
    Resolved(Orientation),
    Conflicted,
}

/// Every pair over `n` items, classified as resolved, conflicted or missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedComparisons {
    n: usize,
    slots: Vec<Slot>,
}

fn tri_index(n: usize, p: Pair) -> usize {
    p.lo * (2 * n - p.lo - 1) / 2 + (p.hi - p.lo - 1)
}

impl CondensedComparisons {
    pub fn items(&self) -> usize {
        self.n
    }

    pub fn get(&self, pair: Pair) -> Option<Orientation> {
        match self.slots[tri_index(self.n, pair)] {
            Slot::Resolved(o) => Some(o),
            _ => None,
        }
    }

    pub fn is_conflicted(&self, pair: Pair) -> bool {
        self.slots[tri_index(self.n, pair)] == Slot::Conflicted
    }

    fn all_pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        let n = self.n;
        (0..n).flat_map(move |a| (a + 1..n).map(move |b| Pair { lo: a, hi: b }))
    }

    pub fn resolved(&self) -> impl Iterator<Item = (Pair, Orientation)> + '_ {
        self.all_pairs().zip(&self.slots).filter_map(|(p, s)| match s {
            Slot::Resolved(o) => Some((p, *o)),
            _ => None,
        })
    }

    pub fn conflicted(&self) -> impl Iterator<Item = Pair> + '_ {
        self.all_pairs()
            .zip(&self.slots)
            .filter_map(|(p, s)| (*s == Slot::Conflicted).then_some(p))
    }

    pub fn missing(&self) -> impl Iterator<Item = Pair> + '_ {
        self.all_pairs()
            .zip(&self.slots)
            .filter_map(|(p, s)| (*s == Slot::Missing).then_some(p))
    }

    pub fn resolved_count(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Resolved(_))).count()
    }

    pub fn conflicted_count(&self) -> usize {
        self.slots.iter().filter(|s| **s == Slot::Conflicted).count()
    }

    pub fn missing_count(&self) -> usize {
        self.slots.iter().filter(|s| **s == Slot::Missing).count()
    }
}

/// Condenses surviving reports over `n` items.
///
/// Reports are read in the given order; the result does not depend on it.
pub fn post_process(survivors: &[ComparisonReport], n: usize) -> CondensedComparisons {
    let mut slots = vec![Slot::Missing; pair_count(n)];
    for report in survivors {
        let slot = &mut slots[tri_index(n, report.pair)];
        *slot = match *slot {
            Slot::Missing => Slot::Resolved(report.orientation),
            Slot::Resolved(o) if o == report.orientation => continue,
            Slot::Resolved(_) | Slot::Conflicted => Slot::Conflicted,
        };
    }
    CondensedComparisons { n, slots }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RecoveredRanking {
    /// `ranks[item]` is the recovered position of the item.
    Exact { ranks: Vec<usize> },
    Incomplete {
        unresolved: usize,
        /// All pairs resolved, but they do not form a total order.
        inconsistent: bool,
    },
}

impl RecoveredRanking {
    pub fn is_exact(&self) -> bool {
        matches!(self, RecoveredRanking::Exact { .. })
    }
}

/// Reads the order off a complete resolved set by counting, for each item,
/// how many items precede it. Never infers missing pairs.
pub fn recover_ranking(c: &CondensedComparisons) -> RecoveredRanking {
    let unresolved = pair_count(c.n) - c.resolved_count();
    if unresolved > 0 {
        return RecoveredRanking::Incomplete {
            unresolved,
            inconsistent: false,
        };
    }
    let mut below = vec![0usize; c.n];
    for (p, o) in c.resolved() {
        match o {
            Orientation::LoFirst => below[p.hi] += 1,
            Orientation::HiFirst => below[p.lo] += 1,
        }
    }
    let mut seen = vec![false; c.n];
    for &b in &below {
        if std::mem::replace(&mut seen[b], true) {
            return RecoveredRanking::Incomplete {
                unresolved: 0,
                inconsistent: true,
            };
        }
    }
    RecoveredRanking::Exact { ranks: below }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Accuracy {
    pub exact_match: bool,
    /// Resolved pairs whose orientation matches the truth.
    pub correct_pairs: usize,
}

pub fn accuracy_metrics(c: &CondensedComparisons, rec: &RecoveredRanking, truth: &GroundTruth) -> Accuracy {
    let correct_pairs = c.resolved().filter(|&(p, o)| truth.orientation(p) == o).count();
    let exact_match = match rec {
        RecoveredRanking::Exact { ranks } => ranks.as_slice() == truth.ranks(),
        RecoveredRanking::Incomplete { .. } => false,
    };
    Accuracy {
        exact_match,
        correct_pairs,
    }
}
