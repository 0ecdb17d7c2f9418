//! Contract-based crowdsourced ranking.
//!
//! A principal wants the total order of `n` items and hires `s` agents to
//! compare pairs. Each agent is paid only if every comparison on a small,
//! shared, secretly verified set of disjoint pairs is correct. The crate covers
//! the whole pipeline:
//!
//! - [`design`]: smallest-prime search, prime-field arithmetic and the
//!   resolvable "social golfer" schedule used to spread comparisons.
//! - [`assignment`]: the verified pair set and the per-agent group lists.
//! - [`contract`]: payment, verification and replication parameters for both
//!   the known-disutility and the sampled-disutility models.
//! - [`simagents`]: rational agents choosing effort and answering comparisons.
//! - [`engine`]: one round of the mechanism, flagging agents who fail verification.
//! - [`aggregate`]: conflict-discarding post-processing and ranking recovery.
//! - [`optimizer`]: principal utilities, the indifference threshold and the
//!   optimal number of incentivized agents.
//! - [`harness`]: seeded Monte-Carlo trials, noise injection, sweeps and CSV output.
//! - [`cli`]: the `crowdsort` command-line front end.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod aggregate;
pub mod assignment;
pub mod cli;
pub mod contract;
pub mod design;
pub mod engine;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod simagents;
pub mod stats;

pub use error::{Error, Result};

/// An unordered pair of distinct real items, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Pair {
    pub lo: usize,
    pub hi: usize,
}

impl Pair {
    /// Normalizes the order of `a` and `b`. Panics if `a == b`.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "a pair needs two distinct items");
        if a < b {
            Pair { lo: a, hi: b }
        } else {
            Pair { lo: b, hi: a }
        }
    }

    pub fn contains(&self, item: usize) -> bool {
        self.lo == item || self.hi == item
    }
}

/// Number of unordered pairs over `n` items.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}
