//! Rational agents: effort choice, type draw and answers.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contract::{effort_threshold, ContractParams};
use crate::{Error, Pair, Result};

/// The hidden order of the real items. `rank[item]` is the item's score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    rank: Vec<usize>,
}

impl GroundTruth {
    /// Item `i` has score `i`.
    pub fn identity(n: usize) -> Self {
        GroundTruth { rank: (0..n).collect() }
    }

    /// A uniformly random strict order over `n` items.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut rank: Vec<usize> = (0..n).collect();
        rank.shuffle(rng);
        GroundTruth { rank }
    }

    /// Builds from explicit scores; they must be a permutation of `0..n`.
    pub fn from_ranks(rank: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; rank.len()];
        for &r in &rank {
            if r >= rank.len() || std::mem::replace(&mut seen[r], true) {
                return Err(Error::invalid("ranks must be a permutation of 0..n"));
            }
        }
        Ok(GroundTruth { rank })
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    pub fn orientation(&self, pair: Pair) -> Orientation {
        orient(&self.rank, pair)
    }
}

/// Which item of a [`Pair`] has the smaller score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    LoFirst,
    HiFirst,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::LoFirst => Orientation::HiFirst,
            Orientation::HiFirst => Orientation::LoFirst,
        }
    }
}

fn orient(rank: &[usize], pair: Pair) -> Orientation {
    if rank[pair.lo] < rank[pair.hi] {
        Orientation::LoFirst
    } else {
        Orientation::HiFirst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentType {
    Good,
    Bad,
}

/// What one agent brings to a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    /// Per-comparison disutility when exerting effort.
    pub psi: f64,
    /// Personal P[good | effort].
    pub pi: f64,
    pub effort: bool,
    /// Unset until [`draw_type`] runs.
    pub kind: Option<AgentType>,
}

impl AgentProfile {
    pub fn new(psi: f64, pi: f64) -> Self {
        AgentProfile {
            psi,
            pi: pi.clamp(0.0, 1.0),
            effort: false,
            kind: None,
        }
    }
}

/// Relative slack under which `ψᵢ` and the cutoff count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Effort iff `ψᵢ` does not exceed the contract's cutoff. Ties exert effort.
pub fn decide_effort(profile: &AgentProfile, params: &ContractParams) -> bool {
    let cutoff = effort_threshold(params);
    profile.psi <= cutoff + TIE_TOLERANCE * cutoff.abs()
}

/// Bernoulli(πᵢ) after effort, always bad without it.
pub fn draw_type<R: Rng + ?Sized>(profile: &AgentProfile, rng: &mut R) -> AgentType {
    if profile.effort && rng.random_bool(profile.pi) {
        AgentType::Good
    } else {
        AgentType::Bad
    }
}

/// The order an agent answers from: the truth, or one private random permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerSource<'a> {
    Good(&'a GroundTruth),
    Bad { rank: Vec<usize> },
}

impl<'a> AnswerSource<'a> {
    /// Source for an agent of the given type; bad agents draw their permutation here.
    pub fn for_type<R: Rng + ?Sized>(kind: AgentType, truth: &'a GroundTruth, rng: &mut R) -> Self {
        match kind {
            AgentType::Good => AnswerSource::Good(truth),
            AgentType::Bad => AnswerSource::Bad {
                rank: GroundTruth::random(truth.len(), rng).rank,
            },
        }
    }

    fn ranks(&self) -> &[usize] {
        match self {
            AnswerSource::Good(truth) => &truth.rank,
            AnswerSource::Bad { rank } => rank,
        }
    }

    pub fn items(&self) -> usize {
        self.ranks().len()
    }

    /// Unchecked answer; the caller guarantees both items are real.
    pub(crate) fn answer_unchecked(&self, pair: Pair) -> Orientation {
        orient(self.ranks(), pair)
    }
}

/// Answer one comparison. Hallucinated or unknown items are refused.
pub fn answer(source: &AnswerSource<'_>, pair: Pair) -> Result<Orientation> {
    let n = source.items();
    if pair.hi >= n {
        return Err(Error::invalid(format!(
            "item {} is not one of the {n} real items",
            pair.hi
        )));
    }
    Ok(source.answer_unchecked(pair))
}
