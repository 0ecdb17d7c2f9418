//! One round of the mechanism: hand out `C_i = V ∪ W_i`, collect answers,
//! flag every agent that misses a verified pair, pay the rest.

use serde::Serialize;

use crate::assignment::AssignmentPlan;
use crate::simagents::{AgentProfile, AgentType, AnswerSource, GroundTruth, Orientation};
use crate::stats::{wilson, Estimate};
use crate::{Error, Pair, Result};

/// An agent together with the order it answers from.
#[derive(Debug, Clone)]
pub struct SimAgent<'a> {
    pub profile: AgentProfile,
    pub source: AnswerSource<'a>,
}

impl SimAgent<'_> {
    pub fn kind(&self) -> AgentType {
        match self.source {
            AnswerSource::Good(_) => AgentType::Good,
            AnswerSource::Bad { .. } => AgentType::Bad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComparisonReport {
    pub agent: usize,
    pub pair: Pair,
    pub orientation: Orientation,
    pub verified: bool,
}

/// Per-agent bookkeeping for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentLedger {
    pub psi: f64,
    pub pi: f64,
    pub effort: bool,
    pub kind: AgentType,
    pub flagged: bool,
    pub comparisons: usize,
    pub payment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    /// Indices of flagged agents, ascending.
    pub flagged: Vec<usize>,
    /// Every report from agents that were not flagged, in agent order.
    #[serde(skip)]
    pub survivors: Vec<ComparisonReport>,
    pub ledger: Vec<AgentLedger>,
    pub good: usize,
    pub bad: usize,
    pub bad_undetected: usize,
}

impl TrialOutcome {
    pub fn unflagged(&self) -> usize {
        self.ledger.len() - self.flagged.len()
    }

    pub fn payment_total(&self) -> f64 {
        self.ledger.iter().map(|a| a.payment).sum()
    }

    pub fn effort_count(&self) -> usize {
        self.ledger.iter().filter(|a| a.effort).count()
    }
}

/// Runs the protocol for every agent in index order.
///
/// Flagging looks only at verified answers. Unverified conflicts from
/// unflagged agents are left to [`crate::aggregate`].
pub fn crowdsort(
    plan: &AssignmentPlan,
    agents: &[SimAgent<'_>],
    truth: &GroundTruth,
    payment: f64,
) -> Result<TrialOutcome> {
    if agents.len() != plan.agents {
        return Err(Error::invalid(format!(
            "plan is for {} agents but {} were supplied",
            plan.agents,
            agents.len()
        )));
    }
    if truth.len() != plan.n || agents.iter().any(|a| a.source.items() != plan.n) {
        return Err(Error::invalid(
            "ground truth and answer sources must cover the plan's items",
        ));
    }

    let mut flagged = Vec::new();
    let mut survivors = Vec::new();
    let mut ledger = Vec::with_capacity(agents.len());
    let (mut good, mut bad, mut bad_undetected) = (0, 0, 0);

    for (i, agent) in agents.iter().enumerate() {
        let verified_answers: Vec<(Pair, Orientation)> = plan
            .verified
            .pairs
            .iter()
            .map(|&p| (p, agent.source.answer_unchecked(p)))
            .collect();
        let caught = verified_answers.iter().any(|&(p, o)| o != truth.orientation(p));
        let kind = agent.kind();
        match kind {
            AgentType::Good => good += 1,
            AgentType::Bad => bad += 1,
        }

        if caught {
            flagged.push(i);
        } else {
            if kind == AgentType::Bad {
                bad_undetected += 1;
            }
            survivors.extend(verified_answers.iter().map(|&(pair, orientation)| ComparisonReport {
                agent: i,
                pair,
                orientation,
                verified: true,
            }));
            survivors.extend(plan.unverified_pairs(i).map(|pair| ComparisonReport {
                agent: i,
                pair,
                orientation: agent.source.answer_unchecked(pair),
                verified: false,
            }));
        }

        ledger.push(AgentLedger {
            psi: agent.profile.psi,
            pi: agent.profile.pi,
            effort: agent.profile.effort,
            kind,
            flagged: caught,
            comparisons: plan.comparisons_for(i),
            payment: if caught { 0.0 } else { payment },
        });
    }

    Ok(TrialOutcome {
        flagged,
        survivors,
        ledger,
        good,
        bad,
        bad_undetected,
    })
}

/// Empirical detection failure rates across trials, with 95% Wilson intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionStats {
    /// Fraction of bad agents that escaped flagging.
    pub bad_undetected: Estimate,
    /// Fraction of trials with at least one unflagged bad agent.
    pub any_undetected: Estimate,
    pub bad_agents: u64,
    pub trials: u64,
}

pub fn detection_stats(outcomes: &[TrialOutcome]) -> Result<DetectionStats> {
    if outcomes.is_empty() {
        return Err(Error::invalid("detection statistics need at least one trial"));
    }
    let bad: u64 = outcomes.iter().map(|o| o.bad as u64).sum();
    let missed: u64 = outcomes.iter().map(|o| o.bad_undetected as u64).sum();
    let any = outcomes.iter().filter(|o| o.bad_undetected > 0).count() as u64;
    let trials = outcomes.len() as u64;
    Ok(DetectionStats {
        bad_undetected: wilson(missed, bad, 0.95),
        any_undetected: wilson(any, trials, 0.95),
        bad_agents: bad,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::build_plan;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agents<'a>(kinds: &[AgentType], truth: &'a GroundTruth, rng: &mut ChaCha8Rng) -> Vec<SimAgent<'a>> {
        kinds
            .iter()
            .map(|&k| SimAgent {
                profile: AgentProfile::new(0.0, 0.8),
                source: AnswerSource::for_type(k, truth, rng),
            })
            .collect()
    }

    #[test]
    fn all_good_agents_survive_and_cover_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = GroundTruth::random(30, &mut rng);
        let plan = build_plan(30, 10, 5, 3, 1).unwrap();
        let team = agents(&[AgentType::Good; 10], &truth, &mut rng);
        let out = crowdsort(&plan, &team, &truth, 1.5).unwrap();
        assert!(out.flagged.is_empty());
        assert!(out.survivors.iter().all(|r| r.orientation == truth.orientation(r.pair)));
        let mut counts = std::collections::HashMap::new();
        for r in out.survivors.iter().filter(|r| !r.verified) {
            *counts.entry(r.pair).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 435);
        assert!(counts.values().all(|&c| c >= 3));
        assert_eq!(out.payment_total(), 15.0);
    }

    #[test]
    fn lone_bad_agent_is_caught_at_the_expected_rate() {
        let truth = GroundTruth::identity(30);
        let plan = build_plan(30, 1, 12, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000u64;
        let mut caught = 0u64;
        for _ in 0..trials {
            let team = agents(&[AgentType::Bad], &truth, &mut rng);
            let out = crowdsort(&plan, &team, &truth, 1.0).unwrap();
            caught += out.flagged.len() as u64;
        }
        let p = 1.0 - 2f64.powi(-12);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let rate = caught as f64 / trials as f64;
        assert!((rate - p).abs() <= 3.0 * sigma + 1.0 / trials as f64, "rate {rate}");
    }

    #[test]
    fn all_bad_expected_flag_count() {
        let truth = GroundTruth::identity(20);
        let v = 3;
        let plan = build_plan(20, 40, v, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let trials = 500;
        let mut total = 0usize;
        for _ in 0..trials {
            let team = agents(&[AgentType::Bad; 40], &truth, &mut rng);
            total += crowdsort(&plan, &team, &truth, 1.0).unwrap().flagged.len();
        }
        let expected = 40.0 * (1.0 - 0.5f64.powi(v as i32));
        let per_trial_sd = (40.0 * 0.875 * 0.125f64).sqrt();
        let mean = total as f64 / trials as f64;
        assert!((mean - expected).abs() <= 3.0 * per_trial_sd / (trials as f64).sqrt());
    }

    #[test]
    fn no_verification_means_no_detection() {
        let truth = GroundTruth::identity(16);
        let plan = build_plan(16, 8, 0, 2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let outcomes: Vec<TrialOutcome> = (0..20)
            .map(|_| {
                let team = agents(&[AgentType::Bad; 8], &truth, &mut rng);
                crowdsort(&plan, &team, &truth, 1.0).unwrap()
            })
            .collect();
        let stats = detection_stats(&outcomes).unwrap();
        assert_eq!(stats.bad_undetected.mean, 1.0);
        assert_eq!(stats.any_undetected.mean, 1.0);
    }

    #[test]
    fn single_verified_pair_misses_half() {
        let truth = GroundTruth::identity(16);
        let plan = build_plan(16, 50, 1, 2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let outcomes: Vec<TrialOutcome> = (0..40)
            .map(|_| {
                let team = agents(&[AgentType::Bad; 50], &truth, &mut rng);
                crowdsort(&plan, &team, &truth, 1.0).unwrap()
            })
            .collect();
        let stats = detection_stats(&outcomes).unwrap();
        assert_eq!(stats.bad_agents, 2000);
        assert!((stats.bad_undetected.mean - 0.5).abs() < 3.0 * (0.25f64 / 2000.0).sqrt());
        assert!(stats.bad_undetected.lo < 0.5 && stats.bad_undetected.hi > 0.5);
        assert!(detection_stats(&[]).is_err());
    }

    #[test]
    fn flags_ignore_unverified_answers() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let truth = GroundTruth::random(25, &mut rng);
        let plan = build_plan(25, 12, 4, 3, 4).unwrap();
        let mut stripped = plan.clone();
        stripped.agent_groups.iter_mut().for_each(Vec::clear);
        for _ in 0..20 {
            let kinds: Vec<AgentType> = (0..12)
                .map(|i| if i % 3 == 0 { AgentType::Good } else { AgentType::Bad })
                .collect();
            let team = agents(&kinds, &truth, &mut rng);
            let a = crowdsort(&plan, &team, &truth, 1.0).unwrap();
            let b = crowdsort(&stripped, &team, &truth, 1.0).unwrap();
            assert_eq!(a.flagged, b.flagged);
            assert!(a.flagged.iter().all(|&i| kinds[i] == AgentType::Bad));
            assert!(a.survivors.iter().all(|r| !a.flagged.contains(&r.agent)));
        }
    }

    #[test]
    fn mismatched_agent_count_is_rejected() {
        let truth = GroundTruth::identity(9);
        let plan = build_plan(9, 3, 1, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let team = agents(&[AgentType::Good; 2], &truth, &mut rng);
        assert!(crowdsort(&plan, &team, &truth, 1.0).is_err());
    }
}
