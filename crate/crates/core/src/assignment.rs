//! Who compares what: the verified pair set and the per-agent group lists.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::PartitionSchedule;
use crate::{pair_count, Error, Pair, Result};

/// Disjoint pairs of real items checked by the principal.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerifiedSet {
    pub pairs: Vec<Pair>,
}

impl VerifiedSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True when no item appears in more than one pair.
    pub fn is_disjoint(&self) -> bool {
        let mut items: Vec<usize> = self.pairs.iter().flat_map(|p| [p.lo, p.hi]).collect();
        items.sort_unstable();
        items.windows(2).all(|w| w[0] != w[1])
    }
}

/// Picks `2v` distinct items uniformly and pairs them up.
pub fn find_vset(n: usize, v: usize, seed: u64) -> Result<VerifiedSet> {
    if 2 * v > n {
        return Err(Error::infeasible(format!(
            "{v} disjoint verified pairs need 2v = {} items but only {n} exist",
            2 * v
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = index::sample(&mut rng, n, 2 * v).into_vec();
    let pairs = chosen.chunks_exact(2).map(|c| Pair::new(c[0], c[1])).collect();
    Ok(VerifiedSet { pairs })
}

/// Verified pairs plus the groups each agent must fully order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub n: usize,
    pub agents: usize,
    pub replication: usize,
    pub verified: VerifiedSet,
    /// Schedule groups with hallucinated slots removed; empty groups dropped.
    pub groups: Vec<Vec<usize>>,
    /// For each agent, indices into `groups`.
    pub agent_groups: Vec<Vec<usize>>,
}

impl AssignmentPlan {
    /// Unverified pairs of agent `i`: every pair inside each of its groups.
    pub fn unverified_pairs(&self, agent: usize) -> impl Iterator<Item = Pair> + '_ {
        self.agent_groups[agent].iter().flat_map(move |&g| {
            let group = &self.groups[g];
            (0..group.len()).flat_map(move |a| (a + 1..group.len()).map(move |b| Pair::new(group[a], group[b])))
        })
    }

    /// Number of comparisons agent `i` is asked for, verified ones included.
    pub fn comparisons_for(&self, agent: usize) -> usize {
        self.verified.len()
            + self.agent_groups[agent]
                .iter()
                .map(|&g| pair_count(self.groups[g].len()))
                .sum::<usize>()
    }

    /// Pairs in `V` that some agent also receives through a group.
    pub fn verified_overlap(&self) -> usize {
        let v: std::collections::HashSet<Pair> = self.verified.pairs.iter().copied().collect();
        let mut overlap = std::collections::HashSet::new();
        for group in &self.groups {
            for (a_pos, &a) in group.iter().enumerate() {
                for &b in &group[a_pos + 1..] {
                    let p = Pair::new(a, b);
                    if v.contains(&p) {
                        overlap.insert(p);
                    }
                }
            }
        }
        overlap.len()
    }

    /// Checks structural invariants. Used when a plan is read back from JSON.
    pub fn validate(&self) -> Result<()> {
        if self.agent_groups.len() != self.agents {
            return Err(Error::invalid(format!(
                "plan lists groups for {} agents but declares {}",
                self.agent_groups.len(),
                self.agents
            )));
        }
        if !self.verified.is_disjoint() {
            return Err(Error::invalid("verified pairs are not disjoint"));
        }
        let out_of_range = |i: &usize| *i >= self.n;
        if self.verified.pairs.iter().any(|p| out_of_range(&p.hi)) || self.groups.iter().flatten().any(out_of_range) {
            return Err(Error::invalid("plan references items outside 0..n"));
        }
        for (agent, gs) in self.agent_groups.iter().enumerate() {
            let mut sorted = gs.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("agent {agent} holds a group twice")));
            }
            if sorted.last().is_some_and(|&g| g >= self.groups.len()) {
                return Err(Error::invalid(format!("agent {agent} references a missing group")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: AssignmentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Hands every schedule group to exactly `r` distinct agents.
///
/// Groups are visited in schedule order and dealt round-robin over a seeded
/// random agent order, so group counts per agent differ by at most one.
/// The returned plan has an empty verified set; see [`build_plan`].
pub fn find_wset(schedule: &PartitionSchedule, agents: usize, r: usize, seed: u64) -> Result<AssignmentPlan> {
    if r == 0 || r > agents {
        return Err(Error::infeasible(format!(
            "replication {r} must lie in 1..={agents} (one copy per distinct agent)"
        )));
    }
    let groups: Vec<Vec<usize>> = schedule
        .groups()
        .map(|g| g.iter().filter(|it| it.real).map(|it| it.index).collect::<Vec<_>>())
        .filter(|g| !g.is_empty())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..agents).collect();
    order.shuffle(&mut rng);

    let mut agent_groups = vec![Vec::new(); agents];
    let mut cursor = 0usize;
    for g in 0..groups.len() {
        for _ in 0..r {
            agent_groups[order[cursor % agents]].push(g);
            cursor += 1;
        }
    }

    Ok(AssignmentPlan {
        n: schedule.n,
        agents,
        replication: r,
        verified: VerifiedSet::default(),
        groups,
        agent_groups,
    })
}

/// Full plan: schedule, verified set and group assignment from one seed.
pub fn build_plan(n: usize, agents: usize, v: usize, r: usize, seed: u64) -> Result<AssignmentPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = crate::design::sgp_schedule(n, rng.random())?;
    let verified = find_vset(n, v, rng.random())?;
    let mut plan = find_wset(&schedule, agents, r, rng.random())?;
    plan.verified = verified;
    Ok(plan)
}

/// Expected quicksort comparisons for `g` items, bounded by `2·g·ln g`.
pub fn quicksort_bound(g: usize) -> f64 {
    if g < 2 {
        0.0
    } else {
        2.0 * g as f64 * (g as f64).ln()
    }
}

/// Items an agent handles and the comparisons it expects to spend on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workload {
    pub items_assigned: usize,
    pub expected_sort_comparisons: f64,
}

pub fn agent_workload(plan: &AssignmentPlan, agent: usize) -> Result<Workload> {
    let gs = plan
        .agent_groups
        .get(agent)
        .ok_or_else(|| Error::invalid(format!("agent {agent} is not in the plan")))?;
    let items = gs.iter().map(|&g| plan.groups[g].len()).sum();
    let sorting: f64 = gs.iter().map(|&g| quicksort_bound(plan.groups[g].len())).sum();
    Ok(Workload {
        items_assigned: items,
        expected_sort_comparisons: sorting + plan.verified.len() as f64,
    })
}

/// Randomized quicksort of `items` by `key`, returning the comparisons spent.
///
/// Stands in for an agent ordering one group adaptively.
pub fn quicksort_comparisons<R: Rng + ?Sized>(items: &mut [usize], key: &[usize], rng: &mut R) -> usize {
    if items.len() < 2 {
        return 0;
    }
    let pivot_pos = rng.random_range(0..items.len());
    items.swap(pivot_pos, items.len() - 1);
    let pivot = key[items[items.len() - 1]];
    let mut store = 0;
    for i in 0..items.len() - 1 {
        if key[items[i]] < pivot {
            items.swap(i, store);
            store += 1;
        }
    }
    let last = items.len() - 1;
    items.swap(store, last);
    let (left, right) = items.split_at_mut(store);
    (last) + quicksort_comparisons(left, key, rng) + quicksort_comparisons(&mut right[1..], key, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::sgp_schedule;
    use proptest::prelude::*;

    fn coverage(plan: &AssignmentPlan) -> Vec<usize> {
        let n = plan.n;
        let mut counts = vec![0usize; n * n];
        for agent in 0..plan.agents {
            for p in plan.unverified_pairs(agent) {
                counts[p.lo * n + p.hi] += 1;
            }
        }
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| counts[a * n + b])
            .collect()
    }

    #[test]
    fn vset_is_disjoint() {
        let v = find_vset(100, 12, 7).unwrap();
        assert_eq!(v.len(), 12);
        let mut items: Vec<usize> = v.pairs.iter().flat_map(|p| [p.lo, p.hi]).collect();
        items.sort_unstable();
        items.dedup();
        assert_eq!(items.len(), 24);
        assert!(v.is_disjoint());
    }

    #[test]
    fn vset_forced_partition() {
        let v = find_vset(4, 2, 0).unwrap();
        let mut items: Vec<usize> = v.pairs.iter().flat_map(|p| [p.lo, p.hi]).collect();
        items.sort_unstable();
        assert_eq!(items, vec![0, 1, 2, 3]);
    }

    #[test]
    fn vset_rejects_oversized_request() {
        let err = find_vset(5, 3, 0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        assert!(err.to_string().contains("2v = 6"));
    }

    #[test]
    fn hundred_agents_replication_ten() {
        let s = sgp_schedule(100, 11).unwrap();
        let plan = find_wset(&s, 100, 10, 4).unwrap();
        assert_eq!(plan.groups.len(), 132);
        let total: usize = plan.agent_groups.iter().map(Vec::len).sum();
        assert_eq!(total, 1320);
        assert!(plan.agent_groups.iter().all(|g| g.len() == 13 || g.len() == 14));
        let cov = coverage(&plan);
        assert_eq!(cov.len(), 4950);
        assert!(cov.iter().all(|&c| c == 10));
    }

    #[test]
    fn single_agent_holds_everything() {
        let s = sgp_schedule(10, 2).unwrap();
        let plan = find_wset(&s, 1, 1, 0).unwrap();
        assert_eq!(plan.agent_groups[0].len(), plan.groups.len());
        assert!(coverage(&plan).iter().all(|&c| c == 1));
    }

    #[test]
    fn full_replication_gives_every_group_to_everyone() {
        let s = sgp_schedule(9, 2).unwrap();
        let plan = find_wset(&s, 5, 5, 0).unwrap();
        for gs in &plan.agent_groups {
            let mut gs = gs.clone();
            gs.sort_unstable();
            assert_eq!(gs, (0..plan.groups.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn replication_above_agent_count_is_rejected() {
        let s = sgp_schedule(9, 2).unwrap();
        assert!(matches!(find_wset(&s, 3, 4, 0), Err(Error::Infeasible(_))));
        assert!(find_wset(&s, 3, 0, 0).is_err());
    }

    #[test]
    fn workload_single_group() {
        let plan = AssignmentPlan {
            n: 11,
            agents: 1,
            replication: 1,
            verified: VerifiedSet::default(),
            groups: vec![(0..11).collect()],
            agent_groups: vec![vec![0]],
        };
        let w = agent_workload(&plan, 0).unwrap();
        assert_eq!(w.items_assigned, 11);
        assert!((w.expected_sort_comparisons - 2.0 * 11.0 * 11f64.ln()).abs() < 1e-9);
        assert!((w.expected_sort_comparisons - 52.75).abs() < 0.01);
        assert!(agent_workload(&plan, 1).is_err());
    }

    #[test]
    fn workload_verified_only() {
        let plan = AssignmentPlan {
            n: 100,
            agents: 1,
            replication: 1,
            verified: find_vset(100, 12, 0).unwrap(),
            groups: vec![],
            agent_groups: vec![vec![]],
        };
        let w = agent_workload(&plan, 0).unwrap();
        assert_eq!(w.items_assigned, 0);
        assert_eq!(w.expected_sort_comparisons, 12.0);
    }

    #[test]
    fn workload_near_remark_bound() {
        let plan = build_plan(100, 100, 12, 10, 1).unwrap();
        let d = 12.0 + 2.0 * 10.0 * 100.0 * 11.0 * 11f64.ln() / 100.0;
        assert!((d - 539.5).abs() < 0.2);
        for agent in 0..100 {
            let w = agent_workload(&plan, agent).unwrap();
            assert!(w.expected_sort_comparisons <= 2.0 * d);
            assert!(w.expected_sort_comparisons >= d / 2.0);
        }
    }

    #[test]
    fn plan_json_round_trip_and_validation() {
        let plan = build_plan(30, 8, 3, 2, 9).unwrap();
        let back = AssignmentPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(back, plan);

        let mut broken = plan.clone();
        let first = broken.agent_groups[0][0];
        broken.agent_groups[0].push(first);
        assert!(AssignmentPlan::from_json(&broken.to_json().unwrap()).is_err());
    }

    #[test]
    fn quicksort_counts_are_plausible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let key: Vec<usize> = (0..50).rev().collect();
        let mut items: Vec<usize> = (0..50).collect();
        let c = quicksort_comparisons(&mut items, &key, &mut rng);
        assert!(items.windows(2).all(|w| key[w[0]] < key[w[1]]));
        assert!((49..=50 * 49 / 2).contains(&c));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_r_coverage_and_balance(n in 2usize..=121, s in 1usize..=32, r_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let r = 1 + ((s - 1) as f64 * r_frac) as usize;
            let schedule = sgp_schedule(n, seed).unwrap();
            let plan = find_wset(&schedule, s, r, seed ^ 0x5eed).unwrap();
            prop_assert!(coverage(&plan).iter().all(|&c| c == r));
            let max = plan.agent_groups.iter().map(Vec::len).max().unwrap();
            let min = plan.agent_groups.iter().map(Vec::len).min().unwrap();
            prop_assert!(max - min <= 1);
            prop_assert!(plan.validate().is_ok());
        }
    }
}
