//! Hands out verified pairs and schedule groups to agents, then compares
//! each agent's measured sorting cost with the planning bound.

use crowdsort::assignment::{agent_workload, build_plan, quicksort_comparisons};
use crowdsort::contract::{params_known, KnownModelConfig};
use crowdsort::simagents::GroundTruth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> crowdsort::Result<()> {
    let cfg = KnownModelConfig::defaults();
    let params = params_known(&cfg)?;
    let plan = build_plan(cfg.mechanism.n, cfg.mechanism.s, params.v, params.r, 7)?;
    plan.validate()?;
    println!(
        "v = {}, r = {}, {} groups, verified pairs {:?}",
        params.v,
        params.r,
        plan.groups.len(),
        plan.verified.pairs.iter().map(|p| (p.lo, p.hi)).collect::<Vec<_>>()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth = GroundTruth::random(plan.n, &mut rng);
    for agent in 0..5 {
        let load = agent_workload(&plan, agent)?;
        let mut spent = plan.verified.len();
        for &g in &plan.agent_groups[agent] {
            spent += quicksort_comparisons(&mut plan.groups[g].clone(), truth.ranks(), &mut rng);
        }
        println!(
            "agent {agent}: {} groups, {} items, measured {spent} comparisons, expected at most {:.0}, d = {:.1}",
            plan.agent_groups[agent].len(),
            load.items_assigned,
            load.expected_sort_comparisons,
            params.d
        );
    }
    Ok(())
}
