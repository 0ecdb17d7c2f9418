//! How often a crowd of careless agents slips past the verified pairs.

use crowdsort::assignment::build_plan;
use crowdsort::engine::{crowdsort, detection_stats, SimAgent};
use crowdsort::simagents::{AgentProfile, AgentType, AnswerSource, GroundTruth};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> crowdsort::Result<()> {
    let (n, s, trials) = (40, 50, 400);
    let truth = GroundTruth::identity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    println!("v,bad_agents,undetected_rate,ci_lo,ci_hi,theory");
    for v in [1, 2, 4, 6, 8] {
        let plan = build_plan(n, s, v, 2, v as u64)?;
        let outcomes = (0..trials)
            .map(|_| {
                let agents: Vec<SimAgent> = (0..s)
                    .map(|_| SimAgent {
                        profile: AgentProfile::new(0.0, 0.8),
                        source: AnswerSource::for_type(AgentType::Bad, &truth, &mut rng),
                    })
                    .collect();
                crowdsort(&plan, &agents, &truth, 1.0)
            })
            .collect::<crowdsort::Result<Vec<_>>>()?;
        let stats = detection_stats(&outcomes)?;
        let e = stats.bad_undetected;
        println!(
            "{v},{},{:.5},{:.5},{:.5},{:.5}",
            stats.bad_agents,
            e.mean,
            e.lo,
            e.hi,
            0.5f64.powi(v as i32)
        );
    }
    Ok(())
}
