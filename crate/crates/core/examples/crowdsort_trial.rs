//! One round by hand: agents decide on effort, answer their assignment,
//! get flagged or paid, and the survivors' answers are condensed.

use crowdsort::aggregate::{accuracy_metrics, post_process, recover_ranking};
use crowdsort::assignment::build_plan;
use crowdsort::contract::{params_known, KnownModelConfig};
use crowdsort::engine::{crowdsort, SimAgent};
use crowdsort::simagents::{decide_effort, draw_type, AgentProfile, AnswerSource, GroundTruth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> crowdsort::Result<()> {
    let cfg = KnownModelConfig::defaults();
    let params = params_known(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let truth = GroundTruth::random(cfg.mechanism.n, &mut rng);
    let plan = build_plan(cfg.mechanism.n, cfg.mechanism.s, params.v, params.r, rng.random())?;

    // A fifth of the crowd finds the work a little more tedious than planned.
    let agents: Vec<SimAgent> = (0..cfg.mechanism.s)
        .map(|i| {
            let psi = if i % 5 == 0 { cfg.psi * 1.5 } else { cfg.psi };
            let mut profile = AgentProfile::new(psi, cfg.mechanism.pi);
            profile.effort = decide_effort(&profile, &params);
            let kind = draw_type(&profile, &mut rng);
            profile.kind = Some(kind);
            SimAgent {
                profile,
                source: AnswerSource::for_type(kind, &truth, &mut rng),
            }
        })
        .collect();

    let outcome = crowdsort(&plan, &agents, &truth, params.p)?;
    println!(
        "effort {}, good {}, bad {}, flagged {}, undetected bad {}, paid {:.2}",
        outcome.effort_count(),
        outcome.good,
        outcome.bad,
        outcome.flagged.len(),
        outcome.bad_undetected,
        outcome.payment_total()
    );

    let condensed = post_process(&outcome.survivors, cfg.mechanism.n);
    let ranking = recover_ranking(&condensed);
    let acc = accuracy_metrics(&condensed, &ranking, &truth);
    println!(
        "resolved {}, conflicted {}, missing {}, correct {}, exact {}",
        condensed.resolved_count(),
        condensed.conflicted_count(),
        condensed.missing_count(),
        acc.correct_pairs,
        acc.exact_match
    );
    Ok(())
}
