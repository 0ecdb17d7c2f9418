//! Guaranteed utility for each number of incentivized agents when the
//! principal only has samples of the disutility distribution.

use crowdsort::contract::{KnownModelConfig, MechanismConfig};
use crowdsort::harness::{disutility_samples, DistributionSpec};
use crowdsort::optimizer::optimize_g;

fn main() -> crowdsort::Result<()> {
    let cfg = MechanismConfig {
        psi_bar: 3.0,
        lambda: 3.0,
        ..KnownModelConfig::defaults().mechanism
    };
    println!("samples,g,feasible,v_g,r_g,p_g,E");
    for samples in [40, 145, 500] {
        let model = disutility_samples(
            &DistributionSpec {
                mean: 0.03,
                sd: 0.01,
                samples,
                dkw_delta: 0.05,
            },
            0,
        )?;
        let result = optimize_g(&cfg, &model)?;
        for row in &result.table {
            println!(
                "{samples},{},{},{},{},{},{}",
                row.g,
                row.feasible,
                row.v_g.map_or(String::new(), |v| v.to_string()),
                row.r_g.map_or(String::new(), |r| r.to_string()),
                row.p_g.map_or(String::new(), |p| format!("{p:.3}")),
                row.objective.map_or(String::new(), |e| format!("{e:.1}"))
            );
        }
        eprintln!(
            "{samples} samples: ε = {:.3}, g* = {:?}, E = {:.1}, self-sort = {:.1}, decision {:?}",
            model.epsilon,
            result.g_star,
            result.objective.unwrap_or(f64::NAN),
            result.self_sort,
            result.decision
        );
    }
    Ok(())
}
