//! Returned comparisons against the payment, under noise on ψ or on π.

use crowdsort::harness::{derive_params, sweep, ExperimentConfig, PsiNoise, SweepSpec, SweepVariable};

fn main() -> crowdsort::Result<()> {
    let base = ExperimentConfig {
        trials: 10,
        ..Default::default()
    };
    let p_star = derive_params(&base)?.contract.p;
    let payments: Vec<f64> = (0..=12).map(|k| p_star * 0.25 * k as f64).collect();
    println!("p* = {p_star:.3}");
    println!("noise,H,payment,resolved_mean,resolved_lo,resolved_hi");
    for (label, h) in [("psi", 0.0), ("psi", 0.005), ("psi", 0.01), ("pi", 0.1), ("pi", 0.3)] {
        let cfg = ExperimentConfig {
            psi_noise: (label == "psi").then_some(PsiNoise::Additive { h }),
            pi_noise: if label == "pi" { h } else { 0.0 },
            sweep: Some(SweepSpec {
                variable: SweepVariable::Payment,
                values: payments.clone(),
            }),
            ..base.clone()
        };
        for row in sweep(&cfg)? {
            let r = row.resolved.expect("feasible");
            println!("{label},{h},{:.3},{:.1},{:.0},{:.0}", row.value, r.mean, r.lo, r.hi);
        }
    }
    Ok(())
}
