//! Principal's utility against the agents' disutility, with the analytic
//! break-even point. Pass `replacement` to draw each ψᵢ from Uniform(0.5ψ, 1.5ψ).
//!
//!     cargo run --release --example utility_vs_psi > utility.csv

use crowdsort::harness::{ratio_crossing, sweep, write_rows_csv, ExperimentConfig, PsiNoise, SweepSpec, SweepVariable};
use crowdsort::optimizer::indifference_threshold;

fn main() -> crowdsort::Result<()> {
    let noisy = std::env::args().any(|a| a == "replacement");
    let cfg = ExperimentConfig {
        psi_noise: noisy.then_some(PsiNoise::Replacement),
        trials: 50,
        sweep: Some(SweepSpec {
            variable: SweepVariable::Psi,
            values: (0..=16).map(|k| 0.005 * k as f64).collect(),
        }),
        ..Default::default()
    };
    let rows = sweep(&cfg)?;
    write_rows_csv(&rows, std::io::stdout().lock())?;
    let point = indifference_threshold(&cfg.mechanism())?;
    eprintln!(
        "analytic break-even ψ = {:.4} (ψ̄/ψ = {:.1})",
        point.psi,
        point.ratio.unwrap_or(f64::NAN)
    );
    eprintln!("simulated crossing ψ = {:?}", ratio_crossing(&rows));
    Ok(())
}
