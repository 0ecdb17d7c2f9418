//! Contract terms for both disutility models.

use crowdsort::contract::{
    effort_threshold, params_known, params_unknown, DisutilityModel, KnownModelConfig, DEFAULT_DKW_DELTA,
};
use crowdsort::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> crowdsort::Result<()> {
    let known = KnownModelConfig::defaults();
    let p = params_known(&known)?;
    println!(
        "known ψ = {}: v = {}, r = {}, d = {:.2}, p = {:.4}",
        known.psi, p.v, p.r, p.d, p.p
    );
    println!("effort cutoff at p: {:.6}", effort_threshold(&p));

    let mut few_agents = known;
    few_agents.mechanism.s = 5;
    println!("s = 5, lenient: r = {}", params_known(&few_agents)?.r);
    few_agents.mechanism.strict = true;
    match params_known(&few_agents) {
        Err(Error::Infeasible(why)) => println!("s = 5, strict: {why}"),
        other => println!("s = 5, strict: {other:?}"),
    }

    let law = Normal::new(0.03, 0.01).expect("normal");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<f64> = (0..500).map(|_| law.sample(&mut rng)).collect();
    let model = DisutilityModel::from_samples(samples, DEFAULT_DKW_DELTA)?;
    println!("500 samples, ε = {:.4}", model.epsilon);
    for g in [0, 20, 50, 80, 100] {
        match params_unknown(&known.mechanism, &model, g) {
            Ok(p) => println!("g = {g:3}: v = {}, r = {}, p = {:.3}", p.v, p.r, p.p),
            Err(e) => println!("g = {g:3}: {e}"),
        }
    }
    Ok(())
}
