//! Payment, verification and replication parameters.
//!
//! All logarithms in the counting bounds are base 2 and rounded up; the
//! per-group sorting cost uses the natural log of the quicksort expectation.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::design::schedule_order;
use crate::{Error, Result};

/// Slack for rounding up values that should be integers but carry float error.
const CEIL_TOLERANCE: f64 = 1e-9;

fn ceil_int(x: f64) -> i64 {
    (x - CEIL_TOLERANCE).ceil() as i64
}

/// Default confidence budget behind the DKW sup-norm bound.
pub const DEFAULT_DKW_DELTA: f64 = 0.05;

/// Mechanism parameters shared by both disutility models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub n: usize,
    pub s: usize,
    /// P[good | effort].
    pub pi: f64,
    /// Failure probability of the recovery guarantee.
    pub delta: f64,
    /// Principal's disutility per verification.
    pub psi_bar: f64,
    /// Principal's utility per recovered comparison.
    pub lambda: f64,
    /// Refuse to clamp replication to `s` when the guarantee needs more.
    #[serde(default)]
    pub strict: bool,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("need at least 2 items, got {}", self.n)));
        }
        if self.s < 1 {
            return Err(Error::invalid("need at least one agent"));
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::invalid(format!("pi must lie in (0, 1), got {}", self.pi)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.psi_bar < 0.0 || self.lambda < 0.0 {
            return Err(Error::invalid("principal utilities must be nonnegative"));
        }
        Ok(())
    }

    /// Upper bound on an agent's expected comparisons for given `v` and `r`.
    pub fn expected_comparisons(&self, v: usize, r: usize) -> f64 {
        let q = schedule_order(self.n) as f64;
        v as f64 + 2.0 * r as f64 * self.n as f64 * q * q.ln() / self.s as f64
    }

    fn clamp_replication(&self, raw: i64) -> Result<usize> {
        let raw = raw.max(1);
        if raw as usize > self.s {
            if self.strict {
                return Err(Error::infeasible(format!(
                    "replication {raw} exceeds the {} available agents",
                    self.s
                )));
            }
            warn!(
                "replication {raw} clamped to s = {}; the recovery guarantee no longer holds",
                self.s
            );
            return Ok(self.s);
        }
        Ok(raw as usize)
    }
}

/// Known, common disutility model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownModelConfig {
    #[serde(flatten)]
    pub mechanism: MechanismConfig,
    /// Agents' per-comparison disutility.
    pub psi: f64,
}

impl KnownModelConfig {
    /// The experiment defaults: n = s = 100, π = 0.8, δ = 0.01, ψ̄ = 2, λ = 2, ψ = 0.01.
    pub fn defaults() -> Self {
        KnownModelConfig {
            mechanism: MechanismConfig {
                n: 100,
                s: 100,
                pi: 0.8,
                delta: 0.01,
                psi_bar: 2.0,
                lambda: 2.0,
                strict: false,
            },
            psi: 0.01,
        }
    }
}

/// Contract terms handed to the agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractParams {
    /// Verified pair count.
    pub v: usize,
    /// Agents per unverified comparison.
    pub r: usize,
    /// Bound on an agent's expected comparisons.
    pub d: f64,
    /// Probability a bad agent is flagged: `1 - 2^-v`.
    pub pi_hat: f64,
    /// Payment to every unflagged agent.
    pub p: f64,
    /// The π the contract was computed with.
    pub pi: f64,
}

impl ContractParams {
    /// Same contract with a different payment.
    pub fn with_payment(self, p: f64) -> Self {
        ContractParams { p, ..self }
    }
}

pub fn detection_probability(v: usize) -> f64 {
    1.0 - 0.5f64.powi(v as i32)
}

/// Verified pair count for the known model: `⌈log₂(2(1-π)s/δ)⌉`, at least 1.
pub fn verification_count_known(cfg: &MechanismConfig) -> usize {
    let x = 2.0 * (1.0 - cfg.pi) * cfg.s as f64 / cfg.delta;
    ceil_int(x.log2()).max(1) as usize
}

/// Unclamped replication for the known model: `⌈log₂(δ/(3n²)) / log₂(1-π)⌉`.
pub fn replication_known_raw(cfg: &MechanismConfig) -> i64 {
    let n = cfg.n as f64;
    ceil_int((cfg.delta / (3.0 * n * n)).log2() / (1.0 - cfg.pi).log2())
}

/// Payment, verification and replication for a known common disutility.
pub fn params_known(cfg: &KnownModelConfig) -> Result<ContractParams> {
    let m = &cfg.mechanism;
    m.validate()?;
    if cfg.psi < 0.0 {
        return Err(Error::invalid("disutility must be nonnegative"));
    }
    let v = verification_count_known(m);
    let r = m.clamp_replication(replication_known_raw(m))?;
    let d = m.expected_comparisons(v, r);
    let pi_hat = detection_probability(v);
    let p = d * cfg.psi / (pi_hat * m.pi);
    Ok(ContractParams {
        v,
        r,
        d,
        pi_hat,
        p,
        pi: m.pi,
    })
}

/// Disutility cutoff below which an agent exerts effort: `p·π̂·π/d`.
pub fn effort_threshold(params: &ContractParams) -> f64 {
    params.p * params.pi_hat * params.pi / params.d
}

/// Sorted disutility samples with a sup-norm error bound on their empirical CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisutilityModel {
    samples: Vec<f64>,
    pub epsilon: f64,
}

impl DisutilityModel {
    /// Sorts the samples; ε follows from the DKW inequality at confidence `1 - dkw_delta`.
    pub fn from_samples(mut samples: Vec<f64>, dkw_delta: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("disutility samples must be finite"));
        }
        if !(dkw_delta > 0.0 && dkw_delta < 1.0) {
            return Err(Error::invalid(format!(
                "DKW confidence budget must lie in (0, 1), got {dkw_delta}"
            )));
        }
        samples.sort_by(f64::total_cmp);
        let epsilon = dkw_epsilon(samples.len(), dkw_delta);
        Ok(DisutilityModel { samples, epsilon })
    }

    /// Uses a caller-supplied ε instead of the DKW value.
    pub fn with_epsilon(mut samples: Vec<f64>, epsilon: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        samples.sort_by(f64::total_cmp);
        Ok(DisutilityModel { samples, epsilon })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Empirical CDF: fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }
}

/// DKW half-width `√(ln(2/δ_F) / 2m)`.
pub fn dkw_epsilon(m: usize, dkw_delta: f64) -> f64 {
    ((2.0 / dkw_delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Smallest sample `x` with `F̂(x) ≥ u`; `u = 0` gives the minimum.
pub fn quantile(model: &DisutilityModel, u: f64) -> Result<f64> {
    let m = model.samples.len();
    if m == 0 {
        return Err(Error::EmptySamples);
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid(format!("quantile level must lie in [0, 1], got {u}")));
    }
    let k = ceil_int(u * m as f64).max(1) as usize;
    Ok(model.samples[k.min(m) - 1])
}

/// The sampled-disutility model: everything but ψ.
pub type UnknownModelConfig = MechanismConfig;

/// `1 - πg/s + πε`, the bound on any one agent being bad.
pub fn bad_probability_bound(cfg: &MechanismConfig, epsilon: f64, g: usize) -> f64 {
    1.0 - cfg.pi * g as f64 / cfg.s as f64 + cfg.pi * epsilon
}

/// Verified pairs for target `g`: `⌈log₂(2(s - πg + πsε)/δ)⌉`, at least 1.
pub fn verification_count_unknown(cfg: &MechanismConfig, epsilon: f64, g: usize) -> usize {
    let s = cfg.s as f64;
    let x = 2.0 * (s - cfg.pi * g as f64 + cfg.pi * s * epsilon) / cfg.delta;
    ceil_int(x.log2()).max(1) as usize
}

/// Unclamped replication for target `g`: `⌈log₂(δ/(2n²)) / log₂(1 - πg/s + πε)⌉`.
pub fn replication_unknown_raw(cfg: &MechanismConfig, epsilon: f64, g: usize) -> Result<i64> {
    let base = bad_probability_bound(cfg, epsilon, g);
    if base >= 1.0 || base <= 0.0 {
        return Err(Error::infeasible(format!(
            "g = {g}: bad-agent bound {base:.4} puts the replication logarithm out of range"
        )));
    }
    let n = cfg.n as f64;
    Ok(ceil_int((cfg.delta / (2.0 * n * n)).log2() / base.log2()))
}

/// Contract that targets `g` incentivized agents under sampled disutilities.
pub fn params_unknown(cfg: &UnknownModelConfig, model: &DisutilityModel, g: usize) -> Result<ContractParams> {
    cfg.validate()?;
    if g > cfg.s {
        return Err(Error::invalid(format!("g = {g} exceeds the {} agents", cfg.s)));
    }
    let r = cfg.clamp_replication(replication_unknown_raw(cfg, model.epsilon, g)?)?;
    let v = verification_count_unknown(cfg, model.epsilon, g);
    let d = cfg.expected_comparisons(v, r);
    let pi_hat = detection_probability(v);
    let p = d / (pi_hat * cfg.pi) * quantile(model, g as f64 / cfg.s as f64)?;
    Ok(ContractParams {
        v,
        r,
        d,
        pi_hat,
        p,
        pi: cfg.pi,
    })
}
