//! Seeded Monte-Carlo experiments over the full pipeline.
//!
//! A grid point fixes one configuration; its trials draw a fresh ground
//! truth, plan, agent population and answer set from split seeds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{accuracy_metrics, post_process, recover_ranking, Accuracy, RecoveredRanking};
use crate::assignment::build_plan;
use crate::contract::{
    params_known, params_unknown, ContractParams, DisutilityModel, KnownModelConfig, MechanismConfig,
};
use crate::engine::{crowdsort, SimAgent, TrialOutcome};
use crate::optimizer::{empirical_utility, optimize_g, self_sort_utility, UtilityReport};
use crate::simagents::{decide_effort, draw_type, AgentProfile, AnswerSource, GroundTruth};
use crate::stats::{percentile_interval, wilson, Estimate};
use crate::{pair_count, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Every agent shares the disutility `psi`.
    #[default]
    Known,
    /// Disutilities follow `distribution`; the principal only sees samples.
    Unknown,
}

/// Normal disutility law, truncated at zero, and the principal's sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub mean: f64,
    pub sd: f64,
    pub samples: usize,
    #[serde(default = "default_dkw_delta")]
    pub dkw_delta: f64,
}

fn default_dkw_delta() -> f64 {
    crate::contract::DEFAULT_DKW_DELTA
}

impl DistributionSpec {
    fn law(&self) -> Result<Normal<f64>> {
        Normal::new(self.mean, self.sd).map_err(|e| Error::invalid(format!("disutility distribution: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum PsiNoise {
    /// `ψᵢ = ψ + Uniform(0, h)`.
    Additive { h: f64 },
    /// `ψᵢ ~ Uniform(0.5ψ, 1.5ψ)`.
    Replacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Psi,
    Payment,
    PaymentScale,
    PsiNoise,
    PiNoise,
    N,
    S,
    Pi,
    Delta,
    PsiBar,
    Lambda,
    G,
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub n: usize,
    pub s: usize,
    pub pi: f64,
    pub delta: f64,
    pub psi: f64,
    pub psi_bar: f64,
    pub lambda: f64,
    pub strict: bool,
    /// Required for the unknown model.
    pub distribution: Option<DistributionSpec>,
    pub psi_noise: Option<PsiNoise>,
    /// Width `h` of the subtractive `Uniform(0, h)` noise on each agent's π.
    pub pi_noise: f64,
    /// Absolute payment; overrides `payment_scale`.
    pub payment: Option<f64>,
    /// Payment as a multiple of the computed contract payment.
    pub payment_scale: f64,
    /// Target incentivized count for the unknown model; `None` uses the optimizer.
    pub g: Option<usize>,
    pub sweep: Option<SweepSpec>,
    pub trials: usize,
    pub seed: u64,
    pub ci_level: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let known = KnownModelConfig::defaults();
        let m = known.mechanism;
        ExperimentConfig {
            model: ModelKind::Known,
            n: m.n,
            s: m.s,
            pi: m.pi,
            delta: m.delta,
            psi: known.psi,
            psi_bar: m.psi_bar,
            lambda: m.lambda,
            strict: false,
            distribution: None,
            psi_noise: None,
            pi_noise: 0.0,
            payment: None,
            payment_scale: 1.0,
            g: None,
            sweep: None,
            trials: 50,
            seed: 0,
            ci_level: 0.9,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn mechanism(&self) -> MechanismConfig {
        MechanismConfig {
            n: self.n,
            s: self.s,
            pi: self.pi,
            delta: self.delta,
            psi_bar: self.psi_bar,
            lambda: self.lambda,
            strict: self.strict,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mechanism().validate()?;
        if self.trials < 1 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::invalid(format!(
                "ci_level must lie in (0, 1), got {}",
                self.ci_level
            )));
        }
        if self.psi < 0.0 {
            return Err(Error::invalid("psi must be nonnegative"));
        }
        if self.pi_noise < 0.0 || matches!(self.psi_noise, Some(PsiNoise::Additive { h }) if h < 0.0) {
            return Err(Error::invalid("noise widths must be nonnegative"));
        }
        if self.payment.is_some_and(|p| p < 0.0) || self.payment_scale < 0.0 {
            return Err(Error::invalid("payment must be nonnegative"));
        }
        if self.model == ModelKind::Unknown {
            let dist = self
                .distribution
                .ok_or_else(|| Error::invalid("the unknown model needs a disutility distribution"))?;
            dist.law()?;
            if dist.samples == 0 {
                return Err(Error::EmptySamples);
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::invalid("sweep grid is empty"));
            }
        }
        Ok(())
    }

    /// Copy with the sweep variable set to `x`. Counts are rounded to the nearest integer.
    pub fn with_value(&self, variable: SweepVariable, x: f64) -> Result<Self> {
        let count = || -> Result<usize> {
            if x.is_finite() && x >= 0.0 {
                Ok(x.round() as usize)
            } else {
                Err(Error::invalid(format!(
                    "{variable:?} must be a nonnegative count, got {x}"
                )))
            }
        };
        let mut cfg = self.clone();
        match variable {
            SweepVariable::Psi => cfg.psi = x,
            SweepVariable::Payment => cfg.payment = Some(x),
            SweepVariable::PaymentScale => cfg.payment_scale = x,
            SweepVariable::PsiNoise => cfg.psi_noise = Some(PsiNoise::Additive { h: x }),
            SweepVariable::PiNoise => cfg.pi_noise = x,
            SweepVariable::N => cfg.n = count()?,
            SweepVariable::S => cfg.s = count()?,
            SweepVariable::Pi => cfg.pi = x,
            SweepVariable::Delta => cfg.delta = x,
            SweepVariable::PsiBar => cfg.psi_bar = x,
            SweepVariable::Lambda => cfg.lambda = x,
            SweepVariable::G => cfg.g = Some(count()?),
            SweepVariable::Samples => {
                let dist = cfg
                    .distribution
                    .as_mut()
                    .ok_or_else(|| Error::invalid("sweeping samples needs a distribution"))?;
                dist.samples = count()?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const DOMAIN_TRUTH: u64 = 1;
const DOMAIN_PLAN: u64 = 2;
const DOMAIN_AGENTS: u64 = 3;
const DOMAIN_NOISE: u64 = 4;
const DOMAIN_SAMPLES: u64 = 5;

/// Identifies one trial. Every random stream is keyed on all three fields plus a domain tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSeed {
    pub master: u64,
    pub point: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn new(master: u64, point: u64, trial: u64) -> Self {
        TrialSeed { master, point, trial }
    }

    /// Independent stream for `(master, point, trial, domain)`.
    pub fn rng(&self, domain: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (chunk, word) in key
            .chunks_exact_mut(8)
            .zip([self.master, self.point, self.trial, domain])
        {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

impl From<u64> for TrialSeed {
    fn from(master: u64) -> Self {
        TrialSeed::new(master, 0, 0)
    }
}

/// Draws the principal's disutility samples for the unknown model.
///
/// Keyed on the master seed alone, so larger sample sizes extend smaller ones.
pub fn disutility_samples(dist: &DistributionSpec, master: u64) -> Result<DisutilityModel> {
    let law = dist.law()?;
    let mut rng = TrialSeed::new(master, 0, 0).rng(DOMAIN_SAMPLES);
    let samples = (0..dist.samples).map(|_| law.sample(&mut rng).max(0.0)).collect();
    DisutilityModel::from_samples(samples, dist.dkw_delta)
}

/// Agent `agent`'s `(ψᵢ, πᵢ)` in the trial keyed by `seed`.
///
/// The base disutility is `psi` in the known model and a truncated normal draw
/// otherwise; noise then applies on top.
pub fn noise_inject(cfg: &ExperimentConfig, agent: usize, seed: TrialSeed) -> Result<(f64, f64)> {
    let mut rng = TrialSeed::new(seed.master, seed.point, seed.trial).rng(DOMAIN_NOISE ^ ((agent as u64 + 1) << 8));
    let base = match cfg.model {
        ModelKind::Known => cfg.psi,
        ModelKind::Unknown => {
            let dist = cfg
                .distribution
                .ok_or_else(|| Error::invalid("the unknown model needs a disutility distribution"))?;
            dist.law()?.sample(&mut rng).max(0.0)
        }
    };
    let psi = match cfg.psi_noise {
        None => base,
        Some(PsiNoise::Additive { h }) => base + uniform(&mut rng, h),
        Some(PsiNoise::Replacement) => 0.5 * base + uniform(&mut rng, base),
    };
    let pi = (cfg.pi - uniform(&mut rng, cfg.pi_noise)).clamp(0.0, 1.0);
    Ok((psi, pi))
}

fn uniform(rng: &mut ChaCha8Rng, width: f64) -> f64 {
    if width > 0.0 {
        rng.random::<f64>() * width
    } else {
        0.0
    }
}

/// Everything a grid point fixes before its trials run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Contract as computed, before any payment override.
    pub contract: ContractParams,
    /// Payment actually offered.
    pub payment: f64,
    pub g: Option<usize>,
    pub self_sort: f64,
}

impl DerivedParams {
    /// The contract with the offered payment.
    pub fn offered(&self) -> ContractParams {
        self.contract.with_payment(self.payment)
    }
}

/// Computes the contract from the noiseless `ψ` and `π`.
pub fn derive_params(cfg: &ExperimentConfig) -> Result<DerivedParams> {
    cfg.validate()?;
    let mechanism = cfg.mechanism();
    let (contract, g) = match cfg.model {
        ModelKind::Known => (
            params_known(&KnownModelConfig {
                mechanism,
                psi: cfg.psi,
            })?,
            None,
        ),
        ModelKind::Unknown => {
            let dist = cfg.distribution.expect("validated");
            let model = disutility_samples(&dist, cfg.seed)?;
            let g = match cfg.g {
                Some(g) => g,
                None => optimize_g(&mechanism, &model)?
                    .g_star
                    .ok_or_else(|| Error::infeasible("no target g admits a feasible contract"))?,
            };
            (params_unknown(&mechanism, &model, g)?, Some(g))
        }
    };
    if 2 * contract.v > cfg.n {
        return Err(Error::infeasible(format!(
            "{} disjoint verified pairs need 2v = {} items but only {} exist",
            contract.v,
            2 * contract.v,
            cfg.n
        )));
    }
    let payment = cfg.payment.unwrap_or(contract.p * cfg.payment_scale);
    Ok(DerivedParams {
        contract,
        payment,
        g,
        self_sort: self_sort_utility(&mechanism),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub seed: TrialSeed,
    pub outcome: TrialOutcome,
    pub ranking: RecoveredRanking,
    pub accuracy: Accuracy,
    pub utility: UtilityReport,
    pub resolved: usize,
    pub conflicted: usize,
}

/// Compact per-trial record for logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub effort: usize,
    pub good: usize,
    pub bad: usize,
    pub flagged: usize,
    pub bad_undetected: usize,
    pub resolved: usize,
    pub conflicted: usize,
    pub correct_pairs: usize,
    pub exact: bool,
    pub payment_total: f64,
    pub utility: f64,
}

impl TrialResult {
    pub fn summary(&self) -> TrialSummary {
        TrialSummary {
            trial: self.seed.trial,
            effort: self.outcome.effort_count(),
            good: self.outcome.good,
            bad: self.outcome.bad,
            flagged: self.outcome.flagged.len(),
            bad_undetected: self.outcome.bad_undetected,
            resolved: self.resolved,
            conflicted: self.conflicted,
            correct_pairs: self.accuracy.correct_pairs,
            exact: self.accuracy.exact_match,
            payment_total: self.outcome.payment_total(),
            utility: self.utility.contract,
        }
    }
}

/// One pass: noise → effort → types → crowdsort → post-process → recover → utilities.
pub fn run_trial(cfg: &ExperimentConfig, derived: &DerivedParams, seed: TrialSeed) -> Result<TrialResult> {
    let offered = derived.offered();
    let truth = GroundTruth::random(cfg.n, &mut seed.rng(DOMAIN_TRUTH));
    let plan = build_plan(cfg.n, cfg.s, offered.v, offered.r, seed.rng(DOMAIN_PLAN).random())?;

    let mut rng = seed.rng(DOMAIN_AGENTS);
    let agents = (0..cfg.s)
        .map(|i| {
            let (psi, pi) = noise_inject(cfg, i, seed)?;
            let mut profile = AgentProfile::new(psi, pi);
            profile.effort = decide_effort(&profile, &offered);
            let kind = draw_type(&profile, &mut rng);
            profile.kind = Some(kind);
            Ok(SimAgent {
                profile,
                source: AnswerSource::for_type(kind, &truth, &mut rng),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let outcome = crowdsort(&plan, &agents, &truth, offered.p)?;
    let condensed = post_process(&outcome.survivors, cfg.n);
    let ranking = recover_ranking(&condensed);
    let accuracy = accuracy_metrics(&condensed, &ranking, &truth);
    let contract = empirical_utility(&outcome, &accuracy, &offered, &cfg.mechanism());
    Ok(TrialResult {
        seed,
        resolved: condensed.resolved_count(),
        conflicted: condensed.conflicted_count(),
        utility: UtilityReport::new(contract, derived.self_sort),
        ranking,
        accuracy,
        outcome,
    })
}

/// Runs trials `0..cfg.trials` of grid point `point` in parallel and keeps
/// their summaries in trial order.
pub fn run_trials(cfg: &ExperimentConfig, derived: &DerivedParams, point: u64) -> Result<Vec<TrialSummary>> {
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, derived, TrialSeed::new(cfg.seed, point, t)).map(|r| r.summary()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub value: f64,
    pub feasible: bool,
    pub reason: Option<String>,
    pub trials: usize,
    pub ci_level: f64,
    pub payment: Option<f64>,
    pub self_sort: f64,
    pub u_contract: Option<Estimate>,
    pub u_ratio: Option<Estimate>,
    pub resolved: Option<Estimate>,
    /// Wilson interval.
    pub exact_rate: Option<Estimate>,
    pub flagged: Option<Estimate>,
    pub payment_total: Option<Estimate>,
    pub effort: Option<Estimate>,
}

impl ResultRow {
    fn infeasible(value: f64, cfg: &ExperimentConfig, reason: String) -> Self {
        ResultRow {
            value,
            feasible: false,
            reason: Some(reason),
            trials: cfg.trials,
            ci_level: cfg.ci_level,
            payment: None,
            self_sort: self_sort_utility(&cfg.mechanism()),
            u_contract: None,
            u_ratio: None,
            resolved: None,
            exact_rate: None,
            flagged: None,
            payment_total: None,
            effort: None,
        }
    }

    /// Aggregates trials into means with percentile intervals.
    pub fn from_trials(value: f64, ci_level: f64, derived: &DerivedParams, results: &[TrialSummary]) -> Self {
        let column = |f: &dyn Fn(&TrialSummary) -> f64| {
            let xs: Vec<f64> = results.iter().map(f).collect();
            Some(percentile_interval(&xs, ci_level))
        };
        let exact = results.iter().filter(|r| r.exact).count() as u64;
        ResultRow {
            value,
            feasible: true,
            reason: None,
            trials: results.len(),
            ci_level,
            payment: Some(derived.payment),
            self_sort: derived.self_sort,
            u_contract: column(&|r| r.utility),
            u_ratio: column(&|r| r.utility / derived.self_sort),
            resolved: column(&|r| r.resolved as f64),
            exact_rate: Some(wilson(exact, results.len() as u64, ci_level)),
            flagged: column(&|r| r.flagged as f64),
            payment_total: column(&|r| r.payment_total),
            effort: column(&|r| r.effort as f64),
        }
    }

    pub fn mean_resolved(&self) -> Option<f64> {
        self.resolved.map(|e| e.mean)
    }
}

/// A single configuration: the aggregate row plus every trial's summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub derived: DerivedParams,
    pub row: ResultRow,
    pub trials: Vec<TrialSummary>,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    let derived = derive_params(cfg)?;
    let trials = run_trials(cfg, &derived, 0)?;
    let row = ResultRow::from_trials(f64::NAN, cfg.ci_level, &derived, &trials);
    Ok(Simulation { derived, row, trials })
}

/// One row per grid value. Infeasible points yield rows flagged as such.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::invalid("no sweep variable configured"))?;
    spec.values
        .par_iter()
        .enumerate()
        .map(|(j, &x)| {
            let point = cfg.with_value(spec.variable, x)?;
            match derive_params(&point) {
                Ok(derived) => {
                    let trials = run_trials(&point, &derived, j as u64)?;
                    Ok(ResultRow::from_trials(x, point.ci_level, &derived, &trials))
                }
                Err(Error::Infeasible(reason)) => Ok(ResultRow::infeasible(x, &point, reason)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// First grid value where the mean `U/U_self` drops to 1, linearly interpolated.
///
/// Rows are taken in grid order; infeasible rows are skipped.
pub fn ratio_crossing(rows: &[ResultRow]) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.u_ratio.map(|e| (r.value, e.mean)))
        .collect();
    if points.first().is_some_and(|&(x, y)| y <= 1.0 && x.is_finite()) {
        return Some(points[0].0);
    }
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 > 1.0 && y1 <= 1.0).then(|| x0 + (y0 - 1.0) * (x1 - x0) / (y0 - y1))
    })
}

const ESTIMATES: [&str; 7] = [
    "u_contract",
    "u_ratio",
    "resolved",
    "exact_rate",
    "flagged",
    "payment_total",
    "effort",
];

/// Column names of the result CSV.
pub fn csv_header() -> Vec<String> {
    let mut cols: Vec<String> = ["value", "feasible", "trials", "ci_level", "payment", "self_sort"]
        .map(String::from)
        .to_vec();
    for name in ESTIMATES {
        for suffix in ["mean", "lo", "hi"] {
            cols.push(format!("{name}_{suffix}"));
        }
    }
    cols.push("reason".into());
    cols
}

pub fn write_rows_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for row in rows {
        let mut rec = vec![
            row.value.to_string(),
            row.feasible.to_string(),
            row.trials.to_string(),
            row.ci_level.to_string(),
            num(row.payment),
            row.self_sort.to_string(),
        ];
        for est in [
            row.u_contract,
            row.u_ratio,
            row.resolved,
            row.exact_rate,
            row.flagged,
            row.payment_total,
            row.effort,
        ] {
            rec.push(num(est.map(|e| e.mean)));
            rec.push(num(est.map(|e| e.lo)));
            rec.push(num(est.map(|e| e.hi)));
        }
        rec.push(row.reason.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar path next to a CSV: `results.csv` → `results.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the CSV and a JSON sidecar holding the resolved configuration.
pub fn write_outputs(rows: &[ResultRow], cfg: &ExperimentConfig, csv_path: &Path) -> Result<()> {
    write_rows_csv(rows, BufWriter::new(File::create(csv_path)?))?;
    let sidecar = serde_json::json!({ "config": cfg, "rows": rows.len() });
    std::fs::write(sidecar_path(csv_path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Fraction of all pairs resolved, for reporting.
pub fn resolved_fraction(resolved: f64, n: usize) -> f64 {
    resolved / pair_count(n) as f64
}
