//! The principal's side: realized and guaranteed utilities, the break-even
//! disutility, and the choice of how many agents to incentivize.

use std::io::Write;

use serde::Serialize;

use crate::aggregate::Accuracy;
use crate::contract::{
    bad_probability_bound, params_known, params_unknown, ContractParams, DisutilityModel, KnownModelConfig,
    MechanismConfig,
};
use crate::engine::TrialOutcome;
use crate::{pair_count, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Contract,
    SelfSort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityReport {
    pub contract: f64,
    pub self_sort: f64,
    pub decision: Decision,
}

impl UtilityReport {
    pub fn new(contract: f64, self_sort: f64) -> Self {
        let decision = if contract >= self_sort {
            Decision::Contract
        } else {
            Decision::SelfSort
        };
        UtilityReport {
            contract,
            self_sort,
            decision,
        }
    }
}

/// `λk - ψ̄v - p·m` from raw counts.
pub fn utility_from_counts(cfg: &MechanismConfig, correct_pairs: usize, v: usize, unflagged: usize, p: f64) -> f64 {
    cfg.lambda * correct_pairs as f64 - cfg.psi_bar * v as f64 - p * unflagged as f64
}

/// Realized utility of one trial: `k` correct resolved pairs, `m` unflagged agents.
pub fn empirical_utility(
    outcome: &TrialOutcome,
    accuracy: &Accuracy,
    params: &ContractParams,
    cfg: &MechanismConfig,
) -> f64 {
    utility_from_counts(cfg, accuracy.correct_pairs, params.v, outcome.unflagged(), params.p)
}

/// Utility of sorting everything herself with quicksort: `λ·C(n,2) - 2ψ̄·n·ln n`.
pub fn self_sort_utility(cfg: &MechanismConfig) -> f64 {
    let n = cfg.n as f64;
    let sort_cost = if cfg.n > 1 { 2.0 * cfg.psi_bar * n * n.ln() } else { 0.0 };
    cfg.lambda * pair_count(cfg.n) as f64 - sort_cost
}

/// The agent disutility at which running the contract and sorting alone break even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndifferencePoint {
    /// Largest ψ for which the contract is guaranteed to be at least as good.
    /// Nonpositive when no positive ψ qualifies.
    pub psi: f64,
    /// `ψ̄ / ψ` at the break-even point, when `ψ > 0`.
    pub ratio: Option<f64>,
}

impl IndifferencePoint {
    pub fn contract_preferred(&self, psi: f64) -> bool {
        psi <= self.psi
    }
}

/// Solves the principal's participation condition
/// `λδC(n,2) + dψ/(1 - δ/(2(1-π)s))·(s + δ/(2π)) ≤ ψ̄(2n ln n - log₂(2(1-π)s/δ))`
/// for equality in `ψ`, with `d` from the known-model contract.
pub fn indifference_threshold(cfg: &MechanismConfig) -> Result<IndifferencePoint> {
    cfg.validate()?;
    let n = cfg.n as f64;
    let s = cfg.s as f64;
    let verify_log = (2.0 * (1.0 - cfg.pi) * s / cfg.delta).log2();
    let bracket = 2.0 * n * n.ln() - verify_log;
    if bracket <= 0.0 {
        return Err(Error::invalid(format!(
            "self-sorting cost 2n ln n does not exceed the verification budget (difference {bracket:.4})"
        )));
    }
    let escape = cfg.delta / (2.0 * (1.0 - cfg.pi) * s);
    let d = params_known(&KnownModelConfig {
        mechanism: *cfg,
        psi: 0.0,
    })?
    .d;
    let slope = d / (1.0 - escape) * (s + cfg.delta / (2.0 * cfg.pi));
    let psi = (cfg.psi_bar * bracket - cfg.lambda * cfg.delta * pair_count(cfg.n) as f64) / slope;
    let ratio = (psi > 0.0).then(|| cfg.psi_bar / psi);
    Ok(IndifferencePoint { psi, ratio })
}

/// Lower bound `E(p_g)` on the principal's expected utility for target `g`.
pub fn lower_bound_utility(cfg: &MechanismConfig, epsilon: f64, g: usize, params: &ContractParams) -> f64 {
    let s = cfg.s as f64;
    let share = g as f64 / s;
    let q = cfg.delta / 4.0;
    let paid_good = (1.0 - q) * cfg.pi * (share + epsilon) + q;
    let paid_bad = (1.0 - q) * 0.5f64.powi(params.v as i32) * bad_probability_bound(cfg, epsilon, g) + q;
    cfg.lambda * (1.0 - cfg.delta) * pair_count(cfg.n) as f64
        - cfg.psi_bar * params.v as f64
        - s * params.p * paid_good
        - s * params.p * paid_bad
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GRow {
    pub g: usize,
    pub feasible: bool,
    pub p_g: Option<f64>,
    pub v_g: Option<usize>,
    pub r_g: Option<usize>,
    pub objective: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GStarResult {
    /// Maximizer over feasible `g`, smallest on ties. `None` if nothing is feasible.
    pub g_star: Option<usize>,
    pub objective: Option<f64>,
    pub self_sort: f64,
    pub decision: Decision,
    pub table: Vec<GRow>,
    /// Number of contract evaluations performed (one per candidate `g`).
    pub evaluations: usize,
}

impl GStarResult {
    pub fn feasible(&self) -> impl Iterator<Item = &GRow> {
        self.table.iter().filter(|r| r.feasible)
    }

    pub fn params_for(&self, g: usize) -> Option<&GRow> {
        self.table.get(g).filter(|r| r.feasible)
    }
}

/// Enumerates `g = 0..=s` once each and keeps the best guaranteed utility.
pub fn optimize_g(cfg: &MechanismConfig, model: &DisutilityModel) -> Result<GStarResult> {
    cfg.validate()?;
    let self_sort = self_sort_utility(cfg);
    let mut table = Vec::with_capacity(cfg.s + 1);
    let mut best: Option<(usize, f64)> = None;

    for g in 0..=cfg.s {
        match params_unknown(cfg, model, g) {
            Ok(params) => {
                let e = lower_bound_utility(cfg, model.epsilon, g, &params);
                if best.is_none_or(|(_, b)| e > b) {
                    best = Some((g, e));
                }
                table.push(GRow {
                    g,
                    feasible: true,
                    p_g: Some(params.p),
                    v_g: Some(params.v),
                    r_g: Some(params.r),
                    objective: Some(e),
                    reason: None,
                });
            }
            Err(Error::Infeasible(reason)) => table.push(GRow {
                g,
                feasible: false,
                p_g: None,
                v_g: None,
                r_g: None,
                objective: None,
                reason: Some(reason),
            }),
            Err(other) => return Err(other),
        }
    }

    let decision = match best {
        Some((_, e)) if e >= self_sort => Decision::Contract,
        _ => Decision::SelfSort,
    };
    Ok(GStarResult {
        g_star: best.map(|b| b.0),
        objective: best.map(|b| b.1),
        self_sort,
        decision,
        evaluations: table.len(),
        table,
    })
}

/// Writes the g-sweep as CSV: `g,feasible,p_g,v_g,r_g,E(p_g)`.
pub fn write_g_table_csv<W: Write>(result: &GStarResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["g", "feasible", "p_g", "v_g", "r_g", "E(p_g)"])?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    for row in &result.table {
        w.write_record([
            row.g.to_string(),
            row.feasible.to_string(),
            opt(row.p_g.map(|x| x.to_string())),
            opt(row.v_g.map(|x| x.to_string())),
            opt(row.r_g.map(|x| x.to_string())),
            opt(row.objective.map(|x| x.to_string())),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::{DisutilityModel, DEFAULT_DKW_DELTA};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn defaults() -> MechanismConfig {
        KnownModelConfig::defaults().mechanism
    }

    #[test]
    fn empirical_utility_example() {
        let u = utility_from_counts(&defaults(), 4950, 12, 80, 6.746);
        assert!((u - (9900.0 - 24.0 - 539.68)).abs() < 1e-9);
        assert!((u - 9336.3).abs() < 0.05);
        assert_eq!(utility_from_counts(&defaults(), 0, 12, 0, 6.746), -24.0);
        assert_eq!(utility_from_counts(&defaults(), 100, 12, 50, 0.0), 200.0 - 24.0);
    }

    #[test]
    fn self_sort_examples() {
        let u = self_sort_utility(&defaults());
        assert!((u - (9900.0 - 400.0 * 100f64.ln())).abs() < 1e-9);
        assert!((u - 8057.9).abs() < 0.05);
        let free = MechanismConfig {
            psi_bar: 0.0,
            ..defaults()
        };
        assert_eq!(self_sort_utility(&free), 9900.0);
        let single = MechanismConfig { n: 1, ..defaults() };
        assert_eq!(self_sort_utility(&single), 0.0);
    }

    #[test]
    fn utility_report_decision() {
        assert_eq!(UtilityReport::new(2.0, 1.0).decision, Decision::Contract);
        assert_eq!(UtilityReport::new(1.0, 1.0).decision, Decision::Contract);
        assert_eq!(UtilityReport::new(0.5, 1.0).decision, Decision::SelfSort);
    }

    #[test]
    fn indifference_at_defaults() {
        let point = indifference_threshold(&defaults()).unwrap();
        // Independent evaluation of the participation condition at the solution.
        let cfg = defaults();
        let d = 12.0 + 220.0 * 11f64.ln();
        let lhs = 2.0 * 0.01 * 4950.0 + d * point.psi / (1.0 - 0.01 / 40.0) * (100.0 + 0.01 / 1.6);
        let rhs = 2.0 * (200.0 * 100f64.ln() - 4000f64.log2());
        assert!((lhs - rhs).abs() < 1e-9);
        assert!(point.psi > 0.0 && point.psi < 0.1);
        assert!((point.ratio.unwrap() - cfg.psi_bar / point.psi).abs() < 1e-12);
    }

    #[test]
    fn vanishing_failure_prefers_contract() {
        let cfg = MechanismConfig {
            delta: 1e-12,
            ..defaults()
        };
        let point = indifference_threshold(&cfg).unwrap();
        assert!(point.contract_preferred(1e-9));
    }

    #[test]
    fn free_principal_never_prefers_contract() {
        let cfg = MechanismConfig {
            psi_bar: 0.0,
            ..defaults()
        };
        let point = indifference_threshold(&cfg).unwrap();
        assert!(point.psi <= 0.0);
        assert_eq!(point.ratio, None);
        assert!(!point.contract_preferred(1e-6));
    }

    #[test]
    fn tiny_instance_violates_precondition() {
        // 2·2·ln 2 = 2.77 < log2(2·0.2·1000/0.01) = 15.3
        let cfg = MechanismConfig {
            n: 2,
            s: 1000,
            ..defaults()
        };
        assert!(indifference_threshold(&cfg).is_err());
    }

    #[test]
    fn free_labor_picks_largest_feasible_g() {
        let model = DisutilityModel::with_epsilon(vec![0.0; 50], 0.05).unwrap();
        let res = optimize_g(&defaults(), &model).unwrap();
        assert!(res.feasible().all(|r| r.p_g == Some(0.0)));
        assert_eq!(res.evaluations, 101);
        // E only moves with the integer v_g, so it is a nondecreasing step
        // function of g and the smallest-g tiebreak lands on the last step.
        let objectives: Vec<f64> = res.feasible().map(|r| r.objective.unwrap()).collect();
        assert!(objectives.windows(2).all(|w| w[0] <= w[1]));
        let largest = res.feasible().last().unwrap();
        assert_eq!(res.objective, largest.objective);
        let g_star = res.g_star.unwrap();
        assert!(res.table[..g_star].iter().all(|r| r.objective < largest.objective));
    }

    #[test]
    fn single_agent_matches_enumeration() {
        let cfg = MechanismConfig {
            s: 1,
            n: 9,
            ..defaults()
        };
        let model = DisutilityModel::with_epsilon(vec![0.02, 0.01, 0.03], 0.01).unwrap();
        let res = optimize_g(&cfg, &model).unwrap();
        assert_eq!(res.table.len(), 2);
        let candidates: Vec<(usize, f64)> = (0..=1)
            .filter_map(|g| {
                params_unknown(&cfg, &model, g)
                    .ok()
                    .map(|p| (g, lower_bound_utility(&cfg, model.epsilon, g, &p)))
            })
            .collect();
        let brute = candidates.iter().fold(None::<(usize, f64)>, |acc, &(g, e)| match acc {
            Some((_, b)) if b >= e => acc,
            _ => Some((g, e)),
        });
        assert_eq!(res.g_star, brute.map(|b| b.0));
    }

    #[test]
    fn objective_nonincreasing_in_payment() {
        let cfg = defaults();
        let model = DisutilityModel::with_epsilon(vec![0.01, 0.03, 0.05], 0.05).unwrap();
        let params = params_unknown(&cfg, &model, 70).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let e = lower_bound_utility(&cfg, 0.05, 70, &params.with_payment(k as f64 * 2.5));
            assert!(e <= last);
            last = e;
        }
    }

    fn normal_model(m: usize, seed: u64) -> DisutilityModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.03, 0.01).unwrap();
        DisutilityModel::from_samples((0..m).map(|_| normal.sample(&mut rng)).collect(), DEFAULT_DKW_DELTA).unwrap()
    }

    #[test]
    fn decision_flag_is_consistent() {
        for (psi_bar, lambda) in [(3.0, 3.0), (8.0, 8.0), (0.5, 3.0)] {
            let cfg = MechanismConfig {
                psi_bar,
                lambda,
                ..defaults()
            };
            let res = optimize_g(&cfg, &normal_model(500, 1)).unwrap();
            let contract = res.objective.is_some_and(|e| e >= res.self_sort);
            assert_eq!(res.decision == Decision::Contract, contract);
        }
    }

    #[test]
    fn g_table_csv_header() {
        let res = optimize_g(
            &MechanismConfig {
                s: 3,
                n: 9,
                ..defaults()
            },
            &normal_model(40, 2),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_g_table_csv(&res, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("g,feasible,p_g,v_g,r_g,E(p_g)\n0,false,,,,\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
