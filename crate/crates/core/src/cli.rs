//! Command-line front end.
//!
//! Every subcommand reads an optional JSON [`ExperimentConfig`] and applies
//! flag overrides on top of it.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::info;
use rand::Rng;

use crate::assignment::build_plan;
use crate::harness::{derive_params, simulate, sweep, write_outputs, write_rows_csv, ExperimentConfig, TrialSeed};
use crate::harness::{disutility_samples, ModelKind};
use crate::optimizer::{optimize_g, write_g_table_csv};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "crowdsort", version, about = "Incentivized crowdsourced ranking experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub s: Option<usize>,
    #[arg(long, global = true)]
    pub psi: Option<f64>,
    #[arg(long, global = true)]
    pub payment_scale: Option<f64>,
    /// Treat replication beyond the agent count as an error.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit the assignment plan as JSON.
    Plan,
    /// Emit the contract parameters as JSON.
    Params,
    /// Run many trials of one configuration.
    Simulate {
        /// Also write one JSON line per trial to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the configured grid experiment.
    Sweep,
    /// Tabulate the guaranteed utility for every target g.
    #[command(name = "optimize-g")]
    OptimizeG,
}

impl Common {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(x) = self.seed {
            cfg.seed = x;
        }
        if let Some(x) = self.trials {
            cfg.trials = x;
        }
        if let Some(x) = self.n {
            cfg.n = x;
        }
        if let Some(x) = self.s {
            cfg.s = x;
        }
        if let Some(x) = self.psi {
            cfg.psi = x;
        }
        if let Some(x) = self.payment_scale {
            cfg.payment_scale = x;
        }
        cfg.strict |= self.strict;
        cfg.validate()?;
        Ok(cfg)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn emit_json<T: serde::Serialize>(common: &Common, value: &T) -> Result<()> {
    let mut out = common.output()?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.common.resolve()?;
    match &cli.command {
        Command::Plan => {
            let derived = derive_params(&cfg)?;
            let plan_seed: u64 = TrialSeed::from(cfg.seed).rng(0).random();
            let plan = build_plan(cfg.n, cfg.s, derived.contract.v, derived.contract.r, plan_seed)?;
            emit_json(&cli.common, &plan)
        }
        Command::Params => emit_json(&cli.common, &derive_params(&cfg)?),
        Command::Simulate { trace } => {
            let sim = simulate(&cfg)?;
            info!(
                "{} trials: mean resolved {:.1}, exact rate {:.3}",
                sim.trials.len(),
                sim.row.resolved.map_or(f64::NAN, |e| e.mean),
                sim.row.exact_rate.map_or(f64::NAN, |e| e.mean)
            );
            if let Some(path) = trace {
                let mut w = BufWriter::new(File::create(path)?);
                for t in &sim.trials {
                    serde_json::to_writer(&mut w, t)?;
                    writeln!(w)?;
                }
                w.flush()?;
            }
            write_rows(&cli.common, &cfg, &[sim.row])
        }
        Command::Sweep => write_rows(&cli.common, &cfg, &sweep(&cfg)?),
        Command::OptimizeG => {
            if cfg.model != ModelKind::Unknown {
                return Err(Error::invalid("optimize-g needs the unknown model and a distribution"));
            }
            let model = disutility_samples(&cfg.distribution.expect("validated"), cfg.seed)?;
            let result = optimize_g(&cfg.mechanism(), &model)?;
            info!(
                "g* = {:?}, E = {:?}, self-sort = {:.2}, decision = {:?}",
                result.g_star, result.objective, result.self_sort, result.decision
            );
            write_g_table_csv(&result, cli.common.output()?)
        }
    }
}

fn write_rows(common: &Common, cfg: &ExperimentConfig, rows: &[crate::harness::ResultRow]) -> Result<()> {
    match &common.out {
        Some(path) => write_outputs(rows, cfg, path),
        None => write_rows_csv(rows, io::stdout().lock()),
    }
}
