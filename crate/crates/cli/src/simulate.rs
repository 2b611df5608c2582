use std::collections::BTreeMap;
use std::fmt::Write as _;

use clap::{Args, Subcommand};
use serde::Serialize;
use trialspace_core::trial::{mean_and_stderr, run_trial, sample_observational};
use trialspace_core::{Population, SeededRng};

use crate::config::{ResolvedTrial, TrialParams};
use crate::error::{CliError, CliResult};
use crate::output::{emit_json, to_pretty, write_file};
use crate::{Context, Format};

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Observational sampling with replacement.
    Obs(SimArgs),
    /// Randomized controlled trial(s).
    Rct(SimArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Sample size.
    #[arg(long)]
    s: Option<usize>,
    /// Number of treated participants.
    #[arg(long)]
    t: Option<usize>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<usize>,
}

impl SimArgs {
    fn merged(&self, base: &TrialParams) -> TrialParams {
        TrialParams {
            s: self.s.or(base.s),
            t: self.t.or(base.t),
            reps: self.reps.or(base.reps),
        }
    }
}

pub fn run(ctx: &Context, cmd: SimulateCommand) -> CliResult<()> {
    let seed = ctx
        .seed
        .ok_or_else(|| CliError::Validation("--seed is required for simulation".into()))?;
    let pop = ctx.config.population()?;
    match cmd {
        SimulateCommand::Obs(args) => {
            observational(ctx, &pop, args.merged(&ctx.config.trial), seed)
        }
        SimulateCommand::Rct(args) => rct(ctx, &pop, args.merged(&ctx.config.trial), seed),
    }
}

#[derive(Serialize)]
struct ObsSummary {
    command: &'static str,
    seed: u64,
    n: usize,
    s: usize,
    attribute_frequencies: BTreeMap<String, f64>,
}

fn observational(ctx: &Context, pop: &Population, params: TrialParams, seed: u64) -> CliResult<()> {
    let s = params
        .s
        .ok_or_else(|| CliError::Validation("sample size `s` is required".into()))?;
    let sample = sample_observational(pop, s, &mut SeededRng::new(seed, 0))?;

    let mut csv = String::from("k,individual");
    for label in pop.labels() {
        write!(csv, ",{label}").unwrap();
    }
    csv.push('\n');
    for (k, (&i, row)) in sample.draws.iter().zip(&sample.data).enumerate() {
        write!(csv, "{},{}", k + 1, i + 1).unwrap();
        for &b in row {
            write!(csv, ",{}", b as u8).unwrap();
        }
        csv.push('\n');
    }

    let attribute_frequencies = pop
        .labels()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let ones = sample.data.iter().filter(|row| row[j]).count();
            (name.clone(), ones as f64 / s as f64)
        })
        .collect();
    let summary = ObsSummary {
        command: "obs",
        seed,
        n: pop.n(),
        s,
        attribute_frequencies,
    };
    match &ctx.out {
        Some(dir) => {
            if ctx.format.unwrap_or(Format::Csv) == Format::Csv {
                write_file(&dir.join("sample.csv"), csv.as_bytes())?;
            }
            write_file(&dir.join("summary.json"), to_pretty(&summary)?.as_bytes())
        }
        None => emit_json(&summary, None),
    }
}

#[derive(Serialize)]
struct RctSummary {
    command: &'static str,
    seed: u64,
    n: usize,
    s: usize,
    t: usize,
    reps: usize,
    rho1: f64,
    rho0: f64,
    effect: f64,
    stderr: Option<f64>,
    tau_bar: f64,
    nu_bar: f64,
    true_effect: f64,
}

fn rct(ctx: &Context, pop: &Population, params: TrialParams, seed: u64) -> CliResult<()> {
    let ResolvedTrial { s, t, reps } = ResolvedTrial::resolve(&params, pop.n())?;
    let write_csv = ctx.out.is_some() && ctx.format.unwrap_or(Format::Csv) == Format::Csv;

    let mut rho1 = Vec::with_capacity(reps);
    let mut rho0 = Vec::with_capacity(reps);
    let mut effects = Vec::with_capacity(reps);
    for r in 0..reps {
        let trial = run_trial(pop, s, t, &mut SeededRng::new(seed, r as u64))?;
        rho1.push(trial.rho1()?);
        rho0.push(trial.rho0()?);
        effects.push(trial.effect_estimate()?);
        if write_csv {
            let dir = ctx.out.as_ref().expect("checked above");
            let mut buf = Vec::new();
            trial.write_csv(pop, &mut buf)?;
            write_file(&dir.join(format!("trial_{r:04}.csv")), &buf)?;
        }
    }

    let (effect, stderr) = mean_and_stderr(&effects);
    let truth = pop.summary();
    let summary = RctSummary {
        command: "rct",
        seed,
        n: pop.n(),
        s,
        t,
        reps,
        rho1: mean_and_stderr(&rho1).0,
        rho0: mean_and_stderr(&rho0).0,
        effect,
        stderr: (reps >= 2).then_some(stderr),
        tau_bar: truth.tau_bar,
        nu_bar: truth.nu_bar,
        true_effect: truth.true_effect,
    };
    match &ctx.out {
        Some(dir) => write_file(&dir.join("summary.json"), to_pretty(&summary)?.as_bytes()),
        None => emit_json(&summary, None),
    }
}
