use serde::Serialize;
use trialspace_core::population::{PopulationBlock, PopulationSpec};
use trialspace_core::tables::Table2x2;
use trialspace_core::trial::replicate_trials;
use trialspace_core::Population;

use crate::dag::appendix_report;
use crate::error::{CliError, CliResult};
use crate::output::emit_json;
use crate::tables::{example1_report, DEFAULT_TOL};
use crate::Context;

pub fn run(ctx: &Context, name: &str) -> CliResult<()> {
    let out = ctx.out.as_deref();
    match name {
        "example1" => emit_json(&example1_report(DEFAULT_TOL)?, out),
        "appendix" => emit_json(&appendix_report()?, out),
        "cancellation" => emit_json(&cancellation_report(ctx.seed.unwrap_or(0))?, out),
        other => Err(CliError::Validation(format!(
            "unknown builtin `{other}` (expected example1, appendix or cancellation)"
        ))),
    }
}

/// 100 individuals who always respond and 100 who never do, regardless of
/// treatment, split by a recorded attribute.
pub fn cancellation_population() -> Population {
    let block = |a: u8, p: f64| PopulationBlock {
        count: 100,
        attrs: [("a".to_string(), a)].into_iter().collect(),
        tau: p,
        nu: p,
    };
    PopulationSpec::Blocks {
        blocks: vec![block(1, 1.0), block(0, 0.0)],
    }
    .build()
    .expect("cancellation population is well formed")
}

#[derive(Debug, Serialize)]
pub struct CancellationReport {
    pub seed: u64,
    pub exact_effect: f64,
    pub s: usize,
    pub t: usize,
    pub reps: usize,
    pub mc_mean_effect: f64,
    pub mc_stderr: f64,
    pub mc_ci: [f64; 2],
    pub ci_contains_zero: bool,
    /// Naive treated-minus-untreated response gap if treatment had gone to 90
    /// of the always-responders and 10 of the never-responders.
    pub selective_assignment_gap: f64,
    pub pass: bool,
}

pub fn cancellation_report(seed: u64) -> CliResult<CancellationReport> {
    let pop = cancellation_population();
    let exact_effect = pop.summary().true_effect;
    let (s, t, reps) = (100, 50, 1000);
    let rep = replicate_trials(&pop, s, t, reps, seed)?;
    let half_width = 4.0 * rep.stderr;
    let ci = [rep.mean_effect - half_width, rep.mean_effect + half_width];
    let ci_contains_zero = ci[0] <= 0.0 && 0.0 <= ci[1];

    // treated: 90 responders + 10 non-responders; untreated: 10 + 90
    let selective = Table2x2::new(90, 10, 10, 90);
    let selective_assignment_gap = selective
        .independence_gap()
        .map(|g| trialspace_core::exact::to_f64(&g))
        .unwrap_or(f64::NAN);

    Ok(CancellationReport {
        seed,
        exact_effect,
        s,
        t,
        reps,
        mc_mean_effect: rep.mean_effect,
        mc_stderr: rep.stderr,
        mc_ci: ci,
        ci_contains_zero,
        selective_assignment_gap,
        pass: exact_effect == 0.0 && ci_contains_zero,
    })
}
