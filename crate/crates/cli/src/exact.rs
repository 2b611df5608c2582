use clap::{Args, Subcommand};
use serde::Serialize;
use trialspace_core::exact::{
    c0_size, chernoff_check, hypergeom_moments, hypergeom_summed_moments, to_f64, ChernoffReport,
    ExactDist, TreatmentTally, DEFAULT_ENUMERATION_CAP,
};
use trialspace_core::BigRational;

use crate::error::{CliError, CliResult};
use crate::output::emit_json;
use crate::Context;

/// Attribute sweeps enumerate all 2^n bit vectors up to this n.
const MAX_SWEEP_N: usize = 16;

#[derive(Debug, Subcommand)]
pub enum ExactCommand {
    /// Check that treatment is independent of every fixed attribute by
    /// enumerating the trial space.
    VerifyIndependence(VerifyArgs),
    /// Exact hypergeometric pmf of the treated/attribute overlap and its moments.
    Hypergeom(HypergeomArgs),
    /// Exact overlap tails against the exponential tail bound.
    Chernoff(ChernoffArgs),
    /// Size of the (sample, treated-set) space.
    C0Size(SizeArgs),
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    size: SizeArgs,
    /// Single attribute as comma-separated bits; all 2^n attributes when omitted.
    #[arg(long, value_delimiter = ',')]
    attribute: Option<Vec<u8>>,
}

#[derive(Debug, Args)]
pub struct HypergeomArgs {
    #[arg(long)]
    n: u64,
    /// Size of the fixed subset A.
    #[arg(long = "K")]
    k: u64,
    #[arg(long)]
    t: u64,
}

#[derive(Debug, Args)]
pub struct ChernoffArgs {
    #[command(flatten)]
    base: HypergeomArgs,
    #[arg(long)]
    eps: f64,
}

pub fn run(ctx: &Context, cmd: ExactCommand) -> CliResult<()> {
    let out = ctx.out.as_deref();
    match cmd {
        ExactCommand::VerifyIndependence(args) => emit_json(&verify(args)?, out),
        ExactCommand::Hypergeom(args) => emit_json(&hypergeom(args)?, out),
        ExactCommand::Chernoff(args) => emit_json(&chernoff(args)?, out),
        ExactCommand::C0Size(args) => emit_json(&size(args)?, out),
    }
}

#[derive(Serialize)]
struct SizeReport {
    n: usize,
    s: usize,
    t: usize,
    c0_size: String,
    enumerated: Option<u64>,
}

fn size(args: SizeArgs) -> CliResult<SizeReport> {
    let size = c0_size(args.n, args.s, args.t)?;
    let enumerated = match TreatmentTally::enumerate(args.n, args.s, args.t, args.cap) {
        Ok(tally) => Some(tally.total()),
        Err(e) if e.is_cap() => None,
        Err(e) => return Err(e.into()),
    };
    Ok(SizeReport {
        n: args.n,
        s: args.s,
        t: args.t,
        c0_size: size.to_string(),
        enumerated,
    })
}

#[derive(Serialize)]
struct Failure {
    k: usize,
    attribute: Vec<u8>,
    marginal: String,
    given_a1: Option<String>,
    given_a0: Option<String>,
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    s: usize,
    t: usize,
    c0_size: String,
    target: String,
    attributes_checked: u64,
    positions_checked: usize,
    holds: bool,
    failures: Vec<Failure>,
}

fn verify(args: VerifyArgs) -> CliResult<VerifyReport> {
    let SizeArgs { n, s, t, cap } = args.size;
    let tally = TreatmentTally::enumerate(n, s, t, cap)?;
    let attributes: Vec<Vec<bool>> = match &args.attribute {
        Some(bits) => {
            if bits.len() != n || bits.iter().any(|&b| b > 1) {
                return Err(CliError::Validation(format!(
                    "--attribute needs {n} comma-separated 0/1 values"
                )));
            }
            vec![bits.iter().map(|&b| b == 1).collect()]
        }
        None if n <= MAX_SWEEP_N => (0u64..1 << n)
            .map(|mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
            .collect(),
        None => {
            return Err(CliError::Validation(format!(
                "n > {MAX_SWEEP_N}: pass --attribute to check a single attribute"
            )))
        }
    };
    let target = BigRational::new(t.into(), s.into());
    let mut failures = Vec::new();
    for attribute in &attributes {
        for k in 0..s {
            let probs = tally.treatment_prob(k, attribute)?;
            if !probs.all_equal(&target) && failures.len() < 10 {
                failures.push(Failure {
                    k,
                    attribute: attribute.iter().map(|&b| b as u8).collect(),
                    marginal: probs.marginal.to_string(),
                    given_a1: probs.given_a1.map(|p| p.to_string()),
                    given_a0: probs.given_a0.map(|p| p.to_string()),
                });
            }
        }
    }
    Ok(VerifyReport {
        n,
        s,
        t,
        c0_size: tally.total().to_string(),
        target: target.to_string(),
        attributes_checked: attributes.len() as u64,
        positions_checked: s,
        holds: failures.is_empty(),
        failures,
    })
}

#[derive(Serialize)]
struct PmfEntry {
    r: usize,
    exact: String,
    value: f64,
}

#[derive(Serialize)]
struct HypergeomReport {
    n: u64,
    #[serde(rename = "K")]
    k: u64,
    t: u64,
    pmf: Vec<PmfEntry>,
    pmf_sums_to_one: bool,
    mean: f64,
    variance: Option<f64>,
    mean_exact: String,
    variance_exact: Option<String>,
    summed_mean_exact: String,
    summed_variance_exact: String,
    moments_match: bool,
}

fn hypergeom(args: HypergeomArgs) -> CliResult<HypergeomReport> {
    let HypergeomArgs { n, k, t } = args;
    let dist = ExactDist::hypergeometric(n, k, t)?;
    let summed = hypergeom_summed_moments(n, k, t)?;
    let closed = if n >= 2 {
        Some(hypergeom_moments(n, k, t)?)
    } else {
        None
    };
    let mean_exact = BigRational::new((t * k).into(), n.into());
    let moments_match = summed.mean == mean_exact
        && closed
            .as_ref()
            .is_none_or(|m| m.variance == summed.variance);
    Ok(HypergeomReport {
        n,
        k,
        t,
        pmf_sums_to_one: dist.is_normalized(),
        pmf: dist
            .outcomes
            .iter()
            .zip(&dist.probs)
            .map(|(&r, p)| PmfEntry {
                r,
                exact: p.to_string(),
                value: to_f64(p),
            })
            .collect(),
        mean: to_f64(&mean_exact),
        variance: closed.as_ref().map(|m| to_f64(&m.variance)),
        mean_exact: mean_exact.to_string(),
        variance_exact: closed.as_ref().map(|m| m.variance.to_string()),
        summed_mean_exact: summed.mean.to_string(),
        summed_variance_exact: summed.variance.to_string(),
        moments_match,
    })
}

#[derive(Serialize)]
struct ChernoffOutput {
    n: u64,
    #[serde(rename = "K")]
    k: u64,
    t: u64,
    eps: f64,
    #[serde(flatten)]
    report: ChernoffReport,
}

fn chernoff(args: ChernoffArgs) -> CliResult<ChernoffOutput> {
    let HypergeomArgs { n, k, t } = args.base;
    Ok(ChernoffOutput {
        n,
        k,
        t,
        eps: args.eps,
        report: chernoff_check(n, k, t, args.eps)?,
    })
}
