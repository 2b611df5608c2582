use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::Serialize;
use trialspace_core::dagmodel::{appendix_model, BinaryDag, PartialAssignment, DEFAULT_CI_TOL};

use crate::error::{CliError, CliResult};
use crate::output::emit_json;
use crate::Context;

const APPENDIX_TOL: f64 = 1e-12;

#[derive(Debug, Subcommand)]
pub enum DagCommand {
    /// The hidden-common-cause model: conditioning versus forcing X.
    Appendix,
    /// Exact joint distribution of a model file.
    Joint(ModelArgs),
    /// Joint distribution after forcing vertices to constants.
    Intervene(InterveneArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
pub struct InterveneArgs {
    #[arg(long)]
    model: PathBuf,
    /// `NAME=0` or `NAME=1`; repeatable.
    #[arg(long = "set", required = true)]
    set: Vec<String>,
}

pub fn run(ctx: &Context, cmd: DagCommand) -> CliResult<()> {
    let out = ctx.out.as_deref();
    match cmd {
        DagCommand::Appendix => emit_json(&appendix_report()?, out),
        DagCommand::Joint(args) => {
            let dag = load(&args.model)?;
            emit_json(&dag.joint_distribution()?.to_json(), out)
        }
        DagCommand::Intervene(args) => {
            let mut dag = load(&args.model)?;
            for assignment in &args.set {
                let (name, value) = parse_set(assignment)?;
                dag = dag.intervene(dag.vertex(name)?, value)?;
            }
            emit_json(&dag.joint_distribution()?.to_json(), out)
        }
    }
}

fn load(path: &Path) -> CliResult<BinaryDag> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(BinaryDag::from_json(&text)?)
}

fn parse_set(text: &str) -> CliResult<(&str, bool)> {
    match text.split_once('=') {
        Some((name, "0")) => Ok((name, false)),
        Some((name, "1")) => Ok((name, true)),
        _ => Err(CliError::Validation(format!(
            "--set expects NAME=0 or NAME=1, got `{text}`"
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct AppendixReport {
    pub joint: serde_json::Value,
    pub p_x1: f64,
    pub p_y1: f64,
    pub p_y1_given_x1: f64,
    pub p_y0_given_x0: f64,
    pub x_indep_y_given_z: bool,
    pub x_indep_y: bool,
    pub do_x1_p_y1: f64,
    pub do_x0_p_y1: f64,
    pub pass: bool,
}

pub fn appendix_report() -> CliResult<AppendixReport> {
    let dag = appendix_model();
    let (z, x, y) = (dag.vertex("Z")?, dag.vertex("X")?, dag.vertex("Y")?);
    let joint = dag.joint_distribution()?;
    let is = |v: usize, b: bool| PartialAssignment::of(&[(v, b)]);
    let none = PartialAssignment::empty();

    let p_x1 = joint.query(is(x, true), none)?;
    let p_y1 = joint.query(is(y, true), none)?;
    let p_y1_given_x1 = joint.query(is(y, true), is(x, true))?;
    let p_y0_given_x0 = joint.query(is(y, false), is(x, false))?;
    let x_indep_y_given_z = joint.cond_independent(x, y, &[z], DEFAULT_CI_TOL);
    let x_indep_y = joint.cond_independent(x, y, &[], DEFAULT_CI_TOL);
    let do_x1_p_y1 = dag
        .intervene(x, true)?
        .joint_distribution()?
        .query(is(y, true), none)?;
    let do_x0_p_y1 = dag
        .intervene(x, false)?
        .joint_distribution()?
        .query(is(y, true), none)?;

    let close = |a: f64, b: f64| (a - b).abs() <= APPENDIX_TOL;
    let pass = close(p_x1, 0.5)
        && close(p_y1_given_x1, 0.905)
        && close(p_y0_given_x0, 0.905)
        && x_indep_y_given_z
        && close(do_x1_p_y1, 0.5);
    Ok(AppendixReport {
        joint: joint.to_json(),
        p_x1,
        p_y1,
        p_y1_given_x1,
        p_y0_given_x0,
        x_indep_y_given_z,
        x_indep_y,
        do_x1_p_y1,
        do_x0_p_y1,
        pass,
    })
}
