use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;
use trialspace_core::exact::to_f64;
use trialspace_core::tables::{
    confounder_search, example1_data, example1_strata, simpson_check, tabulate, ConfounderReport,
    PartitionFinding, SimpsonReport, StratifiedTables, Table2x2, Verdict, DEFAULT_EXHAUSTIVE_CAP,
};
use trialspace_core::BigRational;

use crate::error::{CliError, CliResult};
use crate::output::emit_json;
use crate::Context;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Subcommand)]
pub enum TablesCommand {
    /// The two-block masking example and its pooled table.
    Example1,
    /// Tabulate and stratify a trial CSV export.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Largest number of bipartitions for exhaustive search.
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
    exhaustive_cap: u64,
    /// Number of ranked partitions to print.
    #[arg(long, default_value_t = 20)]
    top: usize,
}

pub fn run(ctx: &Context, cmd: TablesCommand) -> CliResult<()> {
    match cmd {
        TablesCommand::Example1 => emit_json(&example1_report(DEFAULT_TOL)?, ctx.out.as_deref()),
        TablesCommand::Analyze(args) => emit_json(&analyze(args)?, ctx.out.as_deref()),
    }
}

#[derive(Debug, Serialize)]
pub struct TableJson {
    pub label: String,
    pub counts: [[u64; 2]; 2],
    pub display: String,
    pub gap: Option<String>,
    pub gap_value: Option<f64>,
}

impl TableJson {
    fn new(label: &str, table: &Table2x2) -> Self {
        let gap = table.independence_gap();
        Self {
            label: label.to_string(),
            counts: table.counts,
            display: table.to_string(),
            gap_value: gap.as_ref().map(to_f64),
            gap: gap.map(|g| g.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimpsonJson {
    pub strata: Vec<TableJson>,
    pub pooled: TableJson,
    pub verdict: Verdict,
}

fn simpson_json(strata: &StratifiedTables, report: &SimpsonReport) -> SimpsonJson {
    SimpsonJson {
        strata: strata
            .strata
            .iter()
            .map(|(l, t)| TableJson::new(l, t))
            .collect(),
        pooled: TableJson::new("pooled", &report.pooled),
        verdict: report.verdict,
    }
}

#[derive(Debug, Serialize)]
pub struct Example1Report {
    #[serde(flatten)]
    pub simpson: SimpsonJson,
    pub tabulated_matches: bool,
    pub pass: bool,
}

pub fn example1_report(tol: f64) -> CliResult<Example1Report> {
    let strata = example1_strata();
    let report = simpson_check(&strata, tol)?;

    // Rebuild the tables from per-individual records.
    let (pairs, first) = example1_data();
    let restratified = StratifiedTables::stratify(&pairs, &first)?;
    let tabulated_matches = restratified
        .strata
        .iter()
        .map(|(_, t)| *t)
        .collect::<Vec<_>>()
        == strata.strata.iter().map(|(_, t)| *t).collect::<Vec<_>>()
        && tabulate(&pairs) == report.pooled;

    let zero = BigRational::from_integer(0.into());
    let pass = tabulated_matches
        && strata.strata[0].1 == Table2x2::new(81, 9, 9, 1)
        && strata.strata[1].1 == Table2x2::new(1, 9, 9, 81)
        && report.pooled == Table2x2::new(82, 18, 18, 82)
        && report
            .stratum_gaps
            .iter()
            .all(|(_, g)| g.as_ref() == Some(&zero))
        && report.pooled_gap == Some(BigRational::new(16.into(), 25.into()))
        && report.verdict == Verdict::Masked;
    Ok(Example1Report {
        simpson: simpson_json(&strata, &report),
        tabulated_matches,
        pass,
    })
}

#[derive(Serialize)]
struct AttributeStratification {
    attribute: String,
    report: Option<SimpsonJson>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SearchJson {
    evaluated: u64,
    exhaustive: bool,
    cap_exceeded: bool,
    matches: usize,
    top: Vec<PartitionFinding>,
    treatment_partition: PartitionFinding,
}

#[derive(Serialize)]
struct AnalyzeReport {
    s: usize,
    pooled: TableJson,
    odds_ratio: Option<f64>,
    by_attribute: Vec<AttributeStratification>,
    confounder_search: SearchJson,
}

struct TrialCsv {
    pairs: Vec<(bool, bool)>,
    attributes: Vec<(String, Vec<bool>)>,
}

fn parse_bit(field: &str, column: &str, row: usize) -> CliResult<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CliError::Validation(format!(
            "row {row}, column `{column}`: expected 0 or 1, got `{other}`"
        ))),
    }
}

fn read_trial_csv(path: &PathBuf) -> CliResult<TrialCsv> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("missing column `{name}`")))
    };
    let treated_col = column("treated")?;
    let response_col = column("response")?;
    let attr_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !matches!(*h, "k" | "individual" | "treated" | "response"))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut pairs = Vec::new();
    let mut attributes: Vec<(String, Vec<bool>)> = attr_cols
        .iter()
        .map(|(_, h)| (h.clone(), Vec::new()))
        .collect();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let get = |i: usize, name: &str| parse_bit(record.get(i).unwrap_or(""), name, row + 1);
        pairs.push((get(treated_col, "treated")?, get(response_col, "response")?));
        for ((i, name), (_, values)) in attr_cols.iter().zip(attributes.iter_mut()) {
            values.push(get(*i, name)?);
        }
    }
    Ok(TrialCsv { pairs, attributes })
}

fn analyze(args: AnalyzeArgs) -> CliResult<AnalyzeReport> {
    let data = read_trial_csv(&args.csv)?;
    let pooled = tabulate(&data.pairs);

    let by_attribute = data
        .attributes
        .iter()
        .map(|(name, values)| {
            let labels: Vec<String> = values
                .iter()
                .map(|&v| format!("{name}={}", u8::from(v)))
                .collect();
            let strata = StratifiedTables::stratify(&data.pairs, &labels)?;
            Ok(match simpson_check(&strata, args.tol) {
                Ok(report) => AttributeStratification {
                    attribute: name.clone(),
                    report: Some(simpson_json(&strata, &report)),
                    error: None,
                },
                Err(e) => AttributeStratification {
                    attribute: name.clone(),
                    report: None,
                    error: Some(e.to_string()),
                },
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let ConfounderReport {
        evaluated,
        exhaustive,
        cap_exceeded,
        mut findings,
    } = confounder_search(&data.pairs, &data.attributes, args.tol, args.exhaustive_cap)?;
    let treatment_partition = findings
        .pop()
        .expect("treatment partition is always reported");
    let matches = findings.len();
    findings.truncate(args.top);

    Ok(AnalyzeReport {
        s: data.pairs.len(),
        pooled: TableJson::new("pooled", &pooled),
        odds_ratio: pooled.odds_ratio(),
        by_attribute,
        confounder_search: SearchJson {
            evaluated,
            exhaustive,
            cap_exceeded,
            matches,
            top: findings,
            treatment_partition,
        },
    })
}
