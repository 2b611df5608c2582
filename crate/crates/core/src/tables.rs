//! 2x2 treatment-by-response tables, stratification and confounder search.
//!
//! Rows are the treatment value, columns the response value. The association
//! measure throughout is the gap `Pr(resp=1 | treat=1) - Pr(resp=1 | treat=0)`,
//! kept as an exact rational.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::to_f64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Table2x2 {
    /// `counts[treatment][response]`
    pub counts: [[u64; 2]; 2],
}

impl Table2x2 {
    pub fn new(c00: u64, c01: u64, c10: u64, c11: u64) -> Self {
        Self {
            counts: [[c00, c01], [c10, c11]],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, treat: bool) -> u64 {
        self.counts[treat as usize].iter().sum()
    }

    pub fn col_total(&self, response: bool) -> u64 {
        self.counts[0][response as usize] + self.counts[1][response as usize]
    }

    /// `Pr̂(resp=1 | treat)`; `None` for an empty row.
    pub fn response_rate(&self, treat: bool) -> Option<BigRational> {
        let row = self.row_total(treat);
        (row > 0).then(|| {
            BigRational::new(
                BigInt::from(self.counts[treat as usize][1]),
                BigInt::from(row),
            )
        })
    }

    /// Difference of conditional response proportions; `None` if either
    /// treatment row is empty.
    pub fn independence_gap(&self) -> Option<BigRational> {
        Some(self.response_rate(true)? - self.response_rate(false)?)
    }

    /// Sample odds ratio `(c11 c00) / (c10 c01)`; `None` when the denominator vanishes.
    pub fn odds_ratio(&self) -> Option<f64> {
        let [[c00, c01], [c10, c11]] = self.counts;
        let den = c10 * c01;
        (den > 0).then(|| (c11 * c00) as f64 / den as f64)
    }

    fn add(&self, other: &Table2x2) -> Table2x2 {
        let mut out = *self;
        for a in 0..2 {
            for b in 0..2 {
                out.counts[a][b] += other.counts[a][b];
            }
        }
        out
    }
}

impl fmt::Display for Table2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = self.counts;
        write!(f, "({a},{b};{c},{d})")
    }
}

pub fn tabulate(pairs: &[(bool, bool)]) -> Table2x2 {
    let mut table = Table2x2::default();
    for &(treat, response) in pairs {
        table.counts[treat as usize][response as usize] += 1;
    }
    table
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StratifiedTables {
    pub strata: Vec<(String, Table2x2)>,
}

impl StratifiedTables {
    pub fn new(strata: Vec<(String, Table2x2)>) -> Self {
        Self { strata }
    }

    /// Splits `pairs` by `labels[k]`, strata in order of first appearance.
    pub fn stratify<L: ToString + PartialEq>(pairs: &[(bool, bool)], labels: &[L]) -> Result<Self> {
        if labels.len() != pairs.len() {
            return Err(Error::LengthMismatch {
                what: "stratum labels".into(),
                got: labels.len(),
                expected: pairs.len(),
            });
        }
        let mut keys: Vec<&L> = Vec::new();
        let mut tables: Vec<Table2x2> = Vec::new();
        for (&(treat, response), label) in pairs.iter().zip(labels) {
            let idx = match keys.iter().position(|k| *k == label) {
                Some(idx) => idx,
                None => {
                    keys.push(label);
                    tables.push(Table2x2::default());
                    tables.len() - 1
                }
            };
            tables[idx].counts[treat as usize][response as usize] += 1;
        }
        Ok(Self {
            strata: keys
                .into_iter()
                .map(ToString::to_string)
                .zip(tables)
                .collect(),
        })
    }

    pub fn pool(&self) -> Result<Table2x2> {
        if self.strata.is_empty() {
            return Err(Error::InvalidParameters("no strata to pool".into()));
        }
        Ok(self
            .strata
            .iter()
            .fold(Table2x2::default(), |acc, (_, t)| acc.add(t)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Every stratum looks independent but the pooled table does not.
    Masked,
    /// The pooled gap has the opposite sign of every stratum gap.
    Reversed,
    Consistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpsonReport {
    /// Gap per stratum in input order; `None` for strata with an empty arm.
    pub stratum_gaps: Vec<(String, Option<BigRational>)>,
    pub pooled: Table2x2,
    pub pooled_gap: Option<BigRational>,
    pub verdict: Verdict,
}

pub fn simpson_check(strata: &StratifiedTables, tol: f64) -> Result<SimpsonReport> {
    let pooled = strata.pool()?;
    let stratum_gaps: Vec<(String, Option<BigRational>)> = strata
        .strata
        .iter()
        .map(|(label, t)| (label.clone(), t.independence_gap()))
        .collect();
    let usable: Vec<&BigRational> = stratum_gaps
        .iter()
        .filter_map(|(_, g)| g.as_ref())
        .collect();
    if usable.len() < 2 {
        return Err(Error::InvalidParameters(format!(
            "need at least 2 strata with both treatment arms, found {}",
            usable.len()
        )));
    }
    let pooled_gap = pooled
        .independence_gap()
        .ok_or_else(|| Error::InvalidParameters("pooled table has an empty arm".into()))?;

    let within = |g: &BigRational| to_f64(&g.abs()) <= tol;
    let sign = |g: &BigRational| {
        if g.is_positive() {
            1
        } else if g.is_negative() {
            -1
        } else {
            0
        }
    };
    let verdict = if usable.iter().all(|g| within(g)) && !within(&pooled_gap) {
        Verdict::Masked
    } else {
        let pooled_sign = sign(&pooled_gap);
        if pooled_sign != 0 && usable.iter().all(|g| sign(g) == -pooled_sign) {
            Verdict::Reversed
        } else {
            Verdict::Consistent
        }
    };
    Ok(SimpsonReport {
        stratum_gaps,
        pooled,
        pooled_gap: Some(pooled_gap),
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSource {
    Candidate,
    Exhaustive,
    Treatment,
    Response,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionFinding {
    pub label: String,
    pub source: PartitionSource,
    /// Membership of each sample position in the first stratum.
    pub membership: Vec<bool>,
    pub strata: [Table2x2; 2],
    /// Within-stratum gaps as `f64`; `None` when a stratum lacks a treatment arm.
    pub gaps: [Option<f64>; 2],
    pub max_abs_gap: Option<f64>,
    /// Some stratum has a single treatment arm.
    pub degenerate: bool,
    /// The partition is defined by the treatment or the response itself.
    pub post_hoc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfounderReport {
    pub evaluated: u64,
    pub exhaustive: bool,
    /// Exhaustive search was skipped because `2^s - 2` exceeded the cap.
    pub cap_exceeded: bool,
    /// Bipartitions whose within-stratum gaps are all at most the tolerance,
    /// ascending by largest within-stratum gap, plus the treatment partition.
    pub findings: Vec<PartitionFinding>,
}

/// Default exhaustive cap: samples of up to 20 individuals.
pub const DEFAULT_EXHAUSTIVE_CAP: u64 = (1 << 20) - 2;

fn evaluate_partition(
    pairs: &[(bool, bool)],
    membership: Vec<bool>,
    label: String,
    source: PartitionSource,
) -> PartitionFinding {
    let mut strata = [Table2x2::default(); 2];
    for (&(treat, response), &inside) in pairs.iter().zip(&membership) {
        strata[(!inside) as usize].counts[treat as usize][response as usize] += 1;
    }
    let gaps = [0, 1].map(|k| strata[k].independence_gap().as_ref().map(to_f64));
    let max_abs_gap = match gaps {
        [Some(a), Some(b)] => Some(a.abs().max(b.abs())),
        _ => None,
    };
    let same = |col: &dyn Fn(&(bool, bool)) -> bool| {
        pairs.iter().zip(&membership).all(|(p, &m)| col(p) == m)
            || pairs.iter().zip(&membership).all(|(p, &m)| col(p) != m)
    };
    let post_hoc = matches!(
        source,
        PartitionSource::Treatment | PartitionSource::Response
    ) || same(&|p| p.0)
        || same(&|p| p.1);
    PartitionFinding {
        label,
        source,
        membership,
        strata,
        gaps,
        max_abs_gap,
        degenerate: gaps.iter().any(Option::is_none),
        post_hoc,
    }
}

/// Searches bipartitions of the sample under which treatment and response look
/// independent within both parts.
///
/// Candidate attributes are always evaluated, as is the partition by the
/// response. When `2^s - 2 <= exhaustive_cap`, every bipartition (every
/// nonempty proper subset of positions) is evaluated as well. The partition by
/// the treatment itself is always reported, flagged degenerate.
pub fn confounder_search(
    pairs: &[(bool, bool)],
    candidates: &[(String, Vec<bool>)],
    tol: f64,
    exhaustive_cap: u64,
) -> Result<ConfounderReport> {
    let s = pairs.len();
    if s < 2 {
        return Err(Error::InvalidParameters(
            "confounder search needs s >= 2".into(),
        ));
    }
    for (name, col) in candidates {
        if col.len() != s {
            return Err(Error::LengthMismatch {
                what: format!("candidate `{name}`"),
                got: col.len(),
                expected: s,
            });
        }
    }

    let mut findings = Vec::new();
    let mut evaluated = 0u64;
    let keep = |f: PartitionFinding, findings: &mut Vec<PartitionFinding>| {
        if f.max_abs_gap.is_some_and(|g| g <= tol) {
            findings.push(f);
        }
    };

    for (name, col) in candidates {
        evaluated += 1;
        keep(
            evaluate_partition(pairs, col.clone(), name.clone(), PartitionSource::Candidate),
            &mut findings,
        );
    }
    evaluated += 1;
    keep(
        evaluate_partition(
            pairs,
            pairs.iter().map(|p| p.1).collect(),
            "response".into(),
            PartitionSource::Response,
        ),
        &mut findings,
    );

    let all_bipartitions = if s < 64 { (1u64 << s) - 2 } else { u64::MAX };
    let exhaustive = s < 64 && all_bipartitions <= exhaustive_cap;
    if exhaustive {
        for mask in 1..=all_bipartitions {
            evaluated += 1;
            let membership: Vec<bool> = (0..s).map(|k| mask >> k & 1 == 1).collect();
            keep(
                evaluate_partition(
                    pairs,
                    membership,
                    format!("subset:{mask:#x}"),
                    PartitionSource::Exhaustive,
                ),
                &mut findings,
            );
        }
    }

    // stable: ties keep evaluation order
    findings.sort_by(|a, b| {
        a.max_abs_gap
            .partial_cmp(&b.max_abs_gap)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    findings.push(evaluate_partition(
        pairs,
        pairs.iter().map(|p| p.0).collect(),
        "treatment".into(),
        PartitionSource::Treatment,
    ));

    Ok(ConfounderReport {
        evaluated,
        exhaustive,
        cap_exceeded: !exhaustive,
        findings,
    })
}

/// The two 100-individual strata of the worked Simpson example: treatment and
/// response counts `(81,9;9,1)` in the first block and `(1,9;9,81)` in the second.
pub fn example1_strata() -> StratifiedTables {
    StratifiedTables::new(vec![
        ("first".into(), Table2x2::new(81, 9, 9, 1)),
        ("last".into(), Table2x2::new(1, 9, 9, 81)),
    ])
}

/// Per-individual `(treatment, response)` pairs and block labels realizing
/// [`example1_strata`], first block then second, cells in row-major order.
pub fn example1_data() -> (Vec<(bool, bool)>, Vec<bool>) {
    let mut pairs = Vec::with_capacity(200);
    let mut first_block = Vec::with_capacity(200);
    for (block, (_, table)) in example1_strata().strata.iter().enumerate() {
        for treat in [false, true] {
            for response in [false, true] {
                let count = table.counts[treat as usize][response as usize];
                for _ in 0..count {
                    pairs.push((treat, response));
                    first_block.push(block == 0);
                }
            }
        }
    }
    (pairs, first_block)
}
