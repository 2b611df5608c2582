//! The fixed finite population and its closed-form quantities.
//!
//! Individuals are indexed `0..n`. Each carries `m` binary attributes fixed in
//! advance, and two potential-outcome probabilities: `tau[i]`, the probability
//! of presenting the response if treated, and `nu[i]`, the probability if not
//! treated. Every quantity below is a short average over the population; the
//! `exact` module re-derives them by enumerating trial spaces.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    n: usize,
    labels: Vec<String>,
    attributes: Vec<Vec<bool>>,
    tau: Vec<f64>,
    nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub tau_bar: f64,
    pub nu_bar: f64,
    pub true_effect: f64,
}

/// Support sizes of one attribute: `support_size + complement_size == n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttributeView {
    pub index: usize,
    pub support_size: usize,
    pub complement_size: usize,
}

fn check_prob(what: impl FnOnce() -> String, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange {
            what: what(),
            value: p,
        })
    }
}

impl Population {
    pub fn new(
        n: usize,
        attributes: Vec<(String, Vec<bool>)>,
        tau: Vec<f64>,
        nu: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPopulation(
                "population must have n >= 1".into(),
            ));
        }
        for (what, len) in [("tau", tau.len()), ("nu", nu.len())] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what: what.into(),
                    got: len,
                    expected: n,
                });
            }
        }
        for (i, (&t, &v)) in tau.iter().zip(&nu).enumerate() {
            check_prob(|| format!("tau[{i}]"), t)?;
            check_prob(|| format!("nu[{i}]"), v)?;
        }
        let mut labels = Vec::with_capacity(attributes.len());
        let mut columns = Vec::with_capacity(attributes.len());
        for (name, column) in attributes {
            if column.len() != n {
                return Err(Error::LengthMismatch {
                    what: format!("attribute `{name}`"),
                    got: column.len(),
                    expected: n,
                });
            }
            if labels.contains(&name) {
                return Err(Error::InvalidPopulation(format!(
                    "duplicate attribute `{name}`"
                )));
            }
            labels.push(name);
            columns.push(column);
        }
        Ok(Self {
            n,
            labels,
            attributes: columns,
            tau,
            nu,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.attributes.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn attribute_column(&self, j: usize) -> Result<&[bool]> {
        self.attributes
            .get(j)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                what: "attribute",
                index: j,
                limit: self.m(),
            })
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    /// Attribute tuple of individual `i`, in label order.
    pub fn row(&self, i: usize) -> Vec<bool> {
        self.attributes.iter().map(|col| col[i]).collect()
    }

    pub fn attribute(&self, j: usize) -> Result<AttributeView> {
        let support_size = self.attribute_column(j)?.iter().filter(|&&b| b).count();
        Ok(AttributeView {
            index: j,
            support_size,
            complement_size: self.n - support_size,
        })
    }

    pub fn summary(&self) -> PopulationSummary {
        let n = self.n as f64;
        let tau_bar = self.tau.iter().sum::<f64>() / n;
        let nu_bar = self.nu.iter().sum::<f64>() / n;
        PopulationSummary {
            tau_bar,
            nu_bar,
            true_effect: tau_bar - nu_bar,
        }
    }

    /// Mean of `values` over the individuals with `a_j(i) == side`.
    fn side_mean(&self, j: usize, side: bool, values: &[f64]) -> Result<f64> {
        let column = self.attribute_column(j)?;
        let (sum, count) = column
            .iter()
            .zip(values)
            .filter(|(&a, _)| a == side)
            .fold((0.0, 0usize), |(s, c), (_, &v)| (s + v, c + 1));
        if count == 0 {
            return Err(Error::DegenerateAttribute {
                attribute: j,
                side: side as u8,
            });
        }
        Ok(sum / count as f64)
    }

    /// Average treatment effect `tau_i - nu_i` over one side of attribute `j`.
    pub fn conditional_effect(&self, j: usize, side: bool) -> Result<f64> {
        let diffs: Vec<f64> = self.tau.iter().zip(&self.nu).map(|(t, v)| t - v).collect();
        self.side_mean(j, side, &diffs)
    }

    /// `Pr(R_k = 1 | T_k = treated, A_kj = side)` in a randomized trial.
    pub fn conditional_response_prob(&self, j: usize, side: bool, treated: bool) -> Result<f64> {
        let values = if treated { &self.tau } else { &self.nu };
        self.side_mean(j, side, values)
    }

    /// `Pr(R_k = 1 | A_kj = 1) - Pr(R_k = 1 | A_kj = 0)` for a trial treating a
    /// fraction `treat_frac = t/s` of the sample.
    pub fn attribute_effect(&self, j: usize, treat_frac: f64) -> Result<f64> {
        check_fraction(treat_frac)?;
        let d_tau = self.conditional_response_prob(j, true, true)?
            - self.conditional_response_prob(j, false, true)?;
        let d_nu = self.conditional_response_prob(j, true, false)?
            - self.conditional_response_prob(j, false, false)?;
        Ok(treat_frac * d_tau + (1.0 - treat_frac) * d_nu)
    }

    /// Unconditional `Pr(R_k = 1)` for a trial treating a fraction `treat_frac`.
    pub fn response_prob(&self, treat_frac: f64) -> Result<f64> {
        check_fraction(treat_frac)?;
        let s = self.summary();
        Ok(treat_frac * s.tau_bar + (1.0 - treat_frac) * s.nu_bar)
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!(
            "treatment fraction {f} outside [0, 1]"
        )))
    }
}

/// JSON form of a population, either explicit per-individual vectors or a list
/// of homogeneous blocks expanded in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PopulationSpec {
    Explicit {
        n: usize,
        #[serde(default)]
        attributes: IndexMap<String, Vec<u8>>,
        tau: Vec<f64>,
        nu: Vec<f64>,
    },
    Blocks {
        blocks: Vec<PopulationBlock>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationBlock {
    pub count: usize,
    #[serde(default)]
    pub attrs: IndexMap<String, u8>,
    pub tau: f64,
    pub nu: f64,
}

fn bit(name: &str, v: u8) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::Malformed(format!(
            "attribute `{name}` has non-binary value {other}"
        ))),
    }
}

impl PopulationSpec {
    pub fn build(&self) -> Result<Population> {
        match self {
            PopulationSpec::Explicit {
                n,
                attributes,
                tau,
                nu,
            } => {
                let attributes = attributes
                    .iter()
                    .map(|(name, col)| {
                        let bits = col.iter().map(|&v| bit(name, v)).collect::<Result<_>>()?;
                        Ok((name.clone(), bits))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Population::new(*n, attributes, tau.clone(), nu.clone())
            }
            PopulationSpec::Blocks { blocks } => {
                let names: Vec<String> = blocks
                    .first()
                    .map(|b| b.attrs.keys().cloned().collect())
                    .unwrap_or_default();
                let mut columns: Vec<Vec<bool>> = vec![Vec::new(); names.len()];
                let (mut tau, mut nu) = (Vec::new(), Vec::new());
                for (b, block) in blocks.iter().enumerate() {
                    if block.attrs.len() != names.len()
                        || !names.iter().all(|n| block.attrs.contains_key(n))
                    {
                        return Err(Error::Malformed(format!(
                            "block {b} does not list the same attributes as block 0"
                        )));
                    }
                    for (col, name) in columns.iter_mut().zip(&names) {
                        let v = bit(name, block.attrs[name])?;
                        col.extend(std::iter::repeat_n(v, block.count));
                    }
                    tau.extend(std::iter::repeat_n(block.tau, block.count));
                    nu.extend(std::iter::repeat_n(block.nu, block.count));
                }
                Population::new(tau.len(), names.into_iter().zip(columns).collect(), tau, nu)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Population> {
        let spec: PopulationSpec =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        spec.build()
    }
}

impl From<&Population> for PopulationSpec {
    fn from(pop: &Population) -> Self {
        PopulationSpec::Explicit {
            n: pop.n,
            attributes: pop
                .labels
                .iter()
                .cloned()
                .zip(
                    pop.attributes
                        .iter()
                        .map(|c| c.iter().map(|&b| b as u8).collect()),
                )
                .collect(),
            tau: pop.tau.clone(),
            nu: pop.nu.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn four() -> Population {
        Population::new(
            4,
            vec![("a".into(), vec![true, true, false, false])],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn build_rejects_bad_input() {
        let err = Population::new(4, vec![], vec![1.5, 0.0, 0.0, 0.0], vec![0.0; 4]).unwrap_err();
        assert!(matches!(err, Error::ProbabilityOutOfRange { .. }));
        assert!(err.to_string().contains("probability out of range"));

        let err = Population::new(
            3,
            vec![("a".into(), vec![true, false])],
            vec![0.0; 3],
            vec![0.0; 3],
        )
        .unwrap_err();
        assert!(err.to_string().contains("length mismatch"));

        assert!(Population::new(0, vec![], vec![], vec![]).is_err());
        assert!(Population::new(2, vec![], vec![0.0; 2], vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn summary_of_four() {
        let s = four().summary();
        assert!((s.tau_bar - 0.5).abs() < TOL);
        assert!(s.nu_bar.abs() < TOL);
        assert!((s.true_effect - 0.5).abs() < TOL);

        let ext = Population::new(3, vec![], vec![1.0; 3], vec![0.0; 3])
            .unwrap()
            .summary();
        assert_eq!((ext.tau_bar, ext.nu_bar, ext.true_effect), (1.0, 0.0, 1.0));
    }

    #[test]
    fn conditional_quantities() {
        let p = four();
        assert!((p.conditional_effect(0, true).unwrap() - 1.0).abs() < TOL);
        assert!(p.conditional_effect(0, false).unwrap().abs() < TOL);
        assert!((p.conditional_response_prob(0, true, true).unwrap() - 1.0).abs() < TOL);
        assert!(p.conditional_response_prob(0, true, false).unwrap().abs() < TOL);
        assert!(p.conditional_response_prob(0, false, true).unwrap().abs() < TOL);
        assert_eq!(
            p.attribute(0).unwrap(),
            AttributeView {
                index: 0,
                support_size: 2,
                complement_size: 2
            }
        );
    }

    #[test]
    fn degenerate_side_is_an_error() {
        let p = Population::new(
            3,
            vec![("all".into(), vec![true; 3])],
            vec![0.5; 3],
            vec![0.5; 3],
        )
        .unwrap();
        assert_eq!(
            p.conditional_effect(0, false),
            Err(Error::DegenerateAttribute {
                attribute: 0,
                side: 0
            })
        );
        assert!(p.conditional_effect(0, true).is_ok());
        assert!(p.attribute_effect(0, 0.5).is_err());
        assert!(p.conditional_effect(1, true).is_err());
    }

    #[test]
    fn attribute_and_response_mixtures() {
        let p = four();
        assert!((p.attribute_effect(0, 0.5).unwrap() - 0.5).abs() < TOL);
        assert!((p.response_prob(0.5).unwrap() - 0.25).abs() < TOL);
        assert!((p.response_prob(0.0).unwrap() - p.summary().nu_bar).abs() < TOL);
        assert!((p.response_prob(1.0).unwrap() - p.summary().tau_bar).abs() < TOL);

        let flat_tau = Population::new(
            4,
            vec![("a".into(), vec![true, true, false, false])],
            vec![0.3; 4],
            vec![0.1, 0.9, 0.2, 0.2],
        )
        .unwrap();
        assert!(flat_tau.attribute_effect(0, 1.0).unwrap().abs() < TOL);

        let nu_split = Population::new(
            4,
            vec![("a".into(), vec![true, true, false, false])],
            vec![0.0; 4],
            vec![1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!((nu_split.attribute_effect(0, 0.0).unwrap() - 1.0).abs() < TOL);
        assert!(p.response_prob(1.2).is_err());
    }

    #[test]
    fn json_forms() {
        let explicit =
            r#"{"n": 4, "attributes": {"a": [1,1,0,0]}, "tau": [1,1,0,0], "nu": [0,0,0,0]}"#;
        assert_eq!(PopulationSpec::from_json(explicit).unwrap(), four());

        let blocks = r#"{"blocks": [
            {"count": 2, "attrs": {"a": 1}, "tau": 1.0, "nu": 0.0},
            {"count": 2, "attrs": {"a": 0}, "tau": 0.0, "nu": 0.0}
        ]}"#;
        assert_eq!(PopulationSpec::from_json(blocks).unwrap(), four());

        let bad = r#"{"n": 2, "attributes": {"a": [1,2]}, "tau": [0,0], "nu": [0,0]}"#;
        assert!(PopulationSpec::from_json(bad).is_err());
        let mismatched = r#"{"blocks": [
            {"count": 1, "attrs": {"a": 1}, "tau": 1.0, "nu": 0.0},
            {"count": 1, "attrs": {"b": 0}, "tau": 0.0, "nu": 0.0}
        ]}"#;
        assert!(PopulationSpec::from_json(mismatched).is_err());
    }
}
