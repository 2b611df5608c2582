//! Binary DAG generative models.
//!
//! Each vertex is a binary variable. Root vertices are independent with a
//! fixed `Pr(v = 1)`; every other vertex has a conditional probability table
//! with one row per configuration of its parents. Assignment `bits` encode
//! vertex `i` as bit `i`; cpt rows are indexed by parent bits with the first
//! listed parent least significant.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::exact_f64;
use crate::population::Population;

/// Largest vertex count for exact joint enumeration.
pub const DEFAULT_JOINT_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDag {
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
    cpt: Vec<Vec<f64>>,
    order: Vec<usize>,
}

impl BinaryDag {
    pub fn new(names: Vec<String>, parents: Vec<Vec<usize>>, cpt: Vec<Vec<f64>>) -> Result<Self> {
        let q = names.len();
        if q > 64 {
            return Err(Error::InvalidParameters(format!(
                "{q} vertices; at most 64 supported"
            )));
        }
        if parents.len() != q || cpt.len() != q {
            return Err(Error::LengthMismatch {
                what: "parents/cpt".into(),
                got: parents.len().min(cpt.len()),
                expected: q,
            });
        }
        for (v, name) in names.iter().enumerate() {
            if names[..v].contains(name) {
                return Err(Error::Malformed(format!("duplicate vertex `{name}`")));
            }
            for &p in &parents[v] {
                if p >= q {
                    return Err(Error::IndexOutOfRange {
                        what: "parent",
                        index: p,
                        limit: q,
                    });
                }
            }
            let mut ps = parents[v].clone();
            ps.sort_unstable();
            if ps.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Malformed(format!(
                    "vertex `{name}` lists a parent twice"
                )));
            }
            let expected = 1usize << parents[v].len();
            if cpt[v].len() != expected {
                return Err(Error::CptShape {
                    vertex: name.clone(),
                    got: cpt[v].len(),
                    expected,
                });
            }
            if let Some(&bad) = cpt[v].iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::ProbabilityOutOfRange {
                    what: format!("cpt of `{name}`"),
                    value: bad,
                });
            }
        }
        let order = topological_order(&names, &parents)?;
        Ok(Self {
            names,
            parents,
            cpt,
            order,
        })
    }

    pub fn q(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn cpt(&self, v: usize) -> &[f64] {
        &self.cpt[v]
    }

    pub fn vertex(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    /// `Pr(v = 1)` given the values of `v`'s parents in `bits`.
    fn prob_one(&self, v: usize, bits: u64) -> f64 {
        let row = self.parents[v]
            .iter()
            .enumerate()
            .fold(0usize, |row, (slot, &p)| {
                row | (((bits >> p) & 1) as usize) << slot
            });
        self.cpt[v][row]
    }

    pub fn joint_distribution(&self) -> Result<JointDist> {
        self.joint_distribution_capped(DEFAULT_JOINT_CAP)
    }

    /// Exact joint over all `2^q` assignments as a product of cpt factors.
    pub fn joint_distribution_capped(&self, cap: usize) -> Result<JointDist> {
        let q = self.q();
        if q > cap {
            return Err(Error::CapExceeded {
                size: format!("2^{q}"),
                cap: 1 << cap.min(63),
            });
        }
        let probs = (0..1u64 << q)
            .map(|bits| {
                (0..q)
                    .map(|v| {
                        let p = self.prob_one(v, bits);
                        if bits >> v & 1 == 1 {
                            p
                        } else {
                            1.0 - p
                        }
                    })
                    .product()
            })
            .collect();
        Ok(JointDist {
            names: self.names.clone(),
            probs,
        })
    }

    /// The model with `vertex` forced to `value`: its parents are cut and its
    /// table replaced by the constant. Other vertices are unchanged.
    pub fn intervene(&self, vertex: usize, value: bool) -> Result<BinaryDag> {
        if vertex >= self.q() {
            return Err(Error::IndexOutOfRange {
                what: "vertex",
                index: vertex,
                limit: self.q(),
            });
        }
        let mut parents = self.parents.clone();
        let mut cpt = self.cpt.clone();
        parents[vertex].clear();
        cpt[vertex] = vec![if value { 1.0 } else { 0.0 }];
        BinaryDag::new(self.names.clone(), parents, cpt)
    }

    /// Ancestral sampling in topological order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut bits = 0u64;
        for &v in &self.order {
            if rng.gen_bool(self.prob_one(v, bits)) {
                bits |= 1 << v;
            }
        }
        bits
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DagSpec =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        spec.build()
    }

    pub fn to_spec(&self) -> DagSpec {
        DagSpec {
            vertices: (0..self.q())
                .map(|v| VertexSpec {
                    name: self.names[v].clone(),
                    parents: self.parents[v]
                        .iter()
                        .map(|&p| self.names[p].clone())
                        .collect(),
                    cpt: self.cpt[v].clone(),
                })
                .collect(),
        }
    }
}

fn topological_order(names: &[String], parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let q = names.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); q];
    for (v, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(v);
        }
    }
    let mut ready: Vec<usize> = (0..q).rev().filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(q);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    match (0..q).find(|&v| indegree[v] > 0) {
        Some(v) => Err(Error::Cycle(names[v].clone())),
        None => Ok(order),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagSpec {
    pub vertices: Vec<VertexSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<f64>,
}

impl DagSpec {
    pub fn build(&self) -> Result<BinaryDag> {
        let names: Vec<String> = self.vertices.iter().map(|v| v.name.clone()).collect();
        let parents = self
            .vertices
            .iter()
            .map(|v| {
                v.parents
                    .iter()
                    .map(|p| {
                        names
                            .iter()
                            .position(|n| n == p)
                            .ok_or_else(|| Error::UnknownName(p.clone()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let cpt = self.vertices.iter().map(|v| v.cpt.clone()).collect();
        BinaryDag::new(names, parents, cpt)
    }
}

/// Values for a subset of vertices: bit `i` of `mask` selects vertex `i`,
/// bit `i` of `values` gives its value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartialAssignment {
    pub mask: u64,
    pub values: u64,
}

impl PartialAssignment {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn of(pairs: &[(usize, bool)]) -> Self {
        pairs
            .iter()
            .fold(Self::default(), |acc, &(v, b)| acc.with(v, b))
    }

    pub fn with(mut self, vertex: usize, value: bool) -> Self {
        self.mask |= 1 << vertex;
        if value {
            self.values |= 1 << vertex;
        } else {
            self.values &= !(1 << vertex);
        }
        self
    }

    pub fn matches(&self, bits: u64) -> bool {
        bits & self.mask == self.values & self.mask
    }
}

/// Joint distribution over `{0,1}^q`, indexed by assignment bits.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    names: Vec<String>,
    probs: Vec<f64>,
}

impl JointDist {
    pub fn new(names: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        let q = names.len();
        if q >= 32 || probs.len() != 1 << q {
            return Err(Error::LengthMismatch {
                what: "joint probabilities".into(),
                got: probs.len(),
                expected: 1usize.checked_shl(q as u32).unwrap_or(0),
            });
        }
        if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::ProbabilityOutOfRange {
                what: "joint entry".into(),
                value: bad,
            });
        }
        Ok(Self { names, probs })
    }

    pub fn q(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, bits: u64) -> f64 {
        self.probs[bits as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mass(&self, event: PartialAssignment) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(bits, _)| event.matches(*bits as u64))
            .map(|(_, p)| p)
            .sum()
    }

    /// `Pr(event | given)`; an empty `given` makes this a marginal.
    pub fn query(&self, event: PartialAssignment, given: PartialAssignment) -> Result<f64> {
        let denom = self.mass(given);
        if denom <= 0.0 {
            return Err(Error::ZeroProbabilityEvent);
        }
        let both = PartialAssignment {
            mask: event.mask | given.mask,
            values: (event.values & event.mask) | (given.values & given.mask),
        };
        // contradictory event/given assignments have zero joint mass
        let conflict = (event.values ^ given.values) & event.mask & given.mask;
        let num = if conflict != 0 { 0.0 } else { self.mass(both) };
        Ok(num / denom)
    }

    /// Whether vertices `i` and `j` are independent given `given_set`, checking
    /// `Pr(i, j | c) = Pr(i | c) Pr(j | c)` within `tol` on every conditioning
    /// cell of positive mass.
    pub fn cond_independent(&self, i: usize, j: usize, given_set: &[usize], tol: f64) -> bool {
        let cells = 1u64 << given_set.len();
        for cell in 0..cells {
            let cond = given_set
                .iter()
                .enumerate()
                .fold(PartialAssignment::empty(), |acc, (slot, &v)| {
                    acc.with(v, cell >> slot & 1 == 1)
                });
            let denom = self.mass(cond);
            if denom <= 0.0 {
                continue;
            }
            for a in [false, true] {
                for b in [false, true] {
                    let pi = self.mass(cond.with(i, a)) / denom;
                    let pj = self.mass(cond.with(j, b)) / denom;
                    let pij = self.mass(cond.with(i, a).with(j, b)) / denom;
                    if (pij - pi * pj).abs() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// JSON form: vertex names and a map from assignment bits to probability.
    pub fn to_json(&self) -> serde_json::Value {
        let probs: BTreeMap<u64, f64> = self
            .probs
            .iter()
            .enumerate()
            .map(|(b, &p)| (b as u64, p))
            .collect();
        serde_json::json!({
            "vertices": self.names,
            "probs": probs,
        })
    }
}

/// Default tolerance for [`JointDist::cond_independent`].
pub const DEFAULT_CI_TOL: f64 = 1e-9;

/// Two-vertex chain `X -> Y` with `Pr(X=1) = p`, `Pr(Y=1 | X=x) = p_x`.
pub fn chain(p: f64, p0: f64, p1: f64) -> Result<BinaryDag> {
    BinaryDag::new(
        vec!["X".into(), "Y".into()],
        vec![vec![], vec![0]],
        vec![vec![p], vec![p0, p1]],
    )
}

/// The closed-form measure on `{0,1}^2` for `X ~ Bernoulli(p)` followed by
/// `Y ~ Bernoulli(p_X)`, entries `(1-p)(1-p0), (1-p)p0, p(1-p1), p p1` for
/// `(x, y) = (0,0), (0,1), (1,0), (1,1)`.
pub fn two_variable_measure(p: f64, p0: f64, p1: f64) -> Result<JointDist> {
    for (what, v) in [("p", p), ("p0", p0), ("p1", p1)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ProbabilityOutOfRange {
                what: what.into(),
                value: v,
            });
        }
    }
    let at = |x: usize, y: usize| x | y << 1;
    let mut probs = vec![0.0; 4];
    probs[at(0, 0)] = (1.0 - p) * (1.0 - p0);
    probs[at(0, 1)] = (1.0 - p) * p0;
    probs[at(1, 0)] = p * (1.0 - p1);
    probs[at(1, 1)] = p * p1;
    JointDist::new(vec!["X".into(), "Y".into()], probs)
}

/// Hidden common cause `Z` of `X` and `Y`: `Pr(Z=1) = 0.5`,
/// `Pr(X=1 | Z=1) = Pr(X=0 | Z=0) = 0.95`, likewise for `Y`.
pub fn appendix_model() -> BinaryDag {
    BinaryDag::new(
        vec!["Z".into(), "X".into(), "Y".into()],
        vec![vec![], vec![0], vec![0]],
        vec![vec![0.5], vec![0.05, 0.95], vec![0.05, 0.95]],
    )
    .expect("appendix model is well formed")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceCheck {
    pub max_error: BigRational,
    pub holds: bool,
}

/// Checks `Pr(X_A = 1, V = v) = (|A|/n) P(v)` for every `v`, where an
/// individual is drawn uniformly from the population and `V` independently
/// from `dist`. The left side is computed by enumerating the product space in
/// exact arithmetic.
pub fn verify_population_model_independence(
    pop: &Population,
    dist: &JointDist,
    a: &[usize],
    cap: u64,
) -> Result<IndependenceCheck> {
    let n = pop.n();
    let cells = 1u64 << dist.q();
    let size = (n as u64).saturating_mul(cells);
    if size > cap {
        return Err(Error::CapExceeded {
            size: size.to_string(),
            cap,
        });
    }
    let mut in_a = vec![false; n];
    for &i in a {
        *in_a.get_mut(i).ok_or(Error::IndexOutOfRange {
            what: "individual",
            index: i,
            limit: n,
        })? = true;
    }
    let size_a = in_a.iter().filter(|&&b| b).count();
    let model: Vec<BigRational> = dist
        .probs()
        .iter()
        .map(|&p| exact_f64(p))
        .collect::<Result<_>>()?;
    let per_individual = BigRational::new(BigInt::from(1), BigInt::from(n));

    let mut lhs = vec![BigRational::zero(); cells as usize];
    for &member in &in_a {
        for (v, p) in model.iter().enumerate() {
            if member {
                lhs[v] += &per_individual * p;
            }
        }
    }
    let share = BigRational::new(BigInt::from(size_a), BigInt::from(n));
    let max_error = lhs
        .iter()
        .zip(&model)
        .map(|(l, p)| (l - &share * p).abs())
        .max()
        .unwrap_or_else(BigRational::zero);
    Ok(IndependenceCheck {
        holds: max_error.is_zero(),
        max_error,
    })
}
