//! Exact oracles by enumeration and rational arithmetic.
//!
//! The trial space holds every pair `(S, T)` where `S` is an ordered sample of
//! `s` distinct individuals out of `n` and `T` is a size-`t` subset of sample
//! positions; each pair has probability `1 / |space|`. Enumerating it gives the
//! exact treatment and response probabilities of a randomized trial, which are
//! compared against the population-level closed forms. The hypergeometric part
//! covers the overlap `|T ∩ A|` between the treated set and a fixed subset.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::population::Population;

/// Default limit on the number of enumerated trial-space points.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn falling_factorial(n: u64, s: u64) -> BigUint {
    (0..s).fold(BigUint::one(), |acc, i| acc * (n - i))
}

fn check_trial_params(n: usize, s: usize, t: usize) -> Result<()> {
    if !(1 <= t && t <= s && s <= n) {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= t <= s <= n, got n={n}, s={s}, t={t}"
        )));
    }
    Ok(())
}

/// Number of points in the trial space: `n!/(n-s)! * C(s, t)`.
pub fn c0_size(n: usize, s: usize, t: usize) -> Result<BigUint> {
    check_trial_params(n, s, t)?;
    Ok(falling_factorial(n as u64, s as u64) * binomial(s as u64, t as u64))
}

fn check_cap(n: usize, s: usize, t: usize, cap: u64) -> Result<u64> {
    let size = c0_size(n, s, t)?;
    match size.to_u64() {
        Some(v) if v <= cap => Ok(v),
        _ => Err(Error::CapExceeded {
            size: size.to_string(),
            cap,
        }),
    }
}

/// One point of the trial space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TrialPoint {
    pub sample: Vec<usize>,
    pub treated: Vec<bool>,
}

/// Lexicographic walk over the trial space. Use [`TrialPoints::advance`] to
/// visit points without allocating, or the `Iterator` impl for owned points.
#[derive(Debug, Clone)]
pub struct TrialPoints {
    n: usize,
    sample: Vec<usize>,
    used: Vec<bool>,
    // positions of the treated subset, strictly increasing
    combo: Vec<usize>,
    treated: Vec<bool>,
    started: bool,
    done: bool,
}

impl TrialPoints {
    fn new(n: usize, s: usize, t: usize) -> Self {
        let mut used = vec![false; n];
        used[..s].iter_mut().for_each(|u| *u = true);
        let mut treated = vec![false; s];
        treated[..t].iter_mut().for_each(|b| *b = true);
        Self {
            n,
            sample: (0..s).collect(),
            used,
            combo: (0..t).collect(),
            treated,
            started: false,
            done: false,
        }
    }

    fn next_combo(&mut self) -> bool {
        let s = self.sample.len();
        let t = self.combo.len();
        let Some(i) = (0..t).rev().find(|&i| self.combo[i] < s - t + i) else {
            return false;
        };
        self.combo[i] += 1;
        for j in i + 1..t {
            self.combo[j] = self.combo[j - 1] + 1;
        }
        self.treated.iter_mut().for_each(|b| *b = false);
        for &k in &self.combo {
            self.treated[k] = true;
        }
        true
    }

    fn reset_combo(&mut self) {
        let t = self.combo.len();
        for (j, c) in self.combo.iter_mut().enumerate() {
            *c = j;
        }
        for (k, b) in self.treated.iter_mut().enumerate() {
            *b = k < t;
        }
    }

    fn next_sample(&mut self) -> bool {
        let s = self.sample.len();
        for pos in (0..s).rev() {
            let cur = self.sample[pos];
            self.used[cur] = false;
            if let Some(next) = (cur + 1..self.n).find(|&v| !self.used[v]) {
                self.sample[pos] = next;
                self.used[next] = true;
                let mut v = 0;
                for fill in pos + 1..s {
                    while self.used[v] {
                        v += 1;
                    }
                    self.sample[fill] = v;
                    self.used[v] = true;
                }
                return true;
            }
        }
        false
    }

    /// Moves to the next point and returns it as `(sample, treated flags)`.
    pub fn advance(&mut self) -> Option<(&[usize], &[bool])> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !self.next_combo() {
            if self.next_sample() {
                self.reset_combo();
            } else {
                self.done = true;
                return None;
            }
        }
        Some((&self.sample, &self.treated))
    }
}

impl Iterator for TrialPoints {
    type Item = TrialPoint;

    fn next(&mut self) -> Option<TrialPoint> {
        self.advance().map(|(sample, treated)| TrialPoint {
            sample: sample.to_vec(),
            treated: treated.to_vec(),
        })
    }
}

/// Every point of the trial space exactly once, each with weight `1/c0_size`.
pub fn enumerate_trials(n: usize, s: usize, t: usize, cap: u64) -> Result<TrialPoints> {
    check_cap(n, s, t, cap)?;
    Ok(TrialPoints::new(n, s, t))
}

/// A finite distribution with exact rational probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDist<T> {
    pub outcomes: Vec<T>,
    pub probs: Vec<BigRational>,
}

impl<T> ExactDist<T> {
    pub fn total(&self) -> BigRational {
        self.probs
            .iter()
            .fold(BigRational::zero(), |acc, p| acc + p)
    }

    pub fn is_normalized(&self) -> bool {
        self.probs.iter().all(|p| *p >= BigRational::zero()) && self.total().is_one()
    }

    pub fn prob_of(&self, pred: impl Fn(&T) -> bool) -> BigRational {
        self.outcomes
            .iter()
            .zip(&self.probs)
            .filter(|(o, _)| pred(o))
            .fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }
}

impl ExactDist<TrialPoint> {
    /// The uniform measure on the trial space.
    pub fn trial_space(n: usize, s: usize, t: usize, cap: u64) -> Result<Self> {
        let size = check_cap(n, s, t, cap)?;
        let weight = BigRational::new(BigInt::one(), BigInt::from(size));
        let outcomes: Vec<TrialPoint> = TrialPoints::new(n, s, t).collect();
        let probs = vec![weight; outcomes.len()];
        Ok(Self { outcomes, probs })
    }
}

impl ExactDist<usize> {
    /// Distribution of `|T ∩ A|` for a uniform size-`t` subset `T` of `n`
    /// individuals and a fixed `A` with `|A| = k_a`.
    pub fn hypergeometric(n: u64, k_a: u64, t: u64) -> Result<Self> {
        let (numerators, denominator) = hypergeom_numerators(n, k_a, t)?;
        let denom = BigInt::from(denominator);
        let probs = numerators
            .into_iter()
            .map(|num| BigRational::new(BigInt::from(num), denom.clone()))
            .collect();
        Ok(Self {
            outcomes: (0..=t as usize).collect(),
            probs,
        })
    }
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Sufficient statistic of an enumerated trial space: for every position `k`,
/// individual `i` and treatment flag, the number of points with
/// `i_k = i` and `T_k = flag`.
#[derive(Debug, Clone)]
pub struct TreatmentTally {
    n: usize,
    s: usize,
    total: u64,
    // counts[k][i][treated]
    counts: Vec<Vec<[u64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreatmentProbs {
    #[serde(serialize_with = "ser_rational")]
    pub marginal: BigRational,
    #[serde(serialize_with = "ser_opt_rational")]
    pub given_a1: Option<BigRational>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub given_a0: Option<BigRational>,
}

impl TreatmentProbs {
    /// True when every defined entry equals `target` exactly.
    pub fn all_equal(&self, target: &BigRational) -> bool {
        &self.marginal == target
            && self.given_a1.as_ref().is_none_or(|p| p == target)
            && self.given_a0.as_ref().is_none_or(|p| p == target)
    }
}

impl TreatmentTally {
    pub fn enumerate(n: usize, s: usize, t: usize, cap: u64) -> Result<Self> {
        let mut points = enumerate_trials(n, s, t, cap)?;
        let mut counts = vec![vec![[0u64; 2]; n]; s];
        let mut total = 0;
        while let Some((sample, treated)) = points.advance() {
            total += 1;
            for (k, (&i, &tk)) in sample.iter().zip(treated).enumerate() {
                counts[k][i][tk as usize] += 1;
            }
        }
        Ok(Self {
            n,
            s,
            total,
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `Pr(T_k = 1)`, `Pr(T_k = 1 | A_k = 1)` and `Pr(T_k = 1 | A_k = 0)`.
    /// A conditional is `None` when its side of the attribute is empty.
    pub fn treatment_prob(&self, k: usize, attribute: &[bool]) -> Result<TreatmentProbs> {
        if k >= self.s {
            return Err(Error::IndexOutOfRange {
                what: "position",
                index: k,
                limit: self.s,
            });
        }
        if attribute.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "attribute".into(),
                got: attribute.len(),
                expected: self.n,
            });
        }
        // [attr][treated]
        let mut cells = [[0u64; 2]; 2];
        for (i, c) in self.counts[k].iter().enumerate() {
            let a = attribute[i] as usize;
            cells[a][0] += c[0];
            cells[a][1] += c[1];
        }
        let treated = cells[0][1] + cells[1][1];
        let cond = |a: usize| {
            let side = cells[a][0] + cells[a][1];
            (side > 0).then(|| ratio(cells[a][1], side))
        };
        Ok(TreatmentProbs {
            marginal: ratio(treated, self.total),
            given_a1: cond(1),
            given_a0: cond(0),
        })
    }

    /// Exact `Pr(R_k = 1 | T_k = 1)` and `Pr(R_k = 1 | T_k = 0)` at position `k`,
    /// summing `tau`/`nu` over the enumerated space. The untreated entry is
    /// `None` when no position is ever untreated (`t = s`).
    pub fn response_given_treatment(
        &self,
        pop: &Population,
        k: usize,
    ) -> Result<(BigRational, Option<BigRational>)> {
        if pop.n() != self.n {
            return Err(Error::LengthMismatch {
                what: "population".into(),
                got: pop.n(),
                expected: self.n,
            });
        }
        let counts = self.counts.get(k).ok_or(Error::IndexOutOfRange {
            what: "position",
            index: k,
            limit: self.s,
        })?;
        let weighted = |values: &[f64], flag: usize| -> Result<Option<BigRational>> {
            let mut num = BigRational::zero();
            let mut den = 0u64;
            for (c, &v) in counts.iter().zip(values) {
                if c[flag] > 0 {
                    num += exact_f64(v)? * BigRational::from_integer(BigInt::from(c[flag]));
                    den += c[flag];
                }
            }
            Ok((den > 0).then(|| num / BigRational::from_integer(BigInt::from(den))))
        };
        let treated = weighted(pop.tau(), 1)?.ok_or(Error::NoTreatedArm)?;
        let untreated = weighted(pop.nu(), 0)?;
        Ok((treated, untreated))
    }
}

/// Exact rational value of a finite `f64`.
pub fn exact_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Malformed(format!("non-finite value {x}")))
}

/// Exact treatment probabilities at position `k` for a fixed attribute.
pub fn exact_treatment_prob(
    n: usize,
    s: usize,
    t: usize,
    k: usize,
    attribute: &[bool],
    cap: u64,
) -> Result<TreatmentProbs> {
    TreatmentTally::enumerate(n, s, t, cap)?.treatment_prob(k, attribute)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseGivenTreatment {
    /// `(Pr(R_k=1 | T_k=1), Pr(R_k=1 | T_k=0))` for each position `k`.
    pub per_position: Vec<(BigRational, Option<BigRational>)>,
}

impl ResponseGivenTreatment {
    pub fn p_r_given_t1(&self) -> f64 {
        to_f64(&self.per_position[0].0)
    }

    pub fn p_r_given_t0(&self) -> Option<f64> {
        self.per_position[0].1.as_ref().map(to_f64)
    }
}

pub fn exact_response_given_treatment(
    pop: &Population,
    s: usize,
    t: usize,
    cap: u64,
) -> Result<ResponseGivenTreatment> {
    let tally = TreatmentTally::enumerate(pop.n(), s, t, cap)?;
    let per_position = (0..s)
        .map(|k| tally.response_given_treatment(pop, k))
        .collect::<Result<_>>()?;
    Ok(ResponseGivenTreatment { per_position })
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn check_hypergeom(n: u64, k_a: u64, t: u64) -> Result<()> {
    if k_a > n || t > n {
        return Err(Error::InvalidParameters(format!(
            "need K <= n and t <= n, got n={n}, K={k_a}, t={t}"
        )));
    }
    Ok(())
}

/// Integer numerators `C(K, r) C(n-K, t-r)` for `r = 0..=t` over the common
/// denominator `C(n, t)`.
pub fn hypergeom_numerators(n: u64, k_a: u64, t: u64) -> Result<(Vec<BigUint>, BigUint)> {
    let h = Hypergeometric::new(n, k_a, t)?;
    Ok((h.numerators, h.denominator))
}

/// `Pr(|T ∩ A| = r)`; zero outside the support.
pub fn hypergeom_pmf(n: u64, k_a: u64, t: u64, r: u64) -> Result<BigRational> {
    Ok(Hypergeometric::new(n, k_a, t)?.pmf(r))
}

/// Law of `|T ∩ A|` for a uniform size-`t` subset `T` of `n` individuals and a
/// fixed `A` with `|A| = K`, held as integer numerators over `C(n, t)`.
#[derive(Debug, Clone)]
pub struct Hypergeometric {
    n: u64,
    k_a: u64,
    t: u64,
    numerators: Vec<BigUint>,
    denominator: BigUint,
}

impl Hypergeometric {
    pub fn new(n: u64, k_a: u64, t: u64) -> Result<Self> {
        check_hypergeom(n, k_a, t)?;
        let rest = n - k_a;
        // C(K, r) and C(n-K, t-r) by running products.
        let mut c_in = vec![BigUint::zero(); t as usize + 1];
        let mut acc = BigUint::one();
        for r in 0..=t.min(k_a) {
            if r > 0 {
                acc = acc * (k_a - r + 1) / r;
            }
            c_in[r as usize] = acc.clone();
        }
        let mut c_out = vec![BigUint::zero(); t as usize + 1];
        let mut acc = BigUint::one();
        for j in 0..=t.min(rest) {
            if j > 0 {
                acc = acc * (rest - j + 1) / j;
            }
            c_out[j as usize] = acc.clone();
        }
        let numerators = (0..=t as usize)
            .map(|r| &c_in[r] * &c_out[t as usize - r])
            .collect();
        Ok(Self {
            n,
            k_a,
            t,
            numerators,
            denominator: binomial(n, t),
        })
    }

    pub fn numerators(&self) -> &[BigUint] {
        &self.numerators
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn pmf(&self, r: u64) -> BigRational {
        match self.numerators.get(r as usize) {
            Some(num) => BigRational::new(num.clone().into(), self.denominator.clone().into()),
            None => BigRational::zero(),
        }
    }

    /// Exact check that the numerators add up to `C(n, t)`.
    pub fn sums_to_one(&self) -> bool {
        self.numerators.iter().sum::<BigUint>() == self.denominator
    }

    /// Mean and variance obtained by summing over the exact pmf.
    pub fn summed_moments(&self) -> Result<Moments> {
        if self.n == 0 {
            return Err(Error::InvalidParameters("empty population".into()));
        }
        let den = BigInt::from(self.denominator.clone());
        let nb = BigInt::from(self.n);
        let tk = BigInt::from(self.t * self.k_a);
        let mut first = BigInt::zero();
        let mut second = BigInt::zero();
        for (r, num) in self.numerators.iter().enumerate() {
            let num = BigInt::from(num.clone());
            first += &num * BigInt::from(r);
            // (n r - tK)^2 = n^2 (r - mean)^2
            let dev = &nb * BigInt::from(r) - &tk;
            second += &num * &dev * &dev;
        }
        Ok(Moments {
            mean: BigRational::new(first, den.clone()),
            variance: BigRational::new(second, den * &nb * &nb),
        })
    }

    /// Compares the exact tails with `exp(-eps^2 n^2 / (2 t K (n-K)))`.
    pub fn chernoff(&self, eps: f64) -> Result<ChernoffReport> {
        let (n, k_a, t) = (self.n, self.k_a, self.t);
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "eps must be > 0, got {eps}"
            )));
        }
        if k_a == 0 || k_a == n {
            return Err(Error::InvalidParameters(
                "bound is degenerate for K = 0 or K = n".into(),
            ));
        }
        if t == 0 {
            return Err(Error::InvalidParameters("bound needs t >= 1".into()));
        }
        let eps_q = decimal_rational(eps)?;
        let (e_num, e_den) = (eps_q.numer().clone(), eps_q.denom().clone());
        // r > (tK/n)(1 + eps)  <=>  r n d > tK (d + e), with eps = e/d.
        let tk = BigInt::from(t * k_a);
        let upper_rhs = &tk * (&e_den + &e_num);
        let lower_rhs = &tk * (&e_den - &e_num);
        let scale = BigInt::from(n) * &e_den;
        let mut upper_num = BigUint::zero();
        let mut lower_num = BigUint::zero();
        for (r, num) in self.numerators.iter().enumerate() {
            let lhs = &scale * BigInt::from(r);
            if lhs > upper_rhs {
                upper_num += num;
            }
            if lhs < lower_rhs {
                lower_num += num;
            }
        }
        let den: BigInt = self.denominator.clone().into();
        let upper_tail = BigRational::new(upper_num.into(), den.clone());
        let lower_tail = BigRational::new(lower_num.into(), den);

        let one = BigRational::one();
        let mean = ratio(t * k_a, n);
        let nf = n as f64;
        let exponent = eps * eps * nf * nf / (2.0 * t as f64 * k_a as f64 * (n - k_a) as f64);
        let bound = (-exponent).exp();
        let exact_upper_tail = to_f64(&upper_tail);
        let exact_lower_tail = to_f64(&lower_tail);
        Ok(ChernoffReport {
            threshold: to_f64(&(&mean * (&one + &eps_q))),
            exact_upper_tail,
            bound,
            holds: exact_upper_tail <= bound,
            lower_threshold: to_f64(&(&mean * (&one - &eps_q))),
            exact_lower_tail,
            lower_holds: exact_lower_tail <= bound,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: BigRational,
    pub variance: BigRational,
}

/// Closed-form mean `tK/n` and variance `t (K/n) ((n-K)/n) (n-t)/(n-1)`.
pub fn hypergeom_moments(n: u64, k_a: u64, t: u64) -> Result<Moments> {
    check_hypergeom(n, k_a, t)?;
    if n < 2 {
        return Err(Error::InvalidParameters("variance needs n >= 2".into()));
    }
    let big = |v: u64| BigInt::from(v);
    let mean = BigRational::new(big(t * k_a), big(n));
    let variance = BigRational::new(
        big(t) * big(k_a) * big(n - k_a) * big(n - t),
        big(n) * big(n) * big(n - 1),
    );
    Ok(Moments { mean, variance })
}

/// Mean and variance obtained by summing over the exact pmf.
pub fn hypergeom_summed_moments(n: u64, k_a: u64, t: u64) -> Result<Moments> {
    Hypergeometric::new(n, k_a, t)?.summed_moments()
}

/// Parses the shortest decimal representation of `x` as an exact rational,
/// so that `0.1` means `1/10`.
pub fn decimal_rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::InvalidParameters(format!("non-finite value {x}")));
    }
    let text = format!("{x}");
    let (sign, digits) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| Error::Malformed(text.clone()))?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(BigRational::new(numer * sign, denom))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffReport {
    /// Upper threshold `(tK/n)(1 + eps)`.
    pub threshold: f64,
    pub exact_upper_tail: f64,
    /// `exp(-eps^2 n^2 / (2 t K (n - K)))`.
    pub bound: f64,
    pub holds: bool,
    /// Lower threshold `(tK/n)(1 - eps)`.
    pub lower_threshold: f64,
    pub exact_lower_tail: f64,
    pub lower_holds: bool,
}

/// Compares the exact tails of `|T ∩ A|` with `exp(-eps^2 n^2 / (2 t K (n-K)))`.
pub fn chernoff_check(n: u64, k_a: u64, t: u64, eps: f64) -> Result<ChernoffReport> {
    Hypergeometric::new(n, k_a, t)?.chernoff(eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapFractions {
    pub xi: f64,
    pub eta: f64,
}

/// `xi = |T ∩ A| / |T|` and `eta = |T \ A| / (n - |A|)`.
pub fn overlap_fractions(treated: &[usize], a: &[usize], n: usize) -> Result<OverlapFractions> {
    if treated.is_empty() {
        return Err(Error::NoTreatedArm);
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
    if size_a == n {
        return Err(Error::InvalidParameters("eta undefined when A = N".into()));
    }
    let mut inside = 0usize;
    for &i in treated {
        if *in_a.get(i).ok_or(Error::IndexOutOfRange {
            what: "individual",
            index: i,
            limit: n,
        })? {
            inside += 1;
        }
    }
    Ok(OverlapFractions {
        xi: inside as f64 / treated.len() as f64,
        eta: (treated.len() - inside) as f64 / (n - size_a) as f64,
    })
}

fn ser_rational<S: serde::Serializer>(
    r: &BigRational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_opt_rational<S: serde::Serializer>(
    r: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn running_product_numerators_match_binomials() {
        for n in 0..=14u64 {
            for k in 0..=n {
                for t in 0..=n {
                    let h = Hypergeometric::new(n, k, t).unwrap();
                    for r in 0..=t {
                        let want = if r > k || t - r > n - k {
                            BigUint::zero()
                        } else {
                            binomial(k, r) * binomial(n - k, t - r)
                        };
                        assert_eq!(h.numerators()[r as usize], want, "n={n} K={k} t={t} r={r}");
                    }
                    assert!(h.sums_to_one());
                }
            }
        }
    }

    #[test]
    fn c0_size_values() {
        assert_eq!(c0_size(3, 2, 1).unwrap(), BigUint::from(12u32));
        assert_eq!(c0_size(5, 3, 2).unwrap(), BigUint::from(180u32));
        for n in 1..8 {
            assert_eq!(c0_size(n, 1, 1).unwrap(), BigUint::from(n));
        }
        assert!(c0_size(3, 4, 1).is_err());
        assert!(c0_size(3, 2, 0).is_err());
    }

    #[test]
    fn enumeration_counts_and_distinctness() {
        let pts: Vec<_> = enumerate_trials(2, 2, 1, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .collect();
        assert_eq!(pts.len(), 4);
        let pts: Vec<_> = enumerate_trials(3, 2, 1, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .collect();
        assert_eq!(pts.len(), 12);
        assert_eq!(pts.iter().collect::<HashSet<_>>().len(), 12);
        for p in &pts {
            assert_eq!(p.treated.iter().filter(|&&b| b).count(), 1);
            assert_ne!(p.sample[0], p.sample[1]);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_trials(30, 10, 5, DEFAULT_ENUMERATION_CAP).unwrap_err();
        assert!(err.is_cap());
        assert!(err.to_string().contains("too large for enumeration"));
    }

    #[test]
    fn trial_space_is_uniform() {
        let d = ExactDist::trial_space(4, 3, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(d.outcomes.len(), 72);
        assert!(d.is_normalized());
    }

    #[test]
    fn treatment_prob_examples() {
        let p = exact_treatment_prob(3, 2, 1, 0, &[true, false, false], DEFAULT_ENUMERATION_CAP)
            .unwrap();
        assert!(p.all_equal(&q(1, 2)));
        assert!(p.given_a1.is_some() && p.given_a0.is_some());

        let tally = TreatmentTally::enumerate(4, 3, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        for k in 0..3 {
            let p = tally.treatment_prob(k, &[true, false, true, true]).unwrap();
            assert!(p.all_equal(&q(2, 3)));
        }

        let p = exact_treatment_prob(3, 2, 2, 1, &[true, true, false], DEFAULT_ENUMERATION_CAP)
            .unwrap();
        assert_eq!(p.marginal, q(1, 1));

        let constant =
            exact_treatment_prob(3, 2, 1, 0, &[true; 3], DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(constant.given_a0.is_none());
        assert!(tally.treatment_prob(3, &[true; 4]).is_err());
    }

    #[test]
    fn response_given_treatment_example() {
        let pop = Population::new(4, vec![], vec![1.0, 1.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        let r = exact_response_given_treatment(&pop, 2, 1, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(r.per_position[0].0, q(1, 2));
        assert_eq!(r.per_position[1].1, Some(q(0, 1)));
        assert_eq!(r.p_r_given_t1(), 0.5);

        let all = exact_response_given_treatment(&pop, 2, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all.p_r_given_t0(), None);
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(hypergeom_pmf(5, 2, 2, 1).unwrap(), q(3, 5));
        for n in 0..6 {
            for t in 0..=n {
                assert_eq!(hypergeom_pmf(n, 0, t, 0).unwrap(), q(1, 1));
            }
        }
        assert_eq!(hypergeom_pmf(10, 2, 5, 3).unwrap(), q(0, 1));
        assert_eq!(hypergeom_pmf(10, 2, 5, 7).unwrap(), q(0, 1));
        assert!(hypergeom_pmf(4, 5, 2, 0).is_err());
    }

    #[test]
    fn pmf_matches_subset_enumeration() {
        // Independent route: count size-t subsets of 0..n by overlap with A = {0..K}.
        for n in 1..=8u64 {
            for k_a in 0..=n {
                for t in 0..=n {
                    let mut counts = vec![0u64; t as usize + 1];
                    let mut total = 0u64;
                    for mask in 0u32..(1 << n) {
                        if mask.count_ones() as u64 != t {
                            continue;
                        }
                        total += 1;
                        let overlap = (mask & ((1u32 << k_a) - 1)).count_ones();
                        counts[overlap as usize] += 1;
                    }
                    for r in 0..=t {
                        assert_eq!(
                            hypergeom_pmf(n, k_a, t, r).unwrap(),
                            ratio(counts[r as usize], total)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn moments_examples() {
        let m = hypergeom_moments(10, 4, 5).unwrap();
        assert_eq!(m.mean, q(2, 1));
        assert_eq!(m.variance, q(2, 3));
        assert_eq!(hypergeom_summed_moments(10, 4, 5).unwrap(), m);

        let full = hypergeom_moments(7, 7, 3).unwrap();
        assert_eq!(full.mean, q(3, 1));
        assert!(full.variance.is_zero());
        assert!(hypergeom_moments(1, 1, 1).is_err());
    }

    #[test]
    fn variance_below_binomial_for_two_or_more_draws() {
        for n in 3..=20u64 {
            for k_a in 1..n {
                for t in 2..n {
                    let var = hypergeom_moments(n, k_a, t).unwrap().variance;
                    let binom = q((t * k_a * (n - k_a)) as i64, (n * n) as i64);
                    assert!(var < binom, "n={n} K={k_a} t={t}");
                }
            }
        }
        // A single draw has exactly the binomial variance.
        let var = hypergeom_moments(10, 3, 1).unwrap().variance;
        assert_eq!(var, q(21, 100));
    }

    #[test]
    fn chernoff_example() {
        let r = chernoff_check(10, 5, 4, 0.5).unwrap();
        assert!((r.exact_upper_tail - 5.0 / 210.0).abs() < 1e-15);
        assert!((r.bound - (-0.125f64).exp()).abs() < 1e-15);
        assert!((r.bound - 0.8825).abs() < 1e-4);
        assert!(r.holds);

        let far = chernoff_check(10, 5, 4, 5.0).unwrap();
        assert_eq!(far.exact_upper_tail, 0.0);
        assert!(far.holds);

        assert!(chernoff_check(10, 0, 4, 0.5).is_err());
        assert!(chernoff_check(10, 10, 4, 0.5).is_err());
        assert!(chernoff_check(10, 5, 4, 0.0).is_err());
    }

    #[test]
    fn chernoff_bound_can_fail() {
        // Smallest grid violation: one draw, half the population in A.
        let r = chernoff_check(2, 1, 1, 0.6).unwrap();
        assert_eq!(r.exact_upper_tail, 0.5);
        assert!(r.bound < 0.5);
        assert!(!r.holds);
    }

    #[test]
    fn decimal_rationals() {
        assert_eq!(decimal_rational(0.1).unwrap(), q(1, 10));
        assert_eq!(decimal_rational(-2.5).unwrap(), q(-5, 2));
        assert_eq!(decimal_rational(3.0).unwrap(), q(3, 1));
        assert!(decimal_rational(f64::NAN).is_err());
    }

    #[test]
    fn overlap_examples() {
        let o = overlap_fractions(&[0, 1], &[0], 4).unwrap();
        assert_eq!(o.xi, 0.5);
        assert!((o.eta - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(overlap_fractions(&[0, 1], &[0, 1, 2], 4).unwrap().eta, 0.0);
        let empty = overlap_fractions(&[1, 3], &[], 4).unwrap();
        assert_eq!((empty.xi, empty.eta), (0.0, 0.5));
        assert!(overlap_fractions(&[], &[0], 4).is_err());
        assert!(overlap_fractions(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn hypergeometric_dist_normalized() {
        for n in 0..12 {
            for k_a in 0..=n {
                for t in 0..=n {
                    assert!(ExactDist::hypergeometric(n, k_a, t)
                        .unwrap()
                        .is_normalized());
                }
            }
        }
    }
}
