//! Observational sampling and randomized controlled trials.
//!
//! Observational sampling draws `s` individuals uniformly with replacement and
//! reports their attribute tuples. A randomized controlled trial draws an
//! ordered sample of `s` distinct individuals, picks a uniform size-`t` subset
//! of sample positions for treatment, then draws each response independently
//! with probability `tau` (treated) or `nu` (untreated).

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::population::Population;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObservationalSample {
    /// Drawn individuals, repeats allowed.
    pub draws: Vec<usize>,
    /// Attribute tuple of each draw, in population label order.
    pub data: Vec<Vec<bool>>,
}

impl ObservationalSample {
    pub fn s(&self) -> usize {
        self.draws.len()
    }
}

pub fn sample_observational<R: Rng + ?Sized>(
    pop: &Population,
    s: usize,
    rng: &mut R,
) -> Result<ObservationalSample> {
    if s == 0 {
        return Err(Error::InvalidParameters("sample size must be >= 1".into()));
    }
    let draws: Vec<usize> = (0..s).map(|_| rng.gen_range(0..pop.n())).collect();
    let data = draws.iter().map(|&i| pop.row(i)).collect();
    Ok(ObservationalSample { draws, data })
}

/// One realized trial. Position `k` holds individual `sample[k]`, its
/// treatment flag `T_k` and response flag `R_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub sample: Vec<usize>,
    pub treated: Vec<bool>,
    pub responses: Vec<bool>,
}

impl TrialOutcome {
    /// Builds an outcome from recorded flags, checking the structural invariants.
    pub fn from_parts(
        sample: Vec<usize>,
        treated: Vec<bool>,
        responses: Vec<bool>,
    ) -> Result<Self> {
        let s = sample.len();
        for (what, len) in [("treated", treated.len()), ("responses", responses.len())] {
            if len != s {
                return Err(Error::LengthMismatch {
                    what: what.into(),
                    got: len,
                    expected: s,
                });
            }
        }
        let mut seen = sample.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameters(
                "trial sample repeats an individual".into(),
            ));
        }
        Ok(Self {
            sample,
            treated,
            responses,
        })
    }

    pub fn s(&self) -> usize {
        self.sample.len()
    }

    pub fn t(&self) -> usize {
        self.treated.iter().filter(|&&b| b).count()
    }

    /// Sample positions in the control group `U = S \ T`.
    pub fn untreated_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.treated
            .iter()
            .enumerate()
            .filter(|(_, &b)| !b)
            .map(|(k, _)| k)
    }

    /// `(1/t) * sum_k T_k R_k`, the estimator of the mean treated response.
    pub fn rho1(&self) -> Result<f64> {
        let t = self.t();
        if t == 0 {
            return Err(Error::NoTreatedArm);
        }
        let hits = self
            .treated
            .iter()
            .zip(&self.responses)
            .filter(|(&tk, &rk)| tk && rk)
            .count();
        Ok(hits as f64 / t as f64)
    }

    /// `(1/(s-t)) * sum_k (1 - T_k) R_k`, the estimator of the mean untreated response.
    pub fn rho0(&self) -> Result<f64> {
        let u = self.s() - self.t();
        if u == 0 {
            return Err(Error::NoControlArm);
        }
        let hits = self
            .treated
            .iter()
            .zip(&self.responses)
            .filter(|(&tk, &rk)| !tk && rk)
            .count();
        Ok(hits as f64 / u as f64)
    }

    pub fn effect_estimate(&self) -> Result<f64> {
        Ok(self.rho1()? - self.rho0()?)
    }

    /// Response frequencies in the four (treated, attribute) cells. Empty cells
    /// are `None`.
    pub fn conditional_rates(&self, attr_values: &[bool]) -> Result<ConditionalRates> {
        if attr_values.len() != self.s() {
            return Err(Error::LengthMismatch {
                what: "attribute values".into(),
                got: attr_values.len(),
                expected: self.s(),
            });
        }
        // [treated][attr] -> (responders, total)
        let mut cells = [[(0usize, 0usize); 2]; 2];
        for ((&tk, &ak), &rk) in self.treated.iter().zip(attr_values).zip(&self.responses) {
            let cell = &mut cells[tk as usize][ak as usize];
            cell.0 += rk as usize;
            cell.1 += 1;
        }
        let rate = |(hits, total): (usize, usize)| (total > 0).then(|| hits as f64 / total as f64);
        Ok(ConditionalRates {
            t1a1: rate(cells[1][1]),
            t0a1: rate(cells[0][1]),
            t1a0: rate(cells[1][0]),
            t0a0: rate(cells[0][0]),
        })
    }

    /// Writes the trial as CSV: `k,individual,treated,response` followed by
    /// one column per population attribute. `k` and `individual` are 1-based.
    pub fn write_csv<W: Write>(&self, pop: &Population, mut out: W) -> io::Result<()> {
        write!(out, "k,individual,treated,response")?;
        for label in pop.labels() {
            write!(out, ",{label}")?;
        }
        out.write_all(b"\n")?;
        for (k, &i) in self.sample.iter().enumerate() {
            write!(
                out,
                "{},{},{},{}",
                k + 1,
                i + 1,
                self.treated[k] as u8,
                self.responses[k] as u8
            )?;
            for bit in pop.row(i) {
                write!(out, ",{}", bit as u8)?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalRates {
    pub t1a1: Option<f64>,
    pub t0a1: Option<f64>,
    pub t1a0: Option<f64>,
    pub t0a0: Option<f64>,
}

fn check_trial_sizes(pop: &Population, s: usize, t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParameters(
            "t = 0: a trial needs at least one treated individual".into(),
        ));
    }
    if t > s {
        return Err(Error::InvalidParameters(format!("t = {t} exceeds s = {s}")));
    }
    if s > pop.n() {
        return Err(Error::InvalidParameters(format!(
            "s = {s} exceeds population size {}",
            pop.n()
        )));
    }
    Ok(())
}

/// Runs one randomized controlled trial with `s` participants, `t` of them treated.
pub fn run_trial<R: Rng + ?Sized>(
    pop: &Population,
    s: usize,
    t: usize,
    rng: &mut R,
) -> Result<TrialOutcome> {
    check_trial_sizes(pop, s, t)?;

    let mut individuals: Vec<usize> = (0..pop.n()).collect();
    let sample = individuals.partial_shuffle(rng, s).0.to_vec();

    let mut positions: Vec<usize> = (0..s).collect();
    let mut treated = vec![false; s];
    for &k in positions.partial_shuffle(rng, t).0.iter() {
        treated[k] = true;
    }

    let responses = sample
        .iter()
        .zip(&treated)
        .map(|(&i, &tk)| {
            let p = if tk { pop.tau()[i] } else { pop.nu()[i] };
            rng.gen_bool(p)
        })
        .collect();

    Ok(TrialOutcome {
        sample,
        treated,
        responses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub mean_effect: f64,
    pub stderr: f64,
    pub effects: Vec<f64>,
}

/// Runs `reps` independent trials; replication `r` uses stream `r` of `seed`.
pub fn replicate_trials(
    pop: &Population,
    s: usize,
    t: usize,
    reps: usize,
    seed: u64,
) -> Result<Replication> {
    if reps < 2 {
        return Err(Error::InvalidParameters("replications must be >= 2".into()));
    }
    if t == s {
        return Err(Error::NoControlArm);
    }
    let effects = (0..reps as u64)
        .map(|r| run_trial(pop, s, t, &mut SeededRng::new(seed, r))?.effect_estimate())
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_and_stderr(&effects);
    Ok(Replication {
        mean_effect: mean,
        stderr,
        effects,
    })
}

/// Sample mean and standard error (sample standard deviation over `sqrt(len)`).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(n: usize, tau: f64, nu: f64) -> Population {
        let half: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
        Population::new(n, vec![("a".into(), half)], vec![tau; n], vec![nu; n]).unwrap()
    }

    fn outcome(treated: &[u8], responses: &[u8]) -> TrialOutcome {
        let s = treated.len();
        TrialOutcome::from_parts(
            (0..s).collect(),
            treated.iter().map(|&b| b == 1).collect(),
            responses.iter().map(|&b| b == 1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_individual_observational() {
        let p = pop(1, 0.5, 0.5);
        let obs = sample_observational(&p, 5, &mut SeededRng::new(1, 0)).unwrap();
        assert_eq!(obs.draws, vec![0; 5]);
        assert_eq!(obs.data, vec![vec![false]; 5]);
        assert!(sample_observational(&p, 0, &mut SeededRng::new(1, 0)).is_err());
    }

    #[test]
    fn observational_is_deterministic_and_balanced() {
        let p = pop(2, 0.5, 0.5);
        let a = sample_observational(&p, 10_000, &mut SeededRng::new(9, 0)).unwrap();
        let b = sample_observational(&p, 10_000, &mut SeededRng::new(9, 0)).unwrap();
        assert_eq!(a, b);
        let ones = a.draws.iter().filter(|&&i| i == 1).count() as f64;
        let bound = 4.0 * (0.25f64 / 1e4).sqrt() * 1e4;
        assert!((ones - 5000.0).abs() <= bound, "{ones}");
        for (k, &i) in a.draws.iter().enumerate() {
            assert_eq!(a.data[k], p.row(i));
        }
    }

    #[test]
    fn two_of_two() {
        let p = pop(2, 0.5, 0.5);
        let tr = run_trial(&p, 2, 1, &mut SeededRng::new(3, 0)).unwrap();
        let mut sorted = tr.sample.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1]);
        assert_eq!(tr.t(), 1);
    }

    #[test]
    fn degenerate_outcomes_follow_treatment() {
        let p = pop(10, 1.0, 0.0);
        let tr = run_trial(&p, 8, 3, &mut SeededRng::new(5, 2)).unwrap();
        assert_eq!(tr.responses, tr.treated);
        assert_eq!(tr.effect_estimate().unwrap(), 1.0);
    }

    #[test]
    fn run_trial_is_deterministic() {
        let p = pop(6, 0.4, 0.6);
        let a = run_trial(&p, 4, 2, &mut SeededRng::new(42, 0)).unwrap();
        let b = run_trial(&p, 4, 2, &mut SeededRng::new(42, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn run_trial_validation() {
        let p = pop(4, 0.5, 0.5);
        let rng = &mut SeededRng::new(0, 0);
        assert!(run_trial(&p, 2, 3, rng).is_err());
        assert!(run_trial(&p, 5, 1, rng).is_err());
        assert!(run_trial(&p, 2, 0, rng).is_err());
    }

    #[test]
    fn estimators() {
        let tr = outcome(&[1, 1, 0, 0], &[1, 0, 1, 0]);
        assert_eq!(tr.rho1().unwrap(), 0.5);
        assert_eq!(tr.rho0().unwrap(), 0.5);
        assert_eq!(tr.effect_estimate().unwrap(), 0.0);

        assert_eq!(outcome(&[1, 1, 0, 0], &[1, 1, 1, 1]).rho1().unwrap(), 1.0);
        assert_eq!(outcome(&[1, 1, 0, 0], &[0, 0, 0, 0]).rho1().unwrap(), 0.0);
        assert_eq!(outcome(&[1, 1, 0, 0], &[1, 1, 0, 0]).rho0().unwrap(), 0.0);
        assert_eq!(
            outcome(&[1, 1, 0, 0], &[1, 1, 0, 0])
                .effect_estimate()
                .unwrap(),
            1.0
        );
        assert_eq!(
            outcome(&[1, 1, 0, 0], &[0, 0, 1, 1])
                .effect_estimate()
                .unwrap(),
            -1.0
        );
        assert_eq!(outcome(&[1, 1], &[1, 0]).rho0(), Err(Error::NoControlArm));
    }

    #[test]
    fn conditional_rates_cells() {
        let tr = outcome(&[1, 0], &[1, 0]);
        let r = tr.conditional_rates(&[true, true]).unwrap();
        assert_eq!(r.t1a1, Some(1.0));
        assert_eq!(r.t0a1, Some(0.0));
        assert_eq!(r.t1a0, None);
        assert_eq!(r.t0a0, None);
        let r = tr.conditional_rates(&[false, false]).unwrap();
        assert_eq!((r.t1a1, r.t0a1), (None, None));
        assert!(tr.conditional_rates(&[true]).is_err());
    }

    #[test]
    fn from_parts_rejects_repeats() {
        assert!(
            TrialOutcome::from_parts(vec![0, 0], vec![true, false], vec![false, false]).is_err()
        );
    }

    #[test]
    fn csv_layout() {
        let p = pop(4, 1.0, 0.0);
        let tr = run_trial(&p, 3, 1, &mut SeededRng::new(1, 1)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,individual,treated,response,a");
        assert_eq!(lines.len(), 4);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert!(lines[1].starts_with("1,"));
    }

    #[test]
    fn replication_null_and_determinism() {
        let p = pop(40, 0.3, 0.3);
        let a = replicate_trials(&p, 20, 10, 200, 11).unwrap();
        assert!(a.mean_effect.abs() <= 4.0 * a.stderr);
        let b = replicate_trials(&p, 20, 10, 200, 11).unwrap();
        assert_eq!(a.effects, b.effects);
        assert!(replicate_trials(&p, 20, 10, 1, 11).is_err());
        assert!(replicate_trials(&p, 20, 20, 5, 11).is_err());
    }
}
