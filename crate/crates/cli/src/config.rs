//! Scenario configuration: a population plus trial parameters, loaded from
//! JSON and overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use trialspace_core::population::PopulationSpec;
use trialspace_core::Population;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub population: Option<PopulationSpec>,
    #[serde(default)]
    pub trial: TrialParams,
    pub seed: Option<u64>,
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialParams {
    pub s: Option<usize>,
    pub t: Option<usize>,
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<String>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn population(&self) -> CliResult<Population> {
        let spec = self
            .population
            .as_ref()
            .ok_or_else(|| CliError::Validation("config has no `population`".into()))?;
        Ok(spec.build()?)
    }
}

/// Trial sizes after flag overrides, checked against the population.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedTrial {
    pub s: usize,
    pub t: usize,
    pub reps: usize,
}

impl ResolvedTrial {
    pub fn resolve(params: &TrialParams, n: usize) -> CliResult<Self> {
        let s = params
            .s
            .ok_or_else(|| CliError::Validation("trial size `s` is required".into()))?;
        let t = params
            .t
            .ok_or_else(|| CliError::Validation("treated count `t` is required".into()))?;
        let reps = params.reps.unwrap_or(1);
        if !(1 <= t && t < s && s <= n) {
            return Err(CliError::Validation(format!(
                "need 1 <= t < s <= n, got t={t}, s={s}, n={n}"
            )));
        }
        if reps == 0 {
            return Err(CliError::Validation("reps must be >= 1".into()));
        }
        Ok(Self { s, t, reps })
    }
}
