//! Run configuration files.
//!
//! ```json
//! {
//!   "scenario": { "name": "cnot_memory" },
//!   "analysis": ["divisibility", "witness"],
//!   "k": 2
//! }
//! ```
//!
//! A scenario may also be given inline as
//! `{ "inline": { "d_sys", "d_env", "initial", "unitaries", "labels" } }`
//! with every matrix a row-major nested array of `[re, im]` pairs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Scenario;
use crate::linalg::{c, ComplexMatrix};
use crate::markov::DEFAULT_TOL_MARKOV;
use crate::scenarios::ScenarioSpec;
use crate::state::DensityMatrix;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Config("ragged matrix rows".into()));
    }
    Ok(ComplexMatrix::from_fn(n, m, |r, col| c(rows[r][col][0], rows[r][col][1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    pub d_sys: usize,
    pub d_env: usize,
    pub initial: JsonMatrix,
    pub unitaries: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<f64>>,
}

impl InlineScenario {
    pub fn from_scenario(sc: &Scenario) -> Self {
        Self {
            d_sys: sc.d_sys(),
            d_env: sc.d_env(),
            initial: matrix_to_json(sc.initial().matrix()),
            unitaries: sc.unitaries().iter().map(matrix_to_json).collect(),
            labels: sc.labels().map(<[f64]>::to_vec),
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let initial = DensityMatrix::new(matrix_from_json(&self.initial)?)?;
        let unitaries = self.unitaries.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        Scenario::new(self.d_sys, self.d_env, initial, unitaries, self.labels.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Inline { inline: InlineScenario },
    Named(ScenarioSpec),
}

impl ScenarioSource {
    pub fn build(&self) -> Result<Scenario> {
        match self {
            ScenarioSource::Inline { inline } => inline.build(),
            ScenarioSource::Named(spec) => spec.build(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ScenarioSource::Named(spec) => spec.seed,
            ScenarioSource::Inline { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Tensor,
    Cji,
    Mps,
    Witness,
    Divisibility,
    Measure,
    TraceDistanceCurve,
}

impl Analysis {
    pub fn key(self) -> &'static str {
        match self {
            Analysis::Tensor => "tensor",
            Analysis::Cji => "cji",
            Analysis::Mps => "mps",
            Analysis::Witness => "witness",
            Analysis::Divisibility => "divisibility",
            Analysis::Measure => "measure",
            Analysis::TraceDistanceCurve => "trace-distance-curve",
        }
    }
}

fn default_markov() -> f64 {
    DEFAULT_TOL_MARKOV
}

fn default_divisibility() -> f64 {
    1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_markov")]
    pub markov: f64,
    #[serde(default = "default_divisibility")]
    pub divisibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { markov: default_markov(), divisibility: default_divisibility() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub analysis: Vec<Analysis>,
    /// steps to analyse; defaults to all of the scenario's steps
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// the two system inputs of the trace-distance curve; `|0>` and `|1>` if absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_states: Option<[JsonMatrix; 2]>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.analysis.is_empty() {
            return Err(Error::Config("analysis list is empty".into()));
        }
        let t = &self.tolerances;
        if !(t.markov >= 0.0 && t.divisibility >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        Ok(())
    }

    /// The scenario truncated to `k` steps.
    pub fn scenario(&self) -> Result<Scenario> {
        let sc = self.scenario.build().map_err(|e| match e {
            Error::Config(_) => e,
            other if !other.is_numerical() => Error::Config(other.to_string()),
            other => other,
        })?;
        match self.k {
            Some(k) if k > sc.steps() => {
                Err(Error::Config(format!("k = {k} exceeds the scenario's {} steps", sc.steps())))
            }
            Some(k) => sc.truncated(k),
            None => Ok(sc),
        }
    }

    pub fn curve_states(&self, d: usize) -> Result<[DensityMatrix; 2]> {
        match &self.curve_states {
            None => Ok([DensityMatrix::basis_state(d, 0), DensityMatrix::basis_state(d, 1)]),
            Some([a, b]) => Ok([DensityMatrix::new(matrix_from_json(a)?)?, DensityMatrix::new(matrix_from_json(b)?)?]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn named_config_parses() {
        let cfg = RunConfig::from_json(
            r#"{"scenario": {"name": "partial_swap", "params": {"omega": 2.0}}, "analysis": ["witness", "trace-distance-curve"], "k": 2}"#,
        )
        .unwrap();
        assert_eq!(cfg.analysis, vec![Analysis::Witness, Analysis::TraceDistanceCurve]);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.scenario().unwrap().steps(), 2);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for text in [
            r#"{"scenario": {"name": "cnot_memory"}, "analysis": []}"#,
            r#"{"scenario": {"name": "cnot_memory"}, "analysis": ["plot"]}"#,
            r#"{"scenario": {"name": "cnot_memory"}, "analysis": ["cji"], "extra": 1}"#,
            r#"{"scenario": {"name": "cnot_memory"}, "analysis": ["cji"], "tolerances": {"markov": -1.0}}"#,
            "not json",
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
        let cfg = RunConfig::from_json(r#"{"scenario": {"name": "nope"}, "analysis": ["cji"]}"#).unwrap();
        assert!(matches!(cfg.scenario(), Err(Error::Config(_))));
        let cfg = RunConfig::from_json(r#"{"scenario": {"name": "cnot_memory"}, "analysis": ["cji"], "k": 5}"#).unwrap();
        assert!(matches!(cfg.scenario(), Err(Error::Config(_))));
    }

    #[test]
    fn inline_scenario_round_trips() {
        let sc = scenarios::random_seeded(2, 2, 2, 9).unwrap();
        let inline = InlineScenario::from_scenario(&sc);
        let text = serde_json::to_string(&ScenarioSource::Inline { inline }).unwrap();
        let back: ScenarioSource = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap(), sc);
    }
}
