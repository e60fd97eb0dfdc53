//! Declarative experiment configuration (JSON, unknown keys rejected).
//!
//! One schema serves all experiment kinds; validation enforces per-kind
//! required fields and parameter ranges. Rational parameters are strict
//! `p/q` strings so configs can never smuggle a decimal into a verdict.

use super::ExperimentError;
use crate::model::{parse_pattern_file, PatternGraph};
use crate::rational::{Rat, Rational};
use num::{One, Signed};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Counting,
    AuxRegularity,
    Heredity,
    Neighborhood,
    Extraction,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Counting => "counting",
            ExperimentKind::AuxRegularity => "aux-regularity",
            ExperimentKind::Heredity => "heredity",
            ExperimentKind::Neighborhood => "neighborhood",
            ExperimentKind::Extraction => "extraction",
        }
    }
}

/// `"K3" | "K4" | "K4e" | {"file": "path"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternSelector {
    Named(String),
    File { file: PathBuf },
}

impl PatternSelector {
    pub fn resolve(&self) -> Result<PatternGraph, ExperimentError> {
        match self {
            PatternSelector::Named(name) => PatternGraph::from_name(name).ok_or_else(|| {
                ExperimentError::InvalidConfig(format!("unknown pattern name {name:?}"))
            }),
            PatternSelector::File { file } => {
                let text = std::fs::read_to_string(file)?;
                Ok(parse_pattern_file(&text)?)
            }
        }
    }
}

/// Edge-count grid: absolute values, or rational multiples of the
/// appearance threshold `edge_threshold(H, n, C)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MGrid {
    Absolute(Vec<usize>),
    ThresholdMultiples(Vec<Rat>),
}

/// How the fixed left pair of an aux-regularity experiment is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G1Source {
    Complete,
    SampledLowerRegular,
    File { file: PathBuf },
}

/// Which heredity statement a subset is tested against: the one-sided
/// lower-regularity form, or the two-sided form with a density window.
/// The two-sided form tests the sampled subset itself (not a sub-subset),
/// a disclosed relaxation echoed into every report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeredityMode {
    Lower,
    Regular,
}

fn default_workers() -> usize {
    1
}

fn default_witness_budget() -> u32 {
    20
}

fn default_max_rejects() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternSelector>,
    /// Uniform class size grid (counting, neighborhood).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_grid: Vec<usize>,
    /// Explicit class sizes (aux-regularity `[n1, n2, n3]`, heredity and
    /// extraction `[n1, n2]`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<MGrid>,
    /// Aux-regularity: right-pair edge counts, one cell each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m2_grid: Vec<usize>,
    /// Heredity: subset sizes, one cell each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q_grid: Vec<usize>,
    /// Heredity/extraction: edge count of the fixed source pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_prime: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Rat>,
    /// Aux-regularity: density of the fixed left pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<Rat>,
    /// Heredity: lower-regularity target; neighborhood: restricted-pair
    /// target density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_target: Option<Rat>,
    /// Failure-fraction bound for per-cell pass/fail bookkeeping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Rat>,
    /// Multiplier inside `edge_threshold` for threshold-relative m grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_c: Option<Rat>,
    /// Extraction: lower-bound coefficient `c` in `m >= c (n1 + n2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction_c: Option<Rat>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_witness_budget")]
    pub witness_budget: u32,
    #[serde(default = "default_max_rejects")]
    pub max_rejects: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1_source: Option<G1Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heredity_mode: Option<HeredityMode>,
    /// Extraction: use a complete source pair instead of rejection sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_complete: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be >= 1".into());
        }
        let unit = |name: &str, r: &Option<Rat>, required: bool| -> Result<(), ExperimentError> {
            match r {
                Some(v) => {
                    if !v.0.is_positive() || v.0 >= Rational::one() {
                        Err(ExperimentError::InvalidConfig(format!(
                            "{name} must lie strictly inside (0, 1)"
                        )))
                    } else {
                        Ok(())
                    }
                }
                None if required => Err(ExperimentError::InvalidConfig(format!(
                    "{name} is required for this experiment kind"
                ))),
                None => Ok(()),
            }
        };
        let density =
            |name: &str, r: &Option<Rat>, required: bool| -> Result<(), ExperimentError> {
                match r {
                    Some(v) => {
                        if !v.0.is_positive() || v.0 > Rational::one() {
                            Err(ExperimentError::InvalidConfig(format!(
                                "{name} must lie inside (0, 1]"
                            )))
                        } else {
                            Ok(())
                        }
                    }
                    None if required => Err(ExperimentError::InvalidConfig(format!(
                        "{name} is required for this experiment kind"
                    ))),
                    None => Ok(()),
                }
            };
        unit("beta", &self.beta, false)?;
        match self.kind {
            ExperimentKind::Counting => {
                if self.pattern.is_none() {
                    return fail("counting needs a pattern".into());
                }
                if self.n_grid.is_empty() {
                    return fail("counting needs a nonempty n_grid".into());
                }
                if self.m_grid.is_none() {
                    return fail("counting needs an m_grid".into());
                }
                unit("epsilon", &self.epsilon, true)?;
                unit("delta", &self.delta, true)?;
            }
            ExperimentKind::AuxRegularity => {
                let sizes = self
                    .class_sizes
                    .as_ref()
                    .ok_or_else(|| {
                        ExperimentError::InvalidConfig(
                            "aux-regularity needs class_sizes [n1, n2, n3]".into(),
                        )
                    })?;
                if sizes.len() != 3 || sizes.contains(&0) {
                    return fail("class_sizes must be three positive sizes".into());
                }
                if self.m2_grid.is_empty() {
                    return fail("aux-regularity needs a nonempty m2_grid".into());
                }
                let cells = sizes[0] * sizes[2];
                for &m2 in &self.m2_grid {
                    if m2 == 0 || m2 > cells {
                        return fail(format!("m2 = {m2} outside 1..={cells}"));
                    }
                }
                unit("epsilon", &self.epsilon, true)?;
                unit("epsilon_prime", &self.epsilon_prime, true)?;
                density("d1", &self.d1, true)?;
                if self.g1_source.is_none() {
                    return fail("aux-regularity needs g1_source".into());
                }
            }
            ExperimentKind::Heredity => {
                let sizes = self.class_sizes.as_ref().ok_or_else(|| {
                    ExperimentError::InvalidConfig("heredity needs class_sizes [n1, n2]".into())
                })?;
                if sizes.len() != 2 || sizes.contains(&0) {
                    return fail("class_sizes must be two positive sizes".into());
                }
                if self.q_grid.is_empty() {
                    return fail("heredity needs a nonempty q_grid".into());
                }
                for &q in &self.q_grid {
                    if q == 0 || q > sizes[0] {
                        return Err(ExperimentError::QTooLarge { q, n1: sizes[0] });
                    }
                }
                let m = self.pair_m.ok_or_else(|| {
                    ExperimentError::InvalidConfig("heredity needs pair_m".into())
                })?;
                if m == 0 || m > sizes[0] * sizes[1] {
                    return fail(format!("pair_m = {m} outside the pair's cell grid"));
                }
                unit("epsilon", &self.epsilon, true)?;
                unit("epsilon_prime", &self.epsilon_prime, true)?;
                density("d_target", &self.d_target, true)?;
                if self.heredity_mode.is_none() {
                    return fail("heredity needs heredity_mode (lower | regular)".into());
                }
            }
            ExperimentKind::Neighborhood => {
                let pattern = self
                    .pattern
                    .as_ref()
                    .ok_or_else(|| {
                        ExperimentError::InvalidConfig("neighborhood needs a pattern".into())
                    })?
                    .resolve()?;
                if pattern != PatternGraph::k4_minus_e() {
                    return fail("neighborhood requires the K4e pattern".into());
                }
                if self.n_grid.is_empty() {
                    return fail("neighborhood needs a nonempty n_grid".into());
                }
                if self.m_grid.is_none() {
                    return fail("neighborhood needs an m_grid".into());
                }
                unit("epsilon", &self.epsilon, true)?;
                unit("epsilon_prime", &self.epsilon_prime, true)?;
                unit("delta", &self.delta, true)?;
                density("d_target", &self.d_target, true)?;
            }
            ExperimentKind::Extraction => {
                let sizes = self.class_sizes.as_ref().ok_or_else(|| {
                    ExperimentError::InvalidConfig("extraction needs class_sizes [n1, n2]".into())
                })?;
                if sizes.len() != 2 || sizes.contains(&0) {
                    return fail("class_sizes must be two positive sizes".into());
                }
                if self.m_grid.is_none() {
                    return fail("extraction needs an m_grid".into());
                }
                unit("epsilon", &self.epsilon, true)?;
                if self.source_complete != Some(true) && self.pair_m.is_none() {
                    return fail("extraction needs pair_m unless source_complete".into());
                }
            }
        }
        Ok(())
    }
}
