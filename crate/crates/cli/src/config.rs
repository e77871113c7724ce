use std::path::Path;

use equimean::dyadics::Dyadic;
use equimean::groups::{GroupAction, Subgroup};
use equimean::homotopy::SymmetrizeOptions;
use equimean::means::{LambdaConfig, Law, MeanSpec, QuasiMeanMap, SearchBudget};
use equimean::spaces::{MetricSpace, Point};
use serde::Deserialize;

use crate::CliError;

/// Published JSON Schema for [`ExperimentConfig`].
pub const SCHEMA: &str = include_str!("../schema/config.schema.json");

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    pub experiment: Option<String>,
    pub space: Option<MetricSpace>,
    pub mean: Option<MeanSpec>,
    pub action: Option<ActionSpec>,
    /// Members of a subgroup of the action's group; the whole group when absent.
    pub subgroup: Option<Vec<usize>>,
    pub laws: Option<Vec<Law>>,
    pub lambda: Option<f64>,
    pub theta: Option<Point>,
    pub x: Option<Point>,
    pub depth: Option<u32>,
    pub eps: Option<f64>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub pairs: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub lambda_config: Option<LambdaConfig>,
    pub budget: Option<SearchBudget>,
    pub threshold: Option<f64>,
    pub s: Option<Dyadic>,
    pub t: Option<Dyadic>,
    pub base: Option<BaseSpec>,
    pub retraction: Option<RetractionSpec>,
    pub trust_hypotheses: Option<bool>,
    pub plot: Option<bool>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    Negation,
    Reflection { axis: usize },
    Rotation { n: usize },
    CoordinateSwap { i: usize, j: usize },
    CoordinatePermutation,
}

/// Base homotopy handed to `symmetrize`.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    /// `(1 - t) x + t θ`.
    StraightLine,
    /// The dyadic contraction of a binary mean onto `θ`.
    Contraction { mean: MeanSpec, lambda: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RetractionSpec {
    OrbitAverage,
    CoordinateZero(usize),
}

impl ExperimentConfig {
    pub fn empty() -> Self {
        serde_json::from_str("{}").expect("all fields optional")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::Config(format!("missing field `{name}`")))
    }

    pub fn space(&self) -> Result<&MetricSpace, CliError> {
        Self::require(&self.space, "space")
    }

    pub fn build_mean(&self) -> Result<QuasiMeanMap, CliError> {
        Ok(Self::require(&self.mean, "mean")?.build(self.space()?)?)
    }

    pub fn build_action(&self) -> Result<GroupAction, CliError> {
        let space = self.space()?.clone();
        let action = match Self::require(&self.action, "action")? {
            ActionSpec::Negation => GroupAction::negation(space),
            ActionSpec::Reflection { axis } => GroupAction::reflection(space, *axis),
            ActionSpec::Rotation { n } => GroupAction::rotation(space, *n),
            ActionSpec::CoordinateSwap { i, j } => GroupAction::coordinate_swap(space, *i, *j),
            ActionSpec::CoordinatePermutation => GroupAction::coordinate_permutation(space),
        }?;
        Ok(action)
    }

    pub fn subgroup(&self, action: &GroupAction) -> Result<Subgroup, CliError> {
        Ok(match &self.subgroup {
            Some(members) => Subgroup::new(action.group(), members.iter().copied())?,
            None => action.group().whole(),
        })
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-9)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(1000)
    }

    pub fn symmetrize_options(&self) -> SymmetrizeOptions {
        SymmetrizeOptions {
            verify_hypotheses: !self.trust_hypotheses.unwrap_or(false),
            samples: self.samples.unwrap_or(200),
            seed: self.seed(),
            tol: self.tol(),
        }
    }
}
