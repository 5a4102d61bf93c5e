//! Serializable model description shared by the command line and the browser demo.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_model, LevyModel, NegativeJumpPart, Pole, RationalJumpPart, Severity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositiveConfig {
    pub lambda: f64,
    pub poles: Vec<Pole>,
    /// Numerator Q in ascending powers; Q(0) must equal prod alpha^n.
    pub q_coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixPart {
    pub weight: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NegativeConfig {
    CompoundPoissonExp { rate: f64, p: f64 },
    CompoundPoissonMixExp { rate: f64, parts: Vec<MixPart> },
    CompoundPoissonBurr { rate: f64, theta: f64, c_shape: f64, xi: f64 },
    StableSubordinator { xi: f64 },
    SpectrallyPositiveStable { xi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub c: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Killing rate; command-line values take precedence.
    #[serde(default)]
    pub q: Option<f64>,
    pub positive: PositiveConfig,
    pub negative: NegativeConfig,
}

impl From<&NegativeConfig> for NegativeJumpPart {
    fn from(n: &NegativeConfig) -> Self {
        match n {
            NegativeConfig::CompoundPoissonExp { rate, p } => NegativeJumpPart::CompoundPoissonExp { rate: *rate, p: *p },
            NegativeConfig::CompoundPoissonMixExp { rate, parts } => NegativeJumpPart::CompoundPoissonMixExp {
                rate: *rate,
                parts: parts.iter().map(|m| (m.weight, m.p)).collect(),
            },
            NegativeConfig::CompoundPoissonBurr { rate, theta, c_shape, xi } => {
                NegativeJumpPart::CompoundPoissonBurr { rate: *rate, theta: *theta, c_shape: *c_shape, xi: *xi }
            }
            NegativeConfig::StableSubordinator { xi } => NegativeJumpPart::StableSubordinator { xi: *xi },
            NegativeConfig::SpectrallyPositiveStable { xi } => NegativeJumpPart::SpectrallyPositiveStable { xi: *xi },
        }
    }
}

impl ModelConfig {
    pub fn negative_family(&self) -> &'static str {
        match self.negative {
            NegativeConfig::CompoundPoissonExp { .. } => "compound_poisson_exp",
            NegativeConfig::CompoundPoissonMixExp { .. } => "compound_poisson_mix_exp",
            NegativeConfig::CompoundPoissonBurr { .. } => "compound_poisson_burr",
            NegativeConfig::StableSubordinator { .. } => "stable_subordinator",
            NegativeConfig::SpectrallyPositiveStable { .. } => "spectrally_positive_stable",
        }
    }

    pub fn model(&self) -> LevyModel {
        let pos = RationalJumpPart::new(self.positive.lambda, self.positive.poles.clone(), self.positive.q_coeffs.clone());
        LevyModel::new(self.c, self.gamma, pos, (&self.negative).into())
    }

    /// The model, refusing configurations with error diagnostics.
    pub fn checked_model(&self, q: Option<f64>) -> Result<LevyModel> {
        let m = self.model();
        let errors: Vec<String> = validate_model(&m, q.or(self.q))
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.message)
            .collect();
        if errors.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidParameter(errors.join("; ")))
        }
    }
}
