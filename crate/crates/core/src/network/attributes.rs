use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{HgfError, Result};
use crate::ghgf::PredictionError;

/// The state a node tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Continuous,
    Binary,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Continuous => "continuous",
            NodeKind::Binary => "binary",
        }
    }
}

impl std::str::FromStr for NodeKind {
    type Err = HgfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(NodeKind::Continuous),
            "binary" => Ok(NodeKind::Binary),
            other => Err(HgfError::Validation(format!("unknown node kind `{other}`"))),
        }
    }
}

/// Per-node parameters, sufficient statistics and per-step message buffers.
///
/// The first block of fields is persistent state. `observation`, `surprise`,
/// `prediction_error`, `predicted_volatility` and the two phase flags are
/// transient: they are reset at the start of every propagation step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAttributes {
    pub mean: f64,
    pub precision: f64,
    pub expected_mean: f64,
    pub expected_precision: f64,
    pub tonic_volatility: f64,
    /// One strength per value parent, aligned with `value_parents` in the adjacency list.
    pub value_coupling: Vec<f64>,
    /// One strength per volatility parent, aligned with `volatility_parents`.
    pub volatility_coupling: Vec<f64>,
    /// Precision of observations received directly by a continuous node.
    pub observation_precision: f64,
    pub observation: Option<f64>,
    pub extra: BTreeMap<String, f64>,

    pub surprise: Option<f64>,
    pub prediction_error: Option<PredictionError>,
    pub predicted_volatility: f64,
    pub predicted: bool,
    pub updated: bool,
}

impl Default for NodeAttributes {
    fn default() -> Self {
        Self {
            mean: 0.0,
            precision: 1.0,
            expected_mean: 0.0,
            expected_precision: 1.0,
            tonic_volatility: -4.0,
            value_coupling: Vec::new(),
            volatility_coupling: Vec::new(),
            observation_precision: 1.0,
            observation: None,
            extra: BTreeMap::new(),
            surprise: None,
            prediction_error: None,
            predicted_volatility: 0.0,
            predicted: false,
            updated: false,
        }
    }
}

impl NodeAttributes {
    pub fn continuous() -> Self {
        Self::default()
    }

    /// A binary node starts at the uninformative Bernoulli expectation 0.5.
    pub fn binary() -> Self {
        Self {
            mean: 0.5,
            precision: 4.0,
            expected_mean: 0.5,
            expected_precision: 4.0,
            ..Self::default()
        }
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self.expected_mean = mean;
        self
    }

    pub fn with_precision(mut self, precision: f64) -> Self {
        self.precision = precision;
        self.expected_precision = precision;
        self
    }

    pub fn with_tonic_volatility(mut self, omega: f64) -> Self {
        self.tonic_volatility = omega;
        self
    }

    pub fn with_observation_precision(mut self, precision: f64) -> Self {
        self.observation_precision = precision;
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    /// Value from the open extension map, or `default` when unset.
    pub fn extra_or(&self, key: &str, default: f64) -> f64 {
        self.extra.get(key).copied().unwrap_or(default)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(HgfError::InvalidAttribute(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("precision", self.precision)?;
        positive("expected_precision", self.expected_precision)?;
        positive("observation_precision", self.observation_precision)?;
        for (name, v) in [
            ("mean", self.mean),
            ("expected_mean", self.expected_mean),
            ("tonic_volatility", self.tonic_volatility),
        ] {
            if !v.is_finite() {
                return Err(HgfError::InvalidAttribute(format!("{name} must be finite, got {v}")));
            }
        }
        for &k in self.value_coupling.iter().chain(&self.volatility_coupling) {
            validate_strength(k)?;
        }
        Ok(())
    }

    pub(crate) fn clear_transient(&mut self) {
        self.observation = None;
        self.surprise = None;
        self.prediction_error = None;
        self.predicted = false;
        self.updated = false;
    }
}

/// Coupling strengths must be finite and non-negative; zero switches a link off.
pub(crate) fn validate_strength(strength: f64) -> Result<()> {
    if strength.is_finite() && strength >= 0.0 {
        Ok(())
    } else {
        Err(HgfError::InvalidAttribute(format!(
            "coupling strength must be finite and non-negative, got {strength}"
        )))
    }
}
