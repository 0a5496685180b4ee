//! Generalized Hierarchical Gaussian Filter node computations.
//!
//! Three kinds of step act on a node: a prediction from its previous posterior
//! and its parents' predictions, the emission of prediction errors once new
//! information has arrived, and a posterior update that pools the precision-
//! weighted errors of the node's children (and its own observation, if any).

mod posterior;
mod prediction;
mod prediction_error;
mod preset;
mod surprise;

pub use posterior::{continuous_posterior_update, posterior_update_step};
pub use prediction::{binary_prediction, continuous_prediction, logistic};
pub use prediction_error::{prediction_error, prediction_error_step};
pub use preset::{preset, Family, LevelSpec, PresetSpec};
pub use surprise::{binary_surprise, gaussian_surprise};

use crate::error::{HgfError, Result};
use crate::network::{FunctionRegistry, Network, NodeKind, Phase};

pub const CONTINUOUS_PREDICTION: &str = "continuous_prediction";
pub const BINARY_PREDICTION: &str = "binary_prediction";
pub const CONTINUOUS_PREDICTION_ERROR: &str = "continuous_prediction_error";
pub const BINARY_PREDICTION_ERROR: &str = "binary_prediction_error";
pub const CONTINUOUS_POSTERIOR_UPDATE: &str = "continuous_posterior_update";

/// Extension keys read by the continuous prediction. Both default to 0.
pub const DRIFT: &str = "drift";
pub const AUTOREGRESSION: &str = "autoregression";

/// Largest magnitude allowed for the log-volatility argument ω + Σκμ̂.
pub const MAX_LOG_VOLATILITY: f64 = 50.0;

/// Prediction errors emitted by a node during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionError {
    pub node: usize,
    /// δ: posterior (or observed) mean minus expected mean.
    pub value_pe: f64,
    /// Δ: only present for nodes with volatility parents.
    pub volatility_pe: Option<f64>,
    pub expected_precision_at_emit: f64,
}

pub(crate) fn register_functions(registry: &mut FunctionRegistry) {
    registry.register(CONTINUOUS_PREDICTION, Phase::Prediction, prediction::continuous_prediction_step);
    registry.register(BINARY_PREDICTION, Phase::Prediction, prediction::binary_prediction_step);
    registry.register(CONTINUOUS_PREDICTION_ERROR, Phase::Update, prediction_error_step);
    registry.register(BINARY_PREDICTION_ERROR, Phase::Update, prediction_error_step);
    registry.register(CONTINUOUS_POSTERIOR_UPDATE, Phase::Update, posterior_update_step);
}

pub(crate) fn prediction_function(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Continuous => CONTINUOUS_PREDICTION,
        NodeKind::Binary => BINARY_PREDICTION,
    }
}

pub(crate) fn prediction_error_function(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Continuous => CONTINUOUS_PREDICTION_ERROR,
        NodeKind::Binary => BINARY_PREDICTION_ERROR,
    }
}

/// Binary nodes take their posterior directly from the observation.
pub(crate) fn posterior_update_function(kind: NodeKind) -> Option<&'static str> {
    match kind {
        NodeKind::Continuous => Some(CONTINUOUS_POSTERIOR_UPDATE),
        NodeKind::Binary => None,
    }
}

/// Writes an observation into a node after its prediction and records the
/// surprise of that observation under the node's predictive distribution.
pub fn observe(net: &mut Network, node: usize, u: f64) -> Result<()> {
    let kind = net.kinds[node];
    let attrs = &mut net.attributes[node];
    match kind {
        NodeKind::Binary => {
            if u != 0.0 && u != 1.0 {
                return Err(HgfError::InvalidObservation(format!(
                    "binary node {node} received {u}; expected 0 or 1"
                )));
            }
            attrs.surprise = Some(
                binary_surprise(attrs.expected_mean, u)
                    .map_err(|e| HgfError::numerical(node, "observe", e.to_string()))?,
            );
            attrs.mean = u;
            attrs.precision = attrs.expected_precision;
        }
        NodeKind::Continuous => {
            let predictive_precision =
                1.0 / (1.0 / attrs.expected_precision + 1.0 / attrs.observation_precision);
            attrs.surprise = Some(
                gaussian_surprise(attrs.expected_mean, predictive_precision, u)
                    .map_err(|e| HgfError::numerical(node, "observe", e.to_string()))?,
            );
        }
    }
    attrs.observation = Some(u);
    Ok(())
}

#[cfg(test)]
mod tests;
