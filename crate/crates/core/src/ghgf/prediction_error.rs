use crate::error::{HgfError, Result};
use crate::ghgf::PredictionError;
use crate::network::{Network, NodeKind};

/// Prediction errors of a node that has received new information this step.
///
/// Binary node: δ = u − μ̂ (the posterior mean is the observation).
/// Continuous node: δ = μ − μ̂ and, with volatility parents,
///   Δ = π̂/π + π̂·δ² − 1.
pub fn prediction_error(net: &Network, node: usize) -> Result<PredictionError> {
    let attrs = &net.attributes[node];
    if !attrs.predicted {
        return Err(HgfError::Sequencing {
            node,
            reason: "prediction error requested before prediction".into(),
        });
    }
    let value_pe = attrs.mean - attrs.expected_mean;
    let volatility_pe = match net.kinds[node] {
        NodeKind::Binary => None,
        NodeKind::Continuous => (!net.edges.node(node).volatility_parents().is_empty()).then(|| {
            attrs.expected_precision / attrs.precision
                + attrs.expected_precision * value_pe * value_pe
                - 1.0
        }),
    };
    let pe = PredictionError {
        node,
        value_pe,
        volatility_pe,
        expected_precision_at_emit: attrs.expected_precision,
    };
    if !(pe.value_pe.is_finite() && pe.volatility_pe.is_none_or(f64::is_finite)) {
        return Err(HgfError::numerical(node, "prediction_error", format!("{pe:?}")));
    }
    Ok(pe)
}

/// Registry wrapper: emits and stores the node's prediction errors, or does
/// nothing when the node got no new information this step.
pub fn prediction_error_step(mut net: Network, node: usize) -> Result<Network> {
    let attrs = &net.attributes[node];
    let informed = match net.kinds[node] {
        NodeKind::Binary => attrs.observation.is_some(),
        NodeKind::Continuous => attrs.updated,
    };
    if informed {
        let pe = prediction_error(&net, node)?;
        net.attributes[node].prediction_error = Some(pe);
    }
    Ok(net)
}
