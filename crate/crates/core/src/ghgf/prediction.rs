use crate::error::{HgfError, Result};
use crate::ghgf::{AUTOREGRESSION, DRIFT, MAX_LOG_VOLATILITY};
use crate::network::Network;

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn parents_predicted(net: &Network, node: usize, parents: &[usize]) -> Result<()> {
    match parents.iter().find(|&&p| !net.attributes[p].predicted) {
        Some(p) => Err(HgfError::Sequencing {
            node,
            reason: format!("parent {p} has not been predicted this step"),
        }),
        None => Ok(()),
    }
}

/// Prediction of a continuous state node.
///
///   μ̂ = μ + Δt · (ρ − λμ + Σ κᵢ μ̂ᵢ)          over value parents i
///   Ω = Δt · exp(ω + Σ κⱼ μ̂ⱼ)                over volatility parents j
///   π̂ = 1 / (1/π + Ω)
///
/// ρ (drift) and λ (autoregression) come from the extension map.
pub fn continuous_prediction(net: &mut Network, node: usize) -> Result<()> {
    let dt = net.time_step;
    let edges = net.edges.node(node);
    parents_predicted(net, node, edges.value_parents())?;
    parents_predicted(net, node, edges.volatility_parents())?;

    let attrs = &net.attributes[node];
    let mut drift = attrs.extra_or(DRIFT, 0.0) - attrs.extra_or(AUTOREGRESSION, 0.0) * attrs.mean;
    for (&p, &k) in edges.value_parents().iter().zip(&attrs.value_coupling) {
        drift += k * net.attributes[p].expected_mean;
    }
    let mut log_volatility = attrs.tonic_volatility;
    for (&p, &k) in edges.volatility_parents().iter().zip(&attrs.volatility_coupling) {
        log_volatility += k * net.attributes[p].expected_mean;
    }
    if !(log_volatility.abs() <= MAX_LOG_VOLATILITY) {
        return Err(HgfError::numerical(
            node,
            super::CONTINUOUS_PREDICTION,
            format!("log-volatility {log_volatility} outside ±{MAX_LOG_VOLATILITY}"),
        ));
    }
    let predicted_volatility = dt * log_volatility.exp();
    let expected_precision = 1.0 / (1.0 / attrs.precision + predicted_volatility);
    let expected_mean = attrs.mean + dt * drift;
    if !(expected_precision > 0.0 && expected_precision.is_finite() && expected_mean.is_finite()) {
        return Err(HgfError::numerical(
            node,
            super::CONTINUOUS_PREDICTION,
            format!("expected precision {expected_precision}, expected mean {expected_mean}"),
        ));
    }

    let attrs = &mut net.attributes[node];
    attrs.expected_mean = expected_mean;
    attrs.expected_precision = expected_precision;
    attrs.predicted_volatility = predicted_volatility;
    attrs.predicted = true;
    Ok(())
}

/// Prediction of a binary state node from its continuous value parents:
/// μ̂ = s(Σ κ μ̂ᵢ) with s the logistic sigmoid, π̂ = 1 / (μ̂(1 − μ̂)).
pub fn binary_prediction(net: &mut Network, node: usize) -> Result<()> {
    let edges = net.edges.node(node);
    parents_predicted(net, node, edges.value_parents())?;
    let attrs = &net.attributes[node];
    let logit: f64 = edges
        .value_parents()
        .iter()
        .zip(&attrs.value_coupling)
        .map(|(&p, &k)| k * net.attributes[p].expected_mean)
        .sum();
    let expected_mean = logistic(logit);
    let expected_precision = 1.0 / (expected_mean * (1.0 - expected_mean));
    if !(expected_mean > 0.0 && expected_mean < 1.0 && expected_precision.is_finite()) {
        return Err(HgfError::numerical(
            node,
            super::BINARY_PREDICTION,
            format!("expected mean {expected_mean} saturated (logit {logit})"),
        ));
    }
    let attrs = &mut net.attributes[node];
    attrs.expected_mean = expected_mean;
    attrs.expected_precision = expected_precision;
    attrs.predicted = true;
    Ok(())
}

pub(crate) fn continuous_prediction_step(mut net: Network, node: usize) -> Result<Network> {
    continuous_prediction(&mut net, node)?;
    Ok(net)
}

pub(crate) fn binary_prediction_step(mut net: Network, node: usize) -> Result<Network> {
    binary_prediction(&mut net, node)?;
    Ok(net)
}
