use crate::error::{HgfError, Result};
use crate::network::{Network, NodeKind};

/// Posterior update of a continuous state node.
///
/// Precision gains and precision-weighted errors are pooled over the node's
/// own observation u (precision πᵤ) and every child that emitted errors:
///
///   observation:        π += πᵤ                 m += πᵤ (u − μ̂)
///   binary child c:     π += κ² / π̂_c           m += κ δ_c
///   continuous child c: π += κ² π̂_c             m += κ π̂_c δ_c
///   volatility child c: with γ = Ω_c π̂_c,
///                       π += ½(κγ)² + (κγ)² Δ_c − ½ κ² γ Δ_c
///                       m += ½ κ γ Δ_c
///
/// then π′ = π̂ + Σ gains and μ′ = μ̂ + m / π′. Returns `Ok(false)` and leaves
/// the node untouched when nothing new arrived.
pub fn continuous_posterior_update(net: &mut Network, node: usize) -> Result<bool> {
    let attrs = &net.attributes[node];
    if !attrs.predicted {
        return Err(HgfError::Sequencing {
            node,
            reason: "posterior update requested before prediction".into(),
        });
    }
    let edges = net.edges.node(node);
    let mut informed = false;
    let mut precision_gain = 0.0;
    let mut weighted_error = 0.0;

    if let Some(u) = attrs.observation {
        informed = true;
        precision_gain += attrs.observation_precision;
        weighted_error += attrs.observation_precision * (u - attrs.expected_mean);
    }

    for &child in edges.value_children() {
        let c = &net.attributes[child];
        let Some(pe) = c.prediction_error else { continue };
        let kappa = coupling_to(net, child, node, true);
        informed = true;
        match net.kinds[child] {
            NodeKind::Binary => {
                precision_gain += kappa * kappa / pe.expected_precision_at_emit;
                weighted_error += kappa * pe.value_pe;
            }
            NodeKind::Continuous => {
                precision_gain += kappa * kappa * pe.expected_precision_at_emit;
                weighted_error += kappa * pe.expected_precision_at_emit * pe.value_pe;
            }
        }
    }

    for &child in edges.volatility_children() {
        let c = &net.attributes[child];
        let Some(volatility_pe) = c.prediction_error.and_then(|pe| pe.volatility_pe) else {
            continue;
        };
        let kappa = coupling_to(net, child, node, false);
        informed = true;
        let gamma = c.predicted_volatility * c.expected_precision;
        let kg = kappa * gamma;
        precision_gain += 0.5 * kg * kg + kg * kg * volatility_pe - 0.5 * kappa * kappa * gamma * volatility_pe;
        weighted_error += 0.5 * kg * volatility_pe;
    }

    if !informed {
        return Ok(false);
    }
    let precision = attrs.expected_precision + precision_gain;
    if !(precision > 0.0 && precision.is_finite()) {
        return Err(HgfError::numerical(
            node,
            super::CONTINUOUS_POSTERIOR_UPDATE,
            format!("ill-posed update: posterior precision {precision}"),
        ));
    }
    let mean = attrs.expected_mean + weighted_error / precision;
    if !mean.is_finite() {
        return Err(HgfError::numerical(
            node,
            super::CONTINUOUS_POSTERIOR_UPDATE,
            format!("non-finite posterior mean {mean}"),
        ));
    }
    let attrs = &mut net.attributes[node];
    attrs.precision = precision;
    attrs.mean = mean;
    attrs.updated = true;
    Ok(true)
}

/// Strength of the `child -> parent` link as stored on the child.
fn coupling_to(net: &Network, child: usize, parent: usize, value: bool) -> f64 {
    let edges = net.edges.node(child);
    let (parents, strengths) = if value {
        (edges.value_parents(), &net.attributes[child].value_coupling)
    } else {
        (edges.volatility_parents(), &net.attributes[child].volatility_coupling)
    };
    parents
        .iter()
        .position(|&p| p == parent)
        .map_or(1.0, |i| strengths[i])
}

pub fn posterior_update_step(mut net: Network, node: usize) -> Result<Network> {
    continuous_posterior_update(&mut net, node)?;
    Ok(net)
}
