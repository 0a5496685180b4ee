use super::*;
use crate::io::InputSeries;
use crate::network::{Network, NodeAttributes, NodeKind};

fn single_continuous(omega: f64) -> Network {
    let mut net = Network::new();
    net.add_node(
        NodeKind::Continuous,
        NodeAttributes::continuous()
            .with_mean(0.0)
            .with_precision(1.0)
            .with_tonic_volatility(omega),
    )
    .unwrap();
    net.refresh_sequence().unwrap();
    net
}

fn switching(n: usize) -> Vec<f64> {
    // deterministic pseudo-random binary stream with block structure
    let mut state = 12345u64;
    (0..n)
        .map(|i| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = (state >> 33) as f64 / (1u64 << 31) as f64;
            let p = if (i / 40) % 2 == 0 { 0.8 } else { 0.2 };
            f64::from(u8::from(r < p))
        })
        .collect()
}

#[test]
fn continuous_prediction_without_parents() {
    let mut net = single_continuous(-2.0);
    continuous_prediction(&mut net, 0).unwrap();
    let a = &net.attributes[0];
    assert_eq!(a.expected_mean, 0.0);
    assert!((a.expected_precision - 0.880_797_077_977_882_3).abs() < 1e-12);
}

#[test]
fn very_low_volatility_leaves_precision_unchanged() {
    let mut net = single_continuous(-45.0);
    continuous_prediction(&mut net, 0).unwrap();
    assert!((net.attributes[0].expected_precision - 1.0).abs() < 1e-15);
}

#[test]
fn log_volatility_beyond_guard_fails() {
    let mut net = single_continuous(-51.0);
    assert!(matches!(
        continuous_prediction(&mut net, 0),
        Err(HgfError::NumericalFailure { node: 0, .. })
    ));
}

#[test]
fn binary_prediction_from_neutral_parent() {
    let mut net = preset(&PresetSpec::binary(2)).unwrap();
    continuous_prediction(&mut net, 1).unwrap();
    binary_prediction(&mut net, 0).unwrap();
    assert_eq!(net.attributes[0].expected_mean, 0.5);
    assert_eq!(net.attributes[0].expected_precision, 4.0);
}

#[test]
fn prediction_requires_predicted_parents() {
    let mut net = preset(&PresetSpec::binary(2)).unwrap();
    assert!(matches!(binary_prediction(&mut net, 0), Err(HgfError::Sequencing { node: 0, .. })));
}

#[test]
fn binary_prediction_errors() {
    for (u, expected) in [(1.0, 0.5), (0.0, -0.5)] {
        let mut net = preset(&PresetSpec::binary(2)).unwrap();
        continuous_prediction(&mut net, 1).unwrap();
        binary_prediction(&mut net, 0).unwrap();
        observe(&mut net, 0, u).unwrap();
        let pe = prediction_error(&net, 0).unwrap();
        assert_eq!(pe.value_pe, expected);
        assert_eq!(pe.volatility_pe, None);
    }
}

#[test]
fn prediction_error_before_prediction_is_a_sequencing_error() {
    let net = preset(&PresetSpec::binary(2)).unwrap();
    assert!(matches!(prediction_error(&net, 1), Err(HgfError::Sequencing { .. })));
}

#[test]
fn continuous_observation_equal_to_expectation_gives_zero_error() {
    let mut net = single_continuous(-2.0);
    continuous_prediction(&mut net, 0).unwrap();
    observe(&mut net, 0, 0.0).unwrap();
    continuous_posterior_update(&mut net, 0).unwrap();
    let pe = prediction_error(&net, 0).unwrap();
    assert_eq!(pe.value_pe, 0.0);
    assert_eq!(net.attributes[0].mean, net.attributes[0].expected_mean);
}

#[test]
fn binary_level_two_posterior_oracle() {
    let mut spec = PresetSpec::binary(2);
    spec.continuous_levels[0].tonic_volatility = -2.0;
    let mut net = preset(&spec).unwrap();
    continuous_prediction(&mut net, 1).unwrap();
    binary_prediction(&mut net, 0).unwrap();
    observe(&mut net, 0, 1.0).unwrap();
    net.attributes[0].prediction_error = Some(prediction_error(&net, 0).unwrap());
    assert!(continuous_posterior_update(&mut net, 1).unwrap());
    let x2 = &net.attributes[1];
    assert!((x2.precision - 1.130_797_077_977_882_2).abs() < 1e-12);
    assert!((x2.mean - 0.442_165_981_622_548_66).abs() < 1e-12);
}

#[test]
fn posterior_update_moves_with_error_sign() {
    for u in [0.0, 1.0] {
        let net = preset(&PresetSpec::binary(2)).unwrap().propagate(&[(0, u)], 1.0).unwrap();
        let x2 = &net.attributes[1];
        let delta = net.attributes[0].prediction_error.unwrap().value_pe;
        assert_eq!((x2.mean - x2.expected_mean).signum(), delta.signum());
    }
}

#[test]
fn posterior_update_without_information_is_noop() {
    let mut net = preset(&PresetSpec::binary(2)).unwrap();
    continuous_prediction(&mut net, 1).unwrap();
    let before = net.attributes[1].clone();
    assert!(!continuous_posterior_update(&mut net, 1).unwrap());
    assert_eq!(net.attributes[1], before);
}

#[test]
fn one_step_continuous_oracle() {
    let net = single_continuous(-2.0);
    let net = net.propagate(&[(0, 1.0)], 1.0).unwrap();
    let a = &net.attributes[0];
    assert!((a.expected_precision - 0.880_797_077_977_882_3).abs() < 1e-12);
    assert!((a.precision - 1.880_797_077_977_882_2).abs() < 1e-12);
    assert!((a.mean - 0.531_689_469_166_518_8).abs() < 1e-12);
    assert!((a.surprise.unwrap() - 1.532_405_636_461_170_2).abs() < 1e-12);
}

#[test]
fn binary_surprise_values() {
    assert!((binary_surprise(0.5, 1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    assert!((binary_surprise(0.9, 1.0).unwrap() - 0.105_360_515_657_826_28).abs() < 1e-15);
    for mu in [0.01, 0.3, 0.5, 0.77, 0.999] {
        let total = (-binary_surprise(mu, 1.0).unwrap()).exp() + (-binary_surprise(mu, 0.0).unwrap()).exp();
        assert!((total - 1.0).abs() < 1e-12);
    }
    assert!(binary_surprise(1.0, 0.0).is_err());
    assert!(binary_surprise(0.0, 1.0).is_err());
    assert_eq!(binary_surprise(1.0, 1.0).unwrap(), 0.0);
}

#[test]
fn gaussian_surprise_values() {
    let s = gaussian_surprise(0.0, 1.0 / 2.135_335_283_236_613, 1.0).unwrap();
    assert!((s - 1.532_405_636_461_170_2).abs() < 1e-12);
    let peak = gaussian_surprise(0.3, 2.0 * std::f64::consts::PI, 0.3).unwrap();
    assert!(peak.abs() < 1e-15);
    let mut last = f64::NEG_INFINITY;
    for d in [0.0, 0.1, 0.5, 1.0, 3.0] {
        let s = gaussian_surprise(1.0, 2.0, 1.0 + d).unwrap();
        assert!(s > last);
        last = s;
    }
    assert!(gaussian_surprise(0.0, 0.0, 1.0).is_err());
    assert!(gaussian_surprise(f64::NAN, 1.0, 1.0).is_err());
}

#[test]
#[allow(clippy::approx_constant)]
fn three_level_binary_matches_scalar_oracle() {
    // (μ₂, π₂, μ₃, π₃, surprise) after each observation, from an independent
    // scalar implementation of the classic closed-form updates
    let oracle = [
        (0.4058396131950887, 1.2320137900379085, -0.0003710290680034968, 0.998046112101302, 0.6931471805599453),
        (0.6826287681919392, 1.4448186098574225, -0.0011877097676502612, 0.9966044328215712, 0.510675838561288),
        (0.27521996401858034, 1.630610707609017, 6.809320701663233e-05, 0.9932969595943066, 1.0916123210850366),
        (0.5112558938818895, 1.828645551068124, -0.0006035835845594272, 0.9919054726256316, 0.5649757195534674),
        (0.19929325710266538, 2.0037682896485247, 0.0003008954089360178, 0.9891604543256156, 0.981098193528585),
        (-0.052803898605305655, 2.180346140896195, 0.0004678035380365286, 0.9872149571863473, 0.7977503399262006),
        (0.165912593566658, 2.346406999795364, 0.00034740827964526236, 0.9856526074848861, 0.7198976208422195),
        (0.3495077623857489, 2.49797824610809, -0.0001458679334426584, 0.9845454547357455, 0.6136278180549244),
    ];
    let u = [1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0];
    let (_, traj) = preset(&PresetSpec::binary(3)).unwrap().run(&InputSeries::single(0, &u)).unwrap();
    for (row, o) in traj.rows.iter().zip(oracle) {
        let got = (
            row.nodes[1].mean,
            row.nodes[1].precision,
            row.nodes[2].mean,
            row.nodes[2].precision,
            row.nodes[0].surprise.unwrap(),
        );
        for (g, e) in [(got.0, o.0), (got.1, o.1), (got.2, o.2), (got.3, o.3), (got.4, o.4)] {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }
}

#[test]
fn preset_structures() {
    let net = preset(&PresetSpec::binary(3)).unwrap();
    assert_eq!(net.len(), 3);
    let value_edges: usize = net.edges.iter().map(|e| e.value_parents().len()).sum();
    let volatility_edges: usize = net.edges.iter().map(|e| e.volatility_parents().len()).sum();
    assert_eq!((value_edges, volatility_edges), (1, 1));
    assert_eq!(net.kinds, vec![NodeKind::Binary, NodeKind::Continuous, NodeKind::Continuous]);

    let net = preset(&PresetSpec::continuous(2)).unwrap();
    assert_eq!(net.kinds, vec![NodeKind::Continuous; 2]);
    assert_eq!(net.edges.node(0).volatility_parents(), &[1]);
    assert!(net.edges.node(0).value_parents().is_empty());
}

#[test]
fn preset_validation() {
    let mut spec = PresetSpec::binary(3);
    spec.levels = 4;
    assert!(preset(&spec).is_err());
    let mut spec = PresetSpec::binary(3);
    spec.couplings[1] = -1.0;
    assert!(preset(&spec).is_err());
    let mut spec = PresetSpec::continuous(2);
    spec.continuous_levels[1].precision = 0.0;
    assert!(preset(&spec).is_err());
    assert!(PresetSpec::from_name("binary-5").is_err());
}

#[test]
fn zero_volatility_coupling_reduces_to_two_levels() {
    let u = switching(320);
    let mut three = PresetSpec::binary(3);
    three.couplings[1] = 0.0;
    let (_, t3) = preset(&three).unwrap().run(&InputSeries::single(0, &u)).unwrap();
    let (_, t2) = preset(&PresetSpec::binary(2)).unwrap().run(&InputSeries::single(0, &u)).unwrap();
    for (r3, r2) in t3.rows.iter().zip(&t2.rows) {
        for node in 0..2 {
            let (a, b) = (&r3.nodes[node], &r2.nodes[node]);
            assert!((a.mean - b.mean).abs() <= 1e-12);
            assert!((a.precision - b.precision).abs() <= 1e-12);
            assert!((a.expected_mean - b.expected_mean).abs() <= 1e-12);
            assert!((a.expected_precision - b.expected_precision).abs() <= 1e-12);
        }
    }
    // the decoupled top level keeps its mean
    assert!(t3.rows.iter().all(|r| r.nodes[2].mean == 0.0));
}

#[test]
fn tonic_volatility_acts_as_learning_rate() {
    let step = |omega: f64| {
        let mut spec = PresetSpec::binary(2);
        spec.continuous_levels[0].tonic_volatility = omega;
        let net = preset(&spec).unwrap().propagate(&[(0, 1.0)], 1.0).unwrap();
        let x2 = &net.attributes[1];
        (x2.expected_precision, (x2.mean - x2.expected_mean).abs())
    };
    let mut previous = step(-6.0);
    for omega in [-4.0, -2.0, 0.0, 1.5] {
        let current = step(omega);
        assert!(current.0 < previous.0);
        assert!(current.1 > previous.1);
        previous = current;
    }
}

#[test]
fn feeding_the_expectation_leaves_means_unchanged() {
    let mut net = preset(&PresetSpec::continuous(2)).unwrap();
    net.attributes[0].mean = 0.7;
    net.attributes[1].mean = -0.3;
    // Predictions do not move the means of parentless-drift nodes, so the
    // expectation equals the current mean.
    let net = net.propagate(&[(0, 0.7)], 1.0).unwrap();
    assert_eq!(net.attributes[0].mean, 0.7);
    assert_eq!(net.attributes[0].prediction_error.unwrap().value_pe, 0.0);
    // x₂ still receives a (negative) volatility error because precision grew
    assert!(net.attributes[1].mean.is_finite());
}

#[test]
fn drift_extension_moves_expectation() {
    let mut net = single_continuous(-2.0);
    net.attributes[0].extra.insert(DRIFT.into(), 0.25);
    let net = net.propagate(&[], 2.0).unwrap();
    assert_eq!(net.attributes[0].expected_mean, 0.5);
}

#[test]
fn continuous_value_coupling_updates_parent() {
    let mut net = Network::new();
    net.add_node(NodeKind::Continuous, NodeAttributes::continuous().with_tonic_volatility(-2.0))
        .unwrap();
    net.add_node(NodeKind::Continuous, NodeAttributes::continuous().with_tonic_volatility(-2.0))
        .unwrap();
    net.add_edge(0, 1, crate::Coupling::Value, 1.0).unwrap();
    net.refresh_sequence().unwrap();
    let net = net.propagate(&[(0, 1.0)], 1.0).unwrap();
    let (child, parent) = (&net.attributes[0], &net.attributes[1]);
    // hand computation: π̂ = 0.880797 for both; child absorbs u, parent the child's error
    let pih = 0.880_797_077_977_882_3;
    let child_pi = pih + 1.0;
    let child_mu = 1.0 / child_pi;
    assert!((child.precision - child_pi).abs() < 1e-12);
    assert!((child.mean - child_mu).abs() < 1e-12);
    let parent_pi = pih + pih;
    assert!((parent.precision - parent_pi).abs() < 1e-12);
    assert!((parent.mean - pih * child_mu / parent_pi).abs() < 1e-12);
}
