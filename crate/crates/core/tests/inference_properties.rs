use proptest::prelude::*;

use hgf::ghgf::PresetSpec;
use hgf::inference::{hdi, sample, waic, Model, ParameterSpace, SamplerConfig, Subject};
use hgf::io::{InputSeries, SwitchingTask};
use hgf::response::{sample_bernoulli, ResponseModel};

/// Narrowest closed interval [s_i, s_j] over the sorted draws that holds at
/// least ⌊mass·n⌋ + 1 of them, checking every (i, j) pair.
fn brute_force_hdi(draws: &[f64], mass: f64) -> (f64, f64) {
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let need = ((mass * n as f64).floor() as usize + 1).min(n);
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in i..n {
            if j - i + 1 < need {
                continue;
            }
            let width = s[j] - s[i];
            if best.is_none_or(|(w, _, _)| width < w) {
                best = Some((width, i, j));
            }
        }
    }
    let (_, i, j) = best.unwrap();
    (s[i], s[j])
}

proptest! {
    #[test]
    fn hdi_matches_brute_force(draws in prop::collection::vec(-50.0f64..50.0, 2..120), mass in 0.05f64..0.99) {
        prop_assert_eq!(hdi(&draws, mass).unwrap(), brute_force_hdi(&draws, mass));
    }

    #[test]
    fn waic_decomposition_is_recomputable(
        rows in prop::collection::vec(prop::collection::vec(-8.0f64..-0.01, 12), 2..60),
    ) {
        let w = waic(&rows).unwrap();
        let lppd: f64 = w.lppd_pointwise.iter().sum();
        let var: f64 = w.variance_pointwise.iter().sum();
        prop_assert!((w.elpd - (lppd - var)).abs() <= 1e-10);
        prop_assert!((w.p_waic - var).abs() <= 1e-10);
        prop_assert!(w.variance_pointwise.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn response_probabilities_are_complementary(mu in 1e-6f64..(1.0 - 1e-6), t in 0.01f64..100.0) {
        for model in [ResponseModel::UnitSigmoid, ResponseModel::temperature(t)] {
            let p = model.probability(mu).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert_eq!(p + (1.0 - p), 1.0);
        }
    }

    #[test]
    fn temperature_ordering_follows_belief(mu in 0.5001f64..0.9999, t in 0.1f64..20.0) {
        let model = ResponseModel::temperature(t);
        let (hi, lo) = (model.probability(mu).unwrap(), model.probability(1.0 - mu).unwrap());
        prop_assert!(hi > 0.5 && lo < 0.5);
        prop_assert!((hi + lo - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sampled_temperatures_stay_positive() {
    let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::temperature(1.0)).unwrap();
    let space = ParameterSpace::tonic_volatility_and_temperature(1);
    let u = SwitchingTask::with_trials(120).generate(2).unwrap();
    let inputs = InputSeries::single(0, &u);
    // a flat, near-random responder pushes t towards 0
    let p = model.action_probabilities(&space, &[-3.0, 0.1], &inputs).unwrap();
    let subject = Subject::new(inputs, sample_bernoulli(&p, 9)).unwrap();
    let config = SamplerConfig {
        chains: 2,
        draws: 300,
        warmup: 300,
        seed: 4,
        ..SamplerConfig::default()
    };
    let samples = sample(&space, &subject, &model, &config).unwrap();
    let t = samples.index_of("inverse_temperature").unwrap();
    let draws: Vec<f64> = samples.pooled(t);
    assert_eq!(draws.len(), 600);
    assert!(draws.iter().all(|&x| x > 0.0 && x.is_finite()));
}
