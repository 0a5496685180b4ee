//! Belief-to-action models: the probability of choosing action 1 given the
//! expected mean μ̂₁ of a binary node, the resulting log-likelihood of
//! recorded actions, and simulation of new actions.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HgfError, Result};
use crate::network::Trajectory;

/// Probabilities are kept inside [ε, 1 − ε] before taking logs.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// A custom belief-to-action mapping.
pub trait ResponseFunction: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;
    /// p(y = 1) given the expected mean of the binary node.
    fn action_probability(&self, expected_mean: f64) -> f64;
}

#[derive(Debug, Clone)]
pub enum ResponseModel {
    /// p = μ̂₁.
    UnitSigmoid,
    /// p = μ̂₁ᵗ / (μ̂₁ᵗ + (1 − μ̂₁)ᵗ).
    TemperatureSigmoid { inverse_temperature: f64 },
    Custom(Arc<dyn ResponseFunction>),
}

impl ResponseModel {
    pub fn temperature(inverse_temperature: f64) -> Self {
        ResponseModel::TemperatureSigmoid { inverse_temperature }
    }

    pub fn family(&self) -> &str {
        match self {
            ResponseModel::UnitSigmoid => "unit-sigmoid",
            ResponseModel::TemperatureSigmoid { .. } => "temperature-sigmoid",
            ResponseModel::Custom(f) => f.name(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ResponseModel::TemperatureSigmoid { inverse_temperature: t } if !(*t > 0.0 && t.is_finite()) => {
                Err(HgfError::Validation(format!("inverse temperature must be positive, got {t}")))
            }
            _ => Ok(()),
        }
    }

    /// p(y = 1) for a single belief.
    pub fn probability(&self, expected_mean: f64) -> Result<f64> {
        if !(expected_mean > 0.0 && expected_mean < 1.0) {
            return Err(HgfError::Domain(format!(
                "expected mean {expected_mean} outside (0, 1)"
            )));
        }
        let p = match self {
            ResponseModel::UnitSigmoid => expected_mean,
            ResponseModel::TemperatureSigmoid { inverse_temperature: t } => {
                // log-space form of the power ratio, stable for large t
                let log_odds = t * (expected_mean.ln() - (-expected_mean).ln_1p());
                1.0 / (1.0 + (-log_odds).exp())
            }
            ResponseModel::Custom(f) => f.action_probability(expected_mean),
        };
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(HgfError::Domain(format!("response function returned {p}")))
        }
    }
}

/// Builds a response model from a family name and its parameters.
pub type ResponseConstructor = fn(&BTreeMap<String, f64>) -> Result<ResponseModel>;

/// Named response families, so new ones can be plugged in from configuration.
#[derive(Debug, Clone)]
pub struct ResponseRegistry {
    constructors: BTreeMap<String, ResponseConstructor>,
}

impl Default for ResponseRegistry {
    fn default() -> Self {
        let mut constructors: BTreeMap<String, ResponseConstructor> = BTreeMap::new();
        constructors.insert("unit-sigmoid".into(), |_| Ok(ResponseModel::UnitSigmoid));
        constructors.insert("temperature-sigmoid".into(), |params| {
            let t = params.get("inverse_temperature").copied().unwrap_or(1.0);
            let model = ResponseModel::temperature(t);
            model.validate()?;
            Ok(model)
        });
        Self { constructors }
    }
}

impl ResponseRegistry {
    pub fn register(&mut self, name: impl Into<String>, constructor: ResponseConstructor) {
        self.constructors.insert(name.into(), constructor);
    }

    pub fn build(&self, name: &str, params: &BTreeMap<String, f64>) -> Result<ResponseModel> {
        let constructor = self
            .constructors
            .get(name)
            .ok_or_else(|| HgfError::Validation(format!("unknown response family `{name}`")))?;
        constructor(params)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.constructors.keys().map(String::as_str)
    }
}

fn binary_node(traj: &Trajectory) -> Result<usize> {
    traj.first_binary_node()
        .ok_or_else(|| HgfError::Domain("trajectory has no binary node".into()))
}

/// p(y = 1) at every trial of the trajectory.
pub fn action_probability(traj: &Trajectory, model: &ResponseModel) -> Result<Vec<f64>> {
    model.validate()?;
    let node = binary_node(traj)?;
    traj.rows
        .iter()
        .map(|r| model.probability(r.nodes[node].expected_mean))
        .collect()
}

/// Per-trial log-likelihoods and how many probabilities had to be clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseLikelihood {
    pub values: Vec<f64>,
    pub clamped: usize,
}

impl PointwiseLikelihood {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// ln p(y) per trial, with p clamped to [ε, 1 − ε].
pub fn log_likelihood_from_probabilities(probabilities: &[f64], actions: &[u8]) -> Result<PointwiseLikelihood> {
    if probabilities.len() != actions.len() {
        return Err(HgfError::Alignment(format!(
            "{} trials but {} actions",
            probabilities.len(),
            actions.len()
        )));
    }
    let mut clamped = 0;
    let values = probabilities
        .iter()
        .zip(actions)
        .map(|(&p, &y)| {
            let q = p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
            if q != p {
                clamped += 1;
            }
            match y {
                1 => Ok(q.ln()),
                0 => Ok((-q).ln_1p()),
                other => Err(HgfError::Validation(format!("action must be 0 or 1, got {other}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointwiseLikelihood { values, clamped })
}

pub fn pointwise_log_likelihood(
    traj: &Trajectory,
    actions: &[u8],
    model: &ResponseModel,
) -> Result<PointwiseLikelihood> {
    if traj.len() != actions.len() {
        return Err(HgfError::Alignment(format!(
            "{} trajectory rows but {} actions",
            traj.len(),
            actions.len()
        )));
    }
    log_likelihood_from_probabilities(&action_probability(traj, model)?, actions)
}

/// Σ ln p(yₜ) over trials.
pub fn log_likelihood(traj: &Trajectory, actions: &[u8], model: &ResponseModel) -> Result<f64> {
    Ok(pointwise_log_likelihood(traj, actions, model)?.total())
}

/// Bernoulli draws from the model's action probabilities, reproducible per seed.
pub fn simulate_actions(traj: &Trajectory, model: &ResponseModel, seed: u64) -> Result<Vec<u8>> {
    let probabilities = action_probability(traj, model)?;
    Ok(sample_bernoulli(&probabilities, seed))
}

/// Independent Bernoulli draws with the given success probabilities.
pub fn sample_bernoulli(probabilities: &[f64], seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probabilities
        .iter()
        .map(|&p| {
            let p = p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
            u8::from(rng.random::<f64>() < p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NodeKind, NodeRecord, TrajectoryRow};

    fn trajectory(beliefs: &[f64]) -> Trajectory {
        Trajectory {
            rows: beliefs
                .iter()
                .enumerate()
                .map(|(i, &m)| TrajectoryRow {
                    step: i,
                    time: i as f64 + 1.0,
                    dt: 1.0,
                    nodes: vec![NodeRecord {
                        kind: NodeKind::Binary,
                        mean: m,
                        precision: 1.0,
                        expected_mean: m,
                        expected_precision: 1.0 / (m * (1.0 - m)),
                        surprise: None,
                        observation: None,
                    }],
                })
                .collect(),
        }
    }

    #[test]
    fn temperature_probability_oracle() {
        let p = ResponseModel::temperature(2.0).probability(0.7).unwrap();
        assert!((p - 0.49 / 0.58).abs() < 1e-12);
        let ll = log_likelihood(&trajectory(&[0.7]), &[1], &ResponseModel::temperature(2.0)).unwrap();
        assert!((ll - (-0.168_622_712_435_792_7)).abs() < 1e-12);
    }

    #[test]
    fn unit_temperature_is_identity() {
        for m in [0.01, 0.3, 0.5, 0.9] {
            assert_eq!(ResponseModel::UnitSigmoid.probability(m).unwrap(), m);
            let p = ResponseModel::temperature(1.0).probability(m).unwrap();
            assert!((p - m).abs() < 1e-15);
        }
    }

    #[test]
    fn half_belief_is_half_for_all_temperatures() {
        for t in [0.1, 1.0, 3.0, 1e3] {
            assert_eq!(ResponseModel::temperature(t).probability(0.5).unwrap(), 0.5);
        }
    }

    #[test]
    fn complementary_probabilities_sum_to_one() {
        for m in [0.001, 0.2, 0.5, 0.61, 0.999] {
            for t in [0.5, 1.0, 4.0] {
                let p = ResponseModel::temperature(t).probability(m).unwrap();
                assert_eq!(p + (1.0 - p), 1.0);
            }
        }
    }

    #[test]
    fn large_temperature_approaches_step() {
        let model = ResponseModel::temperature(1e3);
        assert!(model.probability(0.4).unwrap() < 1e-6);
        assert!(model.probability(0.6).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn log_likelihood_bounds() {
        let traj = trajectory(&[0.5; 12]);
        let ll = log_likelihood(&traj, &[1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0], &ResponseModel::UnitSigmoid).unwrap();
        assert!((ll + 12.0 * std::f64::consts::LN_2).abs() < 1e-12);

        let traj = trajectory(&[0.9, 0.1, 0.8, 0.3]);
        let sharp = ResponseModel::temperature(1e3);
        let ll = log_likelihood(&traj, &[1, 0, 1, 0], &sharp).unwrap();
        assert!(ll <= 0.0 && ll > -1e-9);
    }

    #[test]
    fn log_likelihood_is_permutation_invariant() {
        let beliefs = [0.2, 0.9, 0.55, 0.35];
        let actions = [0, 1, 1, 0];
        let model = ResponseModel::temperature(2.5);
        let a = log_likelihood(&trajectory(&beliefs), &actions, &model).unwrap();
        let b = log_likelihood(&trajectory(&[0.35, 0.55, 0.2, 0.9]), &[0, 1, 0, 1], &model).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let traj = trajectory(&[0.5, 0.5]);
        assert!(matches!(
            log_likelihood(&traj, &[1], &ResponseModel::UnitSigmoid),
            Err(HgfError::Alignment(_))
        ));
        assert!(matches!(ResponseModel::UnitSigmoid.probability(1.0), Err(HgfError::Domain(_))));
        assert!(action_probability(&traj, &ResponseModel::temperature(0.0)).is_err());
    }

    #[test]
    fn clamping_is_counted() {
        let ll = log_likelihood_from_probabilities(&[1.0, 0.5, 0.0], &[0, 1, 1]).unwrap();
        assert_eq!(ll.clamped, 2);
        assert!(ll.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn simulation_is_seeded() {
        let traj = trajectory(&[0.3, 0.6, 0.8, 0.5, 0.1]);
        let model = ResponseModel::temperature(2.0);
        assert_eq!(simulate_actions(&traj, &model, 9).unwrap(), simulate_actions(&traj, &model, 9).unwrap());
    }

    #[test]
    fn degenerate_and_empirical_frequencies() {
        let ones = sample_bernoulli(&[1.0; 1000], 3);
        assert!(ones.iter().all(|&y| y == 1));
        let draws = sample_bernoulli(&vec![0.7; 10_000], 11);
        let mean = draws.iter().map(|&y| f64::from(y)).sum::<f64>() / 1e4;
        assert!((mean - 0.7).abs() < 0.02, "{mean}");
    }

    #[test]
    fn registry_builds_and_extends() {
        #[derive(Debug)]
        struct Constant;
        impl ResponseFunction for Constant {
            fn name(&self) -> &str {
                "constant"
            }
            fn action_probability(&self, _: f64) -> f64 {
                0.25
            }
        }
        let mut registry = ResponseRegistry::default();
        registry.register("constant", |_| Ok(ResponseModel::Custom(Arc::new(Constant))));
        let params = BTreeMap::from([("inverse_temperature".to_string(), 3.0)]);
        assert_eq!(registry.build("temperature-sigmoid", &params).unwrap().family(), "temperature-sigmoid");
        let custom = registry.build("constant", &params).unwrap();
        assert_eq!(custom.probability(0.9).unwrap(), 0.25);
        assert!(registry.build("softmax-5", &params).is_err());
    }
}
