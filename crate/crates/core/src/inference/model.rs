use crate::error::{HgfError, Result};
use crate::ghgf::{preset, PresetSpec};
use crate::inference::space::ParameterSpace;
use crate::io::InputSeries;
use crate::network::{Network, NodeKind, Trajectory};
use crate::response::{log_likelihood_from_probabilities, PointwiseLikelihood, ResponseModel};

/// One subject's observations and binary responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub inputs: InputSeries,
    pub actions: Vec<u8>,
}

impl Subject {
    pub fn new(inputs: InputSeries, actions: Vec<u8>) -> Result<Self> {
        if inputs.len() != actions.len() {
            return Err(HgfError::Alignment(format!(
                "{} input rows but {} actions",
                inputs.len(),
                actions.len()
            )));
        }
        Ok(Self { inputs, actions })
    }

    /// Uses the action column of `inputs`.
    pub fn from_series(inputs: InputSeries) -> Result<Self> {
        let actions = inputs
            .actions
            .clone()
            .ok_or_else(|| HgfError::Validation("input series has no action column".into()))?;
        Self::new(inputs, actions)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// A perceptual network paired with a response model: the generative model
/// of a subject's actions.
#[derive(Debug, Clone)]
pub struct Model {
    pub network: Network,
    pub response: ResponseModel,
    /// Node whose expected mean drives the response model.
    pub response_node: usize,
}

impl Model {
    pub fn new(network: Network, response: ResponseModel) -> Result<Self> {
        let response_node = network
            .kinds
            .iter()
            .position(|&k| k == NodeKind::Binary)
            .ok_or_else(|| HgfError::Validation("model network has no binary node".into()))?;
        Ok(Self {
            network,
            response,
            response_node,
        })
    }

    pub fn from_preset(spec: &PresetSpec, response: ResponseModel) -> Result<Self> {
        Self::new(preset(spec)?, response)
    }

    /// Copies of the network and response model with `natural` written in.
    pub fn instantiate(&self, space: &ParameterSpace, natural: &[f64]) -> Result<(Network, ResponseModel)> {
        let mut net = self.network.clone();
        let mut response = self.response.clone();
        space.apply(&mut net, &mut response, natural)?;
        for a in &net.attributes {
            a.validate()?;
        }
        response.validate()?;
        Ok((net, response))
    }

    /// Belief trajectory under the given natural-scale parameters.
    pub fn trajectory(&self, space: &ParameterSpace, natural: &[f64], inputs: &InputSeries) -> Result<Trajectory> {
        let (net, _) = self.instantiate(space, natural)?;
        Ok(net.run(inputs)?.1)
    }

    /// p(y = 1) per trial under the given natural-scale parameters.
    pub fn action_probabilities(&self, space: &ParameterSpace, natural: &[f64], inputs: &InputSeries) -> Result<Vec<f64>> {
        let (net, response) = self.instantiate(space, natural)?;
        let node = self.response_node;
        let mut beliefs = Vec::with_capacity(inputs.len());
        net.run_with(inputs, |_, _, n| beliefs.push(n.attributes[node].expected_mean))?;
        beliefs.into_iter().map(|m| response.probability(m)).collect()
    }

    pub fn pointwise_log_likelihood(
        &self,
        space: &ParameterSpace,
        natural: &[f64],
        subject: &Subject,
    ) -> Result<PointwiseLikelihood> {
        let p = self.action_probabilities(space, natural, &subject.inputs)?;
        log_likelihood_from_probabilities(&p, &subject.actions)
    }
}

/// Whether an error means "these parameters produce an unusable trajectory"
/// rather than a malformed problem.
pub(crate) fn is_numerical(err: &HgfError) -> bool {
    match err {
        HgfError::NumericalFailure { .. } | HgfError::Domain(_) | HgfError::InvalidAttribute(_) => true,
        HgfError::AtRow { source, .. } => is_numerical(source),
        _ => false,
    }
}

/// Maps numerical failures to a −∞ log density and passes other errors on.
pub(crate) fn or_neg_infinity(value: Result<f64>) -> Result<f64> {
    match value {
        Ok(v) if v.is_nan() => Ok(f64::NEG_INFINITY),
        Ok(v) => Ok(v),
        Err(e) if is_numerical(&e) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Unnormalized log posterior at unconstrained `params`: log priors with
/// Jacobians plus the response log-likelihood of the network's trajectory.
/// Parameters whose trajectory fails numerically score −∞.
pub fn log_posterior(space: &ParameterSpace, params: &[f64], subject: &Subject, model: &Model) -> Result<f64> {
    space.check_dimension(params.len())?;
    let prior = space.log_prior(params);
    if prior == f64::NEG_INFINITY || prior.is_nan() {
        return Ok(f64::NEG_INFINITY);
    }
    let natural = space.to_natural(params);
    let ll = or_neg_infinity(
        model
            .pointwise_log_likelihood(space, &natural, subject)
            .map(|p| p.total()),
    )?;
    Ok(prior + ll)
}

/// A log density over an unconstrained real vector, as seen by the samplers
/// and the optimizer.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> Result<f64>;
    /// Starting point for chain or optimizer run `rng`.
    fn initial_point(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect()
    }
    /// Search box on the unconstrained scale, if any.
    fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// A closure as a [`LogDensity`].
pub struct FnDensity<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnDensity<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> LogDensity for FnDensity<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(HgfError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((self.f)(x))
    }
}

/// The posterior of one subject's parameters.
pub struct SubjectPosterior<'a> {
    pub space: &'a ParameterSpace,
    pub subject: &'a Subject,
    pub model: &'a Model,
}

impl LogDensity for SubjectPosterior<'_> {
    fn dim(&self) -> usize {
        self.space.len()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        log_posterior(self.space, x, self.subject, self.model)
    }

    fn initial_point(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        self.space.draw_initial(rng)
    }

    fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.space.parameters.iter().map(|p| p.unconstrained_bounds()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::space::{Parameter, Prior, Target, Transform};

    fn flat_space() -> ParameterSpace {
        ParameterSpace::new(vec![Parameter::new(
            Target::tonic_volatility(1),
            Prior::Uniform { lower: -8.0, upper: 0.0 },
            Transform::Identity,
        )])
        .unwrap()
    }

    fn subject(u: &[f64], y: &[u8]) -> Subject {
        Subject::new(InputSeries::single(0, u), y.to_vec()).unwrap()
    }

    #[test]
    fn single_neutral_trial_is_minus_ln_two() {
        let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::temperature(1.0)).unwrap();
        let space = flat_space();
        let lp = log_posterior(&space, &[-3.0], &subject(&[1.0], &[1]), &model).unwrap();
        assert!((lp - (-std::f64::consts::LN_2 - 8f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn outside_support_is_neg_infinity() {
        let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::UnitSigmoid).unwrap();
        let lp = log_posterior(&flat_space(), &[0.5], &subject(&[1.0], &[1]), &model).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
    }

    #[test]
    fn numerical_failure_is_neg_infinity() {
        let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::UnitSigmoid).unwrap();
        let space = ParameterSpace::new(vec![Parameter::new(
            Target::tonic_volatility(1),
            Prior::Normal { mean: 0.0, sd: 100.0 },
            Transform::Identity,
        )])
        .unwrap();
        let lp = log_posterior(&space, &[80.0], &subject(&[1.0, 0.0], &[1, 0]), &model).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::UnitSigmoid).unwrap();
        let r = log_posterior(&flat_space(), &[-3.0, 1.0], &subject(&[1.0], &[1]), &model);
        assert!(matches!(r, Err(HgfError::Dimension { expected: 1, got: 2 })));
    }

    #[test]
    fn flat_prior_differences_equal_likelihood_differences() {
        let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::temperature(2.0)).unwrap();
        let space = flat_space();
        let u = [1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let y = [1, 1, 1, 0, 0, 0, 1, 1, 0, 0];
        let s = subject(&u, &y);
        let lp = |w: f64| log_posterior(&space, &[w], &s, &model).unwrap();
        let ll = |w: f64| {
            let mut net = model.network.clone();
            net.attributes[1].tonic_volatility = w;
            let traj = net.run(&s.inputs).unwrap().1;
            crate::response::log_likelihood(&traj, &y, &model.response).unwrap()
        };
        assert!(((lp(-2.0) - lp(-5.0)) - (ll(-2.0) - ll(-5.0))).abs() < 1e-12);
    }

    #[test]
    fn temperature_target_needs_temperature_family() {
        let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::UnitSigmoid).unwrap();
        let space = ParameterSpace::tonic_volatility_and_temperature(1);
        assert!(log_posterior(&space, &[-3.0, 0.0], &subject(&[1.0], &[1]), &model).is_err());
    }
}
