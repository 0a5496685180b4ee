use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, LogNormal, Normal};

use crate::error::{HgfError, Result};
use crate::network::Network;
use crate::response::ResponseModel;

/// Prior density on the natural scale of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Prior {
    Normal { mean: f64, sd: f64 },
    HalfNormal { sd: f64 },
    Uniform { lower: f64, upper: f64 },
    /// ln x ~ Normal(mean, sd).
    LogNormal { mean: f64, sd: f64 },
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Prior::Normal { mean, sd } | Prior::LogNormal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Prior::HalfNormal { sd } => sd > 0.0 && sd.is_finite(),
            Prior::Uniform { lower, upper } => lower.is_finite() && upper.is_finite() && lower < upper,
        };
        if ok {
            Ok(())
        } else {
            Err(HgfError::Validation(format!("invalid prior {self:?}")))
        }
    }

    /// Open support (lower, upper).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Prior::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Prior::HalfNormal { .. } | Prior::LogNormal { .. } => (0.0, f64::INFINITY),
            Prior::Uniform { lower, upper } => (lower, upper),
        }
    }

    /// Log density at natural-scale `x`; −∞ outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Prior::Normal { mean, sd } => Normal::new(mean, sd).map_or(f64::NAN, |d| d.ln_pdf(x)),
            Prior::HalfNormal { sd } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    std::f64::consts::LN_2 + Normal::new(0.0, sd).map_or(f64::NAN, |d| d.ln_pdf(x))
                }
            }
            Prior::Uniform { lower, upper } => {
                if x > lower && x < upper {
                    -(upper - lower).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::LogNormal { mean, sd } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    LogNormal::new(mean, sd).map_or(f64::NAN, |d| d.ln_pdf(x))
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match *self {
            Prior::Normal { mean, sd } => mean + sd * z,
            Prior::HalfNormal { sd } => sd * z.abs(),
            Prior::Uniform { lower, upper } => rng.random_range(lower..upper),
            Prior::LogNormal { mean, sd } => (mean + sd * z).exp(),
        }
    }
}

/// Map from the natural scale to the unconstrained scale the samplers move in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Identity,
    Log,
}

impl Transform {
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::Log => y.exp(),
        }
    }

    /// ln |dx/dy| at unconstrained `y`.
    pub fn log_jacobian(self, y: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Log => y,
        }
    }
}

/// Scalar node attributes that can be inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeParameter {
    TonicVolatility,
    Mean,
    Precision,
    ObservationPrecision,
    ValueCoupling(usize),
    VolatilityCoupling(usize),
}

/// What a parameter controls: a node attribute or the response model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Node { node: usize, parameter: NodeParameter },
    InverseTemperature,
}

impl Target {
    pub fn tonic_volatility(node: usize) -> Self {
        Target::Node {
            node,
            parameter: NodeParameter::TonicVolatility,
        }
    }

    /// Writes the natural-scale value into the network or response model.
    pub fn apply(&self, net: &mut Network, response: &mut ResponseModel, value: f64) -> Result<()> {
        match *self {
            Target::InverseTemperature => match response {
                ResponseModel::TemperatureSigmoid { inverse_temperature } => {
                    *inverse_temperature = value;
                    Ok(())
                }
                _ => Err(HgfError::Validation(format!(
                    "response family `{}` has no inverse temperature",
                    response.family()
                ))),
            },
            Target::Node { node, parameter } => {
                let len = net.len();
                let attrs = net
                    .attributes
                    .get_mut(node)
                    .ok_or(HgfError::IndexOutOfRange { index: node, len })?;
                let slot = match parameter {
                    NodeParameter::TonicVolatility => &mut attrs.tonic_volatility,
                    NodeParameter::Mean => {
                        attrs.expected_mean = value;
                        &mut attrs.mean
                    }
                    NodeParameter::Precision => {
                        attrs.expected_precision = value;
                        &mut attrs.precision
                    }
                    NodeParameter::ObservationPrecision => &mut attrs.observation_precision,
                    NodeParameter::ValueCoupling(i) => attrs.value_coupling.get_mut(i).ok_or_else(|| {
                        HgfError::Validation(format!("node {node} has no value parent {i}"))
                    })?,
                    NodeParameter::VolatilityCoupling(i) => {
                        attrs.volatility_coupling.get_mut(i).ok_or_else(|| {
                            HgfError::Validation(format!("node {node} has no volatility parent {i}"))
                        })?
                    }
                };
                *slot = value;
                Ok(())
            }
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::InverseTemperature => f.write_str("response.inverse_temperature"),
            Target::Node { node, parameter } => match parameter {
                NodeParameter::TonicVolatility => write!(f, "{node}.tonic_volatility"),
                NodeParameter::Mean => write!(f, "{node}.mean"),
                NodeParameter::Precision => write!(f, "{node}.precision"),
                NodeParameter::ObservationPrecision => write!(f, "{node}.observation_precision"),
                NodeParameter::ValueCoupling(i) => write!(f, "{node}.value_coupling.{i}"),
                NodeParameter::VolatilityCoupling(i) => write!(f, "{node}.volatility_coupling.{i}"),
            },
        }
    }
}

/// Parses `response.inverse_temperature` or `<node>.<attribute>[.<parent>]`.
impl FromStr for Target {
    type Err = HgfError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HgfError::Validation(format!("unknown parameter path `{s}`"));
        if s == "response.inverse_temperature" {
            return Ok(Target::InverseTemperature);
        }
        let mut parts = s.split('.');
        let node: usize = parts.next().and_then(|n| n.parse().ok()).ok_or_else(bad)?;
        let attr = parts.next().ok_or_else(bad)?;
        let index = parts.next().map(|i| i.parse::<usize>().map_err(|_| bad())).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let parameter = match (attr, index) {
            ("tonic_volatility", None) => NodeParameter::TonicVolatility,
            ("mean", None) => NodeParameter::Mean,
            ("precision", None) => NodeParameter::Precision,
            ("observation_precision", None) => NodeParameter::ObservationPrecision,
            ("value_coupling", i) => NodeParameter::ValueCoupling(i.unwrap_or(0)),
            ("volatility_coupling", i) => NodeParameter::VolatilityCoupling(i.unwrap_or(0)),
            _ => return Err(bad()),
        };
        Ok(Target::Node { node, parameter })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub target: Target,
    pub prior: Prior,
    pub transform: Transform,
    /// Natural-scale search box for MAP fitting; defaults depend on the target.
    pub bounds: Option<(f64, f64)>,
}

impl Parameter {
    pub fn new(target: Target, prior: Prior, transform: Transform) -> Self {
        Self {
            name: target.to_string(),
            target,
            prior,
            transform,
            bounds: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.bounds = Some((lower, upper));
        self
    }

    /// Natural-scale search box: explicit bounds, else a Uniform prior's
    /// support, else a default for the target.
    pub fn search_bounds(&self) -> (f64, f64) {
        if let Some(b) = self.bounds {
            return b;
        }
        if let Prior::Uniform { lower, upper } = self.prior {
            return (lower, upper);
        }
        match self.target {
            Target::InverseTemperature => (0.05, 50.0),
            Target::Node {
                parameter: NodeParameter::TonicVolatility,
                ..
            } => (-10.0, 2.0),
            _ => match self.transform {
                Transform::Log => (1e-3, 1e3),
                Transform::Identity => (-10.0, 10.0),
            },
        }
    }

    /// Search box on the unconstrained scale.
    pub fn unconstrained_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.search_bounds();
        (self.transform.forward(lo), self.transform.forward(hi))
    }
}

/// The parameters being inferred, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    pub parameters: Vec<Parameter>,
}

impl ParameterSpace {
    pub fn new(parameters: Vec<Parameter>) -> Result<Self> {
        let space = Self { parameters };
        space.validate()?;
        Ok(space)
    }

    /// ω of node `node` with Normal(−3, 2) and the inverse temperature with
    /// ln t ~ Normal(0, 1), sampled on the log scale.
    pub fn tonic_volatility_and_temperature(node: usize) -> Self {
        Self {
            parameters: vec![
                Parameter::new(
                    Target::tonic_volatility(node),
                    Prior::Normal { mean: -3.0, sd: 2.0 },
                    Transform::Identity,
                )
                .named("omega"),
                Parameter::new(
                    Target::InverseTemperature,
                    Prior::LogNormal { mean: 0.0, sd: 1.0 },
                    Transform::Log,
                )
                .named("inverse_temperature"),
            ],
        }
    }

    /// ω of node `node` alone, Normal(−3, 2).
    pub fn tonic_volatility(node: usize) -> Self {
        Self {
            parameters: vec![Parameter::new(
                Target::tonic_volatility(node),
                Prior::Normal { mean: -3.0, sd: 2.0 },
                Transform::Identity,
            )
            .named("omega")],
        }
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.parameters.iter().map(|p| p.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.parameters.iter().enumerate() {
            p.prior.validate()?;
            if self.parameters[..i].iter().any(|q| q.target == p.target || q.name == p.name) {
                return Err(HgfError::Validation(format!("parameter `{}` declared twice", p.name)));
            }
            if p.transform == Transform::Log && p.prior.support().0 < 0.0 {
                return Err(HgfError::Validation(format!(
                    "parameter `{}`: log transform needs a positive prior support",
                    p.name
                )));
            }
            let (lo, hi) = p.search_bounds();
            let (slo, shi) = p.prior.support();
            let ok = lo < hi && lo >= slo && hi <= shi && (p.transform == Transform::Identity || lo > 0.0);
            if !ok {
                return Err(HgfError::Validation(format!(
                    "parameter `{}`: bounds ({lo}, {hi}) invalid for its prior",
                    p.name
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn check_dimension(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(HgfError::Dimension {
                expected: self.len(),
                got,
            })
        }
    }

    pub fn to_natural(&self, unconstrained: &[f64]) -> Vec<f64> {
        self.parameters
            .iter()
            .zip(unconstrained)
            .map(|(p, &y)| p.transform.inverse(y))
            .collect()
    }

    pub fn to_unconstrained(&self, natural: &[f64]) -> Vec<f64> {
        self.parameters
            .iter()
            .zip(natural)
            .map(|(p, &x)| p.transform.forward(x))
            .collect()
    }

    /// Σ prior log-densities plus transform Jacobians, at unconstrained `y`.
    pub fn log_prior(&self, unconstrained: &[f64]) -> f64 {
        self.parameters
            .iter()
            .zip(unconstrained)
            .map(|(p, &y)| p.prior.log_density(p.transform.inverse(y)) + p.transform.log_jacobian(y))
            .sum()
    }

    /// Writes natural-scale values into copies of the network and response model.
    pub fn apply(&self, net: &mut Network, response: &mut ResponseModel, natural: &[f64]) -> Result<()> {
        self.check_dimension(natural.len())?;
        for (p, &x) in self.parameters.iter().zip(natural) {
            p.target.apply(net, response, x)?;
        }
        Ok(())
    }

    /// An unconstrained point drawn from the priors, clipped into the search box.
    pub fn draw_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.parameters
            .iter()
            .map(|p| {
                let (lo, hi) = p.unconstrained_bounds();
                p.transform.forward(p.prior.sample(rng)).clamp(lo, hi)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prior_densities() {
        let n = Prior::Normal { mean: -3.0, sd: 2.0 };
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln() - 2f64.ln();
        assert!((n.log_density(-3.0) - expected).abs() < 1e-12);
        let h = Prior::HalfNormal { sd: 1.0 };
        assert!((h.log_density(0.0) - (2.0 / std::f64::consts::PI).sqrt().ln()).abs() < 1e-12);
        assert_eq!(h.log_density(-0.1), f64::NEG_INFINITY);
        let u = Prior::Uniform { lower: -4.0, upper: 0.0 };
        assert!((u.log_density(-1.0) + 4f64.ln()).abs() < 1e-12);
        assert_eq!(u.log_density(0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn log_normal_on_log_scale_is_standard_normal() {
        let space = ParameterSpace::tonic_volatility_and_temperature(1);
        let std_normal = Prior::Normal { mean: 0.0, sd: 1.0 };
        for y in [-1.5, 0.0, 0.7, 2.0] {
            let p = &space.parameters[1];
            let got = p.prior.log_density(p.transform.inverse(y)) + p.transform.log_jacobian(y);
            assert!((got - std_normal.log_density(y)).abs() < 1e-12);
        }
    }

    #[test]
    fn transforms_round_trip() {
        let space = ParameterSpace::tonic_volatility_and_temperature(1);
        let natural = [-2.5, 3.0];
        let back = space.to_natural(&space.to_unconstrained(&natural));
        assert!((back[0] - natural[0]).abs() < 1e-15 && (back[1] - natural[1]).abs() < 1e-14);
    }

    #[test]
    fn target_paths_round_trip() {
        for path in [
            "1.tonic_volatility",
            "response.inverse_temperature",
            "0.observation_precision",
            "2.volatility_coupling.0",
        ] {
            assert_eq!(path.parse::<Target>().unwrap().to_string(), path);
        }
        assert!("x.mean".parse::<Target>().is_err());
        assert!("1.speed".parse::<Target>().is_err());
    }

    #[test]
    fn validation() {
        let omega = Parameter::new(Target::tonic_volatility(1), Prior::Normal { mean: 0.0, sd: 1.0 }, Transform::Identity);
        assert!(ParameterSpace::new(vec![omega.clone(), omega.clone().named("other")]).is_err());
        let log_on_normal = omega.clone().named("x");
        let log_on_normal = Parameter {
            transform: Transform::Log,
            ..log_on_normal
        };
        assert!(ParameterSpace::new(vec![log_on_normal]).is_err());
        assert!(ParameterSpace::new(vec![omega]).is_ok());
    }

    #[test]
    fn initial_draws_stay_in_bounds() {
        let space = ParameterSpace::tonic_volatility_and_temperature(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let y = space.draw_initial(&mut rng);
            for (p, v) in space.parameters.iter().zip(&y) {
                let (lo, hi) = p.unconstrained_bounds();
                assert!(*v >= lo && *v <= hi);
            }
        }
    }
}
