use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{HgfError, Result};
use crate::ghgf::{preset, PresetSpec};
use crate::inference::{Model, OptimizerConfig, Parameter, ParameterSpace, Prior, SamplerConfig, Target, Transform};
use crate::network::{Coupling, Network, NodeAttributes, NodeKind};
use crate::response::{ResponseModel, ResponseRegistry};

pub const DEFAULT_HDI_MASS: f64 = 0.94;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    network: RawNetwork,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    inference: Option<RawInference>,
    #[serde(default)]
    response: RawResponse,
    #[serde(default)]
    sampler: RawSampler,
    #[serde(default)]
    optimizer: RawOptimizer,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    preset: Option<String>,
    nodes: Option<Vec<RawNode>>,
    #[serde(default)]
    edges: Vec<RawEdge>,
    input_nodes: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    kind: NodeKind,
    mean: Option<f64>,
    precision: Option<f64>,
    tonic_volatility: Option<f64>,
    observation_precision: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    child: usize,
    parent: usize,
    coupling: String,
    #[serde(default = "one")]
    strength: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInference {
    #[serde(default)]
    parameters: Vec<RawParameter>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameter {
    target: String,
    name: Option<String>,
    prior: Prior,
    #[serde(default)]
    transform: Transform,
    bounds: Option<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResponse {
    #[serde(default = "default_family")]
    family: String,
    #[serde(flatten)]
    params: BTreeMap<String, f64>,
}

fn default_family() -> String {
    "temperature-sigmoid".into()
}

impl Default for RawResponse {
    fn default() -> Self {
        Self {
            family: default_family(),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSampler {
    chains: Option<usize>,
    draws: Option<usize>,
    warmup: Option<usize>,
    seed: Option<u64>,
    hdi_mass: Option<f64>,
    target_acceptance: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    restarts: Option<usize>,
    seed: Option<u64>,
    max_iterations: Option<usize>,
}

/// The network: a named preset or an explicit node and edge listing.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    Preset { name: String, spec: PresetSpec },
    Explicit { nodes: Vec<(NodeKind, NodeAttributes)>, edges: Vec<(usize, usize, Coupling, f64)> },
}

/// A validated model configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub network: NetworkSpec,
    pub input_nodes: Vec<usize>,
    /// Attribute values written into the network before fitting.
    pub fixed: Vec<(Target, f64)>,
    pub space: ParameterSpace,
    pub response: ResponseModel,
    pub sampler: SamplerConfig,
    pub hdi_mass: f64,
    pub optimizer: OptimizerConfig,
}

fn config_error(path: &str, message: impl Into<String>) -> HgfError {
    HgfError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ModelConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            HgfError::Config { path: key, message } => config_error(&key, format!("{}: {message}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let path = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<document>".into());
            config_error(&path, message)
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let network = match (raw.network.preset, raw.network.nodes) {
            (Some(_), Some(_)) => {
                return Err(config_error("network", "give either `preset` or `nodes`, not both"));
            }
            (None, None) => return Err(config_error("network", "one of `preset` or `nodes` is required")),
            (Some(name), None) => {
                if !raw.network.edges.is_empty() {
                    return Err(config_error("network.edges", "edges cannot be combined with a preset"));
                }
                let spec = PresetSpec::from_name(&name).map_err(|e| config_error("network.preset", e.to_string()))?;
                NetworkSpec::Preset { name, spec }
            }
            (None, Some(nodes)) => {
                let nodes = nodes
                    .into_iter()
                    .map(|n| {
                        let mut attrs = match n.kind {
                            NodeKind::Binary => NodeAttributes::binary(),
                            NodeKind::Continuous => NodeAttributes::continuous(),
                        };
                        if let Some(m) = n.mean {
                            attrs = attrs.with_mean(m);
                        }
                        if let Some(p) = n.precision {
                            attrs = attrs.with_precision(p);
                        }
                        if let Some(w) = n.tonic_volatility {
                            attrs = attrs.with_tonic_volatility(w);
                        }
                        if let Some(p) = n.observation_precision {
                            attrs = attrs.with_observation_precision(p);
                        }
                        (n.kind, attrs)
                    })
                    .collect();
                let edges = raw
                    .network
                    .edges
                    .into_iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let coupling: Coupling = e
                            .coupling
                            .parse()
                            .map_err(|err: HgfError| config_error(&format!("network.edges[{i}].coupling"), err.to_string()))?;
                        Ok((e.child, e.parent, coupling, e.strength))
                    })
                    .collect::<Result<Vec<_>>>()?;
                NetworkSpec::Explicit { nodes, edges }
            }
        };

        let fixed = raw
            .parameters
            .into_iter()
            .map(|(key, value)| {
                let target: Target = key
                    .parse()
                    .map_err(|e: HgfError| config_error(&format!("parameters.{key}"), e.to_string()))?;
                Ok((target, value))
            })
            .collect::<Result<Vec<_>>>()?;

        let registry = ResponseRegistry::default();
        let response = registry
            .build(&raw.response.family, &raw.response.params)
            .map_err(|e| config_error("response", e.to_string()))?;

        let defaults = SamplerConfig::default();
        let sampler = SamplerConfig {
            chains: raw.sampler.chains.unwrap_or(defaults.chains),
            draws: raw.sampler.draws.unwrap_or(defaults.draws),
            warmup: raw.sampler.warmup.unwrap_or(defaults.warmup),
            seed: raw.sampler.seed.unwrap_or(defaults.seed),
            target_acceptance: raw.sampler.target_acceptance.unwrap_or(defaults.target_acceptance),
        };
        sampler.validate().map_err(|e| config_error("sampler", e.to_string()))?;
        let hdi_mass = raw.sampler.hdi_mass.unwrap_or(DEFAULT_HDI_MASS);
        if !(hdi_mass > 0.0 && hdi_mass < 1.0) {
            return Err(config_error("sampler.hdi_mass", "must lie in (0, 1)"));
        }
        let opt_defaults = OptimizerConfig::default();
        let optimizer = OptimizerConfig {
            restarts: raw.optimizer.restarts.unwrap_or(opt_defaults.restarts),
            seed: raw.optimizer.seed.unwrap_or(sampler.seed),
            max_iterations: raw.optimizer.max_iterations.unwrap_or(opt_defaults.max_iterations),
            ..opt_defaults
        };

        let mut config = Self {
            network,
            input_nodes: raw.network.input_nodes.unwrap_or_else(|| vec![0]),
            fixed,
            space: ParameterSpace { parameters: Vec::new() },
            response,
            sampler,
            hdi_mass,
            optimizer,
        };
        let net = config.build_network()?;
        if let Some(&bad) = config.input_nodes.iter().find(|&&n| n >= net.len()) {
            return Err(config_error(
                "network.input_nodes",
                format!("node {bad} does not exist ({} nodes)", net.len()),
            ));
        }
        config.space = match raw.inference {
            Some(inf) => {
                let parameters = inf
                    .parameters
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let target: Target = p
                            .target
                            .parse()
                            .map_err(|e: HgfError| config_error(&format!("inference.parameters[{i}].target"), e.to_string()))?;
                        let mut param = Parameter::new(target, p.prior, p.transform);
                        if let Some(name) = p.name {
                            param = param.named(name);
                        }
                        if let Some((lo, hi)) = p.bounds {
                            param = param.with_bounds(lo, hi);
                        }
                        Ok(param)
                    })
                    .collect::<Result<Vec<_>>>()?;
                ParameterSpace::new(parameters).map_err(|e| config_error("inference.parameters", e.to_string()))?
            }
            None => default_space(&net, &config.response),
        };
        config.model()?;
        Ok(config)
    }

    /// The configured network with fixed parameters applied.
    pub fn build_network(&self) -> Result<Network> {
        let mut net = match &self.network {
            NetworkSpec::Preset { spec, .. } => preset(spec)?,
            NetworkSpec::Explicit { nodes, edges } => {
                let mut net = Network::new();
                for (i, (kind, attrs)) in nodes.iter().enumerate() {
                    net.add_node(*kind, attrs.clone())
                        .map_err(|e| config_error(&format!("network.nodes[{i}]"), e.to_string()))?;
                }
                for (i, &(child, parent, coupling, strength)) in edges.iter().enumerate() {
                    net.add_edge(child, parent, coupling, strength)
                        .map_err(|e| config_error(&format!("network.edges[{i}]"), e.to_string()))?;
                }
                net.refresh_sequence()?;
                net
            }
        };
        let mut response = self.response.clone();
        for (target, value) in &self.fixed {
            target
                .apply(&mut net, &mut response, *value)
                .map_err(|e| config_error(&format!("parameters.{target}"), e.to_string()))?;
        }
        for (i, a) in net.attributes.iter().enumerate() {
            a.validate().map_err(|e| config_error(&format!("network node {i}"), e.to_string()))?;
        }
        Ok(net)
    }

    /// The response model with fixed parameters applied.
    pub fn response_model(&self) -> Result<ResponseModel> {
        let mut net = Network::new();
        let mut response = self.response.clone();
        for (target, value) in &self.fixed {
            if *target == Target::InverseTemperature {
                target.apply(&mut net, &mut response, *value)?;
            }
        }
        response.validate().map_err(|e| config_error("response", e.to_string()))?;
        Ok(response)
    }

    pub fn model(&self) -> Result<Model> {
        Model::new(self.build_network()?, self.response_model()?)
    }

    /// The network's node kinds, for validating input files.
    pub fn node_kinds(&self) -> Result<Vec<NodeKind>> {
        Ok(self.build_network()?.kinds)
    }
}

/// ω of the binary node's value parent, plus the inverse temperature when
/// the response family has one.
fn default_space(net: &Network, response: &ResponseModel) -> ParameterSpace {
    let node = net
        .kinds
        .iter()
        .position(|&k| k == NodeKind::Binary)
        .and_then(|b| net.edges.node(b).value_parents().first().copied())
        .unwrap_or(1);
    if matches!(response, ResponseModel::TemperatureSigmoid { .. }) {
        ParameterSpace::tonic_volatility_and_temperature(node)
    } else {
        ParameterSpace::tonic_volatility(node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config_gets_defaults() {
        let c = ModelConfig::parse("[network]\npreset = \"binary-3\"\n").unwrap();
        assert_eq!(c.build_network().unwrap().len(), 3);
        assert_eq!((c.sampler.chains, c.sampler.draws, c.sampler.warmup), (4, 1000, 1000));
        assert_eq!(c.hdi_mass, 0.94);
        assert_eq!(c.space.names(), vec!["omega", "inverse_temperature"]);
        assert_eq!(c.input_nodes, vec![0]);
    }

    #[test]
    fn explicit_values_are_kept() {
        let c = ModelConfig::parse(
            r#"
[network]
preset = "binary-2"

[parameters]
"1.tonic_volatility" = -2.5
"response.inverse_temperature" = 3.0

[inference]
parameters = [
  { target = "1.tonic_volatility", name = "w", prior = { family = "uniform", lower = -6.0, upper = 0.0 } },
]

[response]
family = "temperature-sigmoid"

[sampler]
chains = 3
draws = 250
seed = 9
hdi_mass = 0.9
"#,
        )
        .unwrap();
        assert_eq!((c.sampler.chains, c.sampler.draws, c.sampler.warmup, c.sampler.seed), (3, 250, 1000, 9));
        assert_eq!(c.hdi_mass, 0.9);
        assert_eq!(c.build_network().unwrap().attributes[1].tonic_volatility, -2.5);
        assert!(matches!(
            c.response_model().unwrap(),
            ResponseModel::TemperatureSigmoid { inverse_temperature } if inverse_temperature == 3.0
        ));
        assert_eq!(c.space.names(), vec!["w"]);
        assert_eq!(c.space.parameters[0].search_bounds(), (-6.0, 0.0));
    }

    #[test]
    fn explicit_network() {
        let c = ModelConfig::parse(
            r#"
[network]
nodes = [
  { kind = "binary" },
  { kind = "continuous", tonic_volatility = -3.0 },
  { kind = "continuous", tonic_volatility = -6.0 },
]
edges = [
  { child = 0, parent = 1, coupling = "value" },
  { child = 1, parent = 2, coupling = "volatility", strength = 0.5 },
]

[response]
family = "unit-sigmoid"
"#,
        )
        .unwrap();
        let net = c.build_network().unwrap();
        assert_eq!(net.attributes[1].volatility_coupling, vec![0.5]);
        assert_eq!(net.sequence.len(), 7);
        assert_eq!(c.space.names(), vec!["omega"]);
    }

    #[test]
    fn preset_and_nodes_are_exclusive() {
        let e = ModelConfig::parse("[network]\npreset = \"binary-3\"\nnodes = [{ kind = \"binary\" }]\n").unwrap_err();
        assert!(matches!(e, HgfError::Config { ref path, .. } if path == "network"), "{e}");
    }

    #[test]
    fn errors_carry_paths() {
        let cases = [
            ("[network]\npreset = \"binary-9\"\n", "network.preset"),
            ("[network]\npreset = \"binary-3\"\n[parameters]\n\"7.mean\" = 1.0\n", "parameters.7.mean"),
            ("[network]\npreset = \"binary-3\"\n[sampler]\nchains = 1\n", "sampler"),
            ("[network]\npreset = \"binary-3\"\n[response]\nfamily = \"softmax-3\"\n", "response"),
            ("[network]\npreset = \"binary-3\"\ninput_nodes = [5]\n", "network.input_nodes"),
            (
                "[network]\nnodes = [{ kind = \"binary\" }, { kind = \"continuous\" }]\nedges = [{ child = 1, parent = 0, coupling = \"value\" }]\n",
                "network.edges[0]",
            ),
        ];
        for (text, expected) in cases {
            match ModelConfig::parse(text) {
                Err(HgfError::Config { path, .. }) => assert_eq!(path, expected, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_report_a_line() {
        let e = ModelConfig::parse("[network]\npreset = \"binary-3\"\n[sampler]\nchains = \"four\"\n").unwrap_err();
        assert!(matches!(e, HgfError::Config { ref path, .. } if path == "line 4"), "{e}");
        assert!(ModelConfig::parse("[network]\npreset = \"binary-3\"\nspeed = 3\n").is_err());
    }
}
