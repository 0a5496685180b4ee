use serde::{Deserialize, Serialize};

use crate::error::{HgfError, Result};
use crate::network::{Coupling, Network, NodeAttributes, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Binary,
    Continuous,
}

/// Initial belief and tonic volatility of one continuous level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub mean: f64,
    pub precision: f64,
    pub tonic_volatility: f64,
}

impl LevelSpec {
    pub fn new(mean: f64, precision: f64, tonic_volatility: f64) -> Self {
        Self {
            mean,
            precision,
            tonic_volatility,
        }
    }
}

/// Standard two- and three-level networks.
///
/// Binary family: node 0 is the binary input x₁, node 1 (x₂) its value parent,
/// node 2 (x₃) the volatility parent of x₂. `continuous_levels` describes x₂
/// and x₃.
///
/// Continuous family: node 0 (x₁) receives observations with
/// `observation_precision`, each higher level is the volatility parent of the
/// one below. `continuous_levels` describes x₁, x₂ (and x₃).
///
/// `couplings` holds one strength per link, bottom-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSpec {
    pub family: Family,
    pub levels: usize,
    pub continuous_levels: Vec<LevelSpec>,
    pub couplings: Vec<f64>,
    pub observation_precision: f64,
}

impl PresetSpec {
    pub fn binary(levels: usize) -> Self {
        let mut continuous_levels = vec![LevelSpec::new(0.0, 1.0, -4.0)];
        if levels == 3 {
            continuous_levels.push(LevelSpec::new(0.0, 1.0, -6.0));
        }
        Self {
            family: Family::Binary,
            levels,
            continuous_levels,
            couplings: vec![1.0; levels.saturating_sub(1)],
            observation_precision: 1.0,
        }
    }

    pub fn continuous(levels: usize) -> Self {
        let mut continuous_levels = vec![LevelSpec::new(0.0, 1.0, -4.0), LevelSpec::new(0.0, 1.0, -4.0)];
        if levels == 3 {
            continuous_levels.push(LevelSpec::new(0.0, 1.0, -6.0));
        }
        Self {
            family: Family::Continuous,
            levels,
            continuous_levels,
            couplings: vec![1.0; levels.saturating_sub(1)],
            observation_precision: 1.0,
        }
    }

    /// `binary-2`, `binary-3`, `continuous-2` or `continuous-3`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "binary-2" => Ok(Self::binary(2)),
            "binary-3" => Ok(Self::binary(3)),
            "continuous-2" => Ok(Self::continuous(2)),
            "continuous-3" => Ok(Self::continuous(3)),
            other => Err(HgfError::Validation(format!("unknown preset `{other}`"))),
        }
    }

    /// Index of the node whose tonic volatility is usually inferred (x₂).
    pub fn second_level(&self) -> usize {
        1
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.levels) {
            return Err(HgfError::Validation(format!("levels must be 2 or 3, got {}", self.levels)));
        }
        let expected_levels = match self.family {
            Family::Binary => self.levels - 1,
            Family::Continuous => self.levels,
        };
        if self.continuous_levels.len() != expected_levels {
            return Err(HgfError::Validation(format!(
                "expected {expected_levels} continuous level specs, got {}",
                self.continuous_levels.len()
            )));
        }
        if self.couplings.len() != self.levels - 1 {
            return Err(HgfError::Validation(format!(
                "expected {} coupling strengths, got {}",
                self.levels - 1,
                self.couplings.len()
            )));
        }
        if let Some(k) = self.couplings.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(HgfError::Validation(format!("coupling strength must be non-negative, got {k}")));
        }
        for level in &self.continuous_levels {
            if !(level.precision > 0.0 && level.precision.is_finite()) {
                return Err(HgfError::Validation(format!(
                    "precision must be positive, got {}",
                    level.precision
                )));
            }
        }
        if !(self.observation_precision > 0.0) {
            return Err(HgfError::Validation("observation precision must be positive".into()));
        }
        Ok(())
    }
}

/// Builds a fully wired preset network with its derived update sequence.
pub fn preset(spec: &PresetSpec) -> Result<Network> {
    spec.validate()?;
    let mut net = Network::new();
    let continuous = |l: &LevelSpec| {
        NodeAttributes::continuous()
            .with_mean(l.mean)
            .with_precision(l.precision)
            .with_tonic_volatility(l.tonic_volatility)
    };
    match spec.family {
        Family::Binary => {
            net.add_node(NodeKind::Binary, NodeAttributes::binary())?;
            for l in &spec.continuous_levels {
                net.add_node(NodeKind::Continuous, continuous(l))?;
            }
            net.add_edge(0, 1, Coupling::Value, spec.couplings[0])?;
            if spec.levels == 3 {
                net.add_edge(1, 2, Coupling::Volatility, spec.couplings[1])?;
            }
        }
        Family::Continuous => {
            for (i, l) in spec.continuous_levels.iter().enumerate() {
                let mut attrs = continuous(l);
                if i == 0 {
                    attrs = attrs.with_observation_precision(spec.observation_precision);
                }
                net.add_node(NodeKind::Continuous, attrs)?;
            }
            for child in 0..spec.levels - 1 {
                net.add_edge(child, child + 1, Coupling::Volatility, spec.couplings[child])?;
            }
        }
    }
    net.refresh_sequence()?;
    Ok(net)
}
