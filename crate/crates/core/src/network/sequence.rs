use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::Result;
use crate::network::Network;

/// Signature shared by every update function: the whole network goes in and
/// the (possibly modified) whole network comes out.
pub type UpdateFn = fn(Network, usize) -> Result<Network>;

/// Which half of a propagation step a function belongs to. Observations are
/// written between the two phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Prediction,
    Update,
}

#[derive(Clone, Copy)]
pub struct UpdateFunction {
    pub phase: Phase,
    pub apply: UpdateFn,
}

impl std::fmt::Debug for UpdateFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UpdateFunction").field("phase", &self.phase).finish_non_exhaustive()
    }
}

/// Named update functions available to a network's sequence.
#[derive(Debug, Clone, Default)]
pub struct FunctionRegistry {
    entries: BTreeMap<String, UpdateFunction>,
}

impl FunctionRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, phase: Phase, apply: UpdateFn) {
        self.entries.insert(name.into(), UpdateFunction { phase, apply });
    }

    pub fn remove(&mut self, name: &str) -> Option<UpdateFunction> {
        self.entries.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<UpdateFunction> {
        self.entries.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub node: usize,
    pub function: Arc<str>,
}

impl Step {
    pub fn new(node: usize, function: impl AsRef<str>) -> Self {
        Self {
            node,
            function: Arc::from(function.as_ref()),
        }
    }
}

/// Ordered schedule of (node, function) applications run once per observation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdateSequence {
    pub steps: Vec<Step>,
}

impl UpdateSequence {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Step> {
        self.steps.iter()
    }
}
