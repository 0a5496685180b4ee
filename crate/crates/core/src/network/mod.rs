//! The network tuple (attributes, edges, update functions, update sequence)
//! and the scheduler that threads it through belief propagation.
//!
//! Update functions receive the whole [`Network`] by value and hand it back,
//! so every component (including the edges, the registry and the sequence
//! itself) is visible to, and editable by, the function that runs.

mod attributes;
mod edges;
mod engine;
mod sequence;
mod trajectory;

pub use attributes::{NodeAttributes, NodeKind};
pub use edges::{AdjacencyList, Coupling, NodeEdges};
pub use sequence::{FunctionRegistry, Phase, Step, UpdateFn, UpdateFunction, UpdateSequence};
pub use trajectory::{NodeRecord, Trajectory, TrajectoryRow};

use crate::error::{HgfError, Result};
use crate::ghgf;

#[derive(Debug, Clone)]
pub struct Network {
    pub attributes: Vec<NodeAttributes>,
    pub edges: AdjacencyList,
    pub functions: FunctionRegistry,
    pub sequence: UpdateSequence,
    pub kinds: Vec<NodeKind>,
    /// Δt of the step currently being propagated.
    pub time_step: f64,
}

impl Default for Network {
    fn default() -> Self {
        Self::new()
    }
}

impl Network {
    /// Empty network whose registry already holds the generalized HGF functions.
    pub fn new() -> Self {
        let mut functions = FunctionRegistry::empty();
        ghgf::register_functions(&mut functions);
        Self {
            attributes: Vec::new(),
            edges: AdjacencyList::default(),
            functions,
            sequence: UpdateSequence::default(),
            kinds: Vec::new(),
            time_step: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(HgfError::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    /// Appends a node without edges and returns its index.
    pub fn add_node(&mut self, kind: NodeKind, attrs: NodeAttributes) -> Result<usize> {
        attrs.validate()?;
        if !attrs.value_coupling.is_empty() || !attrs.volatility_coupling.is_empty() {
            return Err(HgfError::InvalidAttribute(
                "a new node has no parents, so its coupling lists must be empty".into(),
            ));
        }
        self.attributes.push(attrs);
        self.kinds.push(kind);
        self.edges.push_node();
        Ok(self.len() - 1)
    }

    fn check_link(&self, child: usize, parent: usize, coupling: Coupling) -> Result<()> {
        self.check_index(child)?;
        self.check_index(parent)?;
        if child == parent {
            return Err(HgfError::Cycle { child, parent });
        }
        if self.kinds[parent] == NodeKind::Binary {
            return Err(HgfError::InvalidEdge(format!(
                "binary node {parent} cannot be a parent"
            )));
        }
        if self.kinds[child] == NodeKind::Binary && coupling == Coupling::Volatility {
            return Err(HgfError::InvalidEdge(format!(
                "binary node {child} cannot have a volatility parent"
            )));
        }
        Ok(())
    }

    /// Adds `parent -> child` with the given coupling type and strength.
    pub fn add_edge(
        &mut self,
        child: usize,
        parent: usize,
        coupling: Coupling,
        strength: f64,
    ) -> Result<()> {
        self.check_link(child, parent, coupling)?;
        attributes::validate_strength(strength)?;
        let layer = coupling.layer();
        if self.edges.parents(child, layer).contains(&parent) {
            return Err(HgfError::DuplicateEdge {
                child,
                parent,
                coupling: coupling.as_str(),
            });
        }
        // parent must not already sit below child
        if self.edges.reaches_downward(child, parent) {
            return Err(HgfError::Cycle { child, parent });
        }
        self.edges.link(child, parent, layer);
        self.couplings_mut(child, coupling).push(strength);
        Ok(())
    }

    fn couplings_mut(&mut self, node: usize, coupling: Coupling) -> &mut Vec<f64> {
        match coupling {
            Coupling::Value => &mut self.attributes[node].value_coupling,
            Coupling::Volatility => &mut self.attributes[node].volatility_coupling,
        }
    }

    /// Removes node `idx` with all incident edges. Remaining nodes are renumbered
    /// densely; the returned vector maps each old index to its new one.
    pub fn remove_node(&mut self, idx: usize) -> Result<Vec<Option<usize>>> {
        self.check_index(idx)?;
        for coupling in [Coupling::Value, Coupling::Volatility] {
            let layer = coupling.layer();
            for child in self.edges.children(idx, layer).to_vec() {
                if let Some(pos) = self.edges.unlink(child, idx, layer) {
                    self.couplings_mut(child, coupling).remove(pos);
                }
            }
            for parent in self.edges.parents(idx, layer).to_vec() {
                self.edges.unlink(idx, parent, layer);
            }
        }
        for layer in 2..self.edges.layers() {
            for child in self.edges.children(idx, layer).to_vec() {
                self.edges.unlink(child, idx, layer);
            }
            for parent in self.edges.parents(idx, layer).to_vec() {
                self.edges.unlink(idx, parent, layer);
            }
        }
        self.edges.remove_and_remap(idx);
        self.attributes.remove(idx);
        self.kinds.remove(idx);
        self.sequence.steps.retain(|s| s.node != idx);
        for step in &mut self.sequence.steps {
            if step.node > idx {
                step.node -= 1;
            }
        }
        let old_len = self.len() + 1;
        Ok((0..old_len)
            .map(|i| match i.cmp(&idx) {
                std::cmp::Ordering::Less => Some(i),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(i - 1),
            })
            .collect())
    }

    /// Replaces the parents of `child` for one coupling type. Strengths of
    /// retained parents are kept; new parents start at strength 1.
    pub fn set_edges(&mut self, child: usize, coupling: Coupling, parents: &[usize]) -> Result<()> {
        self.check_index(child)?;
        for (i, &p) in parents.iter().enumerate() {
            self.check_link(child, p, coupling)?;
            if parents[..i].contains(&p) {
                return Err(HgfError::DuplicateEdge {
                    child,
                    parent: p,
                    coupling: coupling.as_str(),
                });
            }
        }
        let layer = coupling.layer();
        let old_parents = self.edges.parents(child, layer).to_vec();
        let old_strengths = match coupling {
            Coupling::Value => self.attributes[child].value_coupling.clone(),
            Coupling::Volatility => self.attributes[child].volatility_coupling.clone(),
        };

        let mut edges = self.edges.clone();
        for &p in &old_parents {
            edges.unlink(child, p, layer);
        }
        for &p in parents {
            edges.link(child, p, layer);
        }
        if edges.topological_order().is_none() {
            let parent = parents
                .iter()
                .copied()
                .find(|&p| self.edges.reaches_downward(child, p))
                .unwrap_or(child);
            return Err(HgfError::Cycle { child, parent });
        }

        let strengths: Vec<f64> = parents
            .iter()
            .map(|p| {
                old_parents
                    .iter()
                    .position(|q| q == p)
                    .map_or(1.0, |i| old_strengths[i])
            })
            .collect();
        self.edges = edges;
        *self.couplings_mut(child, coupling) = strengths;
        Ok(())
    }

    /// Builds the default schedule: predictions from the roots of the hierarchy
    /// down to the observation nodes, then prediction-error / posterior-update
    /// pairs back up. With `origin`, only the origin and its ancestors are scheduled.
    pub fn derive_update_sequence(&self, origin: Option<usize>) -> Result<UpdateSequence> {
        let order = self.edges.topological_order().ok_or(HgfError::CycleDetected)?;
        let included: Vec<bool> = match origin {
            None => vec![true; self.len()],
            Some(o) => {
                self.check_index(o)?;
                let mut keep = vec![false; self.len()];
                let mut stack = vec![o];
                while let Some(n) = stack.pop() {
                    if !std::mem::replace(&mut keep[n], true) {
                        stack.extend(self.edges.node(n).all_parents());
                    }
                }
                keep
            }
        };

        let mut steps = Vec::with_capacity(3 * self.len());
        for &n in order.iter().filter(|&&n| included[n]) {
            steps.push(Step::new(n, ghgf::prediction_function(self.kinds[n])));
        }
        for &n in order.iter().rev().filter(|&&n| included[n]) {
            if let Some(f) = ghgf::posterior_update_function(self.kinds[n]) {
                steps.push(Step::new(n, f));
            }
            if self.edges.node(n).all_parents().next().is_some() {
                steps.push(Step::new(n, ghgf::prediction_error_function(self.kinds[n])));
            }
        }
        Ok(UpdateSequence::new(steps))
    }

    /// Re-derives and installs the full update sequence.
    pub fn refresh_sequence(&mut self) -> Result<()> {
        self.sequence = self.derive_update_sequence(None)?;
        Ok(())
    }

    /// Verifies the structural invariants of the tuple.
    pub fn check_invariants(&self) -> Result<()> {
        let k = self.len();
        if self.kinds.len() != k || self.edges.len() != k {
            return Err(HgfError::Validation(format!(
                "component lengths differ: {} attributes, {} kinds, {} edge entries",
                k,
                self.kinds.len(),
                self.edges.len()
            )));
        }
        if !self.edges.is_consistent() {
            return Err(HgfError::Validation("adjacency list is not reciprocal".into()));
        }
        if self.edges.topological_order().is_none() {
            return Err(HgfError::CycleDetected);
        }
        for (i, attrs) in self.attributes.iter().enumerate() {
            let e = self.edges.node(i);
            if attrs.value_coupling.len() != e.value_parents().len()
                || attrs.volatility_coupling.len() != e.volatility_parents().len()
            {
                return Err(HgfError::Validation(format!(
                    "node {i}: coupling lists do not match parent counts"
                )));
            }
            if !(attrs.precision > 0.0 && attrs.expected_precision > 0.0) {
                return Err(HgfError::Validation(format!("node {i}: non-positive precision")));
            }
        }
        for step in &self.sequence.steps {
            self.check_index(step.node)?;
            if !self.functions.contains(&step.function) {
                return Err(HgfError::UnknownFunction(step.function.to_string()));
            }
        }
        Ok(())
    }
}
