use serde::{Deserialize, Serialize};

/// Edge types understood by the update functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Value,
    Volatility,
}

impl Coupling {
    /// Position of this coupling type in a node's edge sets.
    pub fn layer(self) -> usize {
        match self {
            Coupling::Value => 0,
            Coupling::Volatility => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Coupling::Value => "value",
            Coupling::Volatility => "volatility",
        }
    }
}

impl std::str::FromStr for Coupling {
    type Err = crate::HgfError;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "value" => Ok(Coupling::Value),
            "volatility" => Ok(Coupling::Volatility),
            other => Err(crate::HgfError::Validation(format!("unknown coupling `{other}`"))),
        }
    }
}

/// Directed connections of one node, one parent set and one child set per edge type.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeEdges {
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl NodeEdges {
    fn empty(layers: usize) -> Self {
        Self {
            parents: vec![Vec::new(); layers],
            children: vec![Vec::new(); layers],
        }
    }

    pub fn value_parents(&self) -> &[usize] {
        &self.parents[Coupling::Value.layer()]
    }

    pub fn value_children(&self) -> &[usize] {
        &self.children[Coupling::Value.layer()]
    }

    pub fn volatility_parents(&self) -> &[usize] {
        &self.parents[Coupling::Volatility.layer()]
    }

    pub fn volatility_children(&self) -> &[usize] {
        &self.children[Coupling::Volatility.layer()]
    }

    pub fn all_parents(&self) -> impl Iterator<Item = usize> + '_ {
        self.parents.iter().flatten().copied()
    }

    pub fn all_children(&self) -> impl Iterator<Item = usize> + '_ {
        self.children.iter().flatten().copied()
    }
}

/// Multilayer adjacency list: `layers` edge types, stored per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyList {
    layers: usize,
    nodes: Vec<NodeEdges>,
}

impl Default for AdjacencyList {
    fn default() -> Self {
        Self::with_layers(2)
    }
}

impl AdjacencyList {
    pub fn with_layers(layers: usize) -> Self {
        Self {
            layers,
            nodes: Vec::new(),
        }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, idx: usize) -> &NodeEdges {
        &self.nodes[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeEdges> {
        self.nodes.iter()
    }

    pub(crate) fn push_node(&mut self) {
        self.nodes.push(NodeEdges::empty(self.layers));
    }

    pub fn parents(&self, child: usize, layer: usize) -> &[usize] {
        &self.nodes[child].parents[layer]
    }

    pub fn children(&self, parent: usize, layer: usize) -> &[usize] {
        &self.nodes[parent].children[layer]
    }

    pub(crate) fn link(&mut self, child: usize, parent: usize, layer: usize) {
        self.nodes[child].parents[layer].push(parent);
        self.nodes[parent].children[layer].push(child);
    }

    /// Removes the edge and returns the position it held in the child's parent list.
    pub(crate) fn unlink(&mut self, child: usize, parent: usize, layer: usize) -> Option<usize> {
        let pos = self.nodes[child].parents[layer].iter().position(|&p| p == parent)?;
        self.nodes[child].parents[layer].remove(pos);
        self.nodes[parent].children[layer].retain(|&c| c != child);
        Some(pos)
    }

    /// Drops node `idx` (its incident edges must already be unlinked) and shifts
    /// every index above it down by one.
    pub(crate) fn remove_and_remap(&mut self, idx: usize) {
        self.nodes.remove(idx);
        let shift = |v: &mut Vec<usize>| {
            v.retain(|&i| i != idx);
            for i in v.iter_mut() {
                if *i > idx {
                    *i -= 1;
                }
            }
        };
        for node in &mut self.nodes {
            node.parents.iter_mut().for_each(shift);
            node.children.iter_mut().for_each(shift);
        }
    }

    /// True when `target` can be reached from `start` by following child links.
    pub fn reaches_downward(&self, start: usize, target: usize) -> bool {
        let mut stack = vec![start];
        let mut seen = vec![false; self.nodes.len()];
        while let Some(n) = stack.pop() {
            if n == target {
                return true;
            }
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            stack.extend(self.nodes[n].all_children());
        }
        false
    }

    /// Kahn ordering with parents before children; ties resolved by ascending index.
    /// Returns `None` when the union of all layers has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indegree: Vec<usize> = self.nodes.iter().map(|e| e.all_parents().count()).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(next) = ready.pop_first() {
            order.push(next);
            for child in self.nodes[next].all_children() {
                indegree[child] -= 1;
                if indegree[child] == 0 {
                    ready.insert(child);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Checks parent/child reciprocity and index bounds.
    pub fn is_consistent(&self) -> bool {
        let n = self.nodes.len();
        self.nodes.iter().enumerate().all(|(i, e)| {
            e.parents.len() == self.layers
                && e.children.len() == self.layers
                && (0..self.layers).all(|l| {
                    e.parents[l]
                        .iter()
                        .all(|&p| p < n && p != i && self.nodes[p].children[l].contains(&i))
                        && e.children[l]
                            .iter()
                            .all(|&c| c < n && c != i && self.nodes[c].parents[l].contains(&i))
                })
        })
    }
}
