use crate::network::{Network, NodeKind};

/// Snapshot of one node after a propagation step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub kind: NodeKind,
    pub mean: f64,
    pub precision: f64,
    pub expected_mean: f64,
    pub expected_precision: f64,
    pub surprise: Option<f64>,
    pub observation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub nodes: Vec<NodeRecord>,
}

impl TrajectoryRow {
    pub(crate) fn capture(step: usize, time: f64, net: &Network) -> Self {
        let nodes = net
            .attributes
            .iter()
            .zip(&net.kinds)
            .map(|(a, &kind)| NodeRecord {
                kind,
                mean: a.mean,
                precision: a.precision,
                expected_mean: a.expected_mean,
                expected_precision: a.expected_precision,
                surprise: a.surprise,
                observation: a.observation,
            })
            .collect();
        Self {
            step,
            time,
            dt: net.time_step,
            nodes,
        }
    }

    /// Summed surprise of all nodes observed at this step.
    pub fn surprise(&self) -> f64 {
        self.nodes.iter().filter_map(|n| n.surprise).sum()
    }
}

/// Belief trajectory: one row per propagated observation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Node count of the first row (networks may change size mid-run).
    pub fn node_count(&self) -> usize {
        self.rows.first().map_or(0, |r| r.nodes.len())
    }

    /// Index of the first binary node, the usual target of a response model.
    pub fn first_binary_node(&self) -> Option<usize> {
        self.rows
            .first()?
            .nodes
            .iter()
            .position(|n| n.kind == NodeKind::Binary)
    }

    /// Extracts one statistic of one node over time.
    pub fn series<F>(&self, node: usize, f: F) -> Vec<f64>
    where
        F: Fn(&NodeRecord) -> f64,
    {
        self.rows.iter().map(|r| f(&r.nodes[node])).collect()
    }

    pub fn total_surprise(&self) -> f64 {
        self.rows.iter().map(TrajectoryRow::surprise).sum()
    }
}
