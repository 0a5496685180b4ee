use crate::error::{HgfError, Result};
use crate::ghgf;
use crate::io::InputSeries;
use crate::network::{Network, Phase, Trajectory, TrajectoryRow};

impl Network {
    /// One belief-propagation step: the prediction phase, then the observations
    /// are written into their nodes, then the prediction-error / posterior phase.
    ///
    /// Nodes absent from `observations` are not updated; their predictions
    /// still advance.
    pub fn propagate(mut self, observations: &[(usize, f64)], dt: f64) -> Result<Network> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(HgfError::Validation(format!("time step must be positive, got {dt}")));
        }
        for (i, &(node, u)) in observations.iter().enumerate() {
            if node >= self.len() {
                return Err(HgfError::IndexOutOfRange {
                    index: node,
                    len: self.len(),
                });
            }
            if observations[..i].iter().any(|&(n, _)| n == node) {
                return Err(HgfError::InvalidObservation(format!(
                    "node {node} observed twice in one step"
                )));
            }
            if !u.is_finite() {
                return Err(HgfError::InvalidObservation(format!(
                    "non-finite observation {u} for node {node}"
                )));
            }
        }

        self.time_step = dt;
        self.attributes.iter_mut().for_each(|a| a.clear_transient());

        let mut observed = false;
        let mut i = 0;
        // The sequence is re-read every iteration: a function may edit it.
        while i < self.sequence.steps.len() {
            let step = self.sequence.steps[i].clone();
            let function = self
                .functions
                .get(&step.function)
                .ok_or_else(|| HgfError::UnknownFunction(step.function.to_string()))?;
            if function.phase == Phase::Update && !observed {
                self = write_observations(self, observations)?;
                observed = true;
            }
            if step.node >= self.len() {
                return Err(HgfError::IndexOutOfRange {
                    index: step.node,
                    len: self.len(),
                });
            }
            self = (function.apply)(self, step.node)?;
            check_node(&self, step.node, &step.function)?;
            i += 1;
        }
        if !observed {
            self = write_observations(self, observations)?;
        }
        Ok(self)
    }

    /// Folds [`Network::propagate`] over every row of `inputs`, recording the
    /// trajectory. Returns the final network alongside it.
    pub fn run(self, inputs: &InputSeries) -> Result<(Network, Trajectory)> {
        let mut trajectory = Trajectory {
            rows: Vec::with_capacity(inputs.len()),
        };
        let net = self.run_with(inputs, |row, time, net| {
            trajectory.rows.push(TrajectoryRow::capture(row, time, net));
        })?;
        Ok((net, trajectory))
    }

    /// Like [`Network::run`], but hands the network to `visit` after each row
    /// (with the row index and time) instead of recording a trajectory.
    pub fn run_with<F>(self, inputs: &InputSeries, mut visit: F) -> Result<Network>
    where
        F: FnMut(usize, f64, &Network),
    {
        if inputs.is_empty() {
            return Err(HgfError::EmptyInput("input series has no rows".into()));
        }
        let mut net = self;
        let mut observations = Vec::with_capacity(inputs.columns.len());
        let mut time = 0.0;
        for row in 0..inputs.len() {
            observations.clear();
            observations.extend(inputs.observations_at(row));
            let dt = inputs.dt(row);
            time = inputs.time_at(row).unwrap_or(time + dt);
            net = net.propagate(&observations, dt).map_err(|e| e.at_row(row))?;
            visit(row, time, &net);
        }
        Ok(net)
    }
}

fn write_observations(mut net: Network, observations: &[(usize, f64)]) -> Result<Network> {
    for &(node, u) in observations {
        ghgf::observe(&mut net, node, u)?;
    }
    Ok(net)
}

fn check_node(net: &Network, node: usize, step: &str) -> Result<()> {
    // functions may remove nodes; nothing left to check then
    let Some(a) = net.attributes.get(node) else {
        return Ok(());
    };
    let finite = a.mean.is_finite() && a.expected_mean.is_finite();
    let positive = a.precision > 0.0
        && a.precision.is_finite()
        && a.expected_precision > 0.0
        && a.expected_precision.is_finite();
    if finite && positive {
        Ok(())
    } else {
        Err(HgfError::numerical(
            node,
            step,
            format!(
                "mean {} / precision {} / expected mean {} / expected precision {}",
                a.mean, a.precision, a.expected_mean, a.expected_precision
            ),
        ))
    }
}
