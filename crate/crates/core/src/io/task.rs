use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HgfError, Result};

/// Binary inputs from a reversal-learning schedule: p(u = 1) alternates
/// between `probabilities.0` and `probabilities.1` every `block` trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingTask {
    pub trials: usize,
    pub block: usize,
    pub probabilities: (f64, f64),
}

impl Default for SwitchingTask {
    fn default() -> Self {
        Self {
            trials: 320,
            block: 40,
            probabilities: (0.8, 0.2),
        }
    }
}

impl SwitchingTask {
    pub fn with_trials(trials: usize) -> Self {
        Self {
            trials,
            ..Self::default()
        }
    }

    /// p(u = 1) at each trial.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.trials)
            .map(|i| {
                if (i / self.block.max(1)).is_multiple_of(2) {
                    self.probabilities.0
                } else {
                    self.probabilities.1
                }
            })
            .collect()
    }

    pub fn generate(&self, seed: u64) -> Result<Vec<f64>> {
        let (a, b) = self.probabilities;
        if self.trials == 0 || self.block == 0 || !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(HgfError::Validation(format!("invalid switching task {self:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self
            .probabilities()
            .into_iter()
            .map(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
            .collect())
    }
}
