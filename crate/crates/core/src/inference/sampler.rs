use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HgfError, Result};
use crate::inference::model::{LogDensity, Model, Subject, SubjectPosterior};
use crate::inference::space::ParameterSpace;

/// Mixes a master seed with a stream index (chain, subject) into an
/// independent seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(master ^ splitmix(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    pub draws: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Acceptance rate the proposal scale is tuned toward during warmup.
    pub target_acceptance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            draws: 1000,
            warmup: 1000,
            seed: 0,
            target_acceptance: 0.3,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(HgfError::Validation(format!("at least 2 chains are needed, got {}", self.chains)));
        }
        if self.draws == 0 {
            return Err(HgfError::Validation("draws must be positive".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(HgfError::Validation("target acceptance must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Posterior draws on the natural scale, indexed `[chain][iteration][parameter]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub names: Vec<String>,
    pub draws: Vec<Vec<Vec<f64>>>,
    /// Post-warmup acceptance rate of each chain.
    pub acceptance: Vec<f64>,
}

impl PosteriorSamples {
    pub fn chains(&self) -> usize {
        self.draws.len()
    }

    pub fn iterations(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    pub fn parameter_count(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// One parameter's draws, chain by chain.
    pub fn chain_values(&self, param: usize) -> Vec<Vec<f64>> {
        self.draws
            .iter()
            .map(|chain| chain.iter().map(|d| d[param]).collect())
            .collect()
    }

    /// One parameter's draws from all chains, in chain order.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.draws.iter().flatten().map(|d| d[param]).collect()
    }

    /// All draws from all chains, in chain order.
    pub fn pooled_draws(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.iter().flatten().map(Vec::as_slice)
    }
}

/// Raw output of one chain on the unconstrained scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub draws: Vec<Vec<f64>>,
    pub acceptance: f64,
}

/// Lower Cholesky factor of a small symmetric positive-definite matrix.
pub(crate) fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Running mean and covariance.
#[derive(Debug, Clone)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<Vec<f64>>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; d],
            m2: vec![vec![0.0; d]; d],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / self.n as f64;
        }
        for (row, di) in self.m2.iter_mut().zip(&delta) {
            for ((m, xj), mj) in row.iter_mut().zip(x).zip(&self.mean) {
                *m += di * (xj - mj);
            }
        }
    }

    /// Sample covariance shrunk toward a small multiple of the identity.
    fn regularized(&self) -> Vec<Vec<f64>> {
        let n = self.n as f64;
        let d = self.mean.len();
        let mut cov = vec![vec![0.0; d]; d];
        for (i, (row, m2)) in cov.iter_mut().zip(&self.m2).enumerate() {
            for (c, m) in row.iter_mut().zip(m2) {
                *c = n / (n + 5.0) * (m / (n - 1.0).max(1.0));
            }
            row[i] += 1e-3 * 5.0 / (n + 5.0);
        }
        cov
    }
}

/// Warmup schedule: an initial buffer tuning only the scale, doubling windows
/// that also estimate the proposal covariance, and a terminal scale-only buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
struct WarmupSchedule {
    init_buffer: usize,
    terminal_start: usize,
    window_ends: Vec<usize>,
}

impl WarmupSchedule {
    fn new(warmup: usize) -> Self {
        let (init, term, base) = if warmup >= 150 {
            (75, 50, 25)
        } else {
            let init = warmup * 15 / 100;
            let term = warmup / 10;
            (init, term, warmup - init - term)
        };
        let terminal_start = warmup - term;
        let mut window_ends = Vec::new();
        let mut start = init;
        let mut width = base.max(1);
        while start < terminal_start {
            let mut end = start + width;
            // absorb a trailing window shorter than twice the next one
            if end + 2 * width > terminal_start {
                end = terminal_start;
            }
            window_ends.push(end);
            start = end;
            width *= 2;
        }
        Self {
            init_buffer: init,
            terminal_start,
            window_ends,
        }
    }
}

fn propose(x: &[f64], chol: &[Vec<f64>], scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let z: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(rng)).collect();
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + scale * (0..=i).map(|k| chol[i][k] * z[k]).sum::<f64>())
        .collect()
}

fn metropolis_accept(current: f64, proposed: f64, rng: &mut ChaCha8Rng) -> (bool, f64) {
    let a = if proposed.is_nan() {
        0.0
    } else {
        (proposed - current).exp().min(1.0)
    };
    (rng.random::<f64>() < a, a)
}

/// Draws a finite starting point, retrying from new initial points.
pub(crate) fn find_start<D: LogDensity + ?Sized>(density: &D, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
    for _ in 0..200 {
        let x = density.initial_point(rng);
        let lp = density.log_density(&x)?;
        if lp.is_finite() {
            return Ok((x, lp));
        }
    }
    Err(HgfError::SamplerFailure("no initial point with finite log density".into()))
}

/// Robbins-Monro tuning of a log proposal scale toward a target acceptance.
#[derive(Debug, Clone)]
pub(crate) struct ScaleAdapter {
    pub log_scale: f64,
    step: usize,
    target: f64,
    sum: f64,
    count: usize,
}

impl ScaleAdapter {
    pub fn new(dim: usize, target: f64) -> Self {
        Self {
            log_scale: (2.38 / (dim as f64).sqrt()).ln(),
            step: 0,
            target,
            sum: 0.0,
            count: 0,
        }
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn update(&mut self, acceptance_probability: f64) {
        self.step += 1;
        self.log_scale += (acceptance_probability - self.target) / (self.step as f64).powf(0.6);
        self.sum += self.log_scale;
        self.count += 1;
    }

    /// Restarts the step-size sequence after the proposal shape changed.
    pub fn restart(&mut self, dim: usize) {
        *self = Self::new(dim, self.target);
    }

    /// Forgets the running average without touching the scale.
    pub fn reset_average(&mut self) {
        self.sum = 0.0;
        self.count = 0;
    }

    /// Freezes at the average over the updates since the last reset.
    pub fn freeze(&mut self) {
        if self.count > 0 {
            self.log_scale = self.sum / self.count as f64;
        }
    }
}

/// Random-walk proposal for one block of coordinates whose covariance and
/// scale are tuned during warmup and frozen afterwards.
#[derive(Debug, Clone)]
pub(crate) struct AdaptiveProposal {
    chol: Vec<Vec<f64>>,
    adapter: ScaleAdapter,
    schedule: WarmupSchedule,
    window: Welford,
    next_end: usize,
    iteration: usize,
    warmup: usize,
    warmup_accepts: usize,
}

impl AdaptiveProposal {
    pub fn new(dim: usize, warmup: usize, target_acceptance: f64) -> Self {
        Self {
            chol: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 0.1 } else { 0.0 }).collect())
                .collect(),
            adapter: ScaleAdapter::new(dim, target_acceptance),
            schedule: WarmupSchedule::new(warmup),
            window: Welford::new(dim),
            next_end: 0,
            iteration: 0,
            warmup,
            warmup_accepts: 0,
        }
    }

    pub fn propose(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        propose(x, &self.chol, self.adapter.scale(), rng)
    }

    /// Metropolis step from (`x`, `lp`) given the proposal `y` and its log
    /// density; adapts while in warmup. Returns whether `y` was accepted.
    pub fn step(&mut self, x: &mut Vec<f64>, lp: &mut f64, y: Vec<f64>, lq: f64, rng: &mut ChaCha8Rng) -> bool {
        let (accept, a) = metropolis_accept(*lp, lq, rng);
        if accept {
            *x = y;
            *lp = lq;
        }
        if self.iteration < self.warmup {
            self.adapt(x, a, accept);
        }
        self.iteration += 1;
        accept
    }

    fn adapt(&mut self, x: &[f64], a: f64, accepted: bool) {
        let it = self.iteration;
        let dim = x.len();
        self.warmup_accepts += usize::from(accepted);
        self.adapter.update(a);
        if it >= self.schedule.init_buffer && it < self.schedule.terminal_start {
            self.window.push(x);
        }
        if self.schedule.window_ends.get(self.next_end) == Some(&(it + 1)) {
            if let Some(l) = cholesky(&self.window.regularized()) {
                self.chol = l;
                self.adapter.restart(dim);
            }
            self.window = Welford::new(dim);
            self.next_end += 1;
        }
        if it + 1 == self.schedule.terminal_start {
            self.adapter.reset_average();
        }
        if it + 1 == self.warmup {
            self.adapter.freeze();
        }
    }

    /// False when warmup ran and rejected every proposal.
    pub fn warmup_moved(&self) -> bool {
        self.warmup == 0 || self.warmup_accepts > 0
    }
}

/// Adaptive random-walk Metropolis for one chain.
pub fn run_chain<D: LogDensity + ?Sized>(density: &D, config: &SamplerConfig, chain: usize) -> Result<Chain> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, chain as u64));
    let (mut x, mut lp) = find_start(density, &mut rng)?;
    let mut proposal = AdaptiveProposal::new(density.dim(), config.warmup, config.target_acceptance);

    for _ in 0..config.warmup {
        let y = proposal.propose(&x, &mut rng);
        let lq = density.log_density(&y)?;
        proposal.step(&mut x, &mut lp, y, lq, &mut rng);
    }
    if !proposal.warmup_moved() {
        return Err(HgfError::SamplerFailure(format!(
            "chain {chain} rejected every warmup proposal"
        )));
    }

    let mut draws = Vec::with_capacity(config.draws);
    let mut accepts = 0usize;
    for _ in 0..config.draws {
        let y = proposal.propose(&x, &mut rng);
        let lq = density.log_density(&y)?;
        accepts += usize::from(proposal.step(&mut x, &mut lp, y, lq, &mut rng));
        draws.push(x.clone());
    }
    Ok(Chain {
        draws,
        acceptance: accepts as f64 / config.draws as f64,
    })
}

/// Runs `config.chains` chains in parallel; results are in chain order and
/// independent of scheduling.
pub fn sample_density<D: LogDensity + ?Sized>(density: &D, config: &SamplerConfig) -> Result<Vec<Chain>> {
    config.validate()?;
    (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(density, config, c))
        .collect()
}

/// Posterior samples of the parameters in `space` for one subject, reported
/// on the natural scale.
pub fn sample(space: &ParameterSpace, subject: &Subject, model: &Model, config: &SamplerConfig) -> Result<PosteriorSamples> {
    space.validate()?;
    let density = SubjectPosterior { space, subject, model };
    let chains = sample_density(&density, config)?;
    Ok(PosteriorSamples {
        names: space.names(),
        acceptance: chains.iter().map(|c| c.acceptance).collect(),
        draws: chains
            .into_iter()
            .map(|c| c.draws.iter().map(|y| space.to_natural(y)).collect())
            .collect(),
    })
}

/// Wraps unconstrained chains of a generic density as samples.
pub fn samples_from_chains(names: Vec<String>, chains: Vec<Chain>) -> PosteriorSamples {
    PosteriorSamples {
        names,
        acceptance: chains.iter().map(|c| c.acceptance).collect(),
        draws: chains.into_iter().map(|c| c.draws).collect(),
    }
}
