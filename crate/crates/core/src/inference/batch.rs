use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HgfError, Result};
use crate::ghgf::PresetSpec;
use crate::inference::diagnostics::{summarize, Summary};
use crate::inference::model::{Model, Subject};
use crate::inference::optimize::{map_fit, MapEstimate, OptimizerConfig};
use crate::inference::sampler::{derive_seed, sample, PosteriorSamples, SamplerConfig};
use crate::inference::space::ParameterSpace;
use crate::io::{InputSeries, SwitchingTask};
use crate::response::{sample_bernoulli, ResponseModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMode {
    Map(OptimizerConfig),
    Sample { sampler: SamplerConfig, hdi_mass: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitOutcome {
    Map(MapEstimate),
    Sample { samples: PosteriorSamples, summary: Summary },
}

impl FitOutcome {
    /// Natural-scale point estimate: the MAP point or the posterior means.
    pub fn estimate(&self) -> Vec<f64> {
        match self {
            FitOutcome::Map(m) => m.values.clone(),
            FitOutcome::Sample { summary, .. } => summary.parameters.iter().map(|p| p.mean).collect(),
        }
    }

    /// Which estimates ended on the edge of the search box (MAP only).
    pub fn at_bound(&self) -> Vec<bool> {
        match self {
            FitOutcome::Map(m) => m.at_bound.clone(),
            FitOutcome::Sample { summary, .. } => vec![false; summary.parameters.len()],
        }
    }
}

/// Fits one subject; `seed` overrides the mode's own seed.
pub fn fit_subject(space: &ParameterSpace, subject: &Subject, model: &Model, mode: &FitMode, seed: u64) -> Result<FitOutcome> {
    match *mode {
        FitMode::Map(config) => map_fit(space, subject, model, &OptimizerConfig { seed, ..config }).map(FitOutcome::Map),
        FitMode::Sample { sampler, hdi_mass } => {
            let samples = sample(space, subject, model, &SamplerConfig { seed, ..sampler })?;
            let summary = summarize(&samples, hdi_mass)?;
            Ok(FitOutcome::Sample { samples, summary })
        }
    }
}

/// Fits every subject independently on `workers` threads. Subject `i` uses
/// the seed derived from (`seed`, `i`), so results do not depend on the
/// worker count. Failures are returned per subject.
pub fn batch_fit(
    space: &ParameterSpace,
    dataset: &[Subject],
    model: &Model,
    mode: &FitMode,
    workers: usize,
    seed: u64,
) -> Result<Vec<Result<FitOutcome>>> {
    if dataset.is_empty() {
        return Err(HgfError::Validation("dataset has no subjects".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HgfError::Validation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        dataset
            .par_iter()
            .enumerate()
            .map(|(i, subject)| fit_subject(space, subject, model, mode, derive_seed(seed, i as u64)))
            .collect()
    }))
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub subjects: usize,
    pub trials: usize,
    pub preset: PresetSpec,
    pub response: ResponseModel,
    pub space: ParameterSpace,
    /// Uniform ranges of the true values on the unconstrained scale, one per parameter.
    pub truth_ranges: Vec<(f64, f64)>,
    pub mode: FitMode,
    pub workers: usize,
    pub seed: u64,
}

impl Default for RecoveryConfig {
    /// 50 subjects, 320 trials, ω ~ U(−4.5, −1.5) and ln t ~ U(ln 0.5, ln 4)
    /// on the 3-level binary network, fitted by MAP.
    fn default() -> Self {
        let preset = PresetSpec::binary(3);
        Self {
            subjects: 50,
            trials: 320,
            space: ParameterSpace::tonic_volatility_and_temperature(preset.second_level()),
            preset,
            response: ResponseModel::temperature(1.0),
            truth_ranges: vec![(-4.5, -1.5), (0.5f64.ln(), 4f64.ln())],
            mode: FitMode::Map(OptimizerConfig::default()),
            workers: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectRecovery {
    pub subject: usize,
    /// Natural scale.
    pub truth: Vec<f64>,
    pub estimate: Option<Vec<f64>>,
    pub at_bound: Vec<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub names: Vec<String>,
    pub subjects: Vec<SubjectRecovery>,
    /// Pearson r between true and recovered values on the unconstrained
    /// scale (ω and ln t); NaN when either side has no spread.
    pub correlations: Vec<f64>,
    /// Recovered minus true, on the unconstrained scale, per parameter and fitted subject.
    pub residuals: Vec<Vec<f64>>,
    /// Subjects that could not be simulated or fitted.
    pub excluded: Vec<usize>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    let r = sxy / (sxx * syy).sqrt();
    if r.is_finite() {
        r.clamp(-1.0, 1.0)
    } else {
        f64::NAN
    }
}

/// The simulating model, true natural-scale parameters per subject, and each
/// subject's simulated data (or the reason it could not be simulated).
pub type SimulatedSubjects = (Model, Vec<Vec<f64>>, Vec<Result<Subject>>);

/// Simulated subjects with known parameters sharing one input series.
pub fn simulate_subjects(config: &RecoveryConfig) -> Result<SimulatedSubjects> {
    config.space.validate()?;
    if config.truth_ranges.len() != config.space.len() {
        return Err(HgfError::Dimension {
            expected: config.space.len(),
            got: config.truth_ranges.len(),
        });
    }
    if let Some(r) = config.truth_ranges.iter().find(|(lo, hi)| !(lo <= hi && lo.is_finite() && hi.is_finite())) {
        return Err(HgfError::Validation(format!("invalid range {r:?}")));
    }
    if config.subjects == 0 {
        return Err(HgfError::Validation("need at least one subject".into()));
    }
    let model = Model::from_preset(&config.preset, config.response.clone())?;
    let u = SwitchingTask::with_trials(config.trials).generate(derive_seed(config.seed, u64::MAX))?;
    let inputs = InputSeries::single(0, &u);
    let mut truths = Vec::with_capacity(config.subjects);
    let mut subjects = Vec::with_capacity(config.subjects);
    for i in 0..config.subjects {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1_000_000 + i as u64));
        let unconstrained: Vec<f64> = config
            .truth_ranges
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..=hi))
            .collect();
        let truth = config.space.to_natural(&unconstrained);
        let subject = model
            .action_probabilities(&config.space, &truth, &inputs)
            .and_then(|p| Subject::new(inputs.clone(), sample_bernoulli(&p, derive_seed(config.seed, 2_000_000 + i as u64))));
        truths.push(truth);
        subjects.push(subject);
    }
    Ok((model, truths, subjects))
}

/// Simulate-then-fit parameter recovery.
pub fn recover(config: &RecoveryConfig) -> Result<RecoveryReport> {
    let (model, truths, simulated) = simulate_subjects(config)?;
    let mut excluded = Vec::new();
    let mut errors = vec![None; config.subjects];
    let mut fit_index = Vec::new();
    let mut dataset = Vec::new();
    for (i, s) in simulated.into_iter().enumerate() {
        match s {
            Ok(s) => {
                fit_index.push(i);
                dataset.push(s);
            }
            Err(e) => {
                excluded.push(i);
                errors[i] = Some(format!("simulation failed: {e}"));
            }
        }
    }
    let fits = if dataset.is_empty() {
        Vec::new()
    } else {
        batch_fit(&config.space, &dataset, &model, &config.mode, config.workers, config.seed)?
    };

    let mut subjects: Vec<SubjectRecovery> = truths
        .iter()
        .enumerate()
        .map(|(i, t)| SubjectRecovery {
            subject: i,
            truth: t.clone(),
            estimate: None,
            at_bound: vec![false; t.len()],
            error: errors[i].take(),
        })
        .collect();
    for (&i, fit) in fit_index.iter().zip(fits) {
        match fit {
            Ok(f) => {
                subjects[i].estimate = Some(f.estimate());
                subjects[i].at_bound = f.at_bound();
            }
            Err(e) => {
                excluded.push(i);
                subjects[i].error = Some(format!("fit failed: {e}"));
            }
        }
    }
    excluded.sort_unstable();

    let fitted: Vec<&SubjectRecovery> = subjects.iter().filter(|s| s.estimate.is_some()).collect();
    let mut correlations = Vec::with_capacity(config.space.len());
    let mut residuals = Vec::with_capacity(config.space.len());
    for (k, p) in config.space.parameters.iter().enumerate() {
        let truth: Vec<f64> = fitted.iter().map(|s| p.transform.forward(s.truth[k])).collect();
        let est: Vec<f64> = fitted
            .iter()
            .map(|s| p.transform.forward(s.estimate.as_ref().map_or(f64::NAN, |e| e[k])))
            .collect();
        correlations.push(if fitted.len() > 1 { pearson(&truth, &est) } else { f64::NAN });
        residuals.push(est.iter().zip(&truth).map(|(e, t)| e - t).collect());
    }
    Ok(RecoveryReport {
        names: config.space.names(),
        subjects,
        correlations,
        residuals,
        excluded,
    })
}
