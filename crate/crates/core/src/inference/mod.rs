//! Parameter inference for perceptual networks observed through a response
//! model: log posteriors, adaptive Metropolis sampling, convergence
//! diagnostics, MAP fitting, batch fitting, parameter recovery, WAIC model
//! comparison and a non-centered multilevel sampler.

mod batch;
mod compare;
mod diagnostics;
mod model;
mod multilevel;
mod optimize;
mod sampler;
mod space;

pub use batch::{
    batch_fit, fit_subject, pearson, recover, simulate_subjects, SimulatedSubjects, FitMode, FitOutcome, RecoveryConfig, RecoveryReport,
    SubjectRecovery,
};
pub use compare::{
    compare, compare_pointwise, pointwise_matrix, waic, Candidate, ComparisonReport, ModelElpd, Waic, ELPD_METHOD_NOTE,
};
pub use diagnostics::{
    ess, ess_bulk, hdi, mcse_mean, rank_normalize, split_chains, split_rhat, summarize, ParameterSummary, Summary,
};
pub use model::{log_posterior, FnDensity, LogDensity, Model, Subject, SubjectPosterior};
pub use multilevel::{multilevel_names, multilevel_sample, GroupPriors, MultilevelConfig};
pub use optimize::{map_fit, maximize, MapEstimate, OptimizerConfig, Optimum};
pub use sampler::{derive_seed, run_chain, sample, sample_density, samples_from_chains, Chain, PosteriorSamples, SamplerConfig};
pub use space::{NodeParameter, Parameter, ParameterSpace, Prior, Target, Transform};
