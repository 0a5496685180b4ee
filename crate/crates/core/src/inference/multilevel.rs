use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HgfError, Result};
use crate::inference::model::{or_neg_infinity, Model, Subject};
use crate::inference::sampler::{derive_seed, AdaptiveProposal, PosteriorSamples, SamplerConfig};
use crate::inference::space::{Parameter, ParameterSpace, Prior, Target, Transform};

/// Hyperpriors of the group-level parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPriors {
    pub mu_omega: Prior,
    pub sigma_omega: Prior,
    pub mu_log_temperature: Prior,
    pub sigma_log_temperature: Prior,
}

impl Default for GroupPriors {
    fn default() -> Self {
        Self {
            mu_omega: Prior::Normal { mean: -3.0, sd: 2.0 },
            sigma_omega: Prior::HalfNormal { sd: 1.0 },
            mu_log_temperature: Prior::Normal { mean: 0.0, sd: 1.0 },
            sigma_log_temperature: Prior::HalfNormal { sd: 1.0 },
        }
    }
}

impl GroupPriors {
    pub fn validate(&self) -> Result<()> {
        for p in [self.mu_omega, self.sigma_omega, self.mu_log_temperature, self.sigma_log_temperature] {
            p.validate()?;
        }
        for p in [self.sigma_omega, self.sigma_log_temperature] {
            if p.support().0 < 0.0 {
                return Err(HgfError::Validation(format!("group sd prior {p:?} allows negative values")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultilevelConfig {
    pub sampler: SamplerConfig,
    pub priors: GroupPriors,
    /// Node whose tonic volatility varies across subjects.
    pub omega_node: usize,
}

impl Default for MultilevelConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig::default(),
            priors: GroupPriors::default(),
            omega_node: 1,
        }
    }
}

/// Group means and sds of ω and ln t, then each subject's ω and t.
pub fn multilevel_names(subjects: usize) -> Vec<String> {
    let mut names: Vec<String> = ["mu_omega", "sigma_omega", "mu_log_temperature", "sigma_log_temperature"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..subjects).map(|i| format!("omega.{i}")));
    names.extend((0..subjects).map(|i| format!("inverse_temperature.{i}")));
    names
}

struct Hierarchy<'a> {
    dataset: &'a [Subject],
    model: &'a Model,
    space: ParameterSpace,
    priors: GroupPriors,
}

impl Hierarchy<'_> {
    /// Hyperparameters are (μ_ω, ln σ_ω, μ_lnt, ln σ_lnt).
    fn log_hyperprior(&self, h: &[f64]) -> f64 {
        let p = &self.priors;
        p.mu_omega.log_density(h[0])
            + p.sigma_omega.log_density(h[1].exp())
            + h[1]
            + p.mu_log_temperature.log_density(h[2])
            + p.sigma_log_temperature.log_density(h[3].exp())
            + h[3]
    }

    fn subject_values(h: &[f64], z: &[f64]) -> [f64; 2] {
        [h[0] + h[1].exp() * z[0], (h[2] + h[3].exp() * z[1]).exp()]
    }

    fn log_likelihood(&self, i: usize, h: &[f64], z: &[f64]) -> Result<f64> {
        let values = Self::subject_values(h, z);
        or_neg_infinity(
            self.model
                .pointwise_log_likelihood(&self.space, &values, &self.dataset[i])
                .map(|p| p.total()),
        )
    }

    fn log_offset_prior(z: &[f64]) -> f64 {
        -0.5 * z.iter().map(|v| v * v).sum::<f64>()
    }

    /// Log density of the hyperparameters given fixed subject values
    /// (ωᵢ, ln tᵢ), i.e. the centered parameterization.
    fn log_centered(&self, h: &[f64], theta: &[[f64; 2]]) -> f64 {
        let prior = self.log_hyperprior(h);
        if !prior.is_finite() {
            return prior;
        }
        let (s_w, s_t) = (h[1].exp(), h[3].exp());
        prior
            + theta
                .iter()
                .map(|t| {
                    let a = (t[0] - h[0]) / s_w;
                    let b = (t[1] - h[2]) / s_t;
                    -0.5 * (a * a + b * b) - h[1] - h[3]
                })
                .sum::<f64>()
    }

    fn chain(&self, config: &SamplerConfig, chain: usize) -> Result<(Vec<Vec<f64>>, f64)> {
        let n = self.dataset.len();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, chain as u64));
        let mut start = None;
        for _ in 0..200 {
            let h = vec![
                self.priors.mu_omega.sample(&mut rng).clamp(-8.0, 0.0),
                (0.1 + 0.4 * rand::Rng::random::<f64>(&mut rng)).ln(),
                self.priors.mu_log_temperature.sample(&mut rng).clamp(-2.0, 2.0),
                (0.1 + 0.4 * rand::Rng::random::<f64>(&mut rng)).ln(),
            ];
            let z: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let ll = (0..n).map(|i| self.log_likelihood(i, &h, &z[i])).collect::<Result<Vec<_>>>()?;
            if ll.iter().all(|v| v.is_finite()) && self.log_hyperprior(&h).is_finite() {
                start = Some((h, z, ll));
                break;
            }
        }
        let (mut h, mut z, mut ll) =
            start.ok_or_else(|| HgfError::SamplerFailure("no finite starting point for the hierarchy".into()))?;

        let target = config.target_acceptance;
        let mut hyper = AdaptiveProposal::new(4, config.warmup, target);
        let mut centered = AdaptiveProposal::new(4, config.warmup, target);
        let mut blocks: Vec<AdaptiveProposal> = (0..n).map(|_| AdaptiveProposal::new(2, config.warmup, target)).collect();
        let mut draws = Vec::with_capacity(config.draws);
        let mut accepts = 0usize;
        let mut proposals = 0usize;

        for it in 0..config.warmup + config.draws {
            // hyperparameter block, offsets held fixed
            let h_new = hyper.propose(&h, &mut rng);
            let prior_new = self.log_hyperprior(&h_new);
            let ll_new = if prior_new.is_finite() {
                (0..n).map(|i| self.log_likelihood(i, &h_new, &z[i])).collect::<Result<Vec<_>>>()?
            } else {
                vec![f64::NEG_INFINITY; n]
            };
            let mut current = self.log_hyperprior(&h) + ll.iter().sum::<f64>();
            let proposed = prior_new + ll_new.iter().sum::<f64>();
            let accepted = hyper.step(&mut h, &mut current, h_new, proposed, &mut rng);
            if accepted {
                ll = ll_new;
            }
            if it >= config.warmup {
                accepts += usize::from(accepted);
                proposals += 1;
            }

            // the same hyperparameters again with subject values held fixed;
            // the likelihood is unchanged, only the offsets are re-expressed
            let theta: Vec<[f64; 2]> = z
                .iter()
                .map(|zi| [h[0] + h[1].exp() * zi[0], h[2] + h[3].exp() * zi[1]])
                .collect();
            let h_new = centered.propose(&h, &mut rng);
            let mut current = self.log_centered(&h, &theta);
            let proposed = self.log_centered(&h_new, &theta);
            if centered.step(&mut h, &mut current, h_new, proposed, &mut rng) {
                for (zi, t) in z.iter_mut().zip(&theta) {
                    zi[0] = (t[0] - h[0]) / h[1].exp();
                    zi[1] = (t[1] - h[2]) / h[3].exp();
                }
            }

            // one block per subject
            for i in 0..n {
                let z_new = blocks[i].propose(&z[i], &mut rng);
                let ll_i = self.log_likelihood(i, &h, &z_new)?;
                let mut current = Self::log_offset_prior(&z[i]) + ll[i];
                let proposed = Self::log_offset_prior(&z_new) + ll_i;
                let accepted = blocks[i].step(&mut z[i], &mut current, z_new, proposed, &mut rng);
                if accepted {
                    ll[i] = ll_i;
                }
                if it >= config.warmup {
                    accepts += usize::from(accepted);
                    proposals += 1;
                }
            }

            if it >= config.warmup {
                let mut row = vec![h[0], h[1].exp(), h[2], h[3].exp()];
                let values: Vec<[f64; 2]> = z.iter().map(|zi| Self::subject_values(&h, zi)).collect();
                row.extend(values.iter().map(|v| v[0]));
                row.extend(values.iter().map(|v| v[1]));
                draws.push(row);
            }
        }
        if !hyper.warmup_moved() {
            return Err(HgfError::SamplerFailure(format!(
                "chain {chain}: the group-level block rejected every warmup proposal"
            )));
        }
        Ok((draws, accepts as f64 / proposals.max(1) as f64))
    }
}

/// Joint posterior of group-level means and sds of ω and ln t together with
/// per-subject values, under a non-centered hierarchy
/// ωᵢ = μ_ω + σ_ω·zᵢ, ln tᵢ = μ_lnt + σ_lnt·z′ᵢ, with standard-normal offsets.
///
/// Each sweep updates the four hyperparameters (sds on the log scale) as one
/// Metropolis block with the offsets fixed, again with the subject values
/// fixed (a centered move that needs no likelihood evaluations), and then
/// each subject's two offsets as its own block.
/// Reported acceptance is the pooled rate over all blocks.
pub fn multilevel_sample(dataset: &[Subject], model: &Model, config: &MultilevelConfig) -> Result<PosteriorSamples> {
    if dataset.len() < 5 {
        return Err(HgfError::Validation(format!(
            "multilevel fitting needs at least 5 subjects, got {}",
            dataset.len()
        )));
    }
    config.sampler.validate()?;
    config.priors.validate()?;
    let space = ParameterSpace::new(vec![
        Parameter::new(
            Target::tonic_volatility(config.omega_node),
            Prior::Normal { mean: 0.0, sd: 1.0 },
            Transform::Identity,
        ),
        Parameter::new(Target::InverseTemperature, Prior::LogNormal { mean: 0.0, sd: 1.0 }, Transform::Log),
    ])?;
    let hierarchy = Hierarchy {
        dataset,
        model,
        space,
        priors: config.priors,
    };
    let chains = (0..config.sampler.chains)
        .into_par_iter()
        .map(|c| hierarchy.chain(&config.sampler, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSamples {
        names: multilevel_names(dataset.len()),
        acceptance: chains.iter().map(|c| c.1).collect(),
        draws: chains.into_iter().map(|c| c.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghgf::PresetSpec;
    use crate::io::{InputSeries, SwitchingTask};
    use crate::response::ResponseModel;

    fn identical_subjects(n: usize) -> (Model, Vec<Subject>) {
        let model = Model::from_preset(&PresetSpec::binary(3), ResponseModel::temperature(1.0)).unwrap();
        let u = SwitchingTask::with_trials(200).generate(3).unwrap();
        let inputs = InputSeries::single(0, &u);
        let space = ParameterSpace::tonic_volatility_and_temperature(1);
        let p = model.action_probabilities(&space, &[-3.0, 2.0], &inputs).unwrap();
        let y = crate::response::sample_bernoulli(&p, 5);
        let subject = Subject::new(inputs, y).unwrap();
        (model, vec![subject; n])
    }

    fn small() -> MultilevelConfig {
        MultilevelConfig {
            sampler: SamplerConfig {
                chains: 2,
                draws: 300,
                warmup: 300,
                seed: 4,
                ..SamplerConfig::default()
            },
            ..MultilevelConfig::default()
        }
    }

    #[test]
    fn needs_five_subjects() {
        let (model, data) = identical_subjects(4);
        assert!(multilevel_sample(&data, &model, &small()).is_err());
    }

    #[test]
    fn deterministic_and_shaped() {
        let (model, data) = identical_subjects(5);
        let a = multilevel_sample(&data, &model, &small()).unwrap();
        let b = multilevel_sample(&data, &model, &small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.names.len(), 4 + 2 * 5);
        assert_eq!(a.draws[0][0].len(), a.names.len());
        let t = a.index_of("inverse_temperature.3").unwrap();
        assert!(a.pooled(t).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn identical_subjects_shrink_group_spread() {
        let (model, data) = identical_subjects(6);
        let s = multilevel_sample(&data, &model, &small()).unwrap();
        let sigma = s.pooled(s.index_of("sigma_omega").unwrap());
        let mean = sigma.iter().sum::<f64>() / sigma.len() as f64;
        // prior mean of a HalfNormal(1) is 0.80
        assert!(mean < 0.5, "{mean}");
    }
}
