use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HgfError, Result};
use crate::inference::diagnostics::variance;
use crate::inference::model::{Model, Subject};
use crate::inference::sampler::PosteriorSamples;
use crate::inference::space::ParameterSpace;

pub const ELPD_METHOD_NOTE: &str =
    "ELPD estimated with WAIC (pointwise log predictive density minus pointwise posterior variance) in place of leave-one-out cross-validation";

/// Per-trial log-likelihoods for every pooled posterior draw, `[draw][trial]`.
pub fn pointwise_matrix(
    model: &Model,
    space: &ParameterSpace,
    samples: &PosteriorSamples,
    subject: &Subject,
) -> Result<Vec<Vec<f64>>> {
    space.check_dimension(samples.parameter_count())?;
    let draws: Vec<&[f64]> = samples.pooled_draws().collect();
    draws
        .par_iter()
        .map(|d| model.pointwise_log_likelihood(space, d, subject).map(|p| p.values))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waic {
    pub elpd: f64,
    /// Σ pointwise posterior variance of the log-likelihood.
    pub p_waic: f64,
    pub se: f64,
    pub lppd_pointwise: Vec<f64>,
    pub variance_pointwise: Vec<f64>,
    pub elpd_pointwise: Vec<f64>,
}

fn log_mean_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (x.iter().map(|v| (v - m).exp()).sum::<f64>() / x.len() as f64).ln()
}

/// WAIC from a `[draw][trial]` log-likelihood matrix.
pub fn waic(matrix: &[Vec<f64>]) -> Result<Waic> {
    if matrix.len() < 2 {
        return Err(HgfError::Validation("WAIC needs at least 2 posterior draws".into()));
    }
    let n = matrix[0].len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(HgfError::Alignment("log-likelihood matrix rows differ in length".into()));
    }
    let mut lppd_pointwise = Vec::with_capacity(n);
    let mut variance_pointwise = Vec::with_capacity(n);
    let mut column = vec![0.0; matrix.len()];
    for i in 0..n {
        for (c, row) in column.iter_mut().zip(matrix) {
            *c = row[i];
        }
        lppd_pointwise.push(log_mean_exp(&column));
        variance_pointwise.push(variance(&column));
    }
    let elpd_pointwise: Vec<f64> = lppd_pointwise
        .iter()
        .zip(&variance_pointwise)
        .map(|(l, v)| l - v)
        .collect();
    Ok(Waic {
        elpd: elpd_pointwise.iter().sum(),
        p_waic: variance_pointwise.iter().sum(),
        se: sum_se(&elpd_pointwise),
        lppd_pointwise,
        variance_pointwise,
        elpd_pointwise,
    })
}

/// Standard error of a sum of n pointwise terms: √(n · var).
fn sum_se(pointwise: &[f64]) -> f64 {
    if pointwise.len() < 2 {
        return 0.0;
    }
    (pointwise.len() as f64 * variance(pointwise)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelElpd {
    pub name: String,
    pub rank: usize,
    pub elpd: f64,
    pub p_waic: f64,
    pub se: f64,
    /// ELPD of the best model minus this one (0 for the best).
    pub elpd_diff: f64,
    /// Standard error of `elpd_diff` over pointwise differences.
    pub se_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub method: String,
    pub note: String,
    /// Best first.
    pub models: Vec<ModelElpd>,
    #[serde(skip)]
    pub waic: Vec<Waic>,
}

impl ComparisonReport {
    pub fn ranking(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.name.as_str()).collect()
    }
}

/// Ranks models by WAIC from their pointwise matrices (same trials for all).
pub fn compare_pointwise(names: &[String], matrices: &[Vec<Vec<f64>>]) -> Result<ComparisonReport> {
    if names.len() != matrices.len() {
        return Err(HgfError::Alignment(format!("{} names for {} models", names.len(), matrices.len())));
    }
    if matrices.len() < 2 {
        return Err(HgfError::Validation("comparison needs at least 2 models".into()));
    }
    let waics = matrices.iter().map(|m| waic(m)).collect::<Result<Vec<_>>>()?;
    let trials = waics[0].elpd_pointwise.len();
    if let Some(w) = waics.iter().find(|w| w.elpd_pointwise.len() != trials) {
        return Err(HgfError::Alignment(format!(
            "models see different trial counts: {trials} and {}",
            w.elpd_pointwise.len()
        )));
    }
    let mut order: Vec<usize> = (0..waics.len()).collect();
    order.sort_by(|&a, &b| waics[b].elpd.total_cmp(&waics[a].elpd).then(a.cmp(&b)));
    let best = &waics[order[0]];
    let models = order
        .iter()
        .enumerate()
        .map(|(rank, &k)| {
            let diff: Vec<f64> = best
                .elpd_pointwise
                .iter()
                .zip(&waics[k].elpd_pointwise)
                .map(|(b, m)| b - m)
                .collect();
            ModelElpd {
                name: names[k].clone(),
                rank: rank + 1,
                elpd: waics[k].elpd,
                p_waic: waics[k].p_waic,
                se: waics[k].se,
                elpd_diff: diff.iter().sum(),
                se_diff: sum_se(&diff),
            }
        })
        .collect();
    Ok(ComparisonReport {
        method: "waic".into(),
        note: ELPD_METHOD_NOTE.into(),
        models,
        waic: order.iter().map(|&k| waics[k].clone()).collect(),
    })
}

/// A fitted model entering a comparison.
pub struct Candidate<'a> {
    pub name: String,
    pub model: &'a Model,
    pub space: &'a ParameterSpace,
    pub samples: &'a PosteriorSamples,
}

/// Ranks fitted models on the same subject by WAIC.
pub fn compare(candidates: &[Candidate<'_>], subject: &Subject) -> Result<ComparisonReport> {
    let matrices = candidates
        .iter()
        .map(|c| pointwise_matrix(c.model, c.space, c.samples, subject))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = candidates.iter().map(|c| c.name.clone()).collect();
    compare_pointwise(&names, &matrices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(seed: u64, draws: usize, trials: usize, shift: f64) -> Vec<Vec<f64>> {
        let mut state = seed;
        (0..draws)
            .map(|_| {
                (0..trials)
                    .map(|i| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                        -0.3 - 0.05 * (i % 7) as f64 - 0.2 * u - shift
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn waic_by_hand() {
        let m = vec![vec![-1.0, -0.5], vec![-2.0, -0.7], vec![-1.5, -0.6]];
        let w = waic(&m).unwrap();
        let lppd0 = ((-1f64).exp() + (-2f64).exp() + (-1.5f64).exp()).ln() - 3f64.ln();
        let lppd1 = ((-0.5f64).exp() + (-0.7f64).exp() + (-0.6f64).exp()).ln() - 3f64.ln();
        let var0 = 0.25;
        let var1 = 0.01;
        assert!((w.elpd - (lppd0 - var0 + lppd1 - var1)).abs() < 1e-12);
        assert!((w.p_waic - 0.26).abs() < 1e-12);
        let d = (lppd0 - var0) - (lppd1 - var1);
        assert!((w.se - (2.0 * d * d / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decomposition_recomputes() {
        let w = waic(&matrix(3, 200, 50, 0.0)).unwrap();
        let lppd: f64 = w.lppd_pointwise.iter().sum();
        assert!((w.elpd - (lppd - w.p_waic)).abs() < 1e-10);
        assert!(w.variance_pointwise.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn self_comparison_is_a_tie() {
        let m = matrix(1, 100, 40, 0.0);
        let r = compare_pointwise(&["a".into(), "b".into()], &[m.clone(), m]).unwrap();
        assert_eq!(r.models[1].elpd_diff, 0.0);
        assert_eq!(r.models[1].se_diff, 0.0);
        assert_eq!(r.ranking(), vec!["a", "b"]);
    }

    #[test]
    fn better_model_ranks_first() {
        let r = compare_pointwise(
            &["worse".into(), "better".into()],
            &[matrix(1, 100, 40, 0.1), matrix(1, 100, 40, 0.0)],
        )
        .unwrap();
        assert_eq!(r.ranking(), vec!["better", "worse"]);
        assert!(r.models[1].elpd_diff > 0.0);
        assert!(r.models.windows(2).all(|p| p[0].elpd >= p[1].elpd));
    }

    #[test]
    fn mismatched_trials_are_an_alignment_error() {
        let r = compare_pointwise(&["a".into(), "b".into()], &[matrix(1, 10, 40, 0.0), matrix(1, 10, 41, 0.0)]);
        assert!(matches!(r, Err(HgfError::Alignment(_))));
    }
}
