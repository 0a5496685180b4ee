use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{HgfError, Result};
use crate::inference::sampler::PosteriorSamples;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub r_hat: f64,
    pub ess_bulk: f64,
    pub mcse_mean: f64,
    pub hdi_lower: f64,
    pub hdi_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub hdi_mass: f64,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub parameters: Vec<ParameterSummary>,
}

impl Summary {
    pub fn get(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with n − 1 in the denominator.
pub(crate) fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Halves every chain (dropping the middle draw of odd-length chains).
pub fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let half = chains.first().map_or(0, Vec::len) / 2;
    chains
        .iter()
        .flat_map(|c| [c[..half].to_vec(), c[c.len() - half..].to_vec()])
        .collect()
}

/// Replaces values by normal scores of their pooled fractional ranks
/// (ties share the average rank).
pub fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pooled: Vec<(f64, usize)> = chains.iter().flatten().copied().zip(0..).collect();
    let s = pooled.len();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for p in &pooled[i..=j] {
            ranks[p.1] = r;
        }
        i = j + 1;
    }
    let normal = Normal::standard();
    let mut it = ranks.into_iter();
    chains
        .iter()
        .map(|c| {
            c.iter()
                .map(|_| normal.inverse_cdf((it.next().unwrap_or(0.0) - 0.375) / (s as f64 + 0.25)))
                .collect()
        })
        .collect()
}

/// Potential scale reduction of chains that are already split.
fn rhat_plain(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = mean(&chains.iter().map(|c| variance(c)).collect::<Vec<_>>());
    let between = variance(&means);
    ((n - 1.0) / n + between / within).sqrt()
}

/// Rank-normalized split R-hat: the larger of the bulk and folded (tail)
/// versions. Constant chains give NaN internally and are reported as 1.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    check_chains(chains)?;
    let split = split_chains(chains);
    if split[0].len() < 2 {
        return Err(HgfError::Diagnostics("chains need at least 4 draws".into()));
    }
    let pooled: Vec<f64> = split.iter().flatten().copied().collect();
    let median = median(&pooled);
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|v| (v - median).abs()).collect())
        .collect();
    let bulk = rhat_plain(&rank_normalize(&split));
    let tail = rhat_plain(&rank_normalize(&folded));
    let r = bulk.max(tail);
    Ok(if r.is_finite() { r } else { 1.0 })
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn check_chains(chains: &[Vec<f64>]) -> Result<()> {
    if chains.len() < 2 {
        return Err(HgfError::Diagnostics(format!(
            "convergence diagnostics need at least 2 chains, got {}",
            chains.len()
        )));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(HgfError::Diagnostics("chains have different lengths".into()));
    }
    Ok(())
}

/// Effective sample size from Geyer's initial monotone sequence estimator of
/// the multi-chain autocorrelation.
pub fn ess(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let autocov = |lag: usize| -> f64 {
        let total: f64 = chains
            .iter()
            .zip(&means)
            .map(|(c, mu)| (0..n - lag).map(|i| (c[i] - mu) * (c[i + lag] - mu)).sum::<f64>() / nf)
            .sum();
        total / m as f64
    };
    let mean_var = autocov(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += variance(&means);
    }
    let rho = |lag: usize| 1.0 - (mean_var - autocov(lag)) / var_plus;

    let mut rho_hat = vec![0.0; n];
    rho_hat[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho(1);
    rho_hat[1] = odd;
    let mut t = 1;
    while t + 3 < n && even + odd > 0.0 {
        even = rho(t + 1);
        odd = rho(t + 2);
        if even + odd >= 0.0 {
            rho_hat[t + 1] = even;
            rho_hat[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t.saturating_sub(2);
    if even > 0.0 && max_t + 1 < n {
        rho_hat[max_t + 1] = even;
    }
    let mut t = 1;
    while t + 2 <= max_t {
        if rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t] {
            rho_hat[t + 1] = (rho_hat[t - 1] + rho_hat[t]) / 2.0;
            rho_hat[t + 2] = rho_hat[t + 1];
        }
        t += 2;
    }
    let total = (m * n) as f64;
    let tail = if max_t + 1 < n { rho_hat[max_t + 1] } else { 0.0 };
    let tau = (-1.0 + 2.0 * rho_hat[..=max_t].iter().sum::<f64>() + tail).max(1.0 / total.log10());
    if rho_hat.iter().any(|r| r.is_nan()) {
        f64::NAN
    } else {
        total / tau
    }
}

/// ESS of the rank-normalized split chains.
pub fn ess_bulk(chains: &[Vec<f64>]) -> Result<f64> {
    check_chains(chains)?;
    Ok(ess(&rank_normalize(&split_chains(chains))))
}

/// Monte-Carlo standard error of the posterior mean.
pub fn mcse_mean(chains: &[Vec<f64>]) -> Result<f64> {
    check_chains(chains)?;
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let sd = variance(&pooled).sqrt();
    if sd == 0.0 {
        return Ok(0.0);
    }
    Ok(sd / ess(&split_chains(chains)).sqrt())
}

/// Narrowest interval spanning ⌊mass·n⌋ + 1 consecutive sorted draws; ties
/// go to the lowest interval.
pub fn hdi(draws: &[f64], mass: f64) -> Result<(f64, f64)> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(HgfError::Diagnostics(format!("HDI mass must lie in (0, 1), got {mass}")));
    }
    if draws.is_empty() {
        return Err(HgfError::Diagnostics("no draws".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let span = ((mass * n as f64).floor() as usize).min(n - 1);
    let mut best = 0;
    for lo in 1..n - span {
        if sorted[lo + span] - sorted[lo] < sorted[best + span] - sorted[best] {
            best = lo;
        }
    }
    Ok((sorted[best], sorted[best + span]))
}

/// Mean, sd, split R-hat, bulk ESS, MCSE and HDI of every parameter.
pub fn summarize(samples: &PosteriorSamples, hdi_mass: f64) -> Result<Summary> {
    if samples.chains() < 2 {
        return Err(HgfError::Diagnostics(format!(
            "summaries need at least 2 chains, got {}",
            samples.chains()
        )));
    }
    let parameters = (0..samples.parameter_count())
        .map(|p| {
            let chains = samples.chain_values(p);
            let pooled = samples.pooled(p);
            let (hdi_lower, hdi_upper) = hdi(&pooled, hdi_mass)?;
            Ok(ParameterSummary {
                name: samples.names[p].clone(),
                mean: mean(&pooled),
                sd: variance(&pooled).sqrt(),
                r_hat: split_rhat(&chains)?,
                ess_bulk: ess_bulk(&chains)?,
                mcse_mean: mcse_mean(&chains)?,
                hdi_lower,
                hdi_upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary {
        hdi_mass,
        chains: samples.chains(),
        draws_per_chain: samples.iterations(),
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(chains: Vec<Vec<f64>>) -> PosteriorSamples {
        PosteriorSamples {
            names: vec!["x".into()],
            acceptance: vec![0.3; chains.len()],
            draws: chains.into_iter().map(|c| c.into_iter().map(|v| vec![v]).collect()).collect(),
        }
    }

    #[test]
    fn constant_chains() {
        let s = summarize(&samples(vec![vec![2.5; 100], vec![2.5; 100]]), 0.94).unwrap();
        let p = &s.parameters[0];
        assert_eq!(p.r_hat, 1.0);
        assert_eq!(p.sd, 0.0);
        assert_eq!(p.mean, 2.5);
        assert_eq!((p.hdi_lower, p.hdi_upper), (2.5, 2.5));
    }

    #[test]
    fn hdi_of_uniform_grid() {
        let draws: Vec<f64> = (0..1000).map(f64::from).collect();
        let (lo, hi) = hdi(&draws, 0.94).unwrap();
        assert!((hi - lo - 940.0).abs() <= 1.0);
    }

    #[test]
    fn hdi_matches_brute_force() {
        let mut state = 12345u64;
        let draws: Vec<f64> = (0..777)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                -(1.0 - u).ln() * 2.0
            })
            .collect();
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        let span = (0.94 * 777.0f64).floor() as usize;
        // every window holding at least span + 1 draws
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..sorted.len() {
            for j in i..sorted.len() {
                if j - i >= span && sorted[j] - sorted[i] < best.0 {
                    best = (sorted[j] - sorted[i], sorted[i], sorted[j]);
                }
            }
        }
        assert_eq!(hdi(&draws, 0.94).unwrap(), (best.1, best.2));
    }

    #[test]
    fn mean_is_pooled_mean() {
        let s = summarize(&samples(vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 0.5, 7.0, 1.5]]), 0.5).unwrap();
        assert_eq!(s.parameters[0].mean, 19.0 / 8.0);
    }

    #[test]
    fn single_chain_is_an_error() {
        assert!(matches!(
            summarize(&samples(vec![vec![1.0, 2.0, 3.0, 4.0]]), 0.94),
            Err(HgfError::Diagnostics(_))
        ));
    }

    #[test]
    fn rank_normalization_ties_share_ranks() {
        let z = rank_normalize(&[vec![1.0, 1.0], vec![3.0, 2.0]]);
        assert_eq!(z[0][0], z[0][1]);
        assert!(z[1][0] > z[1][1] && z[1][1] > z[0][0]);
        assert!((z[0][0] - -0.628_904_217_632_189_8).abs() < 1e-9);
        assert!((z[1][0] - 1.049_131_397_963_970_7).abs() < 1e-9);
    }

    #[test]
    fn separated_chains_have_large_rhat() {
        let a: Vec<f64> = (0..200).map(|i| (f64::from(i) * 0.37).sin()).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 5.0).collect();
        assert!(split_rhat(&[a, b]).unwrap() > 1.5);
    }

    /// Four AR(1) chains with drifting means, reproduced draw for draw by a
    /// reference implementation of the rank-normalized diagnostics.
    fn drifting_chains() -> Vec<Vec<f64>> {
        let mut state = 2024u64;
        (0..4)
            .map(|c| {
                let mut x = 0.0;
                (0..200)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                        x = 0.7 * x + (u - 0.5) + 0.05 * f64::from(c);
                        x
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn diagnostics_match_reference_values() {
        let chains = drifting_chains();
        assert!((split_rhat(&chains).unwrap() - 1.146_754_455_870_330_2).abs() < 1e-9);
        assert!((ess_bulk(&chains).unwrap() - 22.083_204_023_068_458).abs() < 1e-7);
        assert!((mcse_mean(&chains).unwrap() - 0.091_353_878_596_052_39).abs() < 1e-9);
        let pooled: Vec<f64> = chains.concat();
        let (lo, hi) = hdi(&pooled, 0.94).unwrap();
        assert!((lo - -0.558_403_69).abs() < 1e-7 && (hi - 1.041_480_04).abs() < 1e-7);
    }
}
