use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HgfError, Result};
use crate::inference::model::{LogDensity, Model, Subject, SubjectPosterior};
use crate::inference::sampler::derive_seed;
use crate::inference::space::ParameterSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Independent Nelder-Mead starts; the best end point wins.
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop when the simplex values spread less than this.
    pub tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            max_iterations: 1000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

fn in_box(x: &[f64], bounds: Option<&[(f64, f64)]>) -> bool {
    bounds.is_none_or(|b| x.iter().zip(b).all(|(v, (lo, hi))| v >= lo && v <= hi))
}

/// Nelder-Mead minimization of `f` from `start`; points outside `bounds`
/// score +∞.
fn nelder_mead<F>(f: &mut F, start: &[f64], step: &[f64], bounds: Option<&[(f64, f64)]>, config: &OptimizerConfig) -> Result<Optimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let d = start.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        if !in_box(x, bounds) {
            return Ok(f64::INFINITY);
        }
        let v = f(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), eval(start, &mut evaluations)?));
    for i in 0..d {
        let mut x = start.to_vec();
        x[i] += step[i];
        if !in_box(&x, bounds) {
            x[i] = start[i] - step[i];
        }
        let v = eval(&x, &mut evaluations)?;
        simplex.push((x, v));
    }

    for _ in 0..config.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if best.is_finite() && (worst - best).abs() <= config.tolerance && diameter <= 1e-8_f64.max(config.tolerance) {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let towards = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = towards(-1.0);
        let fr = eval(&xr, &mut evaluations)?;
        if fr < simplex[0].1 {
            let xe = towards(-2.0);
            let fe = eval(&xe, &mut evaluations)?;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[d].1 {
                let xc = towards(-0.5);
                let fc = eval(&xc, &mut evaluations)?;
                (xc, fc)
            } else {
                let xc = towards(0.5);
                let fc = eval(&xc, &mut evaluations)?;
                (xc, fc)
            };
            if fc < fr.min(simplex[d].1) {
                simplex[d] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x0.iter().zip(&entry.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                    let v = eval(&x, &mut evaluations)?;
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    Ok(Optimum {
        point,
        value,
        evaluations,
    })
}

/// Multi-start Nelder-Mead maximization of a log density. Starts are drawn
/// uniformly inside the density's bounds when it has them, else from its
/// initial points. Each run is polished by one restart from its end point.
pub fn maximize<D: LogDensity + ?Sized>(density: &D, config: &OptimizerConfig) -> Result<Optimum> {
    let bounds = density.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0));
    let step: Vec<f64> = match &bounds {
        Some(b) => b.iter().map(|(lo, hi)| 0.1 * (hi - lo)).collect(),
        None => vec![0.5; density.dim()],
    };
    let mut objective = |x: &[f64]| density.log_density(x).map(|v| -v);
    let mut best: Option<Optimum> = None;
    let mut evaluations = 0;
    for _ in 0..config.restarts.max(1) {
        let mut start = None;
        for _ in 0..50 {
            let x: Vec<f64> = match &bounds {
                Some(b) => b.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect(),
                None => density.initial_point(&mut rng),
            };
            evaluations += 1;
            if density.log_density(&x)?.is_finite() {
                start = Some(x);
                break;
            }
        }
        let Some(start) = start else { continue };
        let first = nelder_mead(&mut objective, &start, &step, bounds.as_deref(), config)?;
        let small: Vec<f64> = step.iter().map(|s| s * 0.1).collect();
        let polished = nelder_mead(&mut objective, &first.point, &small, bounds.as_deref(), config)?;
        evaluations += first.evaluations + polished.evaluations;
        let run = if polished.value <= first.value { polished } else { first };
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    match best {
        Some(b) if b.value.is_finite() => Ok(Optimum {
            point: b.point,
            value: -b.value,
            evaluations,
        }),
        _ => Err(HgfError::OptimizationFailure(
            "every start had a log density of −∞".into(),
        )),
    }
}

/// Maximum a posteriori estimate of one subject's parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapEstimate {
    pub names: Vec<String>,
    /// Natural scale.
    pub values: Vec<f64>,
    pub unconstrained: Vec<f64>,
    pub log_posterior: f64,
    /// Estimates within 0.1% of the search-box width of a bound.
    pub at_bound: Vec<bool>,
}

pub fn map_fit(space: &ParameterSpace, subject: &Subject, model: &Model, config: &OptimizerConfig) -> Result<MapEstimate> {
    space.validate()?;
    let density = SubjectPosterior { space, subject, model };
    let optimum = maximize(&density, config)?;
    let at_bound = space
        .parameters
        .iter()
        .zip(&optimum.point)
        .map(|(p, &y)| {
            let (lo, hi) = p.unconstrained_bounds();
            let tol = 1e-3 * (hi - lo);
            y - lo < tol || hi - y < tol
        })
        .collect();
    Ok(MapEstimate {
        names: space.names(),
        values: space.to_natural(&optimum.point),
        unconstrained: optimum.point,
        log_posterior: optimum.value,
        at_bound,
    })
}
