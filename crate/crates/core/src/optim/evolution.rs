//! (mu, lambda) evolution strategy with log-normal self-adaptation of the
//! mutation step size.
//!
//! Each offspring copies a uniformly chosen parent, first mutates its
//! inherited step size `sigma' = sigma * exp(tau * N(0,1))`, then its
//! parameters `x' = x + sigma' * N(0, I)`. The best mu offspring become the
//! next parents (comma selection — parents never survive); a separate
//! best-so-far bookkeeping entry holds the returned solution.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{ObjectiveFn, OptimError};

#[derive(Debug, Clone, PartialEq)]
pub struct EsConfig {
    pub mu: usize,
    pub lambda: usize,
    pub sigma0: f64,
    /// Self-adaptation learning rate; defaults to `1 / sqrt(2 n)`.
    pub tau: Option<f64>,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            mu: 5,
            lambda: 20,
            sigma0: 1.0,
            tau: None,
            max_iters: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EsTraceRow {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub sigma_median: f64,
}

#[derive(Debug, Clone)]
pub struct EsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub trace: Vec<EsTraceRow>,
    /// Best fitness seen up to each generation; non-decreasing by
    /// construction (the population best is not).
    pub best_so_far: Vec<f64>,
    pub non_finite_discarded: usize,
}

struct Individual {
    x: Vec<f64>,
    sigma: f64,
}

pub fn evolution_strategy(
    f: &dyn ObjectiveFn,
    x0: &[f64],
    cfg: &EsConfig,
) -> Result<EsResult, OptimError> {
    if cfg.mu == 0 || cfg.mu > cfg.lambda {
        return Err(OptimError::InvalidConfig(
            "need 1 <= mu <= lambda".into(),
        ));
    }
    if !cfg.sigma0.is_finite() || cfg.sigma0 <= 0.0 {
        return Err(OptimError::InvalidConfig("sigma0 must be > 0".into()));
    }
    let n = x0.len();
    let tau = cfg.tau.unwrap_or(1.0 / (2.0 * n as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut parents: Vec<Individual> = (0..cfg.mu)
        .map(|_| Individual {
            x: x0.to_vec(),
            sigma: cfg.sigma0,
        })
        .collect();

    let mut best_x = x0.to_vec();
    let mut best_value = f.value(x0);
    if !best_value.is_finite() {
        return Err(OptimError::NonFiniteObjective);
    }
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut best_so_far = Vec::with_capacity(cfg.max_iters);
    let mut non_finite = 0usize;

    for generation in 0..cfg.max_iters {
        // Mutations are drawn sequentially so the run is reproducible; the
        // pure fitness evaluations may fan out.
        let offspring: Vec<Individual> = (0..cfg.lambda)
            .map(|_| {
                let parent = &parents[rng.gen_range(0..cfg.mu)];
                let z: f64 = rng.sample(StandardNormal);
                let sigma = parent.sigma * (tau * z).exp();
                let x = parent
                    .x
                    .iter()
                    .map(|xi| {
                        let zi: f64 = rng.sample(StandardNormal);
                        xi + sigma * zi
                    })
                    .collect();
                Individual { x, sigma }
            })
            .collect();

        let fitness: Vec<f64> = offspring
            .par_iter()
            .map(|ind| f.value(&ind.x))
            .collect();
        let fitness: Vec<f64> = fitness
            .into_iter()
            .map(|v| {
                if v.is_finite() {
                    v
                } else {
                    non_finite += 1;
                    f64::NEG_INFINITY
                }
            })
            .collect();

        let mut order: Vec<usize> = (0..cfg.lambda).collect();
        order.sort_by(|&a, &b| {
            fitness[b]
                .partial_cmp(&fitness[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        let gen_best = fitness[order[0]];
        if gen_best > best_value {
            best_value = gen_best;
            best_x = offspring[order[0]].x.clone();
        }

        let finite: Vec<f64> = fitness.iter().copied().filter(|v| v.is_finite()).collect();
        let mean = if finite.is_empty() {
            f64::NEG_INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };

        let mut offspring = offspring;
        let mut next: Vec<Individual> = Vec::with_capacity(cfg.mu);
        for &idx in order.iter().take(cfg.mu) {
            next.push(std::mem::replace(
                &mut offspring[idx],
                Individual {
                    x: Vec::new(),
                    sigma: 0.0,
                },
            ));
        }
        parents = next;

        let mut sigmas: Vec<f64> = parents.iter().map(|p| p.sigma).collect();
        sigmas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sigma_median = sigmas[sigmas.len() / 2];

        trace.push(EsTraceRow {
            generation,
            best: gen_best,
            mean,
            sigma_median,
        });
        best_so_far.push(best_value);
    }

    Ok(EsResult {
        x: best_x,
        value: best_value,
        trace,
        best_so_far,
        non_finite_discarded: non_finite,
    })
}
