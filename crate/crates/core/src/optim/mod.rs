//! Training strategies usable against any objective: gradient ascent with
//! weight decay, Nelder-Mead simplex, and a (mu, lambda) evolution strategy
//! with self-adaptive step size.
//!
//! All optimizers maximize the fitness reported by [`ObjectiveFn`];
//! derivative-free methods minimize the negated fitness internally. Every
//! optimizer is deterministic given its seed and configuration.

mod ascent;
mod evolution;
mod nelder_mead;

pub use ascent::{gradient_ascent, AscentConfig, AscentResult};
pub use evolution::{evolution_strategy, EsConfig, EsResult, EsTraceRow};
pub use nelder_mead::{nelder_mead, NmConfig, NmResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("objective returned a non-finite value at the starting point")]
    NonFiniteObjective,
    #[error("objective provides no analytic gradient")]
    NoGradient,
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
}

/// A pure scalar fitness over a flat parameter vector. Evaluation must be
/// deterministic given the vector — any randomness inside is seed-frozen per
/// run — and `Sync`, so an evolution-strategy generation may evaluate its
/// offspring in parallel.
pub trait ObjectiveFn: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// The analytic gradient when one is available.
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let _ = x;
        None
    }
}

/// Fitness from a plain closure.
pub struct FnObjective<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ObjectiveFn for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Fitness plus analytic gradient from a pair of closures.
pub struct GradObjective<F, G> {
    pub dim: usize,
    pub f: F,
    pub g: G,
}

impl<F, G> ObjectiveFn for GradObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some((self.g)(x))
    }
}

/// Rescale `grad` in place so its Euclidean norm is at most `max_norm`,
/// preserving the direction. A non-positive `max_norm` disables clipping.
pub fn clip_to_norm(grad: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
}
