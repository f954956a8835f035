//! Full-batch gradient ascent with weight decay and gradient-norm clipping.

use super::{clip_to_norm, ObjectiveFn, OptimError};

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            weight_decay: 0.0,
            epochs: 100,
            grad_clip: 10.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub x: Vec<f64>,
    /// Objective value before training and after each epoch (`epochs + 1`
    /// entries on a completed run).
    pub trace: Vec<f64>,
    /// False when a non-finite objective aborted the run; `x` is then the
    /// last good iterate.
    pub completed: bool,
}

/// Repeated updates `x <- x * (1 - decay) + rate * grad`, the gradient
/// clipped to `grad_clip` before each step.
pub fn gradient_ascent(
    f: &dyn ObjectiveFn,
    x0: &[f64],
    cfg: &AscentConfig,
) -> Result<AscentResult, OptimError> {
    if !cfg.learning_rate.is_finite()
        || cfg.learning_rate < 0.0
        || !(0.0..1.0).contains(&cfg.weight_decay)
    {
        return Err(OptimError::InvalidConfig(
            "learning_rate must be >= 0 and weight_decay in [0, 1)".into(),
        ));
    }
    let mut x = x0.to_vec();
    let v0 = f.value(&x);
    if !v0.is_finite() {
        return Err(OptimError::NonFiniteObjective);
    }
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    trace.push(v0);
    for _ in 0..cfg.epochs {
        let mut grad = f.gradient(&x).ok_or(OptimError::NoGradient)?;
        clip_to_norm(&mut grad, cfg.grad_clip);
        let keep = 1.0 - cfg.weight_decay;
        let candidate: Vec<f64> = x
            .iter()
            .zip(&grad)
            .map(|(xi, gi)| xi * keep + cfg.learning_rate * gi)
            .collect();
        let v = f.value(&candidate);
        if !v.is_finite() {
            return Ok(AscentResult {
                x,
                trace,
                completed: false,
            });
        }
        x = candidate;
        trace.push(v);
    }
    Ok(AscentResult {
        x,
        trace,
        completed: true,
    })
}
