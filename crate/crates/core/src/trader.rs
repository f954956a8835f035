//! The single-layer recurrent tanh trader, its exact recurrent gradient, and
//! the online (single-period) update.
//!
//! The trader maps a window of recent returns to a position
//! `F_t = tanh(w . x_t + b + u * F_{t-1})` in (-1, 1). Because `F_t` feeds
//! back through `u`, the derivative of `F_t` with respect to any parameter is
//! a total derivative over the whole history; it is computed by the forward
//! recursion `dF_t/dp = (1 - F_t^2) * (da_t/dp + u * dF_{t-1}/dp)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::objectives::{self, CostModel, ObjectiveError, ObjectiveSpec};
use crate::timeseries::FeatureWindow;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("window length {got} does not match trader window {expect}")]
    DimensionMismatch { expect: usize, got: usize },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Weights, bias, and recurrence coefficient of the tanh trader.
///
/// `bias_trainable` marks whether the bias participates in updates; the
/// trade-frequency experiments freeze it at a fixed value.
#[derive(Debug, Clone, PartialEq)]
pub struct TraderParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub recurrence: f64,
    pub bias_trainable: bool,
}

impl TraderParams {
    /// Fresh parameters: weights uniform in `+-1/sqrt(m + 2)`, recurrence
    /// starts at zero, bias as given.
    pub fn init(window: usize, bias: f64, bias_trainable: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(window, bias, bias_trainable, &mut rng)
    }

    pub fn init_with_rng<R: Rng>(
        window: usize,
        bias: f64,
        bias_trainable: bool,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / ((window + 2) as f64).sqrt();
        let weights = (0..window).map(|_| rng.gen_range(-bound..bound)).collect();
        Self {
            weights,
            bias,
            recurrence: 0.0,
            bias_trainable,
        }
    }

    pub fn window(&self) -> usize {
        self.weights.len()
    }

    /// Number of parameters: `m` weights plus bias plus recurrence.
    pub fn dim(&self) -> usize {
        self.weights.len() + 2
    }

    /// Stable flat ordering: `[w_0 .. w_{m-1}, bias, recurrence]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.bias);
        v.push(self.recurrence);
        v
    }

    /// Rebuild parameters from a flat vector, keeping this template's window
    /// length and trainability flag.
    pub fn unflatten(&self, v: &[f64]) -> Result<Self, AgentError> {
        if v.len() != self.dim() {
            return Err(AgentError::DimensionMismatch {
                expect: self.dim(),
                got: v.len(),
            });
        }
        let m = self.window();
        Ok(Self {
            weights: v[..m].to_vec(),
            bias: v[m],
            recurrence: v[m + 1],
            bias_trainable: self.bias_trainable,
        })
    }
}

/// Positions and pre-activations produced by a forward pass. `F_0 = 0` is
/// implicit; `positions[t]` is the decision after seeing window `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionTrace {
    pub positions: Vec<f64>,
    pub pre_activations: Vec<f64>,
}

impl PositionTrace {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions with the flat start prepended, the shape
    /// [`objectives::trading_returns`] expects.
    pub fn with_initial(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.positions.len() + 1);
        v.push(0.0);
        v.extend_from_slice(&self.positions);
        v
    }
}

/// Sequential forward pass over a window sequence.
pub fn forward(
    params: &TraderParams,
    windows: &[FeatureWindow],
) -> Result<PositionTrace, AgentError> {
    let m = params.window();
    let mut positions = Vec::with_capacity(windows.len());
    let mut pre_activations = Vec::with_capacity(windows.len());
    let mut prev = 0.0;
    for w in windows {
        if w.len() != m {
            return Err(AgentError::DimensionMismatch {
                expect: m,
                got: w.len(),
            });
        }
        let a = activation(params, w.values(), prev);
        let f = a.tanh();
        positions.push(f);
        pre_activations.push(a);
        prev = f;
    }
    Ok(PositionTrace {
        positions,
        pre_activations,
    })
}

fn activation(params: &TraderParams, x: &[f64], prev: f64) -> f64 {
    let dot: f64 = params.weights.iter().zip(x).map(|(w, v)| w * v).sum();
    dot + params.bias + params.recurrence * prev
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-period pair `(dR_t/dF_t, dR_t/dF_{t-1})` of the cost model:
/// `(-s*c*sign(F_t - F_{t-1}), s*r_t + s*c*sign(F_t - F_{t-1}))`, with
/// `sign(0) = 0` at the kink.
pub fn reward_partials(trace: &PositionTrace, returns: &[f64], cm: &CostModel) -> Vec<(f64, f64)> {
    let s = cm.shares;
    let c = cm.cost_per_share;
    (0..trace.positions.len().min(returns.len()))
        .map(|t| {
            let cur = trace.positions[t];
            let prev = if t == 0 { 0.0 } else { trace.positions[t - 1] };
            let d = sign0(cur - prev);
            (-s * c * d, s * returns[t] + s * c * d)
        })
        .collect()
}

/// One training evaluation: objective value, degeneracy flag, and the full
/// parameter gradient.
#[derive(Debug, Clone)]
pub struct EpochStep {
    pub value: f64,
    pub degenerate: bool,
    pub gradient: Vec<f64>,
}

/// Exact batch gradient of the configured objective with respect to
/// `[w, b, u]`, propagating objective degeneracy as an error.
pub fn batch_gradient(
    params: &TraderParams,
    windows: &[FeatureWindow],
    returns: &[f64],
    cm: &CostModel,
    spec: &ObjectiveSpec,
) -> Result<Vec<f64>, AgentError> {
    let trace = forward(params, windows)?;
    let rewards = objectives::trading_returns(&trace.with_initial(), returns, cm)?;
    let dsdr = spec.reward_gradient(&rewards)?;
    Ok(gradient_from_reward_grad(params, windows, returns, cm, &trace, &dsdr))
}

/// Value-and-gradient in one pass. With `lenient` set, degenerate objectives
/// yield the flagged fallback value/gradient instead of an error, so a
/// training sweep survives constant-return or all-positive epochs.
pub fn batch_step(
    params: &TraderParams,
    windows: &[FeatureWindow],
    returns: &[f64],
    cm: &CostModel,
    spec: &ObjectiveSpec,
    lenient: bool,
) -> Result<EpochStep, AgentError> {
    let trace = forward(params, windows)?;
    let rewards = objectives::trading_returns(&trace.with_initial(), returns, cm)?;
    let (value, degenerate, dsdr) = if lenient {
        let v = spec.evaluate(&rewards);
        (v.value, v.degenerate, spec.reward_gradient_lenient(&rewards))
    } else {
        let dsdr = spec.reward_gradient(&rewards)?;
        let v = spec.evaluate(&rewards);
        (v.value, v.degenerate, dsdr)
    };
    let gradient = gradient_from_reward_grad(params, windows, returns, cm, &trace, &dsdr);
    Ok(EpochStep {
        value,
        degenerate,
        gradient,
    })
}

fn gradient_from_reward_grad(
    params: &TraderParams,
    windows: &[FeatureWindow],
    returns: &[f64],
    cm: &CostModel,
    trace: &PositionTrace,
    dsdr: &[f64],
) -> Vec<f64> {
    let m = params.window();
    let dim = params.dim();
    let partials = reward_partials(trace, returns, cm);
    let mut grad = vec![0.0; dim];
    let mut df_prev = vec![0.0; dim];
    let mut df_cur = vec![0.0; dim];
    for t in 0..trace.positions.len() {
        let f = trace.positions[t];
        let f_prev = if t == 0 { 0.0 } else { trace.positions[t - 1] };
        let sech2 = 1.0 - f * f;
        let x = windows[t].values();
        for j in 0..m {
            df_cur[j] = sech2 * (x[j] + params.recurrence * df_prev[j]);
        }
        df_cur[m] = sech2 * (1.0 + params.recurrence * df_prev[m]);
        df_cur[m + 1] = sech2 * (f_prev + params.recurrence * df_prev[m + 1]);
        let (dr_df, dr_dfprev) = partials[t];
        let w = dsdr[t];
        for j in 0..dim {
            grad[j] += w * (dr_df * df_cur[j] + dr_dfprev * df_prev[j]);
        }
        std::mem::swap(&mut df_prev, &mut df_cur);
    }
    grad
}

/// Running total derivative `dF_{t-1}/dp` plus the previous position, the
/// state threaded through online updates.
#[derive(Debug, Clone)]
pub struct GradientState {
    pub df_dtheta: Vec<f64>,
    pub prev_position: f64,
}

impl GradientState {
    pub fn zeros(dim: usize) -> Self {
        Self {
            df_dtheta: vec![0.0; dim],
            prev_position: 0.0,
        }
    }
}

/// Running reward moments feeding the per-period objective derivative of the
/// online update.
#[derive(Debug, Clone, Default)]
pub struct RunningMoments {
    pub count: usize,
    sum: f64,
    sum_sq: f64,
    sum_downside_sq: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, reward: f64) {
        self.count += 1;
        self.sum += reward;
        self.sum_sq += reward * reward;
        let d = reward.min(0.0);
        self.sum_downside_sq += d * d;
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    fn mean_sq(&self) -> f64 {
        self.sum_sq / self.count as f64
    }

    fn downside_rms_sq(&self) -> f64 {
        self.sum_downside_sq / self.count as f64
    }

    /// `dS_t/dR_t` of the configured functional at the newest reward, using
    /// the moments accumulated so far; zero while degenerate (Sharpe) or the
    /// epsilon-floored push (downside).
    fn reward_derivative(&self, reward: f64, spec: &ObjectiveSpec) -> f64 {
        let t = self.count as f64;
        match spec.kind {
            crate::objectives::ObjectiveKind::Sharpe => {
                let a = self.mean();
                let b = self.mean_sq();
                let var = b - a * a;
                if var < crate::objectives::VARIANCE_FLOOR {
                    0.0
                } else {
                    (b - a * reward) / (t * var.powf(1.5))
                }
            }
            crate::objectives::ObjectiveKind::DownsideDeviation => {
                let a = self.mean();
                let dd_sq = self.downside_rms_sq();
                let dd = dd_sq.sqrt();
                if dd < spec.epsilon {
                    1.0 / (t * spec.epsilon)
                } else if reward < 0.0 {
                    (dd_sq - a * reward) / (t * dd_sq * dd)
                } else {
                    1.0 / (t * dd)
                }
            }
        }
    }
}

/// One online update: forward the newest window, keep only the most recent
/// reward term of the objective chain, and apply it immediately. Returns the
/// position taken this period.
#[allow(clippy::too_many_arguments)]
pub fn online_gradient_step(
    params: &mut TraderParams,
    window: &FeatureWindow,
    ret: f64,
    state: &mut GradientState,
    moments: &mut RunningMoments,
    cm: &CostModel,
    spec: &ObjectiveSpec,
    learning_rate: f64,
    weight_decay: f64,
    grad_clip: f64,
) -> Result<f64, AgentError> {
    let m = params.window();
    if window.len() != m {
        return Err(AgentError::DimensionMismatch {
            expect: m,
            got: window.len(),
        });
    }
    let dim = params.dim();
    if state.df_dtheta.len() != dim {
        return Err(AgentError::DimensionMismatch {
            expect: dim,
            got: state.df_dtheta.len(),
        });
    }
    let f_prev = state.prev_position;
    let a = activation(params, window.values(), f_prev);
    let f = a.tanh();
    let sech2 = 1.0 - f * f;
    let x = window.values();
    let mut df_cur = vec![0.0; dim];
    for j in 0..m {
        df_cur[j] = sech2 * (x[j] + params.recurrence * state.df_dtheta[j]);
    }
    df_cur[m] = sech2 * (1.0 + params.recurrence * state.df_dtheta[m]);
    df_cur[m + 1] = sech2 * (f_prev + params.recurrence * state.df_dtheta[m + 1]);

    let s = cm.shares;
    let c = cm.cost_per_share;
    let reward = s * (f_prev * ret - c * (f - f_prev).abs());
    moments.push(reward);
    let dsdr = moments.reward_derivative(reward, spec);
    let d = sign0(f - f_prev);
    let dr_df = -s * c * d;
    let dr_dfprev = s * ret + s * c * d;
    let mut grad: Vec<f64> = (0..dim)
        .map(|j| dsdr * (dr_df * df_cur[j] + dr_dfprev * state.df_dtheta[j]))
        .collect();
    if !params.bias_trainable {
        grad[m] = 0.0;
    }
    crate::optim::clip_to_norm(&mut grad, grad_clip);
    apply_update(params, &grad, learning_rate, weight_decay);

    state.df_dtheta = df_cur;
    state.prev_position = f;
    Ok(f)
}

/// Weight-decayed ascent step `p <- p * (1 - decay) + rate * grad`, skipping
/// the bias entirely when it is frozen.
pub fn apply_update(params: &mut TraderParams, grad: &[f64], learning_rate: f64, weight_decay: f64) {
    let m = params.window();
    let keep = 1.0 - weight_decay;
    for (w, g) in params.weights.iter_mut().zip(grad) {
        *w = *w * keep + learning_rate * g;
    }
    if params.bias_trainable {
        params.bias = params.bias * keep + learning_rate * grad[m];
    }
    params.recurrence = params.recurrence * keep + learning_rate * grad[m + 1];
}

/// Long/flat/short label of a continuous position at threshold `delta`; used
/// for trade counting only, never inside the learning loop.
pub fn discretize_position(f: f64, threshold: f64) -> i8 {
    if f > threshold {
        1
    } else if f < -threshold {
        -1
    } else {
        0
    }
}
