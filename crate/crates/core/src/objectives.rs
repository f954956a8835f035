//! The wealth model and the two reward functionals — Sharpe ratio and
//! downside deviation ratio — with their gradients with respect to
//! per-period trading returns.
//!
//! Both ratios use population (divide-by-T) moments. The Sharpe ratio is
//! `A / sqrt(B - A^2)` with `A = mean(R)` and `B = mean(R^2)`; no
//! annualization. The downside deviation ratio divides the mean by the root
//! mean square of the negative returns only, with the denominator floored at
//! a small epsilon when no downside exists.

use thiserror::Error;

/// Variance below this is treated as degenerate (constant returns).
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("positions must be one longer than returns ({positions} vs {returns})")]
    LengthMismatch { positions: usize, returns: usize },
    #[error("return variance is below 1e-12; ratio undefined")]
    DegenerateVariance,
    #[error("no negative returns; downside gradient undefined")]
    DegenerateDownside,
    #[error("cost model requires shares > 0 and cost per share >= 0")]
    InvalidCostModel,
}

/// Shares per unit position and transaction cost per share per unit of
/// position change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub shares: f64,
    pub cost_per_share: f64,
}

impl CostModel {
    pub fn new(shares: f64, cost_per_share: f64) -> Result<Self, ObjectiveError> {
        if !shares.is_finite() || shares <= 0.0 || !cost_per_share.is_finite() || cost_per_share < 0.0
        {
            return Err(ObjectiveError::InvalidCostModel);
        }
        Ok(Self {
            shares,
            cost_per_share,
        })
    }

    pub fn frictionless() -> Self {
        Self {
            shares: 1.0,
            cost_per_share: 0.0,
        }
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            shares: 1.0,
            cost_per_share: 0.0002,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Sharpe,
    DownsideDeviation,
}

impl ObjectiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Sharpe => "sharpe",
            ObjectiveKind::DownsideDeviation => "ddr",
        }
    }
}

/// Which reward functional to maximize, plus the zero-floor used when the
/// downside deviation vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub epsilon: f64,
}

impl ObjectiveSpec {
    pub fn sharpe() -> Self {
        Self {
            kind: ObjectiveKind::Sharpe,
            epsilon: 1e-8,
        }
    }

    pub fn downside_deviation() -> Self {
        Self {
            kind: ObjectiveKind::DownsideDeviation,
            epsilon: 1e-8,
        }
    }
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self::sharpe()
    }
}

/// Per-period trading return after transaction costs:
/// `R_t = s * (F_{t-1} * r_t - c * |F_t - F_{t-1}|)`.
///
/// `positions` carries the initial position first (conventionally zero), so
/// it is one longer than `returns`.
pub fn trading_returns(
    positions: &[f64],
    returns: &[f64],
    cm: &CostModel,
) -> Result<Vec<f64>, ObjectiveError> {
    if positions.len() != returns.len() + 1 {
        return Err(ObjectiveError::LengthMismatch {
            positions: positions.len(),
            returns: returns.len(),
        });
    }
    Ok(returns
        .iter()
        .enumerate()
        .map(|(t, &r)| {
            let prev = positions[t];
            let cur = positions[t + 1];
            cm.shares * (prev * r - cm.cost_per_share * (cur - prev).abs())
        })
        .collect())
}

fn moments(rewards: &[f64]) -> (f64, f64) {
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let mean_sq = rewards.iter().map(|r| r * r).sum::<f64>() / n;
    (mean, mean_sq)
}

/// `S_T = A / sqrt(B - A^2)`, population moments, no annualization.
pub fn sharpe_ratio(rewards: &[f64]) -> Result<f64, ObjectiveError> {
    if rewards.len() < 2 {
        return Err(ObjectiveError::DegenerateVariance);
    }
    let (a, b) = moments(rewards);
    let var = b - a * a;
    if var < VARIANCE_FLOOR {
        return Err(ObjectiveError::DegenerateVariance);
    }
    Ok(a / var.sqrt())
}

/// Component-wise derivative of the Sharpe ratio:
/// `dS/dR_t = (B - A * R_t) / (T * (B - A^2)^(3/2))`.
pub fn sharpe_gradient(rewards: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
    if rewards.len() < 2 {
        return Err(ObjectiveError::DegenerateVariance);
    }
    let (a, b) = moments(rewards);
    let var = b - a * a;
    if var < VARIANCE_FLOOR {
        return Err(ObjectiveError::DegenerateVariance);
    }
    let t = rewards.len() as f64;
    let denom = t * var.powf(1.5);
    Ok(rewards.iter().map(|&r| (b - a * r) / denom).collect())
}

/// Downside deviation ratio value plus whether the epsilon floor engaged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownsideOutcome {
    pub value: f64,
    pub floored: bool,
}

fn downside_rms_sq(rewards: &[f64]) -> f64 {
    let n = rewards.len() as f64;
    rewards
        .iter()
        .map(|&r| {
            let d = r.min(0.0);
            d * d
        })
        .sum::<f64>()
        / n
}

/// `D_T = A / sqrt(E[min(R_t, 0)^2])`; the denominator is floored at
/// `spec.epsilon` (flag set) so all-positive periods stay finite.
pub fn ddr(rewards: &[f64], spec: &ObjectiveSpec) -> DownsideOutcome {
    if rewards.is_empty() {
        return DownsideOutcome {
            value: 0.0,
            floored: true,
        };
    }
    let (a, _) = moments(rewards);
    let dd = downside_rms_sq(rewards).sqrt();
    let floored = dd < spec.epsilon;
    let denom = if floored { spec.epsilon } else { dd };
    DownsideOutcome {
        value: a / denom,
        floored,
    }
}

/// Analytic gradient of the downside deviation ratio; `min(R_t, 0)` is given
/// subgradient 0 at exactly zero.
pub fn ddr_gradient(rewards: &[f64], spec: &ObjectiveSpec) -> Result<Vec<f64>, ObjectiveError> {
    if rewards.is_empty() || rewards.iter().all(|&r| r >= 0.0) {
        return Err(ObjectiveError::DegenerateDownside);
    }
    let _ = spec;
    let t = rewards.len() as f64;
    let (a, _) = moments(rewards);
    let dd_sq = downside_rms_sq(rewards);
    let dd = dd_sq.sqrt();
    Ok(rewards
        .iter()
        .map(|&r| {
            if r < 0.0 {
                (dd_sq - a * r) / (t * dd_sq * dd)
            } else {
                1.0 / (t * dd)
            }
        })
        .collect())
}

/// Largest peak-to-trough decline of an equity curve.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in equity {
        peak = peak.max(v);
        worst = worst.max(peak - v);
    }
    worst
}

/// Objective value with a degeneracy flag, the lenient form used inside
/// training loops and reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub degenerate: bool,
}

impl ObjectiveSpec {
    /// Evaluate the configured functional. Degenerate cases stay finite:
    /// constant returns give Sharpe 0 (flagged), an all-positive period gives
    /// the epsilon-floored ratio (flagged), so training sweeps never abort.
    pub fn evaluate(&self, rewards: &[f64]) -> ObjectiveValue {
        match self.kind {
            ObjectiveKind::Sharpe => match sharpe_ratio(rewards) {
                Ok(value) => ObjectiveValue {
                    value,
                    degenerate: false,
                },
                Err(_) => ObjectiveValue {
                    value: 0.0,
                    degenerate: true,
                },
            },
            ObjectiveKind::DownsideDeviation => {
                let out = ddr(rewards, self);
                ObjectiveValue {
                    value: out.value,
                    degenerate: out.floored,
                }
            }
        }
    }

    /// Strict gradient of the configured functional; degeneracy propagates
    /// as an error.
    pub fn reward_gradient(&self, rewards: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        match self.kind {
            ObjectiveKind::Sharpe => sharpe_gradient(rewards),
            ObjectiveKind::DownsideDeviation => ddr_gradient(rewards, self),
        }
    }

    /// Training-loop gradient. Constant returns give a zero gradient; an
    /// all-positive period uses the floored denominator, whose gradient is a
    /// uniform `1 / (T * epsilon)` push on the mean.
    pub fn reward_gradient_lenient(&self, rewards: &[f64]) -> Vec<f64> {
        match self.reward_gradient(rewards) {
            Ok(g) => g,
            Err(ObjectiveError::DegenerateDownside) => {
                let t = rewards.len().max(1) as f64;
                vec![1.0 / (t * self.epsilon); rewards.len()]
            }
            Err(_) => vec![0.0; rewards.len()],
        }
    }
}
