//! Deterministic synthetic price generators, so experiments and acceptance
//! runs work without a proprietary market feed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::timeseries::PriceSeries;

/// Shape of the generated market.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    /// `base + amplitude * sin(2 pi t / period)` plus white noise.
    Sine {
        period: f64,
        amplitude: f64,
        noise: f64,
    },
    /// Random walk with drift: returns are `drift + noise * N(0,1)`.
    TrendNoise { drift: f64, noise: f64 },
    /// A tradable seasonal swing punctured by downward jumps. Each jump
    /// leaves an unmistakable signature in the return window; the following
    /// bar usually rebounds partway but occasionally crashes again
    /// (an aftershock), so the post-jump bar is a positive-mean bet with a
    /// heavy left tail. Jumps plus aftershocks outweigh the rebounds, giving
    /// a volatile, consistently falling series.
    DownJumps {
        /// Seasonal sine amplitude (period 20 bars).
        amplitude: f64,
        /// Size of the initial downward jump.
        jump: f64,
        /// Usual recovery on the bar after a jump.
        rebound: f64,
        /// Size of the occasional second-leg jump.
        aftershock: f64,
        /// Probability that the post-jump bar aftershocks instead of
        /// rebounding.
        aftershock_prob: f64,
        /// Per-bar probability of a fresh jump.
        hazard: f64,
        noise: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub kind: SyntheticKind,
    pub bars: usize,
    pub bar_interval: i64,
    pub base: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn sine(bars: usize, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::Sine {
                period: 50.0,
                amplitude: 1.0,
                noise: 0.0,
            },
            bars,
            bar_interval: 1800,
            base: 100.0,
            seed,
        }
    }

    pub fn trend_noise(bars: usize, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::TrendNoise {
                drift: 0.01,
                noise: 0.05,
            },
            bars,
            bar_interval: 1800,
            base: 100.0,
            seed,
        }
    }

    pub fn down_jumps(bars: usize, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::DownJumps {
                amplitude: 1.0,
                jump: 1.0,
                rebound: 0.45,
                aftershock: 1.5,
                aftershock_prob: 0.15,
                hazard: 0.05,
                noise: 0.05,
            },
            bars,
            bar_interval: 1800,
            base: 200.0,
            seed,
        }
    }

    /// Short tag used in report metadata.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SyntheticKind::Sine { .. } => "sine",
            SyntheticKind::TrendNoise { .. } => "trend",
            SyntheticKind::DownJumps { .. } => "jumps",
        }
    }
}

pub fn generate(cfg: &SyntheticConfig) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let timestamps: Vec<i64> = (0..cfg.bars as i64).map(|t| t * cfg.bar_interval).collect();
    let prices: Vec<f64> = match &cfg.kind {
        SyntheticKind::Sine {
            period,
            amplitude,
            noise,
        } => (0..cfg.bars)
            .map(|t| {
                let wobble: f64 = rng.sample(StandardNormal);
                cfg.base
                    + amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin()
                    + noise * wobble
            })
            .collect(),
        SyntheticKind::TrendNoise { drift, noise } => {
            let mut level = cfg.base;
            let mut out = Vec::with_capacity(cfg.bars);
            out.push(level);
            for _ in 1..cfg.bars {
                let z: f64 = rng.sample(StandardNormal);
                level += drift + noise * z;
                out.push(level);
            }
            out
        }
        SyntheticKind::DownJumps {
            amplitude,
            jump,
            rebound,
            aftershock,
            aftershock_prob,
            hazard,
            noise,
        } => {
            let period = 20.0;
            let seasonal =
                |t: usize| amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin();
            let mut level = cfg.base;
            let mut out = Vec::with_capacity(cfg.bars);
            out.push(level);
            let mut post_jump = false;
            for t in 1..cfg.bars {
                let z: f64 = rng.sample(StandardNormal);
                let mut step = seasonal(t) - seasonal(t - 1) + noise * z;
                if post_jump {
                    step += if rng.gen::<f64>() < *aftershock_prob {
                        -aftershock
                    } else {
                        *rebound
                    };
                    post_jump = false;
                } else if rng.gen::<f64>() < *hazard {
                    step -= jump;
                    post_jump = true;
                }
                level += step;
                out.push(level);
            }
            out
        }
    };
    PriceSeries::new(timestamps, prices).expect("synthetic generator produced an invalid series")
}
