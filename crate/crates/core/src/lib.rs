//! Single-asset trading agents trained by recurrent reinforcement learning.
//!
//! The crate provides the full pipeline from raw price bars to a backtest
//! report:
//!
//! - [`timeseries`] — CSV ingestion, price-difference returns, feature windows.
//! - [`objectives`] — the transaction-cost wealth model, Sharpe ratio and
//!   downside deviation ratio with analytic gradients, drawdown.
//! - [`trader`] — the recurrent tanh trader and its exact recurrent gradient,
//!   batch and online.
//! - [`lstm`] — a stacked forget-gate LSTM feature learner feeding the trader
//!   head, trained end to end by backpropagation through time, with dropout on
//!   the non-recurrent connections only.
//! - [`optim`] — gradient ascent with weight decay, Nelder-Mead simplex, and a
//!   (mu, lambda) evolution strategy with self-adaptive step size.
//! - [`backtest`] — train/test split protocol, epoch training, out-of-sample
//!   evaluation, trade statistics, experiment suites, and report files.
//! - [`snapshot`] — flat key-value parameter snapshots for resumable runs.

pub mod backtest;
pub mod lstm;
pub mod objectives;
pub mod optim;
pub mod seeding;
pub mod snapshot;
pub mod timeseries;
pub mod trader;

pub use backtest::{AgentKind, AgentParams, BacktestReport, ExperimentConfig, TrainMethod};
pub use objectives::{CostModel, ObjectiveKind, ObjectiveSpec};
pub use timeseries::{PriceSeries, ReturnSeries, Standardizer};
pub use trader::TraderParams;
