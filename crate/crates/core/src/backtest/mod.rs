//! The experimental protocol: train/test split, epoch training with
//! objective traces, out-of-sample evaluation, trade statistics, and the
//! paired experiment suite (bias term, LSTM vs plain recurrent trader,
//! downside-deviation vs Sharpe objective).

pub mod report;
pub mod synthetic;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::lstm::{self, DropoutSpec, LstmError, LstmState, LstmTraderParams};
use crate::objectives::{self, CostModel, ObjectiveError, ObjectiveSpec};
use crate::optim::{
    self, clip_to_norm, EsConfig, NmConfig, ObjectiveFn, OptimError,
};
use crate::seeding::derive_seed;
use crate::snapshot;
use crate::timeseries::{
    self, fit_standardizer, returns_from_prices, window_sequence, FeatureWindow, PriceSeries,
    Standardizer, TimeSeriesError,
};
use crate::trader::{self, AgentError, TraderParams};

use synthetic::SyntheticConfig;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("insufficient data: need {need} bars, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Plain,
    Lstm,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Plain => "plain",
            AgentKind::Lstm => "lstm",
        }
    }
}

/// How the agent is trained. Batch and online follow the analytic gradient;
/// the other two drive the flattened parameters derivative-free.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainMethod {
    Batch,
    Online,
    NelderMead(NmConfig),
    EvolutionStrategy(EsConfig),
}

impl TrainMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TrainMethod::Batch => "batch",
            TrainMethod::Online => "online",
            TrainMethod::NelderMead(_) => "nelder-mead",
            TrainMethod::EvolutionStrategy(_) => "es",
        }
    }
}

/// Where the price bars come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic(SyntheticConfig),
}

impl DataSource {
    pub fn describe(&self) -> String {
        match self {
            DataSource::Csv(path) => format!("csv:{}", path.display()),
            DataSource::Synthetic(cfg) => {
                format!("synthetic:{}:{}:{}", cfg.kind_name(), cfg.bars, cfg.seed)
            }
        }
    }
}

pub fn load_data(source: &DataSource) -> Result<PriceSeries, BacktestError> {
    match source {
        DataSource::Csv(path) => Ok(timeseries::load_csv(
            path,
            &timeseries::CsvSchema::default(),
        )?),
        DataSource::Synthetic(cfg) => Ok(synthetic::generate(cfg)),
    }
}

/// Everything one experiment cell needs: data, agent shape, objective,
/// optimizer, split protocol, and the manifest seed all sub-seeds derive
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub data: DataSource,
    pub agent: AgentKind,
    pub objective: ObjectiveSpec,
    pub cost: CostModel,
    pub method: TrainMethod,
    pub epochs: usize,
    pub train_len: usize,
    pub test_len: usize,
    /// Feature window length m.
    pub window: usize,
    pub hidden: usize,
    pub layers: usize,
    pub bias: f64,
    pub bias_trainable: bool,
    pub dropout: f64,
    pub standardize: bool,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub grad_clip: f64,
    pub block_len: usize,
    pub retrain_between_blocks: bool,
    /// Position threshold for the long/flat/short trade counter.
    pub discretize_threshold: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(label: &str) -> Self {
        Self {
            label: label.to_string(),
            data: DataSource::Synthetic(SyntheticConfig::sine(2000, 1)),
            agent: AgentKind::Plain,
            objective: ObjectiveSpec::sharpe(),
            cost: CostModel::default(),
            method: TrainMethod::Batch,
            epochs: 200,
            train_len: 1000,
            test_len: 1000,
            window: 8,
            hidden: 16,
            layers: 1,
            bias: 0.0,
            bias_trainable: true,
            dropout: 0.0,
            standardize: true,
            learning_rate: 0.05,
            weight_decay: 0.0,
            grad_clip: 10.0,
            block_len: 200,
            retrain_between_blocks: false,
            discretize_threshold: 0.2,
            seed: 42,
        }
    }
}

/// Trained parameters of either agent flavor.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentParams {
    Plain(TraderParams),
    Lstm(LstmTraderParams),
}

impl AgentParams {
    pub fn kind(&self) -> AgentKind {
        match self {
            AgentParams::Plain(_) => AgentKind::Plain,
            AgentParams::Lstm(_) => AgentKind::Lstm,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AgentParams::Plain(p) => p.dim(),
            AgentParams::Lstm(p) => p.dim(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        match self {
            AgentParams::Plain(p) => p.flatten(),
            AgentParams::Lstm(p) => p.flatten(),
        }
    }

    pub fn unflatten(&self, v: &[f64]) -> Result<Self, BacktestError> {
        Ok(match self {
            AgentParams::Plain(p) => AgentParams::Plain(p.unflatten(v)?),
            AgentParams::Lstm(p) => AgentParams::Lstm(p.unflatten(v)?),
        })
    }

    pub fn bias_trainable(&self) -> bool {
        match self {
            AgentParams::Plain(p) => p.bias_trainable,
            AgentParams::Lstm(p) => p.head.bias_trainable,
        }
    }

    /// Index of the (head) bias inside the flat ordering.
    fn bias_index(&self) -> usize {
        match self {
            AgentParams::Plain(p) => p.window(),
            AgentParams::Lstm(p) => p.dim() - 2,
        }
    }

    pub fn snapshot_text(&self, seed: u64) -> String {
        match self {
            AgentParams::Plain(p) => snapshot::render_plain(p, seed),
            AgentParams::Lstm(p) => snapshot::render_lstm(p, seed),
        }
    }

    pub fn from_snapshot_text(text: &str) -> Result<(Self, u64), snapshot::SnapshotError> {
        let (snap, seed) = snapshot::parse(text)?;
        let params = match snap {
            snapshot::Snapshot::Plain(p) => AgentParams::Plain(p),
            snapshot::Snapshot::Lstm(p) => AgentParams::Lstm(p),
        };
        Ok((params, seed))
    }
}

fn init_agent(cfg: &ExperimentConfig) -> AgentParams {
    let seed = derive_seed(cfg.seed, "init");
    match cfg.agent {
        AgentKind::Plain => AgentParams::Plain(TraderParams::init(
            cfg.window,
            cfg.bias,
            cfg.bias_trainable,
            seed,
        )),
        AgentKind::Lstm => AgentParams::Lstm(LstmTraderParams::init(
            cfg.window,
            cfg.hidden,
            cfg.layers,
            cfg.bias,
            cfg.bias_trainable,
            seed,
        )),
    }
}

/// Evaluation-mode positions over a window sequence. The LSTM walks the
/// sequence in `block_len` chunks with recurrent state carried across block
/// boundaries, which is numerically identical to one straight pass.
fn forward_positions(
    params: &AgentParams,
    windows: &[FeatureWindow],
    block_len: usize,
) -> Result<Vec<f64>, BacktestError> {
    match params {
        AgentParams::Plain(p) => Ok(trader::forward(p, windows)?.positions),
        AgentParams::Lstm(p) => {
            let block = if block_len == 0 {
                windows.len().max(1)
            } else {
                block_len
            };
            let mut state = LstmState::zeros(p.layer_count(), p.hidden());
            let mut prev = 0.0;
            let mut positions = Vec::with_capacity(windows.len());
            for chunk in windows.chunks(block) {
                let fwd =
                    lstm::stack_forward_with_state(chunk, p, &DropoutSpec::eval(), &state, prev)?;
                positions.extend_from_slice(&fwd.trace.positions);
                state = fwd.final_state;
                prev = fwd.final_position;
            }
            Ok(positions)
        }
    }
}

/// Contiguous, non-overlapping halves with training strictly first.
pub fn split(
    p: &PriceSeries,
    train_len: usize,
    test_len: usize,
) -> Result<(PriceSeries, PriceSeries), BacktestError> {
    if train_len + test_len > p.len() {
        return Err(BacktestError::InsufficientData {
            need: train_len + test_len,
            got: p.len(),
        });
    }
    if train_len < 2 || test_len < 2 {
        return Err(BacktestError::InsufficientData {
            need: 2,
            got: train_len.min(test_len),
        });
    }
    let train = p.segment(0..train_len)?;
    let test = p.segment(train_len..train_len + test_len)?;
    Ok((train, test))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: AgentParams,
    /// Objective before training and after each epoch.
    pub trace: Vec<f64>,
    /// Per-generation rows when an evolution strategy drove the training.
    pub optimizer_trace: Option<Vec<optim::EsTraceRow>>,
    pub standardizer: Standardizer,
}

/// Train a freshly initialized agent on one split.
pub fn train(cfg: &ExperimentConfig, split: &PriceSeries) -> Result<TrainOutcome, BacktestError> {
    train_from(cfg, split, init_agent(cfg))
}

fn epoch_dropout(cfg: &ExperimentConfig, epoch: usize) -> DropoutSpec {
    if cfg.agent == AgentKind::Lstm && cfg.dropout > 0.0 {
        DropoutSpec::train(
            cfg.dropout,
            derive_seed(cfg.seed, &format!("dropout.{epoch}")),
        )
    } else {
        DropoutSpec::eval()
    }
}

/// Train continuing from the given parameters (used by block-wise
/// retraining).
pub fn train_from(
    cfg: &ExperimentConfig,
    split: &PriceSeries,
    mut params: AgentParams,
) -> Result<TrainOutcome, BacktestError> {
    let returns = returns_from_prices(split)?;
    let standardizer = if cfg.standardize {
        fit_standardizer(&returns, 0..returns.len())?
    } else {
        Standardizer::identity()
    };
    let windows = window_sequence(&returns, cfg.window, &standardizer);
    let rets = returns.values();

    let mut optimizer_trace = None;
    let trace = match &cfg.method {
        TrainMethod::Batch => {
            let mut trace = Vec::with_capacity(cfg.epochs + 1);
            for epoch in 0..=cfg.epochs {
                let step = match &params {
                    AgentParams::Plain(p) => {
                        trader::batch_step(p, &windows, rets, &cfg.cost, &cfg.objective, true)?
                    }
                    AgentParams::Lstm(p) => lstm::bptt_step(
                        &windows,
                        rets,
                        &cfg.cost,
                        &cfg.objective,
                        p,
                        &epoch_dropout(cfg, epoch),
                        true,
                    )?,
                };
                trace.push(step.value);
                if epoch == cfg.epochs {
                    break;
                }
                let mut grad = step.gradient;
                if !cfg.bias_trainable {
                    // A frozen bias must not eat into the clip budget.
                    let at = params.bias_index();
                    grad[at] = 0.0;
                }
                clip_to_norm(&mut grad, cfg.grad_clip);
                match &mut params {
                    AgentParams::Plain(p) => {
                        trader::apply_update(p, &grad, cfg.learning_rate, cfg.weight_decay)
                    }
                    AgentParams::Lstm(p) => {
                        p.apply_update(&grad, cfg.learning_rate, cfg.weight_decay)
                    }
                }
            }
            trace
        }
        TrainMethod::Online => {
            let inner = match &mut params {
                AgentParams::Plain(p) => p,
                AgentParams::Lstm(_) => {
                    return Err(BacktestError::Unsupported(
                        "online updates drive the plain recurrent trader only".into(),
                    ))
                }
            };
            let mut trace = Vec::with_capacity(cfg.epochs + 1);
            trace.push(objective_value_plain(inner, &windows, rets, cfg)?);
            for _ in 0..cfg.epochs {
                let mut state = trader::GradientState::zeros(inner.dim());
                let mut moments = trader::RunningMoments::new();
                for (t, window) in windows.iter().enumerate() {
                    trader::online_gradient_step(
                        inner,
                        window,
                        rets[t],
                        &mut state,
                        &mut moments,
                        &cfg.cost,
                        &cfg.objective,
                        cfg.learning_rate,
                        cfg.weight_decay,
                        cfg.grad_clip,
                    )?;
                }
                trace.push(objective_value_plain(inner, &windows, rets, cfg)?);
            }
            trace
        }
        TrainMethod::NelderMead(nm) => {
            let adapter = FitnessAdapter::new(&params, &windows, rets, cfg);
            let x0 = adapter.project(&params.flatten());
            let initial = adapter.value(&x0);
            let mut nm_cfg = nm.clone();
            nm_cfg.max_iters = cfg.epochs;
            let res = optim::nelder_mead(&adapter, &x0, &nm_cfg);
            params = adapter.embed(&res.x)?;
            let mut trace = Vec::with_capacity(res.trace.len() + 1);
            trace.push(initial);
            trace.extend_from_slice(&res.trace);
            trace
        }
        TrainMethod::EvolutionStrategy(es) => {
            let adapter = FitnessAdapter::new(&params, &windows, rets, cfg);
            let x0 = adapter.project(&params.flatten());
            let initial = adapter.value(&x0);
            let mut es_cfg = es.clone();
            es_cfg.max_iters = cfg.epochs;
            es_cfg.seed = derive_seed(cfg.seed, "optimizer");
            let res = optim::evolution_strategy(&adapter, &x0, &es_cfg)?;
            params = adapter.embed(&res.x)?;
            let mut trace = Vec::with_capacity(res.best_so_far.len() + 1);
            trace.push(initial);
            trace.extend_from_slice(&res.best_so_far);
            optimizer_trace = Some(res.trace);
            trace
        }
    };

    Ok(TrainOutcome {
        params,
        trace,
        optimizer_trace,
        standardizer,
    })
}

fn objective_value_plain(
    params: &TraderParams,
    windows: &[FeatureWindow],
    rets: &[f64],
    cfg: &ExperimentConfig,
) -> Result<f64, BacktestError> {
    let trace = trader::forward(params, windows)?;
    let rewards = objectives::trading_returns(&trace.with_initial(), rets, &cfg.cost)?;
    Ok(cfg.objective.evaluate(&rewards).value)
}

/// Adapts an agent on fixed training data to the flat-vector fitness the
/// derivative-free optimizers drive. A frozen bias is excluded from the
/// search vector so the simplex and the mutations cannot move it. Fitness is
/// evaluated without dropout so it is a pure function of the vector.
struct FitnessAdapter<'a> {
    template: AgentParams,
    windows: &'a [FeatureWindow],
    returns: &'a [f64],
    cost: CostModel,
    objective: ObjectiveSpec,
    base: Vec<f64>,
    free: Vec<usize>,
}

impl<'a> FitnessAdapter<'a> {
    fn new(
        params: &AgentParams,
        windows: &'a [FeatureWindow],
        returns: &'a [f64],
        cfg: &ExperimentConfig,
    ) -> Self {
        let base = params.flatten();
        let frozen_bias = (!params.bias_trainable()).then(|| params.bias_index());
        let free = (0..base.len())
            .filter(|i| Some(*i) != frozen_bias)
            .collect();
        Self {
            template: params.clone(),
            windows,
            returns,
            cost: cfg.cost,
            objective: cfg.objective,
            base,
            free,
        }
    }

    /// Full flat vector -> search vector.
    fn project(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Search vector -> agent parameters (frozen entries from the template).
    fn embed(&self, x: &[f64]) -> Result<AgentParams, BacktestError> {
        let mut full = self.base.clone();
        for (slot, &i) in self.free.iter().enumerate() {
            full[i] = x[slot];
        }
        self.template.unflatten(&full)
    }
}

impl ObjectiveFn for FitnessAdapter<'_> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let params = match self.embed(x) {
            Ok(p) => p,
            Err(_) => return f64::NEG_INFINITY,
        };
        let positions = match forward_positions(&params, self.windows, 0) {
            Ok(p) => p,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut with_start = Vec::with_capacity(positions.len() + 1);
        with_start.push(0.0);
        with_start.extend_from_slice(&positions);
        match objectives::trading_returns(&with_start, self.returns, &self.cost) {
            Ok(rewards) => self.objective.evaluate(&rewards).value,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Trade count and mean holding time from a discretized position trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeStats {
    pub trade_count: usize,
    pub mean_holding_hours: f64,
    /// Set when no trade occurred; the holding time then reports the full
    /// span.
    pub flagged: bool,
}

/// A trade is any change of the discretized long/flat/short state, counting
/// the initial entry from flat. The mean holding time divides the elapsed
/// span (actual timestamps) by the trade count.
pub fn trade_stats(positions: &[f64], timestamps: &[i64], threshold: f64) -> TradeStats {
    let mut count = 0usize;
    let mut state = 0i8;
    for &f in positions {
        let next = trader::discretize_position(f, threshold);
        if next != state {
            count += 1;
            state = next;
        }
    }
    let span_hours = if timestamps.len() >= 2 {
        (timestamps[timestamps.len() - 1] - timestamps[0]) as f64 / 3600.0
    } else {
        0.0
    };
    if count == 0 {
        TradeStats {
            trade_count: 0,
            mean_holding_hours: span_hours,
            flagged: true,
        }
    } else {
        TradeStats {
            trade_count: count,
            mean_holding_hours: span_hours / count as f64,
            flagged: false,
        }
    }
}

/// Everything measured on one split: per-bar traces plus summary metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEval {
    pub timestamps: Vec<i64>,
    pub prices: Vec<f64>,
    pub positions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub equity: Vec<f64>,
    pub sharpe: f64,
    pub sharpe_degenerate: bool,
    pub ddr: f64,
    pub ddr_floored: bool,
    pub max_drawdown: f64,
    pub total_profit: f64,
    pub trade_count: usize,
    pub mean_holding_hours: f64,
    pub holding_flagged: bool,
}

/// Forward-only evaluation of fixed parameters on a split: positions,
/// equity, both reward functionals, drawdown, and trade statistics.
/// Evaluation never mutates the parameters.
pub fn evaluate(
    params: &AgentParams,
    split: &PriceSeries,
    standardizer: &Standardizer,
    cfg: &ExperimentConfig,
) -> Result<SplitEval, BacktestError> {
    let returns = returns_from_prices(split)?;
    let windows = window_sequence(&returns, cfg.window, standardizer);
    let positions = forward_positions(params, &windows, cfg.block_len)?;
    finish_eval(split, &returns, positions, cfg)
}

fn finish_eval(
    split: &PriceSeries,
    returns: &timeseries::ReturnSeries,
    positions: Vec<f64>,
    cfg: &ExperimentConfig,
) -> Result<SplitEval, BacktestError> {
    let mut with_start = Vec::with_capacity(positions.len() + 1);
    with_start.push(0.0);
    with_start.extend_from_slice(&positions);
    let rewards = objectives::trading_returns(&with_start, returns.values(), &cfg.cost)?;
    let mut equity = Vec::with_capacity(rewards.len());
    let mut acc = 0.0;
    for r in &rewards {
        acc += r;
        equity.push(acc);
    }
    let sharpe = ObjectiveSpec::sharpe().evaluate(&rewards);
    let down = objectives::ddr(
        &rewards,
        &ObjectiveSpec {
            kind: objectives::ObjectiveKind::DownsideDeviation,
            epsilon: cfg.objective.epsilon,
        },
    );
    let stats = trade_stats(&positions, returns.timestamps(), cfg.discretize_threshold);
    Ok(SplitEval {
        timestamps: returns.timestamps().to_vec(),
        prices: split.prices()[1..].to_vec(),
        positions,
        total_profit: equity.last().copied().unwrap_or(0.0),
        max_drawdown: objectives::max_drawdown(&equity),
        rewards,
        equity,
        sharpe: sharpe.value,
        sharpe_degenerate: sharpe.degenerate,
        ddr: down.value,
        ddr_floored: down.floored,
        trade_count: stats.trade_count,
        mean_holding_hours: stats.mean_holding_hours,
        holding_flagged: stats.flagged,
    })
}

/// Block-wise test evaluation that retrains on the trailing training-length
/// window before each block after the first, continuing from the current
/// parameters. Positions are stitched into one trace.
fn evaluate_with_retraining(
    cfg: &ExperimentConfig,
    data: &PriceSeries,
    split_at: usize,
    params: &AgentParams,
    standardizer: &Standardizer,
) -> Result<SplitEval, BacktestError> {
    let test = data.segment(split_at..split_at + cfg.test_len)?;
    let test_returns = returns_from_prices(&test)?;
    let block = if cfg.block_len == 0 {
        test_returns.len()
    } else {
        cfg.block_len
    };

    let mut current = params.clone();
    let mut norm = *standardizer;
    let mut positions = Vec::with_capacity(test_returns.len());
    let mut start = 0usize; // return index within the test split
    while start < test_returns.len() {
        let end = (start + block).min(test_returns.len());
        if start > 0 {
            let retrain_end = split_at + start + 1; // bar index after `start` returns
            let retrain_start = retrain_end.saturating_sub(cfg.train_len);
            let window = data.segment(retrain_start..retrain_end)?;
            let outcome = train_from(cfg, &window, current)?;
            current = outcome.params;
            norm = outcome.standardizer;
        }
        // Bars covering returns [start, end): one leading bar for the diff.
        let seg = test.segment(start..(end + 1).min(test.len()))?;
        let seg_returns = returns_from_prices(&seg)?;
        let windows = window_sequence(&seg_returns, cfg.window, &norm);
        positions.extend(forward_positions(&current, &windows, 0)?);
        start = end;
    }
    finish_eval(&test, &test_returns, positions, cfg)
}

/// One full experiment: equity curves, objective traces, trade statistics,
/// the trained parameter snapshot, and the untrained-baseline comparison on
/// the test split.
#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub config: ExperimentConfig,
    pub objective_trace: Vec<f64>,
    /// Per-generation optimizer rows when an evolution strategy trained the
    /// agent.
    pub optimizer_trace: Option<Vec<optim::EsTraceRow>>,
    pub train_eval: SplitEval,
    pub test_eval: SplitEval,
    /// The freshly initialized (untrained) agent on the same test split.
    pub baseline_eval: SplitEval,
    pub params: AgentParams,
}

pub fn run_one(cfg: &ExperimentConfig) -> Result<BacktestReport, BacktestError> {
    let data = load_data(&cfg.data)?;
    run_on(cfg, &data)
}

/// Run one experiment on already-loaded data.
pub fn run_on(cfg: &ExperimentConfig, data: &PriceSeries) -> Result<BacktestReport, BacktestError> {
    let (train_split, test_split) = split(data, cfg.train_len, cfg.test_len)?;
    let outcome = train(cfg, &train_split)?;
    let train_eval = evaluate(&outcome.params, &train_split, &outcome.standardizer, cfg)?;
    let test_eval = if cfg.retrain_between_blocks {
        evaluate_with_retraining(
            cfg,
            data,
            cfg.train_len,
            &outcome.params,
            &outcome.standardizer,
        )?
    } else {
        evaluate(&outcome.params, &test_split, &outcome.standardizer, cfg)?
    };
    let baseline = init_agent(cfg);
    let baseline_eval = evaluate(&baseline, &test_split, &outcome.standardizer, cfg)?;
    Ok(BacktestReport {
        config: cfg.clone(),
        objective_trace: outcome.trace,
        optimizer_trace: outcome.optimizer_trace,
        train_eval,
        test_eval,
        baseline_eval,
        params: outcome.params,
    })
}

/// Paired test-split comparison between two runs of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label_a: String,
    pub label_b: String,
    pub profit_a: f64,
    pub profit_b: f64,
    pub sharpe_a: f64,
    pub sharpe_b: f64,
    pub ddr_a: f64,
    pub ddr_b: f64,
    pub trades_a: usize,
    pub trades_b: usize,
    pub drawdown_a: f64,
    pub drawdown_b: f64,
}

#[derive(Debug)]
pub struct SuiteOutcome {
    /// One slot per config, `None` where the cell failed.
    pub reports: Vec<Option<BacktestReport>>,
    pub comparisons: Vec<ComparisonRow>,
    /// `(label, error)` per failed cell.
    pub failures: Vec<(String, String)>,
}

/// Run a grid of experiments (cells in parallel, each owning its RNG and
/// report) and emit the paired comparisons.
pub fn run_experiment_suite(
    configs: &[ExperimentConfig],
    pairs: &[(usize, usize)],
) -> SuiteOutcome {
    let results: Vec<Result<BacktestReport, BacktestError>> =
        configs.par_iter().map(run_one).collect();
    let mut reports = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (cfg, result) in configs.iter().zip(results) {
        match result {
            Ok(report) => reports.push(Some(report)),
            Err(err) => {
                failures.push((cfg.label.clone(), err.to_string()));
                reports.push(None);
            }
        }
    }
    let comparisons = pairs
        .iter()
        .filter_map(|&(a, b)| {
            let ra = reports.get(a)?.as_ref()?;
            let rb = reports.get(b)?.as_ref()?;
            Some(ComparisonRow {
                label_a: ra.config.label.clone(),
                label_b: rb.config.label.clone(),
                profit_a: ra.test_eval.total_profit,
                profit_b: rb.test_eval.total_profit,
                sharpe_a: ra.test_eval.sharpe,
                sharpe_b: rb.test_eval.sharpe,
                ddr_a: ra.test_eval.ddr,
                ddr_b: rb.test_eval.ddr,
                trades_a: ra.test_eval.trade_count,
                trades_b: rb.test_eval.trade_count,
                drawdown_a: ra.test_eval.max_drawdown,
                drawdown_b: rb.test_eval.max_drawdown,
            })
        })
        .collect();
    SuiteOutcome {
        reports,
        comparisons,
        failures,
    }
}
