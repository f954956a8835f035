//! Cross-module pipeline tests through the public API: data in, trained
//! agent out, reports that reconcile with the primitives they were built
//! from.

use rrl_core::backtest::synthetic::SyntheticConfig;
use rrl_core::backtest::{
    self, load_data, run_on, run_one, AgentKind, AgentParams, DataSource, ExperimentConfig,
    TrainMethod,
};
use rrl_core::objectives::{self, CostModel};
use rrl_core::optim::NmConfig;
use rrl_core::timeseries::{load_csv, CsvSchema};

fn sine_cfg(label: &str, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(label);
    cfg.data = DataSource::Synthetic(SyntheticConfig::sine(600, 17));
    cfg.train_len = 300;
    cfg.test_len = 300;
    cfg.window = 4;
    cfg.epochs = 80;
    cfg.cost = CostModel::frictionless();
    cfg.seed = seed;
    cfg
}

#[test]
fn csv_file_to_backtest_report() {
    let dir = std::env::temp_dir().join(format!("rrl-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("prices.csv");
    let mut csv = String::from("timestamp,price\n");
    for t in 0..400i64 {
        csv.push_str(&format!(
            "{},{}\n",
            t * 1800,
            50.0 + (t as f64 / 8.0).sin() * 2.0
        ));
    }
    std::fs::write(&path, &csv).unwrap();

    let loaded = load_csv(&path, &CsvSchema::default()).unwrap();
    assert_eq!(loaded.len(), 400);
    assert_eq!(loaded.bar_interval(), 1800);

    let mut cfg = sine_cfg("csv-pipeline", 3);
    cfg.data = DataSource::Csv(path);
    cfg.train_len = 200;
    cfg.test_len = 200;
    let report = run_one(&cfg).unwrap();
    assert_eq!(report.test_eval.equity.len(), 199);
    assert!(report.objective_trace.last().unwrap().is_finite());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn report_totals_reconcile_with_reward_primitives() {
    let cfg = sine_cfg("reconcile", 5);
    let report = run_one(&cfg).unwrap();
    let eval = &report.test_eval;
    // Rebuild the reward series from positions alone and compare.
    let mut with_start = vec![0.0];
    with_start.extend_from_slice(&eval.positions);
    let data = load_data(&cfg.data).unwrap();
    let (_, test_split) = backtest::split(&data, cfg.train_len, cfg.test_len).unwrap();
    let returns = rrl_core::timeseries::returns_from_prices(&test_split).unwrap();
    let rewards = objectives::trading_returns(&with_start, returns.values(), &cfg.cost).unwrap();
    assert_eq!(rewards, eval.rewards);
    let total: f64 = rewards.iter().sum();
    assert!((total - eval.total_profit).abs() < 1e-10);
    assert!((objectives::max_drawdown(&eval.equity) - eval.max_drawdown).abs() < 1e-12);
}

#[test]
fn batch_and_derivative_free_agree_on_direction() {
    // Both training routes should end above the untrained objective on the
    // predictable market; the analytic route is not required to win.
    let mut batch = sine_cfg("batch", 11);
    batch.epochs = 100;
    let batch_report = run_one(&batch).unwrap();

    let mut nm = sine_cfg("nm", 11);
    nm.method = TrainMethod::NelderMead(NmConfig::default());
    nm.epochs = 150;
    let nm_report = run_one(&nm).unwrap();

    for report in [&batch_report, &nm_report] {
        assert!(
            report.objective_trace.last().unwrap() > &report.objective_trace[0],
            "{}: {:?} -> {:?}",
            report.config.label,
            report.objective_trace[0],
            report.objective_trace.last().unwrap()
        );
    }
}

#[test]
fn raising_transaction_cost_never_raises_sign_flips() {
    // Trained on the same data and seed, a costlier model must not flip its
    // position sign more often; checked across a three-point cost grid.
    for seed in 1..=3u64 {
        let mut flips = Vec::new();
        for cost in [0.0, 0.0005, 0.002] {
            let mut cfg = ExperimentConfig::new("cost-grid");
            cfg.data = DataSource::Synthetic(SyntheticConfig::trend_noise(2000, seed + 700));
            cfg.cost = CostModel::new(1.0, cost).unwrap();
            cfg.epochs = 150;
            cfg.seed = seed;
            let report = run_one(&cfg).unwrap();
            let count = report
                .train_eval
                .positions
                .windows(2)
                .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
                .count();
            flips.push(count);
        }
        assert!(
            flips[0] >= flips[1] && flips[1] >= flips[2],
            "seed {seed}: sign flips increased along the cost grid: {flips:?}"
        );
    }
}

#[test]
fn lstm_and_plain_share_the_protocol() {
    let data = load_data(&DataSource::Synthetic(SyntheticConfig::sine(600, 23))).unwrap();
    for agent in [AgentKind::Plain, AgentKind::Lstm] {
        let mut cfg = sine_cfg("prot", 2);
        cfg.agent = agent;
        cfg.hidden = 4;
        cfg.epochs = 15;
        cfg.dropout = if agent == AgentKind::Lstm { 0.55 } else { 0.0 };
        let report = run_on(&cfg, &data).unwrap();
        assert_eq!(report.train_eval.positions.len(), cfg.train_len - 1);
        assert_eq!(report.test_eval.positions.len(), cfg.test_len - 1);
        match (&report.params, agent) {
            (AgentParams::Plain(_), AgentKind::Plain) => {}
            (AgentParams::Lstm(_), AgentKind::Lstm) => {}
            _ => panic!("agent kind mismatch"),
        }
    }
}
