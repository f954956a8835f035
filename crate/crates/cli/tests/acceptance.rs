//! Acceptance gate: one test per criterion, each printing a pass line with
//! the measured numbers (run with `-- --nocapture` to see them all).
//!
//! Every oracle here is independent of the implementation path it checks:
//! gradients are verified against central finite differences of the objective
//! value, ratio/drawdown values against direct-arithmetic and brute-force
//! re-computations, and the experiment-level criteria are measured properties
//! of seeded runs.

use std::process::Command;
use std::time::{Duration, Instant};

use rrl_core::backtest::synthetic::SyntheticConfig;
use rrl_core::backtest::{
    run_one, AgentParams, DataSource, ExperimentConfig,
};
use rrl_core::backtest::report::render_report;
use rrl_core::lstm::{self, DropoutSpec, LstmTraderParams};
use rrl_core::objectives::{self, CostModel, ObjectiveKind, ObjectiveSpec};
use rrl_core::optim::{self, EsConfig, FnObjective, NmConfig};
use rrl_core::timeseries::FeatureWindow;
use rrl_core::trader::{self, TraderParams};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel_ok(a: f64, b: f64, rel: f64) -> bool {
    // The additive floor absorbs finite-difference noise on components that
    // are exactly zero.
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-9
}

fn budget(start: Instant, limit: Duration, what: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= limit,
        "{what} exceeded its runtime budget: {elapsed:?} > {limit:?}"
    );
}

fn random_windows(t: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<FeatureWindow> {
    (0..t)
        .map(|_| FeatureWindow::new((0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

fn random_returns(t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn criterion_01_rrl_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let spec = ObjectiveSpec::sharpe();
    let t_grid = [10usize, 50, 200];
    let m_grid = [2usize, 8, 16];
    let mut checked = 0usize;
    for instance in 0..50 {
        let t_len = t_grid[instance % t_grid.len()];
        let m = m_grid[(instance / 3) % m_grid.len()];
        let costless = instance % 2 == 0;
        let cm = if costless {
            CostModel::frictionless()
        } else {
            CostModel::new(1.0, 0.002).unwrap()
        };
        let tol = if costless { 1e-5 } else { 1e-4 };
        let mut params = TraderParams::init(m, rng.gen_range(-0.3..0.3), true, rng.gen());
        params.recurrence = rng.gen_range(-0.5..0.5);
        let windows = random_windows(t_len, m, &mut rng);
        let returns = random_returns(t_len, &mut rng);
        let grad = trader::batch_gradient(&params, &windows, &returns, &cm, &spec).unwrap();

        let base = params.flatten();
        let eval = |v: &[f64]| {
            let p = params.unflatten(v).unwrap();
            let trace = trader::forward(&p, &windows).unwrap();
            let rewards =
                objectives::trading_returns(&trace.with_initial(), &returns, &cm).unwrap();
            objectives::sharpe_ratio(&rewards).unwrap()
        };
        for j in 0..base.len() {
            let h = 1e-5;
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            assert!(
                rel_ok(grad[j], fd, tol),
                "instance {instance} (T={t_len}, m={m}, c={}): component {j} \
                 analytic {} vs fd {fd}",
                cm.cost_per_share,
                grad[j]
            );
            checked += 1;
        }
    }
    budget(start, Duration::from_secs(30), "criterion 1");
    println!(
        "acceptance 01 (rrl gradient vs finite differences): PASS — 50 instances, \
         {checked} components, tol 1e-5 costless / 1e-4 with cost, {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_02_lstm_gradient_matches_finite_differences() {
    let start = Instant::now();
    let spec = ObjectiveSpec::sharpe();
    let cm = CostModel::frictionless();
    let mut checked = 0usize;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(7919) + 5);
        let hidden = 2 + (seed as usize % 3); // 2..=4
        let m = 2 + (seed as usize % 2);
        let t_len = if seed % 2 == 0 { 20 } else { 12 };
        let params = LstmTraderParams::init(m, hidden, 1, 0.0, true, seed + 400);
        let windows = random_windows(t_len, m, &mut rng);
        let returns = random_returns(t_len, &mut rng);
        for drop in [DropoutSpec::eval(), DropoutSpec::train(0.55, seed + 800)] {
            let grad =
                lstm::bptt_gradient(&windows, &returns, &cm, &spec, &params, &drop).unwrap();
            let base = params.flatten();
            let eval = |v: &[f64]| {
                let p = params.unflatten(v).unwrap();
                let fwd = lstm::stack_forward(&windows, &p, &drop).unwrap();
                let rewards =
                    objectives::trading_returns(&fwd.trace.with_initial(), &returns, &cm)
                        .unwrap();
                objectives::sharpe_ratio(&rewards).unwrap()
            };
            for j in 0..base.len() {
                let h = 1e-5;
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[j] += h;
                minus[j] -= h;
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
                assert!(
                    rel_ok(grad[j], fd, 1e-4),
                    "seed {seed} masked={} component {j}: analytic {} vs fd {fd}",
                    drop.rate > 0.0,
                    grad[j]
                );
                checked += 1;
            }
        }
    }
    budget(start, Duration::from_secs(60), "criterion 2");
    println!(
        "acceptance 02 (lstm bptt gradient vs finite differences): PASS — 20 seeds, \
         with and without frozen masks, {checked} components, tol 1e-4, {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_03_objective_values_match_brute_force_oracles() {
    // Independent direct-arithmetic oracles.
    fn oracle_sharpe(r: &[f64]) -> Option<f64> {
        if r.len() < 2 {
            return None;
        }
        let n = r.len() as f64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for v in r {
            sum += v;
            sq += v * v;
        }
        let mean = sum / n;
        let var = sq / n - mean * mean;
        if var < 1e-12 {
            None
        } else {
            Some(mean / var.sqrt())
        }
    }
    fn oracle_ddr(r: &[f64], eps: f64) -> (f64, bool) {
        let n = r.len() as f64;
        let mut sum = 0.0;
        let mut down = 0.0;
        for v in r {
            sum += v;
            if *v < 0.0 {
                down += v * v;
            }
        }
        let dd = (down / n).sqrt();
        if dd < eps {
            (sum / n / eps, true)
        } else {
            (sum / n / dd, false)
        }
    }
    fn oracle_drawdown(e: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..e.len() {
            for j in i..e.len() {
                worst = worst.max(e[i] - e[j]);
            }
        }
        worst
    }

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    let spec = ObjectiveSpec::downside_deviation();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0);
    for case in 0..1000 {
        let len = rng.gen_range(2..120);
        let series: Vec<f64> = match case % 4 {
            0 => (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            1 => (0..len).map(|_| rng.gen_range(0.0..3.0)).collect(),
            2 => (0..len).map(|_| rng.gen_range(-3.0..0.5)).collect(),
            _ => vec![rng.gen_range(-1.0..1.0); len],
        };
        match (objectives::sharpe_ratio(&series), oracle_sharpe(&series)) {
            (Ok(got), Some(want)) => assert!(close(got, want), "sharpe {got} vs {want}"),
            (Err(_), None) => {}
            (got, want) => panic!("sharpe degeneracy disagreement: {got:?} vs {want:?}"),
        }
        let got = objectives::ddr(&series, &spec);
        let (want, want_floored) = oracle_ddr(&series, spec.epsilon);
        assert_eq!(got.floored, want_floored);
        assert!(close(got.value, want), "ddr {} vs {want}", got.value);
        let dd = objectives::max_drawdown(&series);
        let want = oracle_drawdown(&series);
        assert!(close(dd, want), "drawdown {dd} vs {want}");
    }
    println!(
        "acceptance 03 (objective oracles, 1000 random series at 1e-10): PASS — {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_04_learning_earns_out_of_sample_on_sine() {
    let start = Instant::now();
    let mut passes = 0;
    let mut detail = Vec::new();
    for seed in 1..=5u64 {
        let mut cfg = ExperimentConfig::new("sine-learning");
        cfg.data = DataSource::Synthetic(SyntheticConfig::sine(2000, seed + 100));
        cfg.cost = CostModel::frictionless();
        cfg.epochs = 500;
        cfg.seed = seed;
        let report = run_one(&cfg).unwrap();
        let eval = &report.test_eval;
        if eval.total_profit > 0.0 && eval.sharpe > 0.0 {
            passes += 1;
        }
        detail.push(format!(
            "seed {seed}: profit {:.2}, sharpe {:.2}",
            eval.total_profit, eval.sharpe
        ));
        // Qualitative training-curve check: the objective ends above its start.
        assert!(report.objective_trace.last().unwrap() > &report.objective_trace[0]);
    }
    assert!(
        passes >= 4,
        "test-set profit/sharpe positive in only {passes}/5 seeds: {detail:?}"
    );
    budget(start, Duration::from_secs(120), "criterion 4");
    println!(
        "acceptance 04 (out-of-sample learning on sine, 500 epochs): PASS — {passes}/5 \
         seeds positive [{}], {:?}",
        detail.join("; "),
        start.elapsed()
    );
}

#[test]
fn criterion_05_frozen_bias_cuts_trade_frequency() {
    let start = Instant::now();
    let mut detail = Vec::new();
    for seed in 1..=5u64 {
        let mut counts = Vec::new();
        let mut hours = Vec::new();
        for bias in [1.0, 5.0] {
            let mut cfg = ExperimentConfig::new("bias-term");
            cfg.data = DataSource::Synthetic(SyntheticConfig::trend_noise(2000, seed + 500));
            cfg.cost = CostModel::new(1.0, 0.0005).unwrap();
            cfg.bias = bias;
            cfg.bias_trainable = false;
            cfg.epochs = 150;
            cfg.seed = seed;
            let report = run_one(&cfg).unwrap();
            counts.push(report.test_eval.trade_count);
            hours.push(report.test_eval.mean_holding_hours);
        }
        assert!(
            counts[1] * 3 <= counts[0],
            "seed {seed}: b=5 traded {} vs b=1 {} — not under one third",
            counts[1],
            counts[0]
        );
        detail.push(format!(
            "seed {seed}: b1 {} trades ({:.1}h) vs b5 {} trades ({:.1}h)",
            counts[0], hours[0], counts[1], hours[1]
        ));
    }
    budget(start, Duration::from_secs(120), "criterion 5");
    println!(
        "acceptance 05 (frozen b=5 trades at most a third of b=1, per seed): PASS — [{}], {:?}",
        detail.join("; "),
        start.elapsed()
    );
}

#[test]
fn criterion_06_downside_objective_limits_drawdown() {
    let start = Instant::now();
    let mut passes = 0;
    let mut detail = Vec::new();
    for seed in 1..=5u64 {
        let mut drawdowns = Vec::new();
        for kind in [ObjectiveKind::DownsideDeviation, ObjectiveKind::Sharpe] {
            let mut cfg = ExperimentConfig::new("ddr-protection");
            cfg.data = DataSource::Synthetic(SyntheticConfig::down_jumps(2000, seed + 900));
            cfg.objective.kind = kind;
            cfg.epochs = 150;
            cfg.seed = seed;
            let report = run_one(&cfg).unwrap();
            drawdowns.push(report.test_eval.max_drawdown);
        }
        if drawdowns[0] <= drawdowns[1] {
            passes += 1;
        }
        detail.push(format!(
            "seed {seed}: ddr {:.3} vs sharpe {:.3}",
            drawdowns[0], drawdowns[1]
        ));
    }
    assert!(
        passes >= 4,
        "downside agent won the drawdown comparison in only {passes}/5 paired seeds: {detail:?}"
    );
    println!(
        "acceptance 06 (downside-deviation drawdown protection): PASS — {passes}/5 paired \
         seeds [{}], {:?}",
        detail.join("; "),
        start.elapsed()
    );
}

#[test]
fn criterion_07_optimizer_benchmarks() {
    let start = Instant::now();

    let rosenbrock = FnObjective {
        dim: 2,
        f: |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
    };
    let nm_cfg = NmConfig {
        max_iters: 500,
        tolerance: 1e-10,
        ..NmConfig::default()
    };
    let nm = optim::nelder_mead(&rosenbrock, &[-1.2, 1.0], &nm_cfg);
    assert!(
        (nm.x[0] - 1.0).abs() <= 1e-4 && (nm.x[1] - 1.0).abs() <= 1e-4,
        "Nelder-Mead stopped at {:?} after {} iterations",
        nm.x,
        nm.iterations
    );
    assert!(nm.iterations <= 500);

    let sphere = FnObjective {
        dim: 10,
        f: |x: &[f64]| -x.iter().map(|v| v * v).sum::<f64>(),
    };
    let mut sigma_medians = Vec::new();
    for seed in 1..=5u64 {
        let cfg = EsConfig {
            mu: 5,
            lambda: 20,
            sigma0: 1.0,
            tau: None,
            max_iters: 300,
            seed,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7000);
        let x0: Vec<f64> = (0..10).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let res = optim::evolution_strategy(&sphere, &x0, &cfg).unwrap();
        assert!(
            res.value > -1e-6,
            "seed {seed}: ES best fitness {} after 300 generations",
            res.value
        );
        let last = res.trace.last().unwrap();
        assert!(
            last.sigma_median < cfg.sigma0 / 10.0,
            "seed {seed}: median step size {} did not shrink below {}",
            last.sigma_median,
            cfg.sigma0 / 10.0
        );
        sigma_medians.push(last.sigma_median);
    }
    println!(
        "acceptance 07 (optimizer benchmarks): PASS — Nelder-Mead at ({:.6}, {:.6}) in {} \
         iterations; (5,20)-ES solved the 10-D sphere in 5/5 seeds, final median step sizes \
         {:?}, {:?}",
        nm.x[0],
        nm.x[1],
        nm.iterations,
        sigma_medians
            .iter()
            .map(|s| format!("{s:.1e}"))
            .collect::<Vec<_>>(),
        start.elapsed()
    );
}

#[test]
fn criterion_08_weight_decay_shrinks_weights() {
    let start = Instant::now();
    let mut detail = Vec::new();
    for seed in 1..=5u64 {
        let mut norms = Vec::new();
        for decay in [0.0, 0.01] {
            let mut cfg = ExperimentConfig::new("weight-decay");
            cfg.data = DataSource::Synthetic(SyntheticConfig::sine(2000, seed + 300));
            cfg.cost = CostModel::frictionless();
            cfg.epochs = 200;
            cfg.weight_decay = decay;
            cfg.seed = seed;
            let report = run_one(&cfg).unwrap();
            let norm = match &report.params {
                AgentParams::Plain(p) => p.weights.iter().map(|v| v * v).sum::<f64>().sqrt(),
                AgentParams::Lstm(_) => unreachable!(),
            };
            norms.push(norm);
        }
        assert!(
            norms[1] < norms[0],
            "seed {seed}: decayed norm {} is not below undecayed {}",
            norms[1],
            norms[0]
        );
        detail.push(format!("seed {seed}: {:.3} -> {:.3}", norms[0], norms[1]));
    }
    println!(
        "acceptance 08 (weight decay strictly shrinks final weight norm, 5/5): PASS — [{}], {:?}",
        detail.join("; "),
        start.elapsed()
    );
}

#[test]
fn criterion_09_invariance_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9);

    // Scale invariance of both ratios under R -> kR, k > 0.
    for _ in 0..50 {
        let len = rng.gen_range(3..80);
        let rewards: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.5)).collect();
        let k = rng.gen_range(0.01..50.0);
        let scaled: Vec<f64> = rewards.iter().map(|r| r * k).collect();
        if let (Ok(a), Ok(b)) = (
            objectives::sharpe_ratio(&rewards),
            objectives::sharpe_ratio(&scaled),
        ) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "sharpe {a} vs {b}");
        }
        let spec = ObjectiveSpec::downside_deviation();
        let (a, b) = (objectives::ddr(&rewards, &spec), objectives::ddr(&scaled, &spec));
        if !a.floored && !b.floored {
            assert!(
                (a.value - b.value).abs() <= 1e-10 * a.value.abs().max(1.0),
                "ddr {} vs {}",
                a.value,
                b.value
            );
        }
    }

    // No look-ahead: positions recomputed from truncated data are identical,
    // and the tanh output stays strictly inside (-1, 1).
    let mut cfg = ExperimentConfig::new("invariance");
    cfg.data = DataSource::Synthetic(SyntheticConfig::sine(700, 21));
    cfg.train_len = 350;
    cfg.test_len = 350;
    cfg.epochs = 60;
    cfg.seed = 9;
    let report = run_one(&cfg).unwrap();
    for eval in [&report.train_eval, &report.test_eval] {
        assert!(eval.positions.iter().all(|f| f.abs() < 1.0));
    }
    let data = rrl_core::backtest::load_data(&cfg.data).unwrap();
    let (train_split, _) = rrl_core::backtest::split(&data, cfg.train_len, cfg.test_len).unwrap();
    let returns = rrl_core::timeseries::returns_from_prices(&train_split).unwrap();
    let outcome = rrl_core::backtest::train(&cfg, &train_split).unwrap();
    let windows =
        rrl_core::timeseries::window_sequence(&returns, cfg.window, &outcome.standardizer);
    let inner = match &outcome.params {
        AgentParams::Plain(p) => p,
        AgentParams::Lstm(_) => unreachable!(),
    };
    let full = trader::forward(inner, &windows).unwrap().positions;
    for t in [0usize, 5, 111, windows.len() - 1] {
        let truncated = trader::forward(inner, &windows[..=t]).unwrap().positions;
        assert_eq!(truncated[t], full[t], "position {t} depends on later data");
    }

    // Determinism: identical config renders byte-identical reports.
    let again = run_one(&cfg).unwrap();
    assert_eq!(
        render_report(&report, "p.txt"),
        render_report(&again, "p.txt")
    );
    assert_eq!(
        report.params.snapshot_text(cfg.seed),
        again.params.snapshot_text(cfg.seed)
    );

    println!(
        "acceptance 09 (scale invariance, no look-ahead, determinism, |F| < 1): PASS — {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_10_cli_paper_v_preset_end_to_end() {
    let start = Instant::now();
    let out = std::env::temp_dir().join(format!("rrl-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&out).unwrap();

    let status = Command::new(env!("CARGO_BIN_EXE_rrl"))
        .args([
            "suite",
            "--preset",
            "paper-v",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success(), "suite exited with {status}");

    let labels = [
        "pv-bias-b1",
        "pv-bias-b5",
        "pv-lstm-trader",
        "pv-rrl-trader",
        "pv-ddr",
        "pv-sharpe",
    ];
    for label in labels {
        assert!(
            out.join(format!("{label}.report.txt")).exists(),
            "missing report for {label}"
        );
        assert!(out.join(format!("{label}.params.txt")).exists());
    }
    assert!(out.join("summary.csv").exists());
    assert!(out.join("comparisons.csv").exists());

    // Panels from one report: equal row counts matching the split, which has
    // one tradable period per bar after the first.
    let panel_dir = out.join("panels");
    let status = Command::new(env!("CARGO_BIN_EXE_rrl"))
        .args([
            "plotdata",
            "--report",
            out.join("pv-ddr.report.txt").to_str().unwrap(),
            "--out",
            panel_dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success(), "plotdata exited with {status}");
    let expected_rows = 1000 - 1; // test split length minus the seed bar
    for panel in ["price_panel.csv", "signal_panel.csv", "equity_panel.csv"] {
        let text = std::fs::read_to_string(panel_dir.join(panel)).unwrap();
        let rows = text.lines().count() - 1; // header
        assert_eq!(rows, expected_rows, "{panel} rows");
    }
    let trace = std::fs::read_to_string(panel_dir.join("objective_trace.csv")).unwrap();
    assert_eq!(trace.lines().count() - 1, 150 + 1); // per-epoch trace plus start

    std::fs::remove_dir_all(&out).ok();
    budget(start, Duration::from_secs(300), "criterion 10");
    println!(
        "acceptance 10 (paper-v preset end to end: 6 reports, panels match split): PASS — {:?}",
        start.elapsed()
    );
}
