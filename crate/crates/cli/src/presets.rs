//! Built-in experiment grids: the bias-term trade-frequency experiment, the
//! LSTM-vs-plain comparison, the downside-deviation-vs-Sharpe comparison,
//! and the combined grid running all three.

use rrl_core::backtest::synthetic::SyntheticConfig;
use rrl_core::backtest::{AgentKind, DataSource, ExperimentConfig};
use rrl_core::objectives::ObjectiveKind;
use rrl_core::seeding::derive_seed;

/// Experiment cells plus the index pairs compared against each other.
pub type Grid = (Vec<ExperimentConfig>, Vec<(usize, usize)>);

/// Build the configs and comparison pairs for a preset name.
pub fn build(name: &str, base: &ExperimentConfig) -> Option<Grid> {
    match name {
        "bias" => Some(bias(base, "")),
        "lstm-vs-rrl" => Some(lstm_vs_rrl(base, "")),
        "ddr-vs-sharpe" => Some(ddr_vs_sharpe(base, "")),
        "paper-v" => {
            let mut configs = Vec::new();
            let mut pairs = Vec::new();
            for part in [bias(base, "pv-"), lstm_vs_rrl(base, "pv-"), ddr_vs_sharpe(base, "pv-")] {
                let offset = configs.len();
                configs.extend(part.0);
                pairs.extend(part.1.iter().map(|(a, b)| (a + offset, b + offset)));
            }
            Some((configs, pairs))
        }
        _ => None,
    }
}

fn experiment_base(base: &ExperimentConfig, label: String, data: SyntheticConfig) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.label = label;
    cfg.data = DataSource::Synthetic(data);
    cfg.epochs = 150;
    cfg.learning_rate = 0.05;
    cfg
}

/// Frozen bias 1 vs 5 on the two-sided seasonal market, where flipping is
/// worth it: the moderate bias still lets the trader switch sides, the large
/// bias saturates it into rare transactions.
fn bias(base: &ExperimentConfig, prefix: &str) -> Grid {
    let data = SyntheticConfig::sine(2000, derive_seed(base.seed, "data.bias"));
    let mut b1 = experiment_base(base, format!("{prefix}bias-b1"), data.clone());
    b1.agent = AgentKind::Lstm;
    b1.dropout = 0.55;
    b1.bias = 1.0;
    b1.bias_trainable = false;
    b1.cost.cost_per_share = 0.0005;
    let mut b5 = b1.clone();
    b5.label = format!("{prefix}bias-b5");
    b5.bias = 5.0;
    (vec![b1, b5], vec![(0, 1)])
}

/// LSTM-fed trader vs the plain recurrent trader, head to head on the same
/// jumpy market and seed.
fn lstm_vs_rrl(base: &ExperimentConfig, prefix: &str) -> Grid {
    let data = SyntheticConfig::down_jumps(2000, derive_seed(base.seed, "data.lstm-vs-rrl"));
    let mut lstm = experiment_base(base, format!("{prefix}lstm-trader"), data.clone());
    lstm.agent = AgentKind::Lstm;
    lstm.dropout = 0.55;
    lstm.cost.cost_per_share = 0.0005;
    let mut plain = experiment_base(base, format!("{prefix}rrl-trader"), data);
    plain.agent = AgentKind::Plain;
    plain.cost.cost_per_share = 0.0005;
    (vec![lstm, plain], vec![(0, 1)])
}

/// Downside-deviation vs Sharpe objective on the falling, jumpy market.
fn ddr_vs_sharpe(base: &ExperimentConfig, prefix: &str) -> Grid {
    let data = SyntheticConfig::down_jumps(2000, derive_seed(base.seed, "data.ddr-vs-sharpe"));
    let mut ddr = experiment_base(base, format!("{prefix}ddr"), data.clone());
    ddr.agent = AgentKind::Lstm;
    ddr.dropout = 0.55;
    ddr.objective.kind = ObjectiveKind::DownsideDeviation;
    let mut sharpe = experiment_base(base, format!("{prefix}sharpe"), data);
    sharpe.agent = AgentKind::Lstm;
    sharpe.dropout = 0.55;
    sharpe.objective.kind = ObjectiveKind::Sharpe;
    (vec![ddr, sharpe], vec![(0, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_v_runs_all_three_experiments() {
        let base = ExperimentConfig::new("base");
        let (configs, pairs) = build("paper-v", &base).unwrap();
        assert_eq!(configs.len(), 6);
        assert_eq!(pairs, vec![(0, 1), (2, 3), (4, 5)]);
        let labels: Vec<&str> = configs.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(
            labels,
            ["pv-bias-b1", "pv-bias-b5", "pv-lstm-trader", "pv-rrl-trader", "pv-ddr", "pv-sharpe"]
        );
    }

    #[test]
    fn unknown_preset_is_none() {
        assert!(build("nope", &ExperimentConfig::new("x")).is_none());
    }

    #[test]
    fn bias_pair_differs_only_in_bias() {
        let (configs, _) = build("bias", &ExperimentConfig::new("x")).unwrap();
        assert_eq!(configs[0].bias, 1.0);
        assert_eq!(configs[1].bias, 5.0);
        assert!(!configs[0].bias_trainable);
        assert_eq!(configs[0].data, configs[1].data);
        assert_eq!(configs[0].seed, configs[1].seed);
    }
}
