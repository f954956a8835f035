//! Flat key-value experiment configs with `[section]` headers. Keys mirror
//! the engine's experiment fields; unknown keys are rejected so typos fail
//! loudly.

use std::path::{Path, PathBuf};

use rrl_core::backtest::synthetic::SyntheticConfig;
use rrl_core::backtest::{AgentKind, DataSource, ExperimentConfig, TrainMethod};
use rrl_core::objectives::{CostModel, ObjectiveKind};
use rrl_core::optim::{EsConfig, NmConfig};

use crate::CliError;

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        if err.kind() == std::io::ErrorKind::NotFound {
            CliError::io_not_found(format!("config file {} does not exist", path.display()))
        } else {
            CliError::io_read(format!("cannot read {}: {err}", path.display()))
        }
    })?;
    parse_config(&text)
}

struct DataSettings {
    source: String,
    kind: String,
    bars: usize,
    interval: i64,
    seed: u64,
    path: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new("run");
    let mut data = DataSettings {
        source: "synthetic".into(),
        kind: "sine".into(),
        bars: 2000,
        interval: 1800,
        seed: 1,
        path: None,
    };
    let mut es = EsConfig::default();
    let mut nm = NmConfig::default();
    let mut method = String::from("batch");
    let mut section = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line = match line.find('#') {
            Some(at) => line[..at].trim(),
            None => line,
        };
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!("line {}: expected `key = value`", idx + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let fail = |what: &str| CliError::config(format!("line {}: bad {what} {value:?}", idx + 1));

        match (section.as_str(), key) {
            ("data", "source") => data.source = value.to_string(),
            ("data", "kind") => data.kind = value.to_string(),
            ("data", "bars") => data.bars = value.parse().map_err(|_| fail("bars"))?,
            ("data", "interval") => data.interval = value.parse().map_err(|_| fail("interval"))?,
            ("data", "seed") => data.seed = value.parse().map_err(|_| fail("seed"))?,
            ("data", "path") => data.path = Some(PathBuf::from(value)),
            ("split", "train") => cfg.train_len = value.parse().map_err(|_| fail("train"))?,
            ("split", "test") => cfg.test_len = value.parse().map_err(|_| fail("test"))?,
            ("agent", "kind") => {
                cfg.agent = match value {
                    "plain" => AgentKind::Plain,
                    "lstm" => AgentKind::Lstm,
                    _ => return Err(fail("agent kind")),
                }
            }
            ("agent", "window") => cfg.window = value.parse().map_err(|_| fail("window"))?,
            ("agent", "hidden") => cfg.hidden = value.parse().map_err(|_| fail("hidden"))?,
            ("agent", "layers") => cfg.layers = value.parse().map_err(|_| fail("layers"))?,
            ("agent", "bias") => cfg.bias = value.parse().map_err(|_| fail("bias"))?,
            ("agent", "bias_trainable") => {
                cfg.bias_trainable = value.parse().map_err(|_| fail("bias_trainable"))?
            }
            ("agent", "dropout") => cfg.dropout = value.parse().map_err(|_| fail("dropout"))?,
            ("agent", "standardize") => {
                cfg.standardize = value.parse().map_err(|_| fail("standardize"))?
            }
            ("objective", "kind") => {
                cfg.objective.kind = match value {
                    "sharpe" => ObjectiveKind::Sharpe,
                    "ddr" => ObjectiveKind::DownsideDeviation,
                    _ => return Err(fail("objective kind")),
                }
            }
            ("objective", "epsilon") => {
                let eps: f64 = value.parse().map_err(|_| fail("epsilon"))?;
                if !eps.is_finite() || eps <= 0.0 {
                    return Err(fail("epsilon (must be > 0)"));
                }
                cfg.objective.epsilon = eps;
            }
            ("cost", "shares") => {
                let shares: f64 = value.parse().map_err(|_| fail("shares"))?;
                cfg.cost = CostModel::new(shares, cfg.cost.cost_per_share)
                    .map_err(|e| CliError::config(e.to_string()))?;
            }
            ("cost", "cost_per_share") => {
                let c: f64 = value.parse().map_err(|_| fail("cost_per_share"))?;
                cfg.cost = CostModel::new(cfg.cost.shares, c)
                    .map_err(|e| CliError::config(e.to_string()))?;
            }
            ("train", "method") => method = value.to_string(),
            ("train", "epochs") => cfg.epochs = value.parse().map_err(|_| fail("epochs"))?,
            ("train", "learning_rate") => {
                cfg.learning_rate = value.parse().map_err(|_| fail("learning_rate"))?
            }
            ("train", "weight_decay") => {
                cfg.weight_decay = value.parse().map_err(|_| fail("weight_decay"))?
            }
            ("train", "grad_clip") => {
                cfg.grad_clip = value.parse().map_err(|_| fail("grad_clip"))?
            }
            ("train", "block_len") => {
                cfg.block_len = value.parse().map_err(|_| fail("block_len"))?
            }
            ("train", "retrain_between_blocks") => {
                cfg.retrain_between_blocks =
                    value.parse().map_err(|_| fail("retrain_between_blocks"))?
            }
            ("train", "seed") => cfg.seed = value.parse().map_err(|_| fail("seed"))?,
            ("train", "label") => cfg.label = value.to_string(),
            ("train", "discretize_threshold") => {
                cfg.discretize_threshold =
                    value.parse().map_err(|_| fail("discretize_threshold"))?
            }
            ("train", "mu") => es.mu = value.parse().map_err(|_| fail("mu"))?,
            ("train", "lambda") => es.lambda = value.parse().map_err(|_| fail("lambda"))?,
            ("train", "sigma0") => es.sigma0 = value.parse().map_err(|_| fail("sigma0"))?,
            ("train", "nm_tolerance") => {
                nm.tolerance = value.parse().map_err(|_| fail("nm_tolerance"))?
            }
            (section, key) => {
                return Err(CliError::config(format!(
                    "line {}: unknown key `{key}` in section [{section}]",
                    idx + 1
                )))
            }
        }
    }

    cfg.method = match method.as_str() {
        "batch" => TrainMethod::Batch,
        "online" => TrainMethod::Online,
        "nelder-mead" => TrainMethod::NelderMead(nm),
        "es" => TrainMethod::EvolutionStrategy(es),
        other => return Err(CliError::config(format!("unknown train method {other:?}"))),
    };

    cfg.data = match data.source.as_str() {
        "csv" => {
            let path = data
                .path
                .ok_or_else(|| CliError::config("data.source = csv requires data.path"))?;
            DataSource::Csv(path)
        }
        "synthetic" => {
            let mut synth = match data.kind.as_str() {
                "sine" => SyntheticConfig::sine(data.bars, data.seed),
                "trend" => SyntheticConfig::trend_noise(data.bars, data.seed),
                "jumps" => SyntheticConfig::down_jumps(data.bars, data.seed),
                other => {
                    return Err(CliError::config(format!(
                        "unknown synthetic kind {other:?}"
                    )))
                }
            };
            synth.bar_interval = data.interval;
            DataSource::Synthetic(synth)
        }
        other => return Err(CliError::config(format!("unknown data source {other:?}"))),
    };

    Ok(cfg)
}

impl CliError {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Self {
            category: "config.invalid",
            message: message.into(),
            code: crate::EXIT_USAGE,
        }
    }

    pub(crate) fn io_not_found(message: impl Into<String>) -> Self {
        Self {
            category: "io.not_found",
            message: message.into(),
            code: crate::EXIT_IO,
        }
    }

    pub(crate) fn io_read(message: impl Into<String>) -> Self {
        Self {
            category: "io.read",
            message: message.into(),
            code: crate::EXIT_IO,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "
[data]
source = synthetic
kind = trend
bars = 400
seed = 9

[split]
train = 150
test = 150

[agent]
kind = lstm
window = 6
hidden = 8
bias = 5.0
bias_trainable = false
dropout = 0.55

[objective]
kind = ddr
epsilon = 1e-6

[cost]
shares = 2.0
cost_per_share = 0.0005

[train]
method = batch
epochs = 50
learning_rate = 0.01
seed = 7
label = demo
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.label, "demo");
        assert_eq!(cfg.agent, AgentKind::Lstm);
        assert_eq!(cfg.window, 6);
        assert_eq!(cfg.hidden, 8);
        assert_eq!(cfg.bias, 5.0);
        assert!(!cfg.bias_trainable);
        assert_eq!(cfg.objective.kind, ObjectiveKind::DownsideDeviation);
        assert_eq!(cfg.cost.shares, 2.0);
        assert_eq!(cfg.train_len, 150);
        assert_eq!(cfg.seed, 7);
        match cfg.data {
            DataSource::Synthetic(s) => {
                assert_eq!(s.bars, 400);
                assert_eq!(s.kind_name(), "trend");
            }
            _ => panic!("expected synthetic data"),
        }
    }

    #[test]
    fn rejects_unknown_key() {
        let err = parse_config("[agent]\nwibble = 3\n").unwrap_err();
        assert_eq!(err.category, "config.invalid");
    }

    #[test]
    fn rejects_bad_value() {
        let err = parse_config("[split]\ntrain = lots\n").unwrap_err();
        assert_eq!(err.category, "config.invalid");
    }
}
