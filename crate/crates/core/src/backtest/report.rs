//! Report files: a metadata block followed by CSV sections for the traces
//! and curves, written deterministically so identical runs produce identical
//! bytes. The plot-data emitter consumes the same format back.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{BacktestReport, ComparisonRow, SplitEval, SuiteOutcome};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("missing section {0:?}")]
    MissingSection(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub const HEADER: &str = "# backtest report v1";

fn push_meta(out: &mut String, key: &str, value: impl std::fmt::Display) {
    out.push_str(&format!("{key} = {value}\n"));
}

fn push_split_meta(out: &mut String, prefix: &str, eval: &SplitEval) {
    push_meta(out, &format!("{prefix}.sharpe"), eval.sharpe);
    push_meta(
        out,
        &format!("{prefix}.sharpe_degenerate"),
        eval.sharpe_degenerate,
    );
    push_meta(out, &format!("{prefix}.ddr"), eval.ddr);
    push_meta(out, &format!("{prefix}.ddr_floored"), eval.ddr_floored);
    push_meta(out, &format!("{prefix}.total_profit"), eval.total_profit);
    push_meta(out, &format!("{prefix}.max_drawdown"), eval.max_drawdown);
    push_meta(out, &format!("{prefix}.trade_count"), eval.trade_count);
    push_meta(
        out,
        &format!("{prefix}.mean_holding_hours"),
        eval.mean_holding_hours,
    );
    push_meta(
        out,
        &format!("{prefix}.holding_flagged"),
        eval.holding_flagged,
    );
}

fn push_series_section(out: &mut String, name: &str, header: &str, eval: &SplitEval, pick: impl Fn(&SplitEval, usize) -> f64) {
    out.push_str(&format!("\n[{name}]\n{header}\n"));
    for i in 0..eval.timestamps.len() {
        out.push_str(&format!(
            "{i},{},{}\n",
            eval.timestamps[i],
            pick(eval, i)
        ));
    }
}

/// Render the full report body.
pub fn render_report(report: &BacktestReport, snapshot_ref: &str) -> String {
    let cfg = &report.config;
    let mut out = String::new();
    out.push_str(HEADER);
    out.push_str("\n\n[meta]\n");
    push_meta(&mut out, "label", &cfg.label);
    push_meta(&mut out, "data", cfg.data.describe());
    push_meta(&mut out, "agent", cfg.agent.as_str());
    push_meta(&mut out, "objective", cfg.objective.kind.as_str());
    push_meta(&mut out, "epsilon", cfg.objective.epsilon);
    push_meta(&mut out, "method", cfg.method.name());
    push_meta(&mut out, "epochs", cfg.epochs);
    push_meta(&mut out, "train_len", cfg.train_len);
    push_meta(&mut out, "test_len", cfg.test_len);
    push_meta(&mut out, "window", cfg.window);
    push_meta(&mut out, "hidden", cfg.hidden);
    push_meta(&mut out, "layers", cfg.layers);
    push_meta(&mut out, "bias", cfg.bias);
    push_meta(&mut out, "bias_trainable", cfg.bias_trainable);
    push_meta(&mut out, "dropout", cfg.dropout);
    push_meta(&mut out, "standardize", cfg.standardize);
    push_meta(&mut out, "shares", cfg.cost.shares);
    push_meta(&mut out, "cost_per_share", cfg.cost.cost_per_share);
    push_meta(&mut out, "learning_rate", cfg.learning_rate);
    push_meta(&mut out, "weight_decay", cfg.weight_decay);
    push_meta(&mut out, "grad_clip", cfg.grad_clip);
    push_meta(&mut out, "block_len", cfg.block_len);
    push_meta(
        &mut out,
        "retrain_between_blocks",
        cfg.retrain_between_blocks,
    );
    push_meta(&mut out, "discretize_threshold", cfg.discretize_threshold);
    push_meta(&mut out, "seed", cfg.seed);
    push_meta(&mut out, "snapshot", snapshot_ref);
    push_split_meta(&mut out, "train", &report.train_eval);
    push_split_meta(&mut out, "test", &report.test_eval);
    push_split_meta(&mut out, "baseline", &report.baseline_eval);

    out.push_str("\n[trace.objective]\nepoch,value\n");
    for (epoch, value) in report.objective_trace.iter().enumerate() {
        out.push_str(&format!("{epoch},{value}\n"));
    }

    if let Some(rows) = &report.optimizer_trace {
        out.push_str("\n[trace.optimizer]\niteration,best,mean,sigma\n");
        for row in rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.generation, row.best, row.mean, row.sigma_median
            ));
        }
    }

    for (prefix, eval) in [("train", &report.train_eval), ("test", &report.test_eval)] {
        push_series_section(
            &mut out,
            &format!("{prefix}.prices"),
            "index,timestamp,price",
            eval,
            |e, i| e.prices[i],
        );
        push_series_section(
            &mut out,
            &format!("{prefix}.signal"),
            "index,timestamp,position",
            eval,
            |e, i| e.positions[i],
        );
        push_series_section(
            &mut out,
            &format!("{prefix}.equity"),
            "index,timestamp,equity",
            eval,
            |e, i| e.equity[i],
        );
    }
    push_series_section(
        &mut out,
        "baseline.equity",
        "index,timestamp,equity",
        &report.baseline_eval,
        |e, i| e.equity[i],
    );
    out
}

/// Paths produced for one run.
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub report: PathBuf,
    pub snapshot: PathBuf,
}

/// Write `<label>.report.txt` plus the `<label>.params.txt` snapshot it
/// references.
pub fn write_report_files(
    report: &BacktestReport,
    out_dir: &Path,
) -> Result<ReportPaths, ReportError> {
    fs::create_dir_all(out_dir)?;
    let snapshot_name = format!("{}.params.txt", report.config.label);
    let report_path = out_dir.join(format!("{}.report.txt", report.config.label));
    let snapshot_path = out_dir.join(&snapshot_name);
    fs::write(
        &snapshot_path,
        report.params.snapshot_text(report.config.seed),
    )?;
    fs::write(&report_path, render_report(report, &snapshot_name))?;
    Ok(ReportPaths {
        report: report_path,
        snapshot: snapshot_path,
    })
}

/// One CSV section of a parsed report.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A report read back as metadata plus raw CSV sections.
#[derive(Debug, Clone)]
pub struct ParsedReport {
    pub meta: Vec<(String, String)>,
    pub sections: Vec<Section>,
}

impl ParsedReport {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn section(&self, name: &str) -> Result<&Section, ReportError> {
        self.sections
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ReportError::MissingSection(name.to_string()))
    }
}

pub fn parse_report(text: &str) -> Result<ParsedReport, ReportError> {
    let mut meta = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    let mut current: Option<Section> = None;
    let mut in_meta = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if let Some(done) = current.take() {
                sections.push(done);
            }
            if name == "meta" {
                in_meta = true;
            } else {
                in_meta = false;
                current = Some(Section {
                    name: name.to_string(),
                    header: Vec::new(),
                    rows: Vec::new(),
                });
            }
            continue;
        }
        if in_meta {
            let (key, value) = line.split_once('=').ok_or_else(|| ReportError::Malformed {
                line: idx + 1,
                msg: "expected `key = value`".into(),
            })?;
            meta.push((key.trim().to_string(), value.trim().to_string()));
        } else if let Some(section) = current.as_mut() {
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            if section.header.is_empty() {
                section.header = fields;
            } else {
                if fields.len() != section.header.len() {
                    return Err(ReportError::Malformed {
                        line: idx + 1,
                        msg: format!(
                            "expected {} fields, got {}",
                            section.header.len(),
                            fields.len()
                        ),
                    });
                }
                section.rows.push(fields);
            }
        } else {
            return Err(ReportError::Malformed {
                line: idx + 1,
                msg: "content before any section".into(),
            });
        }
    }
    if let Some(done) = current.take() {
        sections.push(done);
    }
    Ok(ParsedReport { meta, sections })
}

pub fn read_report(path: &Path) -> Result<ParsedReport, ReportError> {
    let text = fs::read_to_string(path)?;
    parse_report(&text)
}

/// Per-run summary table over the test split, one row per completed cell.
pub fn render_summary(outcome: &SuiteOutcome) -> String {
    let mut out =
        String::from("label,total_profit,sharpe,ddr,trade_count,mean_holding_hours,max_drawdown\n");
    for report in outcome.reports.iter().flatten() {
        let e = &report.test_eval;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report.config.label,
            e.total_profit,
            e.sharpe,
            e.ddr,
            e.trade_count,
            e.mean_holding_hours,
            e.max_drawdown
        ));
    }
    out
}

/// Paired comparison table for the suite's experiment pairs.
pub fn render_comparisons(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "label_a,label_b,profit_a,profit_b,sharpe_a,sharpe_b,ddr_a,ddr_b,\
         trades_a,trades_b,drawdown_a,drawdown_b\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.label_a,
            row.label_b,
            row.profit_a,
            row.profit_b,
            row.sharpe_a,
            row.sharpe_b,
            row.ddr_a,
            row.ddr_b,
            row.trades_a,
            row.trades_b,
            row.drawdown_a,
            row.drawdown_b
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::synthetic::SyntheticConfig;
    use crate::backtest::{run_one, DataSource, ExperimentConfig};
    use crate::objectives::CostModel;

    fn small_report() -> BacktestReport {
        let mut cfg = ExperimentConfig::new("report-test");
        cfg.data = DataSource::Synthetic(SyntheticConfig::sine(120, 5));
        cfg.train_len = 60;
        cfg.test_len = 60;
        cfg.window = 4;
        cfg.epochs = 5;
        cfg.cost = CostModel::frictionless();
        run_one(&cfg).unwrap()
    }

    #[test]
    fn render_parse_round_trip() {
        let report = small_report();
        let text = render_report(&report, "report-test.params.txt");
        let parsed = parse_report(&text).unwrap();
        assert_eq!(parsed.meta_value("label"), Some("report-test"));
        assert_eq!(parsed.meta_value("agent"), Some("plain"));
        let prices = parsed.section("test.prices").unwrap();
        let signal = parsed.section("test.signal").unwrap();
        let equity = parsed.section("test.equity").unwrap();
        assert_eq!(prices.rows.len(), 59);
        assert_eq!(prices.rows.len(), signal.rows.len());
        assert_eq!(prices.rows.len(), equity.rows.len());
        let trace = parsed.section("trace.objective").unwrap();
        assert_eq!(trace.rows.len(), report.objective_trace.len());
        // Values survive the text round trip bit-exactly.
        let back: f64 = equity.rows[10][2].parse().unwrap();
        assert_eq!(back, report.test_eval.equity[10]);
    }

    #[test]
    fn render_is_deterministic() {
        let report = small_report();
        let a = render_report(&report, "s.txt");
        let b = render_report(&report, "s.txt");
        assert_eq!(a, b);
    }

    #[test]
    fn missing_section_reported() {
        let parsed = parse_report("[meta]\nlabel = x\n").unwrap();
        assert!(matches!(
            parsed.section("test.prices"),
            Err(ReportError::MissingSection(_))
        ));
    }

    #[test]
    fn malformed_reported_with_line() {
        let err = parse_report("[meta]\njust-a-word\n").unwrap_err();
        match err {
            ReportError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
