//! Flat key-value parameter snapshots, for resumable runs and report
//! provenance.
//!
//! The format is line-oriented `key = value` text. A plain trader serializes
//! as `w.<i>`, `b`, `u`; an LSTM trader adds
//! `layer.<l>.<gate>.{W|U|b}.<i>[.<j>]` entries with gates named `y`, `i`,
//! `f`, `o`, and prefixes its head keys with `head.`. Values use the shortest
//! decimal form that round-trips to the same bits.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::lstm::{LstmTraderParams, GATE_NAMES};
use crate::trader::TraderParams;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("bad value for {key:?}: {value:?}")]
    BadValue { key: String, value: String },
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("unknown snapshot kind {0:?}")]
    UnknownKind(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A parsed snapshot body.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Plain(TraderParams),
    Lstm(LstmTraderParams),
}

pub fn render_plain(params: &TraderParams, seed: u64) -> String {
    let mut out = String::from("# parameter snapshot v1\n");
    out.push_str("kind = plain\n");
    out.push_str(&format!("seed = {seed}\n"));
    out.push_str(&format!("window = {}\n", params.window()));
    out.push_str(&format!("bias_trainable = {}\n", params.bias_trainable));
    push_trader_body(&mut out, params, "");
    out
}

pub fn render_lstm(params: &LstmTraderParams, seed: u64) -> String {
    let mut out = String::from("# parameter snapshot v1\n");
    out.push_str("kind = lstm\n");
    out.push_str(&format!("seed = {seed}\n"));
    out.push_str(&format!("window = {}\n", params.input_dim()));
    out.push_str(&format!("hidden = {}\n", params.hidden()));
    out.push_str(&format!("layers = {}\n", params.layer_count()));
    out.push_str(&format!(
        "bias_trainable = {}\n",
        params.head.bias_trainable
    ));
    for (l, layer) in params.layers.iter().enumerate() {
        for (gate, gp) in GATE_NAMES.iter().zip(layer.gates()) {
            let w = &gp.input_weights;
            for i in 0..w.rows() {
                for j in 0..w.cols() {
                    out.push_str(&format!("layer.{l}.{gate}.W.{i}.{j} = {}\n", w[(i, j)]));
                }
            }
            let u = &gp.recurrent_weights;
            for i in 0..u.rows() {
                for j in 0..u.cols() {
                    out.push_str(&format!("layer.{l}.{gate}.U.{i}.{j} = {}\n", u[(i, j)]));
                }
            }
            for (i, b) in gp.bias.iter().enumerate() {
                out.push_str(&format!("layer.{l}.{gate}.b.{i} = {b}\n"));
            }
        }
    }
    push_trader_body(&mut out, &params.head, "head.");
    out
}

fn push_trader_body(out: &mut String, params: &TraderParams, prefix: &str) {
    for (i, w) in params.weights.iter().enumerate() {
        out.push_str(&format!("{prefix}w.{i} = {w}\n"));
    }
    out.push_str(&format!("{prefix}b = {}\n", params.bias));
    out.push_str(&format!("{prefix}u = {}\n", params.recurrence));
}

struct KeyMap(HashMap<String, String>);

impl KeyMap {
    fn get(&self, key: &str) -> Result<&str, SnapshotError> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| SnapshotError::MissingKey(key.to_string()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, SnapshotError> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| SnapshotError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
        })
    }
}

fn key_map(text: &str) -> Result<KeyMap, SnapshotError> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(SnapshotError::Malformed { line: idx + 1 })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(KeyMap(map))
}

fn parse_trader_body(
    map: &KeyMap,
    prefix: &str,
    window: usize,
    bias_trainable: bool,
) -> Result<TraderParams, SnapshotError> {
    let weights = (0..window)
        .map(|i| map.parse::<f64>(&format!("{prefix}w.{i}")))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(TraderParams {
        weights,
        bias: map.parse(&format!("{prefix}b"))?,
        recurrence: map.parse(&format!("{prefix}u"))?,
        bias_trainable,
    })
}

/// Parse a snapshot body, returning the parameters and the recorded seed.
pub fn parse(text: &str) -> Result<(Snapshot, u64), SnapshotError> {
    let map = key_map(text)?;
    let seed: u64 = map.parse("seed")?;
    let window: usize = map.parse("window")?;
    let bias_trainable: bool = map.parse("bias_trainable")?;
    match map.get("kind")? {
        "plain" => {
            let params = parse_trader_body(&map, "", window, bias_trainable)?;
            Ok((Snapshot::Plain(params), seed))
        }
        "lstm" => {
            let hidden: usize = map.parse("hidden")?;
            let layer_count: usize = map.parse("layers")?;
            // Build a correctly shaped template, then fill every entry.
            let mut params = LstmTraderParams::init(window, hidden, layer_count, 0.0, true, 0);
            for (l, layer) in params.layers.iter_mut().enumerate() {
                for (gate, gp) in GATE_NAMES.iter().zip(layer.gates_mut()) {
                    for i in 0..gp.input_weights.rows() {
                        for j in 0..gp.input_weights.cols() {
                            gp.input_weights[(i, j)] =
                                map.parse(&format!("layer.{l}.{gate}.W.{i}.{j}"))?;
                        }
                    }
                    for i in 0..gp.recurrent_weights.rows() {
                        for j in 0..gp.recurrent_weights.cols() {
                            gp.recurrent_weights[(i, j)] =
                                map.parse(&format!("layer.{l}.{gate}.U.{i}.{j}"))?;
                        }
                    }
                    for i in 0..hidden {
                        gp.bias[i] = map.parse(&format!("layer.{l}.{gate}.b.{i}"))?;
                    }
                }
            }
            params.head = parse_trader_body(&map, "head.", hidden, bias_trainable)?;
            Ok((Snapshot::Lstm(params), seed))
        }
        other => Err(SnapshotError::UnknownKind(other.to_string())),
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), SnapshotError> {
    fs::write(path, text)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<(Snapshot, u64), SnapshotError> {
    let text = fs::read_to_string(path)?;
    parse(&text)
}
