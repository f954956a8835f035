//! Stacked forget-gate LSTM feature learner feeding the tanh trader head,
//! trained end to end by backpropagation through time.
//!
//! Per layer and timestep:
//!
//! ```text
//! y = tanh(W_y x + U_y h + b_y)        block input
//! i = sigma(W_i x + U_i h + b_i)       input gate
//! f = sigma(W_f x + U_f h + b_f)       forget gate
//! c = i . y + f . c_prev               cell internal state
//! o = sigma(W_o x + U_o h + b_o)       output gate
//! z = o . tanh(c)                      block output
//! ```
//!
//! Dropout masks only the non-recurrent (vertical) connections: the input a
//! layer receives from below and the top block output feeding the trader
//! head. The recurrent paths through `h` and `c` are never masked. Masks use
//! inverted scaling (survivors multiplied by `1/(1-rate)`) so evaluation mode
//! is the identity, and are a pure function of the dropout seed so a backward
//! pass reuses exactly the masks of its forward pass.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::objectives::{self, CostModel, ObjectiveError, ObjectiveSpec};
use crate::timeseries::FeatureWindow;
use crate::trader::{self, PositionTrace, TraderParams};

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("dimension mismatch: expected {expect}, got {got} ({context})")]
    DimensionMismatch {
        expect: usize,
        got: usize,
        context: &'static str,
    },
    #[error("dropout rate {0} is outside [0, 1)")]
    InvalidRate(f64),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Agent(#[from] trader::AgentError),
}

/// Dense row-major matrix, sized for the small gate blocks used here.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Input weights, recurrent weights, and bias of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub input_weights: Mat,
    pub recurrent_weights: Mat,
    pub bias: Vec<f64>,
}

impl GateParams {
    fn init<R: Rng>(input_dim: usize, hidden: usize, bias0: f64, rng: &mut R) -> Self {
        let wb = 1.0 / (input_dim as f64).sqrt();
        let ub = 1.0 / (hidden as f64).sqrt();
        Self {
            input_weights: Mat::from_fn(hidden, input_dim, |_, _| rng.gen_range(-wb..wb)),
            recurrent_weights: Mat::from_fn(hidden, hidden, |_, _| rng.gen_range(-ub..ub)),
            bias: vec![bias0; hidden],
        }
    }

    fn dim(&self) -> usize {
        self.input_weights.data.len() + self.recurrent_weights.data.len() + self.bias.len()
    }
}

/// The four gate triples of one LSTM layer, in the fixed order block input,
/// input gate, forget gate, output gate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub block_input: GateParams,
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
}

/// Stable gate order used by flattening and snapshots.
pub const GATE_NAMES: [&str; 4] = ["y", "i", "f", "o"];

impl LstmLayerParams {
    /// Weights uniform in `+-1/sqrt(fan_in)`; the forget-gate bias starts at
    /// one so the cell path survives early training, all other biases zero.
    pub fn init<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            block_input: GateParams::init(input_dim, hidden, 0.0, rng),
            input_gate: GateParams::init(input_dim, hidden, 0.0, rng),
            forget_gate: GateParams::init(input_dim, hidden, 1.0, rng),
            output_gate: GateParams::init(input_dim, hidden, 0.0, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.block_input.input_weights.rows
    }

    pub fn input_dim(&self) -> usize {
        self.block_input.input_weights.cols
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [
            &self.block_input,
            &self.input_gate,
            &self.forget_gate,
            &self.output_gate,
        ]
    }

    pub fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.block_input,
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
        ]
    }

    fn dim(&self) -> usize {
        self.gates().iter().map(|g| g.dim()).sum()
    }
}

/// Hidden (block output) and cell vectors per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<Vec<f64>>,
    pub cell: Vec<Vec<f64>>,
}

impl LstmState {
    pub fn zeros(layers: usize, hidden: usize) -> Self {
        Self {
            hidden: vec![vec![0.0; hidden]; layers],
            cell: vec![vec![0.0; hidden]; layers],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Dropout rate, seed, and mode for the non-recurrent connections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutSpec {
    pub rate: f64,
    pub seed: u64,
    pub mode: DropoutMode,
}

impl DropoutSpec {
    pub fn eval() -> Self {
        Self {
            rate: 0.0,
            seed: 0,
            mode: DropoutMode::Eval,
        }
    }

    pub fn train(rate: f64, seed: u64) -> Self {
        Self {
            rate,
            seed,
            mode: DropoutMode::Train,
        }
    }

    /// Sequential mask source for this spec; draws are deterministic in
    /// (seed, draw order).
    pub fn sampler(&self) -> Result<MaskSampler, LstmError> {
        MaskSampler::new(self.rate, self.seed)
    }
}

/// Draws inverted-dropout masks: entries are `1/(1-rate)` with probability
/// `1-rate`, else zero.
pub struct MaskSampler {
    rng: ChaCha8Rng,
    rate: f64,
    scale: f64,
}

impl MaskSampler {
    pub fn new(rate: f64, seed: u64) -> Result<Self, LstmError> {
        if !rate.is_finite() || !(0.0..1.0).contains(&rate) {
            return Err(LstmError::InvalidRate(rate));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            rate,
            scale: 1.0 / (1.0 - rate),
        })
    }

    pub fn sample(&mut self, len: usize) -> Vec<f64> {
        if self.rate == 0.0 {
            return vec![1.0; len];
        }
        (0..len)
            .map(|_| {
                if self.rng.gen::<f64>() < self.rate {
                    0.0
                } else {
                    self.scale
                }
            })
            .collect()
    }
}

/// Gate activations and inputs retained for the backward pass.
#[derive(Debug, Clone)]
pub struct CellCache {
    /// Layer input after the vertical dropout mask.
    pub input: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub block: Vec<f64>,
    pub input_gate: Vec<f64>,
    pub forget_gate: Vec<f64>,
    pub output_gate: Vec<f64>,
    pub cell: Vec<f64>,
    pub output: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gate_preactivation(gp: &GateParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = gp.bias.clone();
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, xv) in x.iter().enumerate() {
            acc += gp.input_weights[(j, k)] * xv;
        }
        for (k, hv) in h.iter().enumerate() {
            acc += gp.recurrent_weights[(j, k)] * hv;
        }
        *slot += acc;
    }
    out
}

/// One LSTM cell step; returns the block output, the new cell state, and the
/// cache of gate activations for backpropagation.
pub fn cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    p: &LstmLayerParams,
) -> Result<(Vec<f64>, Vec<f64>, CellCache), LstmError> {
    let hidden = p.hidden();
    if x.len() != p.input_dim() {
        return Err(LstmError::DimensionMismatch {
            expect: p.input_dim(),
            got: x.len(),
            context: "cell input",
        });
    }
    if h_prev.len() != hidden || c_prev.len() != hidden {
        return Err(LstmError::DimensionMismatch {
            expect: hidden,
            got: h_prev.len().max(c_prev.len()),
            context: "cell state",
        });
    }
    let block: Vec<f64> = gate_preactivation(&p.block_input, x, h_prev)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let input_gate: Vec<f64> = gate_preactivation(&p.input_gate, x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let forget_gate: Vec<f64> = gate_preactivation(&p.forget_gate, x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let output_gate: Vec<f64> = gate_preactivation(&p.output_gate, x, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let cell: Vec<f64> = (0..hidden)
        .map(|j| input_gate[j] * block[j] + forget_gate[j] * c_prev[j])
        .collect();
    let output: Vec<f64> = (0..hidden)
        .map(|j| output_gate[j] * cell[j].tanh())
        .collect();
    let cache = CellCache {
        input: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        block,
        input_gate,
        forget_gate,
        output_gate,
        cell: cell.clone(),
        output: output.clone(),
    };
    Ok((cache.output.clone(), cell, cache))
}

/// Stacked LSTM layers plus the trader head consuming the top block output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmTraderParams {
    pub layers: Vec<LstmLayerParams>,
    pub head: TraderParams,
}

impl LstmTraderParams {
    pub fn init(
        input_dim: usize,
        hidden: usize,
        layers: usize,
        head_bias: f64,
        bias_trainable: bool,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..layers)
            .map(|l| {
                let in_dim = if l == 0 { input_dim } else { hidden };
                LstmLayerParams::init(in_dim, hidden, &mut rng)
            })
            .collect();
        let head = TraderParams::init_with_rng(hidden, head_bias, bias_trainable, &mut rng);
        Self { layers, head }
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn dim(&self) -> usize {
        self.layers.iter().map(|l| l.dim()).sum::<usize>() + self.head.dim()
    }

    /// Stable flat ordering: per layer, gates in [`GATE_NAMES`] order, each
    /// as input weights row-major, recurrent weights row-major, bias; then
    /// the head as `[w, bias, recurrence]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        for layer in &self.layers {
            for gate in layer.gates() {
                v.extend_from_slice(gate.input_weights.data());
                v.extend_from_slice(gate.recurrent_weights.data());
                v.extend_from_slice(&gate.bias);
            }
        }
        v.extend_from_slice(&self.head.flatten());
        v
    }

    /// Rebuild from a flat vector with this template's shape.
    pub fn unflatten(&self, v: &[f64]) -> Result<Self, LstmError> {
        if v.len() != self.dim() {
            return Err(LstmError::DimensionMismatch {
                expect: self.dim(),
                got: v.len(),
                context: "flat parameter vector",
            });
        }
        let mut out = self.clone();
        let mut at = 0;
        for layer in &mut out.layers {
            for gate in layer.gates_mut() {
                let n = gate.input_weights.data.len();
                gate.input_weights.data.copy_from_slice(&v[at..at + n]);
                at += n;
                let n = gate.recurrent_weights.data.len();
                gate.recurrent_weights.data.copy_from_slice(&v[at..at + n]);
                at += n;
                let n = gate.bias.len();
                gate.bias.copy_from_slice(&v[at..at + n]);
                at += n;
            }
        }
        out.head = self.head.unflatten(&v[at..])?;
        Ok(out)
    }

    /// Ascent step with weight decay on the weight matrices and the head
    /// weights/recurrence. Gate biases are not decayed, and a frozen head
    /// bias is not touched at all.
    pub fn apply_update(&mut self, grad: &[f64], learning_rate: f64, weight_decay: f64) {
        let keep = 1.0 - weight_decay;
        let mut at = 0;
        for layer in &mut self.layers {
            for gate in layer.gates_mut() {
                for w in gate.input_weights.data_mut() {
                    *w = *w * keep + learning_rate * grad[at];
                    at += 1;
                }
                for w in gate.recurrent_weights.data_mut() {
                    *w = *w * keep + learning_rate * grad[at];
                    at += 1;
                }
                for b in gate.bias.iter_mut() {
                    *b += learning_rate * grad[at];
                    at += 1;
                }
            }
        }
        trader::apply_update(&mut self.head, &grad[at..], learning_rate, weight_decay);
    }
}

/// Per-timestep caches of a stacked forward pass.
#[derive(Debug, Clone)]
pub struct StackStep {
    pub layers: Vec<CellCache>,
    /// Vertical-input masks per layer (`None` when dropout was off).
    pub masks: Vec<Option<Vec<f64>>>,
    /// Mask between the top block output and the head (`None` when off).
    pub head_mask: Option<Vec<f64>>,
    /// Top block output after its mask, as consumed by the head.
    pub head_input: Vec<f64>,
}

/// Positions plus everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct StackTrace {
    pub trace: PositionTrace,
    pub steps: Vec<StackStep>,
    pub final_state: LstmState,
    pub final_position: f64,
}

/// Forward the whole stack from zero state and a flat starting position.
pub fn stack_forward(
    seq: &[FeatureWindow],
    params: &LstmTraderParams,
    drop: &DropoutSpec,
) -> Result<StackTrace, LstmError> {
    let state = LstmState::zeros(params.layer_count(), params.hidden());
    stack_forward_with_state(seq, params, drop, &state, 0.0)
}

/// Forward the stack from a carried state, for block-wise evaluation.
pub fn stack_forward_with_state(
    seq: &[FeatureWindow],
    params: &LstmTraderParams,
    drop: &DropoutSpec,
    state0: &LstmState,
    prev_position: f64,
) -> Result<StackTrace, LstmError> {
    let hidden = params.hidden();
    if params.head.window() != hidden {
        return Err(LstmError::DimensionMismatch {
            expect: hidden,
            got: params.head.window(),
            context: "head window vs hidden size",
        });
    }
    let masking = drop.mode == DropoutMode::Train && drop.rate > 0.0;
    let mut sampler = if masking {
        Some(drop.sampler()?)
    } else {
        if drop.mode == DropoutMode::Train && !(0.0..1.0).contains(&drop.rate) {
            return Err(LstmError::InvalidRate(drop.rate));
        }
        None
    };

    let mut state = state0.clone();
    let mut f_prev = prev_position;
    let mut positions = Vec::with_capacity(seq.len());
    let mut pre_activations = Vec::with_capacity(seq.len());
    let mut steps = Vec::with_capacity(seq.len());

    for window in seq {
        if window.len() != params.input_dim() {
            return Err(LstmError::DimensionMismatch {
                expect: params.input_dim(),
                got: window.len(),
                context: "feature window",
            });
        }
        let mut caches = Vec::with_capacity(params.layer_count());
        let mut masks = Vec::with_capacity(params.layer_count());
        let mut below: Vec<f64> = window.values().to_vec();
        for (l, layer) in params.layers.iter().enumerate() {
            let mask = sampler.as_mut().map(|s| s.sample(below.len()));
            if let Some(mask) = &mask {
                for (v, m) in below.iter_mut().zip(mask) {
                    *v *= m;
                }
            }
            let (z, c, cache) = cell_forward(&below, &state.hidden[l], &state.cell[l], layer)?;
            state.hidden[l] = z.clone();
            state.cell[l] = c;
            below = z;
            caches.push(cache);
            masks.push(mask);
        }
        let head_mask = sampler.as_mut().map(|s| s.sample(hidden));
        if let Some(mask) = &head_mask {
            for (v, m) in below.iter_mut().zip(mask) {
                *v *= m;
            }
        }
        let head_input = below;
        let dot: f64 = params
            .head
            .weights
            .iter()
            .zip(&head_input)
            .map(|(w, v)| w * v)
            .sum();
        let a = dot + params.head.bias + params.head.recurrence * f_prev;
        let f = a.tanh();
        positions.push(f);
        pre_activations.push(a);
        steps.push(StackStep {
            layers: caches,
            masks,
            head_mask,
            head_input,
        });
        f_prev = f;
    }

    Ok(StackTrace {
        trace: PositionTrace {
            positions,
            pre_activations,
        },
        steps,
        final_state: state,
        final_position: f_prev,
    })
}

struct GateGrad {
    input_weights: Mat,
    recurrent_weights: Mat,
    bias: Vec<f64>,
}

struct LayerGrad {
    gates: Vec<GateGrad>,
}

fn backprop_gate(
    gp: &GateParams,
    delta: &[f64],
    input: &[f64],
    h_prev: &[f64],
    grad: &mut GateGrad,
    dx: &mut [f64],
    dh: &mut [f64],
) {
    for (j, &d) in delta.iter().enumerate() {
        grad.bias[j] += d;
        for (k, &xv) in input.iter().enumerate() {
            grad.input_weights[(j, k)] += d * xv;
            dx[k] += gp.input_weights[(j, k)] * d;
        }
        for (k, &hv) in h_prev.iter().enumerate() {
            grad.recurrent_weights[(j, k)] += d * hv;
            dh[k] += gp.recurrent_weights[(j, k)] * d;
        }
    }
}

/// Objective value plus the exact gradient of one masked pass over all LSTM
/// and head parameters, flattened in [`LstmTraderParams::flatten`] order.
///
/// The masks are constants of the pass: the same `drop` seed replays them,
/// so finite differences of the value agree with this gradient.
pub fn bptt_step(
    seq: &[FeatureWindow],
    returns: &[f64],
    cm: &CostModel,
    spec: &ObjectiveSpec,
    params: &LstmTraderParams,
    drop: &DropoutSpec,
    lenient: bool,
) -> Result<trader::EpochStep, LstmError> {
    let fwd = stack_forward(seq, params, drop)?;
    let positions = &fwd.trace.positions;
    let rewards = objectives::trading_returns(&fwd.trace.with_initial(), returns, cm)?;
    let (value, degenerate, dsdr) = if lenient {
        let v = spec.evaluate(&rewards);
        (v.value, v.degenerate, spec.reward_gradient_lenient(&rewards))
    } else {
        let dsdr = spec.reward_gradient(&rewards)?;
        let v = spec.evaluate(&rewards);
        (v.value, v.degenerate, dsdr)
    };
    let partials = trader::reward_partials(&fwd.trace, returns, cm);

    let t_len = seq.len();
    let hidden = params.hidden();
    let layer_count = params.layer_count();
    let head = &params.head;

    // Head adjoint: positions recur through the head's own coefficient, so
    // run it backward first; it does not depend on the LSTM adjoint.
    let mut head_grad = vec![0.0; head.dim()];
    let mut d_top: Vec<Vec<f64>> = vec![Vec::new(); t_len];
    let mut delta_a_next = 0.0;
    for t in (0..t_len).rev() {
        let g_direct = dsdr[t] * partials[t].0
            + if t + 1 < t_len {
                dsdr[t + 1] * partials[t + 1].1
            } else {
                0.0
            };
        let lambda = g_direct + head.recurrence * delta_a_next;
        let f = positions[t];
        let delta_a = lambda * (1.0 - f * f);
        let x_tilde = &fwd.steps[t].head_input;
        for j in 0..hidden {
            head_grad[j] += delta_a * x_tilde[j];
        }
        head_grad[hidden] += delta_a;
        let f_prev = if t == 0 { 0.0 } else { positions[t - 1] };
        head_grad[hidden + 1] += delta_a * f_prev;

        let mut dz: Vec<f64> = head.weights.iter().map(|w| delta_a * w).collect();
        if let Some(mask) = &fwd.steps[t].head_mask {
            for (v, m) in dz.iter_mut().zip(mask) {
                *v *= m;
            }
        }
        d_top[t] = dz;
        delta_a_next = delta_a;
    }

    // LSTM adjoint through both the cell and block-output recurrences.
    let mut grads: Vec<LayerGrad> = params
        .layers
        .iter()
        .map(|layer| LayerGrad {
            gates: layer
                .gates()
                .iter()
                .map(|g| GateGrad {
                    input_weights: Mat::zeros(g.input_weights.rows(), g.input_weights.cols()),
                    recurrent_weights: Mat::zeros(
                        g.recurrent_weights.rows(),
                        g.recurrent_weights.cols(),
                    ),
                    bias: vec![0.0; g.bias.len()],
                })
                .collect(),
        })
        .collect();
    let mut dh_carry = vec![vec![0.0; hidden]; layer_count];
    let mut dc_carry = vec![vec![0.0; hidden]; layer_count];

    for t in (0..t_len).rev() {
        let mut vert = std::mem::take(&mut d_top[t]);
        for l in (0..layer_count).rev() {
            let cache = &fwd.steps[t].layers[l];
            let layer = &params.layers[l];
            let mut dz = vert;
            for j in 0..hidden {
                dz[j] += dh_carry[l][j];
            }
            let mut dc_tot = vec![0.0; hidden];
            let mut delta_o = vec![0.0; hidden];
            let mut delta_f = vec![0.0; hidden];
            let mut delta_i = vec![0.0; hidden];
            let mut delta_y = vec![0.0; hidden];
            for j in 0..hidden {
                let tc = cache.cell[j].tanh();
                let o = cache.output_gate[j];
                delta_o[j] = dz[j] * tc * o * (1.0 - o);
                dc_tot[j] = dc_carry[l][j] + dz[j] * o * (1.0 - tc * tc);
            }
            for j in 0..hidden {
                let fg = cache.forget_gate[j];
                let ig = cache.input_gate[j];
                let y = cache.block[j];
                delta_f[j] = dc_tot[j] * cache.c_prev[j] * fg * (1.0 - fg);
                delta_i[j] = dc_tot[j] * y * ig * (1.0 - ig);
                delta_y[j] = dc_tot[j] * ig * (1.0 - y * y);
                dc_carry[l][j] = dc_tot[j] * fg;
            }
            let in_dim = cache.input.len();
            let mut dx = vec![0.0; in_dim];
            let mut dh = vec![0.0; hidden];
            let deltas = [&delta_y, &delta_i, &delta_f, &delta_o];
            for (g, delta) in deltas.iter().enumerate() {
                backprop_gate(
                    layer.gates()[g],
                    delta,
                    &cache.input,
                    &cache.h_prev,
                    &mut grads[l].gates[g],
                    &mut dx,
                    &mut dh,
                );
            }
            dh_carry[l] = dh;
            if let Some(mask) = &fwd.steps[t].masks[l] {
                for (v, m) in dx.iter_mut().zip(mask) {
                    *v *= m;
                }
            }
            vert = dx;
        }
    }

    let mut flat = Vec::with_capacity(params.dim());
    for layer_grad in &grads {
        for gate in &layer_grad.gates {
            flat.extend_from_slice(gate.input_weights.data());
            flat.extend_from_slice(gate.recurrent_weights.data());
            flat.extend_from_slice(&gate.bias);
        }
    }
    flat.extend_from_slice(&head_grad);

    Ok(trader::EpochStep {
        value,
        degenerate,
        gradient: flat,
    })
}

/// Exact gradient of the configured objective over all parameters; objective
/// degeneracy propagates as an error.
pub fn bptt_gradient(
    seq: &[FeatureWindow],
    returns: &[f64],
    cm: &CostModel,
    spec: &ObjectiveSpec,
    params: &LstmTraderParams,
    drop: &DropoutSpec,
) -> Result<Vec<f64>, LstmError> {
    Ok(bptt_step(seq, returns, cm, spec, params, drop, false)?.gradient)
}
