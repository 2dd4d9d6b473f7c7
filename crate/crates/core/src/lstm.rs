//! Single-layer LSTM over hourly prices, trained by backpropagation through
//! time against mean squared error.
//!
//! Cell recurrence, with σ the logistic sigmoid and ∘ the elementwise product:
//!
//! ```text
//! s_t = σ(Rs·y_{t-1} + Us·x_t + bs) ∘ s_{t-1} + σ(Ri·y_{t-1} + Ui·x_t + bi) ∘ tanh(Rc·y_{t-1} + Uc·x_t + bc)
//! y_t = σ(Ro·y_{t-1} + Uo·x_t + bo) ∘ tanh(s_t)
//! ```
//!
//! `R*` are the recurrent matrices (applied to the previous output), `U*` the
//! input matrices (applied to `x_t`). The skip gate decides how much of the
//! previous cell state is carried over. A linear readout maps `y_t` to a
//! scalar price.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    clip_global_norm, sigmoid_scalar, AdamConfig, AdamState, Matrix, MinMaxScaler, NumericsError,
    ParamBlock, ParamLayout, SeededRng,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LstmError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at step {step}")]
    Divergence { step: usize },
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Weights feeding one gate (or the candidate update).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateWeights {
    /// hidden × hidden, applied to the previous output.
    pub recurrent: Matrix,
    /// hidden × input, applied to the current input.
    pub input: Matrix,
    pub bias: Vec<f64>,
}

impl GateWeights {
    fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            recurrent: Matrix::zeros(hidden_dim, hidden_dim),
            input: Matrix::zeros(hidden_dim, input_dim),
            bias: vec![0.0; hidden_dim],
        }
    }

    fn uniform(input_dim: usize, hidden_dim: usize, k: f64, rng: &mut SeededRng) -> Self {
        Self {
            recurrent: Matrix::from_fn(hidden_dim, hidden_dim, |_, _| rng.uniform_range(-k, k)),
            input: Matrix::from_fn(hidden_dim, input_dim, |_, _| rng.uniform_range(-k, k)),
            bias: (0..hidden_dim).map(|_| rng.uniform_range(-k, k)).collect(),
        }
    }

    /// Pre-activation `R·y_prev + U·x + b`.
    fn preact(&self, x: &[f64], y_prev: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        self.recurrent.matvec_add(y_prev, &mut out);
        self.input.matvec_add(x, &mut out);
        out
    }

    fn accumulate(&mut self, delta: &[f64], x: &[f64], y_prev: &[f64]) {
        self.recurrent.add_outer(delta, y_prev);
        self.input.add_outer(delta, x);
        for (b, d) in self.bias.iter_mut().zip(delta) {
            *b += d;
        }
    }
}

/// All trainable parameters of the cell plus the scalar readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub candidate: GateWeights,
    pub input_gate: GateWeights,
    pub output_gate: GateWeights,
    pub skip_gate: GateWeights,
    pub readout: Vec<f64>,
    pub readout_bias: f64,
}

const GATE_NAMES: [&str; 4] = ["candidate", "input_gate", "output_gate", "skip_gate"];

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            candidate: GateWeights::zeros(input_dim, hidden_dim),
            input_gate: GateWeights::zeros(input_dim, hidden_dim),
            output_gate: GateWeights::zeros(input_dim, hidden_dim),
            skip_gate: GateWeights::zeros(input_dim, hidden_dim),
            readout: vec![0.0; hidden_dim],
            readout_bias: 0.0,
        }
    }

    /// Uniform(−k, k) initialization with k = 1/√hidden_dim.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut SeededRng) -> Self {
        let k = 1.0 / (hidden_dim as f64).sqrt();
        Self {
            candidate: GateWeights::uniform(input_dim, hidden_dim, k, rng),
            input_gate: GateWeights::uniform(input_dim, hidden_dim, k, rng),
            output_gate: GateWeights::uniform(input_dim, hidden_dim, k, rng),
            skip_gate: GateWeights::uniform(input_dim, hidden_dim, k, rng),
            readout: (0..hidden_dim).map(|_| rng.uniform_range(-k, k)).collect(),
            readout_bias: rng.uniform_range(-k, k),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.readout.len()
    }

    pub fn input_dim(&self) -> usize {
        self.candidate.input.cols()
    }

    fn gates(&self) -> [&GateWeights; 4] {
        [
            &self.candidate,
            &self.input_gate,
            &self.output_gate,
            &self.skip_gate,
        ]
    }

    fn gates_mut(&mut self) -> [&mut GateWeights; 4] {
        [
            &mut self.candidate,
            &mut self.input_gate,
            &mut self.output_gate,
            &mut self.skip_gate,
        ]
    }

    pub fn layout(&self) -> ParamLayout {
        Self::layout_for(self.input_dim(), self.hidden_dim())
    }

    pub fn layout_for(input_dim: usize, hidden_dim: usize) -> ParamLayout {
        let mut blocks = Vec::with_capacity(14);
        for g in GATE_NAMES {
            blocks.push(ParamBlock::new(
                format!("{g}.recurrent"),
                &[hidden_dim, hidden_dim],
            ));
            blocks.push(ParamBlock::new(
                format!("{g}.input"),
                &[hidden_dim, input_dim],
            ));
            blocks.push(ParamBlock::new(format!("{g}.bias"), &[hidden_dim]));
        }
        blocks.push(ParamBlock::new("readout.weight", &[hidden_dim]));
        blocks.push(ParamBlock::new("readout.bias", &[1]));
        ParamLayout::new(blocks)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout().total_len());
        for g in self.gates() {
            out.extend_from_slice(g.recurrent.as_slice());
            out.extend_from_slice(g.input.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out.extend_from_slice(&self.readout);
        out.push(self.readout_bias);
        out
    }

    pub fn from_flat(input_dim: usize, hidden_dim: usize, flat: &[f64]) -> Result<Self, LstmError> {
        let layout = Self::layout_for(input_dim, hidden_dim);
        if flat.len() != layout.total_len() {
            return Err(LstmError::Shape(format!(
                "expected {} parameters, got {}",
                layout.total_len(),
                flat.len()
            )));
        }
        let mut p = Self::zeros(input_dim, hidden_dim);
        p.assign_flat(flat);
        Ok(p)
    }

    fn assign_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for g in self.gates_mut() {
            g.recurrent
                .as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = it.next().unwrap());
            g.input
                .as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = it.next().unwrap());
            g.bias.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        self.readout
            .iter_mut()
            .for_each(|v| *v = it.next().unwrap());
        self.readout_bias = it.next().unwrap();
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub cell: Vec<f64>,
    pub output: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            cell: vec![0.0; hidden_dim],
            output: vec![0.0; hidden_dim],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmHyper {
    pub hidden_dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for LstmHyper {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            window: 24,
            epochs: 500,
            learning_rate: 1e-2,
            clip_norm: 5.0,
            seed: 42,
        }
    }
}

impl LstmHyper {
    pub fn validate(&self) -> Result<(), LstmError> {
        if self.hidden_dim == 0 || self.window == 0 || self.epochs == 0 {
            return Err(LstmError::Domain(
                "hidden_dim, window and epochs must be positive".into(),
            ));
        }
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.clip_norm.is_nan()
            || self.clip_norm <= 0.0
        {
            return Err(LstmError::Domain(
                "learning rate and clip norm must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything one step keeps for the backward pass.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    y_prev: Vec<f64>,
    s_prev: Vec<f64>,
    candidate: Vec<f64>,
    input_gate: Vec<f64>,
    output_gate: Vec<f64>,
    skip_gate: Vec<f64>,
    tanh_cell: Vec<f64>,
    output: Vec<f64>,
}

fn check_input(params: &LstmParams, x: &[f64]) -> Result<(), LstmError> {
    if x.len() != params.input_dim() {
        return Err(LstmError::Shape(format!(
            "input has {} entries, cell expects {}",
            x.len(),
            params.input_dim()
        )));
    }
    Ok(())
}

fn cell_step(params: &LstmParams, x: &[f64], y_prev: &[f64], s_prev: &[f64]) -> StepCache {
    let candidate: Vec<f64> = params
        .candidate
        .preact(x, y_prev)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let act = |g: &GateWeights| -> Vec<f64> {
        g.preact(x, y_prev)
            .into_iter()
            .map(sigmoid_scalar)
            .collect()
    };
    let input_gate = act(&params.input_gate);
    let output_gate = act(&params.output_gate);
    let skip_gate = act(&params.skip_gate);
    let cell: Vec<f64> = (0..s_prev.len())
        .map(|j| skip_gate[j] * s_prev[j] + input_gate[j] * candidate[j])
        .collect();
    let tanh_cell: Vec<f64> = cell.iter().map(|v| v.tanh()).collect();
    let output: Vec<f64> = output_gate
        .iter()
        .zip(&tanh_cell)
        .map(|(o, t)| o * t)
        .collect();
    StepCache {
        x: x.to_vec(),
        y_prev: y_prev.to_vec(),
        s_prev: s_prev.to_vec(),
        candidate,
        input_gate,
        output_gate,
        skip_gate,
        tanh_cell,
        output,
    }
}

fn cell_from_cache(c: &StepCache) -> Vec<f64> {
    (0..c.s_prev.len())
        .map(|j| c.skip_gate[j] * c.s_prev[j] + c.input_gate[j] * c.candidate[j])
        .collect()
}

fn readout(params: &LstmParams, y: &[f64]) -> f64 {
    params.readout_bias
        + params
            .readout
            .iter()
            .zip(y)
            .map(|(w, v)| w * v)
            .sum::<f64>()
}

/// One cell step. Returns `(y_t, s_t)`.
pub fn lstm_cell_forward(
    params: &LstmParams,
    x: &[f64],
    y_prev: &[f64],
    s_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), LstmError> {
    check_input(params, x)?;
    let h = params.hidden_dim();
    if y_prev.len() != h || s_prev.len() != h {
        return Err(LstmError::Shape(format!(
            "state has {}/{} entries, hidden size is {h}",
            y_prev.len(),
            s_prev.len()
        )));
    }
    let c = cell_step(params, x, y_prev, s_prev);
    let cell = cell_from_cache(&c);
    Ok((c.output, cell))
}

fn forward_trace(
    params: &LstmParams,
    xs: &[Vec<f64>],
) -> Result<(Vec<StepCache>, Vec<f64>), LstmError> {
    if xs.is_empty() {
        return Err(LstmError::Domain("input sequence is empty".into()));
    }
    let h = params.hidden_dim();
    let mut y = vec![0.0; h];
    let mut s = vec![0.0; h];
    let mut trace = Vec::with_capacity(xs.len());
    let mut preds = Vec::with_capacity(xs.len());
    for (t, x) in xs.iter().enumerate() {
        check_input(params, x)?;
        let c = cell_step(params, x, &y, &s);
        s = cell_from_cache(&c);
        y = c.output.clone();
        let p = readout(params, &y);
        if !p.is_finite() || s.iter().any(|v| !v.is_finite()) {
            return Err(LstmError::Divergence { step: t });
        }
        preds.push(p);
        trace.push(c);
    }
    Ok((trace, preds))
}

/// Run the cell over `xs` from a zero state and read out a price at every step.
pub fn lstm_sequence_forward(
    params: &LstmParams,
    xs: &[Vec<f64>],
) -> Result<(Vec<f64>, LstmState), LstmError> {
    let (trace, preds) = forward_trace(params, xs)?;
    let last = trace.last().expect("non-empty sequence");
    Ok((
        preds,
        LstmState {
            cell: cell_from_cache(last),
            output: last.output.clone(),
        },
    ))
}

/// Scalar-input convenience: feed `window` one value per step and return the
/// prediction after the last step.
pub fn predict_next(params: &LstmParams, window: &[f64]) -> Result<f64, LstmError> {
    let xs: Vec<Vec<f64>> = window.iter().map(|&v| vec![v]).collect();
    let (preds, _) = lstm_sequence_forward(params, &xs)?;
    Ok(*preds.last().expect("non-empty"))
}

pub fn mse_loss(predicted: &[f64], target: &[f64]) -> Result<f64, LstmError> {
    if predicted.is_empty() {
        return Err(LstmError::Domain("mse of an empty batch".into()));
    }
    if predicted.len() != target.len() {
        return Err(LstmError::Shape(format!(
            "{} predictions vs {} targets",
            predicted.len(),
            target.len()
        )));
    }
    let sum: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// Backward pass given dL/dp_t for every step; accumulates into `grads`.
fn backward(
    params: &LstmParams,
    trace: &[StepCache],
    dpred: &[f64],
    grads: &mut LstmParams,
) -> Result<(), LstmError> {
    let h = params.hidden_dim();
    let mut dy_next = vec![0.0; h];
    let mut ds_next = vec![0.0; h];
    let mut d_cand = vec![0.0; h];
    let mut d_in = vec![0.0; h];
    let mut d_out = vec![0.0; h];
    let mut d_skip = vec![0.0; h];
    for (t, c) in trace.iter().enumerate().rev() {
        let dp = dpred[t];
        grads.readout_bias += dp;
        for j in 0..h {
            grads.readout[j] += dp * c.output[j];
        }
        for j in 0..h {
            let dy = params.readout[j] * dp + dy_next[j];
            let ds = dy * c.output_gate[j] * (1.0 - c.tanh_cell[j] * c.tanh_cell[j]) + ds_next[j];
            let o = c.output_gate[j];
            let i = c.input_gate[j];
            let f = c.skip_gate[j];
            let g = c.candidate[j];
            d_out[j] = dy * c.tanh_cell[j] * o * (1.0 - o);
            d_skip[j] = ds * c.s_prev[j] * f * (1.0 - f);
            d_in[j] = ds * g * i * (1.0 - i);
            d_cand[j] = ds * i * (1.0 - g * g);
            ds_next[j] = ds * f;
        }
        if ds_next.iter().any(|v| !v.is_finite()) {
            return Err(LstmError::Divergence { step: t });
        }
        grads.candidate.accumulate(&d_cand, &c.x, &c.y_prev);
        grads.input_gate.accumulate(&d_in, &c.x, &c.y_prev);
        grads.output_gate.accumulate(&d_out, &c.x, &c.y_prev);
        grads.skip_gate.accumulate(&d_skip, &c.x, &c.y_prev);
        dy_next.iter_mut().for_each(|v| *v = 0.0);
        params
            .candidate
            .recurrent
            .matvec_transpose_add(&d_cand, &mut dy_next);
        params
            .input_gate
            .recurrent
            .matvec_transpose_add(&d_in, &mut dy_next);
        params
            .output_gate
            .recurrent
            .matvec_transpose_add(&d_out, &mut dy_next);
        params
            .skip_gate
            .recurrent
            .matvec_transpose_add(&d_skip, &mut dy_next);
    }
    Ok(())
}

/// Exact gradient of `mse_loss(predictions, targets)` over a whole sequence
/// (one target per step), by backpropagation through time.
pub fn lstm_backprop(
    params: &LstmParams,
    xs: &[Vec<f64>],
    targets: &[f64],
) -> Result<LstmParams, LstmError> {
    if targets.len() != xs.len() {
        return Err(LstmError::Shape(format!(
            "{} inputs vs {} targets",
            xs.len(),
            targets.len()
        )));
    }
    let (trace, preds) = forward_trace(params, xs)?;
    let n = preds.len() as f64;
    let dpred: Vec<f64> = preds
        .iter()
        .zip(targets)
        .map(|(p, y)| 2.0 * (p - y) / n)
        .collect();
    let mut grads = LstmParams::zeros(params.input_dim(), params.hidden_dim());
    backward(params, &trace, &dpred, &mut grads)?;
    Ok(grads)
}

/// Mean squared error of next-value predictions over `(window, next)` pairs,
/// with its gradient in [`LstmParams::to_flat`] order.
pub fn window_loss_and_grad(
    params: &LstmParams,
    pairs: &[(Vec<f64>, f64)],
) -> Result<(f64, Vec<f64>), LstmError> {
    if pairs.is_empty() {
        return Err(LstmError::Domain("no training pairs".into()));
    }
    let n = pairs.len() as f64;
    let mut grads = LstmParams::zeros(params.input_dim(), params.hidden_dim());
    let mut loss = 0.0;
    let mut dpred = Vec::new();
    for (window, target) in pairs {
        let xs: Vec<Vec<f64>> = window.iter().map(|&v| vec![v]).collect();
        let (trace, preds) = forward_trace(params, &xs)?;
        let err = preds.last().expect("non-empty") - target;
        loss += err * err / n;
        dpred.clear();
        dpred.resize(preds.len(), 0.0);
        *dpred.last_mut().expect("non-empty") = 2.0 * err / n;
        backward(params, &trace, &dpred, &mut grads)?;
    }
    Ok((loss, grads.to_flat()))
}

/// Mean squared next-value error over `pairs` (no gradient).
pub fn window_loss(params: &LstmParams, pairs: &[(Vec<f64>, f64)]) -> Result<f64, LstmError> {
    let mut preds = Vec::with_capacity(pairs.len());
    for (w, _) in pairs {
        preds.push(predict_next(params, w)?);
    }
    let targets: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    mse_loss(&preds, &targets)
}

/// Per-epoch train and held-out MSE.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub train: Vec<f64>,
    /// Empty when no held-out pairs were given.
    pub test: Vec<f64>,
}

impl LossCurve {
    /// `epoch,train_mse,test_mse` CSV (test column empty without held-out data).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,test_mse\n");
        for (e, tr) in self.train.iter().enumerate() {
            let te = self.test.get(e).map(|v| format!("{v}")).unwrap_or_default();
            out.push_str(&format!("{},{tr},{te}\n", e + 1));
        }
        out
    }
}

/// Full-batch Adam on pre-scaled `(window, next)` pairs with global-norm
/// gradient clipping. Losses are recorded at the start of every epoch, so
/// entry `e` reflects the parameters after `e` updates.
pub fn train_lstm(
    train: &[(Vec<f64>, f64)],
    test: &[(Vec<f64>, f64)],
    hyper: &LstmHyper,
) -> Result<(LstmParams, LossCurve), LstmError> {
    hyper.validate()?;
    if train.is_empty() {
        return Err(LstmError::Domain(
            "at least one training pair is required".into(),
        ));
    }
    if let Some((w, _)) = train
        .iter()
        .chain(test)
        .find(|(w, _)| w.len() != hyper.window)
    {
        return Err(LstmError::Shape(format!(
            "window of length {} does not match configured window {}",
            w.len(),
            hyper.window
        )));
    }
    let mut rng = SeededRng::new(hyper.seed);
    let mut params = LstmParams::init(1, hyper.hidden_dim, &mut rng);
    let layout = params.layout();
    let mut flat = params.to_flat();
    let mut adam = AdamState::new(
        AdamConfig::default().with_learning_rate(hyper.learning_rate),
        flat.len(),
    );
    let mut curve = LossCurve::default();
    for epoch in 0..hyper.epochs {
        let (loss, mut grads) = window_loss_and_grad(&params, train)?;
        if !loss.is_finite() {
            return Err(LstmError::TrainingDiverged { epoch });
        }
        curve.train.push(loss);
        if !test.is_empty() {
            let t = window_loss(&params, test)?;
            if !t.is_finite() {
                return Err(LstmError::TrainingDiverged { epoch });
            }
            curve.test.push(t);
        }
        clip_global_norm(&mut grads, hyper.clip_norm);
        adam.step(&mut flat, &grads, &layout)?;
        params.assign_flat(&flat);
    }
    Ok((params, curve))
}

/// How a multi-step profile is rolled out.
#[derive(Debug, Clone, Copy)]
pub enum Rollout<'a> {
    /// Each prediction is appended to the window and fed back.
    Recursive,
    /// The window advances over these observed prices (EUR/MWh) instead;
    /// needs at least `horizon - 1` of them.
    OneStepAhead(&'a [f64]),
}

/// Generate `horizon` prices (EUR/MWh) following `seed_window` (EUR/MWh).
pub fn generate_profile(
    params: &LstmParams,
    scaler: &MinMaxScaler,
    seed_window: &[f64],
    horizon: usize,
    rollout: Rollout<'_>,
) -> Result<Vec<f64>, LstmError> {
    if seed_window.is_empty() {
        return Err(LstmError::Domain("seed window is empty".into()));
    }
    if let Rollout::OneStepAhead(actual) = rollout {
        if actual.len() + 1 < horizon {
            return Err(LstmError::Domain(format!(
                "one-step rollout over {horizon} hours needs {} observed prices, got {}",
                horizon - 1,
                actual.len()
            )));
        }
    }
    let window_len = seed_window.len();
    let mut window: Vec<f64> = scaler.scale_all(seed_window);
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let next = predict_next(params, &window)?;
        out.push(scaler.unscale(next));
        let fed = match rollout {
            Rollout::Recursive => next,
            Rollout::OneStepAhead(actual) => match actual.get(k) {
                Some(&a) => scaler.scale(a),
                None => break,
            },
        };
        window.push(fed);
        window.drain(..window.len() - window_len);
    }
    Ok(out)
}
