//! Generator / discriminator pair over 24-hour price profiles, trained on the
//! minimax objective
//!
//! ```text
//! min_G max_D  E_x[log D(x)] + E_l[log(1 − D(G(l)))]
//! ```
//!
//! The discriminator ascends that value directly. The generator uses the
//! non-saturating surrogate (maximize `E_l[log D(G(l))]`), while the minimax
//! value is what gets reported.
//!
//! Two architectures are available. `Conv` is a small 1-D DCGAN:
//! a strided-convolution discriminator with leaky ReLU and a
//! transposed-convolution generator. `Dense` is a plain MLP pair with
//! configurable widths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    sigmoid_scalar, AdamConfig, AdamState, MinMaxScaler, NumericsError, ParamBlock, ParamLayout,
    SeededRng,
};

/// Hours per generated profile.
pub const PROFILE_LEN: usize = 24;

/// Clamp applied before taking logs in [`gan_value`].
pub const LOG_EPS: f64 = 1e-7;

const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GanError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Domain(String),
    #[error("training diverged at epoch {epoch}: objective is not finite")]
    Divergence { epoch: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu => {
                if x > 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the layer input `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// One layer. Feature maps are stored channel-major (`[channel][position]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Dense {
        inputs: usize,
        outputs: usize,
        /// outputs × inputs, row-major.
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        in_len: usize,
        /// [out][in][kernel]
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
    ConvTranspose1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        in_len: usize,
        /// [in][out][kernel]
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
    Act {
        kind: Activation,
        width: usize,
    },
}

impl Layer {
    fn dense(inputs: usize, outputs: usize) -> Self {
        Layer::Dense {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn conv(in_channels: usize, out_channels: usize, in_len: usize) -> Self {
        Layer::Conv1d {
            in_channels,
            out_channels,
            kernel: 4,
            stride: 2,
            padding: 1,
            in_len,
            weight: vec![0.0; out_channels * in_channels * 4],
            bias: vec![0.0; out_channels],
        }
    }

    fn conv_transpose(in_channels: usize, out_channels: usize, in_len: usize) -> Self {
        Layer::ConvTranspose1d {
            in_channels,
            out_channels,
            kernel: 4,
            stride: 2,
            padding: 1,
            in_len,
            weight: vec![0.0; in_channels * out_channels * 4],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            Layer::Dense { inputs, .. } => *inputs,
            Layer::Conv1d {
                in_channels,
                in_len,
                ..
            }
            | Layer::ConvTranspose1d {
                in_channels,
                in_len,
                ..
            } => in_channels * in_len,
            Layer::Act { width, .. } => *width,
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Layer::Dense { outputs, .. } => *outputs,
            Layer::Conv1d {
                out_channels,
                kernel,
                stride,
                padding,
                in_len,
                ..
            } => out_channels * ((in_len + 2 * padding - kernel) / stride + 1),
            Layer::ConvTranspose1d {
                out_channels,
                kernel,
                stride,
                padding,
                in_len,
                ..
            } => out_channels * ((in_len - 1) * stride + kernel - 2 * padding),
            Layer::Act { width, .. } => *width,
        }
    }

    fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::Dense { weight, bias, .. }
            | Layer::Conv1d { weight, bias, .. }
            | Layer::ConvTranspose1d { weight, bias, .. } => Some((weight, bias)),
            Layer::Act { .. } => None,
        }
    }

    fn params_mut(&mut self) -> Option<(&mut Vec<f64>, &mut Vec<f64>)> {
        match self {
            Layer::Dense { weight, bias, .. }
            | Layer::Conv1d { weight, bias, .. }
            | Layer::ConvTranspose1d { weight, bias, .. } => Some((weight, bias)),
            Layer::Act { .. } => None,
        }
    }

    fn fan_in(&self) -> usize {
        match self {
            Layer::Dense { inputs, .. } => *inputs,
            Layer::Conv1d {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel,
            Layer::ConvTranspose1d {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel / 2,
            Layer::Act { .. } => 1,
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Layer::Dense {
                inputs,
                outputs,
                weight,
                bias,
            } => (0..*outputs)
                .map(|o| {
                    let row = &weight[o * inputs..(o + 1) * inputs];
                    bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect(),
            Layer::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                in_len,
                weight,
                bias,
            } => {
                let out_len = (in_len + 2 * padding - kernel) / stride + 1;
                let mut out = vec![0.0; out_channels * out_len];
                for o in 0..*out_channels {
                    for t in 0..out_len {
                        let mut acc = bias[o];
                        for c in 0..*in_channels {
                            for j in 0..*kernel {
                                let pos = (t * stride + j) as isize - *padding as isize;
                                if pos >= 0 && (pos as usize) < *in_len {
                                    acc += weight[(o * in_channels + c) * kernel + j]
                                        * x[c * in_len + pos as usize];
                                }
                            }
                        }
                        out[o * out_len + t] = acc;
                    }
                }
                out
            }
            Layer::ConvTranspose1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                in_len,
                weight,
                bias,
            } => {
                let out_len = (in_len - 1) * stride + kernel - 2 * padding;
                let mut out = vec![0.0; out_channels * out_len];
                for o in 0..*out_channels {
                    out[o * out_len..(o + 1) * out_len].fill(bias[o]);
                }
                for c in 0..*in_channels {
                    for t in 0..*in_len {
                        let v = x[c * in_len + t];
                        for o in 0..*out_channels {
                            for j in 0..*kernel {
                                let pos = (t * stride + j) as isize - *padding as isize;
                                if pos >= 0 && (pos as usize) < out_len {
                                    out[o * out_len + pos as usize] +=
                                        v * weight[(c * out_channels + o) * kernel + j];
                                }
                            }
                        }
                    }
                }
                out
            }
            Layer::Act { kind, .. } => x.iter().map(|&v| kind.apply(v)).collect(),
        }
    }

    /// Given the layer input `x`, output `y` and dL/dy, accumulate parameter
    /// gradients into `gw`/`gb` and return dL/dx.
    fn backward(
        &self,
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        gw: &mut [f64],
        gb: &mut [f64],
    ) -> Vec<f64> {
        match self {
            Layer::Dense {
                inputs,
                outputs,
                weight,
                ..
            } => {
                let mut dx = vec![0.0; *inputs];
                for o in 0..*outputs {
                    let d = dy[o];
                    gb[o] += d;
                    let row = &weight[o * inputs..(o + 1) * inputs];
                    let grow = &mut gw[o * inputs..(o + 1) * inputs];
                    for i in 0..*inputs {
                        grow[i] += d * x[i];
                        dx[i] += d * row[i];
                    }
                }
                dx
            }
            Layer::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                in_len,
                weight,
                ..
            } => {
                let out_len = (in_len + 2 * padding - kernel) / stride + 1;
                let mut dx = vec![0.0; in_channels * in_len];
                for o in 0..*out_channels {
                    for t in 0..out_len {
                        let d = dy[o * out_len + t];
                        gb[o] += d;
                        for c in 0..*in_channels {
                            for j in 0..*kernel {
                                let pos = (t * stride + j) as isize - *padding as isize;
                                if pos >= 0 && (pos as usize) < *in_len {
                                    let wi = (o * in_channels + c) * kernel + j;
                                    let xi = c * in_len + pos as usize;
                                    gw[wi] += d * x[xi];
                                    dx[xi] += d * weight[wi];
                                }
                            }
                        }
                    }
                }
                dx
            }
            Layer::ConvTranspose1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                in_len,
                weight,
                ..
            } => {
                let out_len = (in_len - 1) * stride + kernel - 2 * padding;
                for o in 0..*out_channels {
                    gb[o] += dy[o * out_len..(o + 1) * out_len].iter().sum::<f64>();
                }
                let mut dx = vec![0.0; in_channels * in_len];
                for c in 0..*in_channels {
                    for t in 0..*in_len {
                        let v = x[c * in_len + t];
                        let mut acc = 0.0;
                        for o in 0..*out_channels {
                            for j in 0..*kernel {
                                let pos = (t * stride + j) as isize - *padding as isize;
                                if pos >= 0 && (pos as usize) < out_len {
                                    let wi = (c * out_channels + o) * kernel + j;
                                    let d = dy[o * out_len + pos as usize];
                                    gw[wi] += v * d;
                                    acc += weight[wi] * d;
                                }
                            }
                        }
                        dx[c * in_len + t] = acc;
                    }
                }
                dx
            }
            Layer::Act { kind, .. } => x
                .iter()
                .zip(y)
                .zip(dy)
                .map(|((&xi, &yi), &d)| d * kind.derivative(xi, yi))
                .collect(),
        }
    }
}

/// Feed-forward stack of layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    fn new(layers: Vec<Layer>) -> Self {
        for pair in layers.windows(2) {
            assert_eq!(
                pair[0].output_width(),
                pair[1].input_width(),
                "layer widths must chain"
            );
        }
        Self { layers }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, Layer::input_width)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Layer::output_width)
    }

    /// He-style uniform initialization scaled by fan-in.
    fn init(&mut self, rng: &mut SeededRng) {
        for layer in &mut self.layers {
            let bound = (1.0 / layer.fan_in() as f64).sqrt();
            if let Some((w, b)) = layer.params_mut() {
                w.iter_mut()
                    .for_each(|v| *v = rng.uniform_range(-bound, bound));
                b.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    /// Named blocks in [`Network::to_flat`] order. Weight shapes are
    /// `[out, in]` (dense), `[out, in, kernel]` (conv) and `[in, out, kernel]`
    /// (transposed conv).
    pub fn layout(&self, prefix: &str) -> ParamLayout {
        let mut blocks = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let (weight, bias) = match layer {
                Layer::Dense {
                    inputs, outputs, ..
                } => (vec![*outputs, *inputs], *outputs),
                Layer::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    ..
                } => (vec![*out_channels, *in_channels, *kernel], *out_channels),
                Layer::ConvTranspose1d {
                    in_channels,
                    out_channels,
                    kernel,
                    ..
                } => (vec![*in_channels, *out_channels, *kernel], *out_channels),
                Layer::Act { .. } => continue,
            };
            blocks.push(ParamBlock::new(
                format!("{prefix}.layer{i}.weight"),
                &weight,
            ));
            blocks.push(ParamBlock::new(format!("{prefix}.layer{i}.bias"), &[bias]));
        }
        ParamLayout::new(blocks)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.layers.iter().filter_map(Layer::params) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), GanError> {
        if flat.len() != self.param_count() {
            return Err(GanError::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut offset = 0;
        for (w, b) in self.layers.iter_mut().filter_map(Layer::params_mut) {
            let (nw, nb) = (w.len(), b.len());
            w.copy_from_slice(&flat[offset..offset + nw]);
            offset += nw;
            b.copy_from_slice(&flat[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    /// Activations after every layer; entry 0 is the input.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.forward(&cur);
        }
        cur
    }

    /// Backpropagate `dout` through a recorded trace; parameter gradients are
    /// accumulated into `grads` (flat, [`Network::to_flat`] order). Returns
    /// dL/dinput.
    fn backward(&self, acts: &[Vec<f64>], dout: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        for layer in &self.layers {
            offsets.push(offset);
            if let Some((w, b)) = layer.params() {
                offset += w.len() + b.len();
            }
        }
        let mut d = dout.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (gw, gb): (&mut [f64], &mut [f64]) = match layer.params() {
                Some((w, b)) => {
                    let (gw, rest) = grads[offsets[i]..].split_at_mut(w.len());
                    (gw, &mut rest[..b.len()])
                }
                None => (&mut [], &mut []),
            };
            d = layer.backward(&acts[i], &acts[i + 1], &d, gw, gb);
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Conv,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanHyper {
    pub architecture: Architecture,
    pub latent_dim: usize,
    /// Hidden widths of the dense architecture (generator; the discriminator
    /// mirrors them).
    pub dense_widths: Vec<usize>,
    /// Channels of the first convolution in the conv architecture; the second
    /// doubles it.
    pub conv_channels: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    pub seed: u64,
}

impl Default for GanHyper {
    fn default() -> Self {
        Self {
            architecture: Architecture::Conv,
            latent_dim: 16,
            dense_widths: vec![64, 64],
            conv_channels: 8,
            epochs: 2000,
            batch_size: 32,
            lr_generator: 2e-4,
            lr_discriminator: 2e-4,
            seed: 42,
        }
    }
}

impl GanHyper {
    pub fn validate(&self, dataset_len: usize) -> Result<(), GanError> {
        if self.latent_dim == 0
            || self.epochs == 0
            || self.batch_size == 0
            || self.conv_channels == 0
            || self.dense_widths.contains(&0)
        {
            return Err(GanError::Domain(
                "GAN sizes and epochs must be positive".into(),
            ));
        }
        if !(self.lr_generator > 0.0 && self.lr_discriminator > 0.0) {
            return Err(GanError::Domain("learning rates must be positive".into()));
        }
        if self.batch_size > dataset_len {
            return Err(GanError::Domain(format!(
                "batch size {} exceeds dataset size {dataset_len}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Maps a latent vector to a profile in scaled units; output activation tanh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub net: Network,
}

/// Maps a profile to the probability it is real; output activation sigmoid.
/// The network itself ends at the logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub net: Network,
}

impl Generator {
    /// Zero-initialized generator for `hyper`.
    pub fn new(hyper: &GanHyper) -> Self {
        let l = hyper.latent_dim;
        let layers = match hyper.architecture {
            Architecture::Dense => dense_stack(
                l,
                &hyper.dense_widths,
                PROFILE_LEN,
                Activation::Relu,
                Some(Activation::Tanh),
            ),
            Architecture::Conv => {
                let c = hyper.conv_channels;
                vec![
                    Layer::dense(l, c * 6),
                    Layer::Act {
                        kind: Activation::Relu,
                        width: c * 6,
                    },
                    Layer::conv_transpose(c, c, 6),
                    Layer::Act {
                        kind: Activation::Relu,
                        width: c * 12,
                    },
                    Layer::conv_transpose(c, 1, 12),
                    Layer::Act {
                        kind: Activation::Tanh,
                        width: PROFILE_LEN,
                    },
                ]
            }
        };
        Self {
            net: Network::new(layers),
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.net.input_width()
    }
}

impl Discriminator {
    pub fn new(hyper: &GanHyper) -> Self {
        let layers = match hyper.architecture {
            Architecture::Dense => {
                let mut widths = hyper.dense_widths.clone();
                widths.reverse();
                dense_stack(PROFILE_LEN, &widths, 1, Activation::LeakyRelu, None)
            }
            Architecture::Conv => {
                let c = hyper.conv_channels;
                vec![
                    Layer::conv(1, c, PROFILE_LEN),
                    Layer::Act {
                        kind: Activation::LeakyRelu,
                        width: c * 12,
                    },
                    Layer::conv(c, 2 * c, 12),
                    Layer::Act {
                        kind: Activation::LeakyRelu,
                        width: 2 * c * 6,
                    },
                    Layer::dense(2 * c * 6, 1),
                ]
            }
        };
        Self {
            net: Network::new(layers),
        }
    }

    /// Dense discriminator `24 → widths… → 1` with leaky ReLU between layers.
    pub fn dense(widths: &[usize]) -> Self {
        Self {
            net: Network::new(dense_stack(
                PROFILE_LEN,
                widths,
                1,
                Activation::LeakyRelu,
                None,
            )),
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.net.forward(x)[0]
    }
}

fn dense_stack(
    input: usize,
    widths: &[usize],
    output: usize,
    hidden_act: Activation,
    out_act: Option<Activation>,
) -> Vec<Layer> {
    let mut layers = Vec::new();
    let mut prev = input;
    for &w in widths {
        layers.push(Layer::dense(prev, w));
        layers.push(Layer::Act {
            kind: hidden_act,
            width: w,
        });
        prev = w;
    }
    layers.push(Layer::dense(prev, output));
    if let Some(kind) = out_act {
        layers.push(Layer::Act {
            kind,
            width: output,
        });
    }
    layers
}

/// Profile (scaled units) for latent vector `latent`.
pub fn generator_forward(g: &Generator, latent: &[f64]) -> Result<Vec<f64>, GanError> {
    if latent.len() != g.latent_dim() {
        return Err(GanError::Shape(format!(
            "latent has {} entries, generator expects {}",
            latent.len(),
            g.latent_dim()
        )));
    }
    Ok(g.net.forward(latent))
}

/// Probability in (0, 1) that `profile` is real.
pub fn discriminator_forward(d: &Discriminator, profile: &[f64]) -> Result<f64, GanError> {
    if profile.len() != d.net.input_width() {
        return Err(GanError::Shape(format!(
            "profile has {} entries, discriminator expects {}",
            profile.len(),
            d.net.input_width()
        )));
    }
    Ok(sigmoid_scalar(d.logit(profile)))
}

/// `mean log D(x) + mean log(1 − D(G(l)))`, with probabilities clamped to
/// `[LOG_EPS, 1 − LOG_EPS]`. Never positive.
pub fn gan_value(d_real: &[f64], d_fake: &[f64]) -> Result<f64, GanError> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(GanError::Domain("gan value of an empty batch".into()));
    }
    let clamp = |p: f64| p.clamp(LOG_EPS, 1.0 - LOG_EPS);
    let real = d_real.iter().map(|&p| clamp(p).ln()).sum::<f64>() / d_real.len() as f64;
    let fake = d_fake.iter().map(|&p| (1.0 - clamp(p)).ln()).sum::<f64>() / d_fake.len() as f64;
    Ok(real + fake)
}

/// `ln σ(z)` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Minimax value on a batch and its gradient with respect to the
/// discriminator parameters.
pub fn discriminator_value_grad(
    d: &Discriminator,
    real: &[Vec<f64>],
    fake: &[Vec<f64>],
) -> Result<(f64, Vec<f64>), GanError> {
    let mut grads = vec![0.0; d.net.param_count()];
    let mut p_real = Vec::with_capacity(real.len());
    let mut p_fake = Vec::with_capacity(fake.len());
    let nr = real.len() as f64;
    let nf = fake.len() as f64;
    for x in real {
        let acts = d.net.trace(x);
        let z = acts.last().expect("trace")[0];
        let p = sigmoid_scalar(z);
        p_real.push(p);
        // d/dz log σ(z) = 1 − σ(z)
        d.net.backward(&acts, &[(1.0 - p) / nr], &mut grads);
    }
    for x in fake {
        let acts = d.net.trace(x);
        let z = acts.last().expect("trace")[0];
        let p = sigmoid_scalar(z);
        p_fake.push(p);
        // d/dz log(1 − σ(z)) = −σ(z)
        d.net.backward(&acts, &[-p / nf], &mut grads);
    }
    Ok((gan_value(&p_real, &p_fake)?, grads))
}

/// Non-saturating generator loss `−mean log D(G(l))` and its gradient with
/// respect to the generator parameters.
pub fn generator_loss_grad(
    g: &Generator,
    d: &Discriminator,
    latents: &[Vec<f64>],
) -> Result<(f64, Vec<f64>), GanError> {
    if latents.is_empty() {
        return Err(GanError::Domain("empty latent batch".into()));
    }
    let n = latents.len() as f64;
    let mut grads = vec![0.0; g.net.param_count()];
    let mut scratch = vec![0.0; d.net.param_count()];
    let mut loss = 0.0;
    for l in latents {
        let g_acts = g.net.trace(l);
        let x = g_acts.last().expect("trace");
        let d_acts = d.net.trace(x);
        let z = d_acts.last().expect("trace")[0];
        loss -= log_sigmoid(z) / n;
        let dz = -(1.0 - sigmoid_scalar(z)) / n;
        let dx = d.net.backward(&d_acts, &[dz], &mut scratch);
        g.net.backward(&g_acts, &dx, &mut grads);
    }
    Ok((loss, grads))
}

fn draw_latents(rng: &mut SeededRng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.normal()).collect())
        .collect()
}

/// Per-epoch training trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GanHistory {
    /// Mean minimax value over the epoch's discriminator steps.
    pub value: Vec<f64>,
    /// Mean non-saturating generator loss over the epoch.
    pub generator_loss: Vec<f64>,
}

impl GanHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,gan_value,generator_loss\n");
        for (e, (v, g)) in self.value.iter().zip(&self.generator_loss).enumerate() {
            out.push_str(&format!("{},{v},{g}\n", e + 1));
        }
        out
    }
}

/// Owns both networks, their optimizers and the random stream.
#[derive(Debug, Clone)]
pub struct GanTrainer {
    pub generator: Generator,
    pub discriminator: Discriminator,
    adam_g: AdamState,
    adam_d: AdamState,
    layout_g: ParamLayout,
    layout_d: ParamLayout,
    rng: SeededRng,
}

impl GanTrainer {
    pub fn new(hyper: &GanHyper) -> Self {
        let mut rng = SeededRng::new(hyper.seed);
        let mut generator = Generator::new(hyper);
        let mut discriminator = Discriminator::new(hyper);
        generator.net.init(&mut rng);
        discriminator.net.init(&mut rng);
        Self::from_networks(generator, discriminator, hyper, rng)
    }

    pub fn from_networks(
        generator: Generator,
        discriminator: Discriminator,
        hyper: &GanHyper,
        rng: SeededRng,
    ) -> Self {
        let adam_g = AdamState::new(
            AdamConfig::default().with_learning_rate(hyper.lr_generator),
            generator.net.param_count(),
        );
        let adam_d = AdamState::new(
            AdamConfig::default().with_learning_rate(hyper.lr_discriminator),
            discriminator.net.param_count(),
        );
        Self {
            layout_g: generator.net.layout("generator"),
            layout_d: discriminator.net.layout("discriminator"),
            generator,
            discriminator,
            adam_g,
            adam_d,
            rng,
        }
    }

    /// One ascent step of the discriminator on `real` against a fresh fake
    /// batch of the same size. Returns the minimax value before the update.
    pub fn discriminator_step(&mut self, real: &[Vec<f64>]) -> Result<f64, GanError> {
        let latents = draw_latents(&mut self.rng, real.len(), self.generator.latent_dim());
        let fake: Vec<Vec<f64>> = latents
            .iter()
            .map(|l| self.generator.net.forward(l))
            .collect();
        let (value, mut grads) = discriminator_value_grad(&self.discriminator, real, &fake)?;
        grads.iter_mut().for_each(|g| *g = -*g);
        let mut flat = self.discriminator.net.to_flat();
        self.adam_d.step(&mut flat, &grads, &self.layout_d)?;
        self.discriminator.net.set_flat(&flat)?;
        Ok(value)
    }

    /// One descent step of the generator on the non-saturating loss. Returns
    /// the loss before the update.
    pub fn generator_step(&mut self, batch: usize) -> Result<f64, GanError> {
        let latents = draw_latents(&mut self.rng, batch, self.generator.latent_dim());
        let (loss, grads) = generator_loss_grad(&self.generator, &self.discriminator, &latents)?;
        let mut flat = self.generator.net.to_flat();
        self.adam_g.step(&mut flat, &grads, &self.layout_g)?;
        self.generator.net.set_flat(&flat)?;
        Ok(loss)
    }

    pub fn rng_mut(&mut self) -> &mut SeededRng {
        &mut self.rng
    }
}

/// Alternating 1:1 discriminator/generator updates over shuffled minibatches
/// of complete profiles in scaled units.
pub fn train_dcgan(
    profiles: &[Vec<f64>],
    hyper: &GanHyper,
) -> Result<(Generator, Discriminator, GanHistory), GanError> {
    if profiles.is_empty() {
        return Err(GanError::Domain("no training profiles".into()));
    }
    if let Some(p) = profiles
        .iter()
        .find(|p| p.len() != PROFILE_LEN || p.iter().any(|v| !v.is_finite()))
    {
        return Err(GanError::Shape(format!(
            "profiles need {PROFILE_LEN} finite values, got {}",
            p.len()
        )));
    }
    hyper.validate(profiles.len())?;
    let mut trainer = GanTrainer::new(hyper);
    let mut history = GanHistory::default();
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    for epoch in 0..hyper.epochs {
        shuffle(&mut order, trainer.rng_mut());
        let mut value_sum = 0.0;
        let mut loss_sum = 0.0;
        let mut steps = 0;
        for chunk in order.chunks(hyper.batch_size) {
            let real: Vec<Vec<f64>> = chunk.iter().map(|&i| profiles[i].clone()).collect();
            let value = trainer
                .discriminator_step(&real)
                .map_err(|e| divergence_at(e, epoch))?;
            let loss = trainer
                .generator_step(real.len())
                .map_err(|e| divergence_at(e, epoch))?;
            if !value.is_finite() || !loss.is_finite() {
                return Err(GanError::Divergence { epoch });
            }
            value_sum += value;
            loss_sum += loss;
            steps += 1;
        }
        history.value.push(value_sum / steps as f64);
        history.generator_loss.push(loss_sum / steps as f64);
    }
    Ok((trainer.generator, trainer.discriminator, history))
}

fn divergence_at(e: GanError, epoch: usize) -> GanError {
    match e {
        GanError::Numerics(NumericsError::Divergence { .. }) => GanError::Divergence { epoch },
        other => other,
    }
}

fn shuffle(order: &mut [usize], rng: &mut SeededRng) {
    for i in (1..order.len()).rev() {
        let j = rng.index(i + 1);
        order.swap(i, j);
    }
}

/// Generated 24-hour profiles in EUR/MWh.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub profiles: Vec<Vec<f64>>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// All prices pooled across profiles and hours.
    pub fn pooled(&self) -> Vec<f64> {
        self.profiles.iter().flatten().copied().collect()
    }

    /// One row per scenario, columns `h00..h23`.
    pub fn to_csv(&self) -> String {
        let header: Vec<String> = (0..PROFILE_LEN).map(|h| format!("h{h:02}")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for p in &self.profiles {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Draw `n` profiles from the generator and map them back to EUR/MWh.
/// Outputs stay inside the scaler's `[min, max]` envelope.
pub fn sample_prices(
    g: &Generator,
    scaler: &MinMaxScaler,
    n: usize,
    rng: &mut SeededRng,
) -> ScenarioSet {
    let profiles = (0..n)
        .map(|_| {
            let l: Vec<f64> = (0..g.latent_dim()).map(|_| rng.normal()).collect();
            g.net
                .forward(&l)
                .into_iter()
                .map(|s| scaler.unscale(s).clamp(scaler.min, scaler.max))
                .collect()
        })
        .collect();
    ScenarioSet { profiles }
}
