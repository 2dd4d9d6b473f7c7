//! No-U-Turn sampling of a parametric price density.
//!
//! The sampler is the multinomial variant of NUTS with an identity mass
//! matrix. Warmup adapts the step size by dual averaging toward a target mean
//! acceptance statistic, then keeps it fixed at the averaged value. Trajectories
//! double until the endpoints start moving toward each other, the tree reaches
//! its maximum depth, or the energy error exceeds [`DIVERGENCE_THRESHOLD`].
//!
//! The density family is a Gaussian mixture over pooled prices, parameterized
//! on unconstrained space as `θ = (μ_1..K, log σ_1..K, w̃_1..K)`, with mixture
//! weights `softmax(w̃)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::SeededRng;

/// Energy error above which a trajectory is flagged divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

const EPSILON_SEARCH_LIMIT: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NutsError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
    #[error("log density is not finite at {0}")]
    Density(String),
    #[error("step size search did not converge after {iterations} iterations")]
    Tuning { iterations: usize },
    #[error("{divergent} of {total} kept draws diverged ({:.1}%)", rate * 100.0)]
    Quality {
        divergent: usize,
        total: usize,
        rate: f64,
    },
}

/// Differentiable log density on unconstrained space.
pub trait LogDensity {
    fn dim(&self) -> usize;

    /// Value and gradient at `theta`. Either may be non-finite; the sampler
    /// treats that as a divergence.
    fn log_density_grad(&self, theta: &[f64]) -> (f64, Vec<f64>);

    /// Map an unconstrained point to reported parameters.
    fn constrain(&self, theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta{i}")).collect()
    }
}

/// `N(mean, sd² I)` up to a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicGaussian {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl IsotropicGaussian {
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            sd: 1.0,
        }
    }
}

impl LogDensity for IsotropicGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let var = self.sd * self.sd;
        let grad: Vec<f64> = theta
            .iter()
            .zip(&self.mean)
            .map(|(t, m)| -(t - m) / var)
            .collect();
        let value = -0.5
            * theta
                .iter()
                .zip(&self.mean)
                .map(|(t, m)| (t - m) * (t - m))
                .sum::<f64>()
            / var;
        (value, grad)
    }
}

/// Gaussian mixture with K components and data-scaled weakly informative
/// priors: `μ_k ~ N(prior_mean, prior_mean_sd²)`, `σ_k ~ HalfNormal(prior_sigma_scale)`,
/// `w̃_k ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub components: usize,
    pub prior_mean: f64,
    pub prior_mean_sd: f64,
    pub prior_sigma_scale: f64,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

impl MixtureModel {
    /// Priors centred on the data: mean sd is twice the data sd, the σ scale
    /// is the data sd.
    pub fn for_data(components: usize, data: &[f64]) -> Result<Self, NutsError> {
        if !(1..=5).contains(&components) {
            return Err(NutsError::Config(format!(
                "component count must be in 1..=5, got {components}"
            )));
        }
        if data.len() < 2 || data.iter().any(|v| !v.is_finite()) {
            return Err(NutsError::Domain(
                "mixture fit needs at least two finite data points".into(),
            ));
        }
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let sd = (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if sd <= 0.0 {
            return Err(NutsError::Domain("data have zero spread".into()));
        }
        Ok(Self {
            components,
            prior_mean: mean,
            prior_mean_sd: 2.0 * sd,
            prior_sigma_scale: sd,
        })
    }

    pub fn dim(&self) -> usize {
        3 * self.components
    }

    /// Start point: means at evenly spaced data quantiles, common σ, equal
    /// weights.
    pub fn initial_point(&self, data: &[f64]) -> Vec<f64> {
        let k = self.components;
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut theta = Vec::with_capacity(3 * k);
        for c in 0..k {
            let q = (c as f64 + 0.5) / k as f64;
            theta.push(sorted[((sorted.len() - 1) as f64 * q).round() as usize]);
        }
        let log_sd = (self.prior_sigma_scale / k as f64).ln();
        theta.extend(std::iter::repeat_n(log_sd, k));
        theta.extend(std::iter::repeat_n(0.0, k));
        theta
    }

    /// `(μ, σ, weights)` from an unconstrained point.
    pub fn unpack(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let k = self.components;
        let mu = theta[..k].to_vec();
        let sigma = theta[k..2 * k].iter().map(|t| t.exp()).collect();
        (mu, sigma, softmax(&theta[2 * k..3 * k]))
    }

    /// Log posterior (up to a constant) and its gradient with respect to θ.
    pub fn log_posterior(&self, theta: &[f64], data: &[f64]) -> Result<(f64, Vec<f64>), NutsError> {
        if theta.len() != self.dim() {
            return Err(NutsError::Domain(format!(
                "θ has {} entries, model expects {}",
                theta.len(),
                self.dim()
            )));
        }
        if data.is_empty() {
            return Err(NutsError::Domain("empty data".into()));
        }
        let (value, grad) = self.eval(theta, data);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(NutsError::Density(format!("{theta:?}")));
        }
        Ok((value, grad))
    }

    fn eval(&self, theta: &[f64], data: &[f64]) -> (f64, Vec<f64>) {
        let k = self.components;
        let (mu, log_sd, logits) = (&theta[..k], &theta[k..2 * k], &theta[2 * k..]);
        let weights = softmax(logits);
        let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let inv_var: Vec<f64> = log_sd.iter().map(|t| (-2.0 * t).exp()).collect();
        let mut grad = vec![0.0; 3 * k];
        let mut value = 0.0;
        let mut terms = vec![0.0; k];
        for &x in data {
            for c in 0..k {
                let z2 = (x - mu[c]).powi(2) * inv_var[c];
                terms[c] = log_w[c] - LN_SQRT_2PI - log_sd[c] - 0.5 * z2;
            }
            let lse = log_sum_exp(&terms);
            value += lse;
            for c in 0..k {
                let r = (terms[c] - lse).exp();
                let d = x - mu[c];
                grad[c] += r * d * inv_var[c];
                grad[k + c] += r * (d * d * inv_var[c] - 1.0);
                grad[2 * k + c] += r;
            }
        }
        let n = data.len() as f64;
        let mean_var = self.prior_mean_sd * self.prior_mean_sd;
        let sigma_var = self.prior_sigma_scale * self.prior_sigma_scale;
        for c in 0..k {
            // μ prior
            value -= 0.5 * (mu[c] - self.prior_mean).powi(2) / mean_var;
            grad[c] -= (mu[c] - self.prior_mean) / mean_var;
            // half-normal σ prior plus log-Jacobian of σ = exp(θ)
            let sigma2 = (2.0 * log_sd[c]).exp();
            value += -0.5 * sigma2 / sigma_var + log_sd[c];
            grad[k + c] += -sigma2 / sigma_var + 1.0;
            // logit prior; the responsibility sum above still needs −nπ_k
            value -= 0.5 * logits[c] * logits[c];
            grad[2 * k + c] -= n * weights[c] + logits[c];
        }
        (value, grad)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn log_add(a: f64, b: f64) -> f64 {
    log_sum_exp(&[a, b])
}

/// A mixture model bound to its data, usable as a sampling target.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTarget<'a> {
    pub model: &'a MixtureModel,
    pub data: &'a [f64],
}

impl LogDensity for MixtureTarget<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_density_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        self.model.eval(theta, self.data)
    }

    fn constrain(&self, theta: &[f64]) -> Vec<f64> {
        let (mut mu, sigma, weights) = self.model.unpack(theta);
        mu.extend(sigma);
        mu.extend(weights);
        mu
    }

    fn param_names(&self) -> Vec<String> {
        let k = self.model.components;
        ["mu", "sigma", "weight"]
            .iter()
            .flat_map(|p| (1..=k).map(move |c| format!("{p}{c}")))
            .collect()
    }
}

/// Position, momentum and the density evaluated at the position.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub theta: Vec<f64>,
    pub momentum: Vec<f64>,
    pub grad: Vec<f64>,
    pub log_density: f64,
}

impl PhasePoint {
    pub fn new<T: LogDensity + ?Sized>(target: &T, theta: Vec<f64>, momentum: Vec<f64>) -> Self {
        let (log_density, grad) = target.log_density_grad(&theta);
        Self {
            theta,
            momentum,
            grad,
            log_density,
        }
    }

    /// `−log π(θ) + ½ r·r`.
    pub fn hamiltonian(&self) -> f64 {
        -self.log_density + 0.5 * self.momentum.iter().map(|r| r * r).sum::<f64>()
    }
}

/// One leapfrog step of size `eps` (negative to integrate backwards).
pub fn leapfrog<T: LogDensity + ?Sized>(target: &T, point: &PhasePoint, eps: f64) -> PhasePoint {
    let half: Vec<f64> = point
        .momentum
        .iter()
        .zip(&point.grad)
        .map(|(r, g)| r + 0.5 * eps * g)
        .collect();
    let theta: Vec<f64> = point
        .theta
        .iter()
        .zip(&half)
        .map(|(t, r)| t + eps * r)
        .collect();
    let (log_density, grad) = target.log_density_grad(&theta);
    let momentum = half
        .iter()
        .zip(&grad)
        .map(|(r, g)| r + 0.5 * eps * g)
        .collect();
    PhasePoint {
        theta,
        momentum,
        grad,
        log_density,
    }
}

/// Heuristic initial step size: double or halve from 1 until the one-step
/// acceptance probability crosses one half.
pub fn find_reasonable_epsilon<T: LogDensity + ?Sized>(
    target: &T,
    theta0: &[f64],
    rng: &mut SeededRng,
) -> Result<f64, NutsError> {
    let momentum: Vec<f64> = (0..theta0.len()).map(|_| rng.normal()).collect();
    let start = PhasePoint::new(target, theta0.to_vec(), momentum);
    if !start.log_density.is_finite() {
        return Err(NutsError::Density(format!("{theta0:?}")));
    }
    let h0 = start.hamiltonian();
    let log_ratio = |eps: f64| {
        let next = leapfrog(target, &start, eps);
        let lr = h0 - next.hamiltonian();
        if lr.is_nan() {
            f64::NEG_INFINITY
        } else {
            lr
        }
    };
    let mut eps = 1.0;
    let mut lr = log_ratio(eps);
    let a = if lr > 0.5f64.ln() { 1.0 } else { -1.0 };
    for _ in 0..EPSILON_SEARCH_LIMIT {
        if a * lr <= -a * 2f64.ln() {
            return Ok(eps);
        }
        eps *= 2f64.powf(a);
        lr = log_ratio(eps);
    }
    Err(NutsError::Tuning {
        iterations: EPSILON_SEARCH_LIMIT,
    })
}

/// True when the trajectory `[minus, plus]` has started to turn back on
/// itself.
pub fn is_u_turn(theta_minus: &[f64], theta_plus: &[f64], r_minus: &[f64], r_plus: &[f64]) -> bool {
    let dot = |r: &[f64]| -> f64 {
        theta_plus
            .iter()
            .zip(theta_minus)
            .zip(r)
            .map(|((p, m), r)| (p - m) * r)
            .sum()
    };
    dot(r_minus) < 0.0 || dot(r_plus) < 0.0
}

/// Summary of a built subtree.
#[derive(Debug, Clone)]
pub struct Subtree {
    pub minus: PhasePoint,
    pub plus: PhasePoint,
    pub proposal: PhasePoint,
    /// log of the summed multinomial weights `exp(H0 − H)`.
    pub log_weight: f64,
    pub turning: bool,
    pub divergent: bool,
    pub sum_accept: f64,
    pub n_leapfrog: usize,
}

impl Subtree {
    /// False once the subtree hit a U-turn or a divergence.
    pub fn is_valid(&self) -> bool {
        !self.turning && !self.divergent
    }
}

/// Build a subtree of `2^depth` leapfrog steps from `start` in `direction`
/// (`+1` or `-1`). `h0` is the Hamiltonian of the trajectory's initial point.
pub fn build_tree<T: LogDensity + ?Sized>(
    target: &T,
    start: &PhasePoint,
    direction: f64,
    depth: usize,
    eps: f64,
    h0: f64,
    rng: &mut SeededRng,
) -> Subtree {
    if depth == 0 {
        let next = leapfrog(target, start, direction * eps);
        let h = next.hamiltonian();
        let delta = h - h0;
        let divergent = !delta.is_finite() || delta > DIVERGENCE_THRESHOLD;
        let accept = if delta.is_finite() {
            (-delta).exp().min(1.0)
        } else {
            0.0
        };
        return Subtree {
            minus: next.clone(),
            plus: next.clone(),
            proposal: next,
            log_weight: if delta.is_finite() {
                -delta
            } else {
                f64::NEG_INFINITY
            },
            turning: false,
            divergent,
            sum_accept: accept,
            n_leapfrog: 1,
        };
    }
    let first = build_tree(target, start, direction, depth - 1, eps, h0, rng);
    if !first.is_valid() {
        return first;
    }
    let edge = if direction > 0.0 {
        &first.plus
    } else {
        &first.minus
    };
    let second = build_tree(target, edge, direction, depth - 1, eps, h0, rng);
    let log_weight = log_add(first.log_weight, second.log_weight);
    let take_second = rng.uniform().ln() < second.log_weight - log_weight;
    let (minus, plus) = if direction > 0.0 {
        (first.minus, second.plus.clone())
    } else {
        (second.minus.clone(), first.plus)
    };
    let turning =
        second.turning || is_u_turn(&minus.theta, &plus.theta, &minus.momentum, &plus.momentum);
    Subtree {
        proposal: if take_second {
            second.proposal
        } else {
            first.proposal
        },
        minus,
        plus,
        log_weight,
        turning,
        divergent: second.divergent,
        sum_accept: first.sum_accept + second.sum_accept,
        n_leapfrog: first.n_leapfrog + second.n_leapfrog,
    }
}

/// Per-draw sampler diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawStats {
    pub tree_depth: usize,
    pub divergent: bool,
    pub step_size: f64,
    pub accept_stat: f64,
    pub n_leapfrog: usize,
}

/// One NUTS transition from `current` with step size `eps`.
pub fn nuts_transition<T: LogDensity + ?Sized>(
    target: &T,
    current: &PhasePoint,
    eps: f64,
    max_depth: usize,
    rng: &mut SeededRng,
) -> (PhasePoint, DrawStats) {
    let momentum: Vec<f64> = (0..current.theta.len()).map(|_| rng.normal()).collect();
    let start = PhasePoint {
        momentum,
        ..current.clone()
    };
    let h0 = start.hamiltonian();
    let mut minus = start.clone();
    let mut plus = start.clone();
    let mut sample = start;
    let mut log_weight = 0.0;
    let mut sum_accept = 0.0;
    let mut n_leapfrog = 0;
    let mut divergent = false;
    let mut depth = 0;
    while depth < max_depth {
        let direction = if rng.coin() { 1.0 } else { -1.0 };
        let edge = if direction > 0.0 { &plus } else { &minus };
        let sub = build_tree(target, edge, direction, depth, eps, h0, rng);
        depth += 1;
        sum_accept += sub.sum_accept;
        n_leapfrog += sub.n_leapfrog;
        if sub.divergent {
            divergent = true;
            break;
        }
        if sub.turning {
            break;
        }
        // Biased progressive sampling favours the newer half.
        if rng.uniform().ln() < sub.log_weight - log_weight {
            sample = sub.proposal.clone();
        }
        log_weight = log_add(log_weight, sub.log_weight);
        if direction > 0.0 {
            plus = sub.plus;
        } else {
            minus = sub.minus;
        }
        if is_u_turn(&minus.theta, &plus.theta, &minus.momentum, &plus.momentum) {
            break;
        }
    }
    let stats = DrawStats {
        tree_depth: depth,
        divergent,
        step_size: eps,
        accept_stat: if n_leapfrog > 0 {
            sum_accept / n_leapfrog as f64
        } else {
            0.0
        },
        n_leapfrog,
    };
    (sample, stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NutsConfig {
    pub warmup: usize,
    pub samples: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
    /// Shrinkage target for log ε; `None` uses `log(10 ε0)`.
    pub mu: Option<f64>,
    pub chains: usize,
    pub seed: u64,
}

impl Default for NutsConfig {
    fn default() -> Self {
        Self {
            warmup: 1000,
            samples: 1000,
            target_accept: 0.8,
            max_depth: 10,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            mu: None,
            chains: 1,
            seed: 42,
        }
    }
}

impl NutsConfig {
    pub fn validate(&self) -> Result<(), NutsError> {
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(NutsError::Config(format!(
                "target acceptance must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        if self.max_depth == 0 || self.max_depth > 12 {
            return Err(NutsError::Config(format!(
                "max tree depth must be in 1..=12, got {}",
                self.max_depth
            )));
        }
        if self.samples == 0 || self.chains == 0 {
            return Err(NutsError::Config(
                "draws and chains must be positive".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.t0 >= 0.0 && self.kappa > 0.5 && self.kappa <= 1.0) {
            return Err(NutsError::Config(
                "dual averaging needs γ > 0, t0 ≥ 0 and κ in (0.5, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Dual-averaging step-size adaptation.
#[derive(Debug, Clone)]
struct DualAveraging {
    mu: f64,
    target: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
    m: usize,
}

impl DualAveraging {
    fn new(config: &NutsConfig, eps0: f64) -> Self {
        Self {
            mu: config.mu.unwrap_or((10.0 * eps0).ln()),
            target: config.target_accept,
            gamma: config.gamma,
            t0: config.t0,
            kappa: config.kappa,
            h_bar: 0.0,
            log_eps: eps0.ln(),
            log_eps_bar: 0.0,
            m: 0,
        }
    }

    fn update(&mut self, accept_stat: f64) -> f64 {
        self.m += 1;
        let m = self.m as f64;
        let w = 1.0 / (m + self.t0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_stat);
        self.log_eps = self.mu - m.sqrt() / self.gamma * self.h_bar;
        let eta = m.powf(-self.kappa);
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar;
        self.log_eps.exp()
    }

    fn final_step_size(&self, eps0: f64) -> f64 {
        if self.m == 0 {
            eps0
        } else {
            self.log_eps_bar.exp()
        }
    }
}

/// Kept draws with their diagnostics, chains concatenated in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub names: Vec<String>,
    /// Constrained parameters, one row per kept draw.
    pub draws: Vec<Vec<f64>>,
    pub stats: Vec<DrawStats>,
    pub chain: Vec<usize>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn divergences(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }

    pub fn mean_accept_stat(&self) -> f64 {
        self.stats.iter().map(|s| s.accept_stat).sum::<f64>() / self.stats.len().max(1) as f64
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[index]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push_str(",tree_depth,divergent,step_size,accept_stat\n");
        for (draw, s) in self.draws.iter().zip(&self.stats) {
            for v in draw {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.tree_depth, s.divergent as u8, s.step_size, s.accept_stat
            ));
        }
        out
    }
}

fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: &[f64],
    config: &NutsConfig,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<DrawStats>), NutsError> {
    let mut rng = SeededRng::new(seed);
    let mut current = PhasePoint::new(target, init.to_vec(), vec![0.0; init.len()]);
    if !current.log_density.is_finite() || current.grad.iter().any(|g| !g.is_finite()) {
        return Err(NutsError::Density(format!("{init:?}")));
    }
    let eps0 = find_reasonable_epsilon(target, init, &mut rng)?;
    let mut adapt = DualAveraging::new(config, eps0);
    let mut eps = eps0;
    for _ in 0..config.warmup {
        let (next, stats) = nuts_transition(target, &current, eps, config.max_depth, &mut rng);
        current = next;
        eps = adapt.update(stats.accept_stat);
    }
    let eps = adapt.final_step_size(eps0);
    let mut draws = Vec::with_capacity(config.samples);
    let mut stats = Vec::with_capacity(config.samples);
    for _ in 0..config.samples {
        let (next, s) = nuts_transition(target, &current, eps, config.max_depth, &mut rng);
        current = next;
        draws.push(target.constrain(&current.theta));
        stats.push(s);
    }
    Ok((draws, stats))
}

/// Run `config.chains` chains from `init`, chain `i` seeded with `seed + i`.
/// Fails with a quality error when more than 10% of kept draws diverged.
pub fn nuts_sample<T: LogDensity + Sync + ?Sized>(
    target: &T,
    init: &[f64],
    config: &NutsConfig,
) -> Result<PosteriorSamples, NutsError> {
    config.validate()?;
    if init.len() != target.dim() {
        return Err(NutsError::Domain(format!(
            "initial point has {} entries, target expects {}",
            init.len(),
            target.dim()
        )));
    }
    let results: Vec<_> = if config.chains == 1 {
        vec![run_chain(target, init, config, config.seed)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..config.chains)
                .map(|c| {
                    scope.spawn(move || {
                        run_chain(target, init, config, config.seed.wrapping_add(c as u64))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    };
    let mut samples = PosteriorSamples {
        names: target.param_names(),
        draws: Vec::new(),
        stats: Vec::new(),
        chain: Vec::new(),
    };
    for (c, result) in results.into_iter().enumerate() {
        let (draws, stats) = result?;
        samples.chain.extend(std::iter::repeat_n(c, draws.len()));
        samples.draws.extend(draws);
        samples.stats.extend(stats);
    }
    let divergent = samples.divergences();
    let rate = divergent as f64 / samples.len() as f64;
    if rate > 0.1 {
        return Err(NutsError::Quality {
            divergent,
            total: samples.len(),
            rate,
        });
    }
    Ok(samples)
}

/// Fit a K-component mixture to `data`.
pub fn fit_mixture(
    data: &[f64],
    components: usize,
    config: &NutsConfig,
) -> Result<(MixtureModel, PosteriorSamples), NutsError> {
    let model = MixtureModel::for_data(components, data)?;
    let init = model.initial_point(data);
    let target = MixtureTarget {
        model: &model,
        data,
    };
    let samples = nuts_sample(&target, &init, config)?;
    Ok((model, samples))
}

/// `n` posterior-predictive prices: a uniformly chosen posterior row, a
/// component drawn by weight, then a normal draw from that component.
/// Rows are laid out as `μ_1..K, σ_1..K, weight_1..K`.
pub fn posterior_predictive(
    model: &MixtureModel,
    samples: &PosteriorSamples,
    n: usize,
    rng: &mut SeededRng,
) -> Result<Vec<f64>, NutsError> {
    if samples.is_empty() {
        return Err(NutsError::Domain("no posterior draws".into()));
    }
    let k = model.components;
    Ok((0..n)
        .map(|_| {
            let row = &samples.draws[rng.index(samples.len())];
            let u = rng.uniform();
            let mut acc = 0.0;
            let mut comp = k - 1;
            for c in 0..k {
                acc += row[2 * k + c];
                if u < acc {
                    comp = c;
                    break;
                }
            }
            row[comp] + row[k + comp] * rng.normal()
        })
        .collect())
}
