//! Categorical diffusion kernels.
//!
//! With `K` classes, one forward step keeps the previous state with weight
//! `1 - beta_t` and mixes in the uniform distribution with weight `beta_t`.
//! The marginal after `t` steps and the posterior of `x_{t-1}` given `x_t`
//! and `x_0` follow in closed form. Posteriors are normalized in log space
//! with [`PROB_FLOOR`] applied before every logarithm.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::field::CategoricalField;
use crate::schedule::NoiseSchedule;

/// Probabilities are clamped to at least this before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-30;

#[inline]
pub fn safe_ln(p: f64) -> f64 {
    libm::log(p.max(PROB_FLOOR))
}

/// `(1 - beta_t) * x_prev + beta_t / K`.
pub fn forward_step_probs(
    x_prev: &CategoricalField,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<CategoricalField> {
    schedule.check_step(t)?;
    Ok(mix_uniform(x_prev, 1.0 - schedule.beta(t)))
}

/// `alpha_bar_t * x0 + (1 - alpha_bar_t) / K`.
pub fn marginal_probs(
    x0: &CategoricalField,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<CategoricalField> {
    schedule.check_step(t)?;
    Ok(mix_uniform(x0, schedule.alpha_bar(t)))
}

/// `keep * x + (1 - keep) / K` per pixel.
pub fn mix_uniform(x: &CategoricalField, keep: f64) -> CategoricalField {
    let k = x.classes();
    let noise = (1.0 - keep) / k as f64;
    let probs = x.probs().iter().map(|&p| keep * p + noise).collect();
    CategoricalField::from_probs(x.height(), x.width(), k, probs).expect("shape preserved")
}

/// Posterior over `x_{t-1}` given `x_t` and a (possibly soft) `x0`:
/// proportional to `[alpha_t x_t + (1-alpha_t)/K] * [alpha_bar_{t-1} x0 + (1-alpha_bar_{t-1})/K]`.
///
/// At `t = 1` the second factor is `x0` itself.
pub fn posterior_probs(
    x_t: &CategoricalField,
    x0: &CategoricalField,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<CategoricalField> {
    schedule.check_step(t)?;
    if !x_t.same_shape(x0) {
        return Err(domain!(
            "posterior inputs differ in shape: {}x{}x{} vs {}x{}x{}",
            x_t.height(),
            x_t.width(),
            x_t.classes(),
            x0.height(),
            x0.width(),
            x0.classes()
        ));
    }
    let coeffs = PosteriorCoeffs::new(schedule, t, x_t.classes());
    let k = x_t.classes();
    let mut out = Vec::with_capacity(x_t.probs().len());
    let mut logs = [0.0f64; 64];
    let mut heap_logs = Vec::new();
    let logs: &mut [f64] = if k <= logs.len() {
        &mut logs[..k]
    } else {
        heap_logs.resize(k, 0.0);
        &mut heap_logs
    };
    for (xt, x0p) in x_t.iter_pixels().zip(x0.iter_pixels()) {
        for ((l, &a), &b) in logs.iter_mut().zip(xt).zip(x0p) {
            *l = coeffs.log_unnormalized(a, b);
        }
        push_normalized(logs, &mut out);
    }
    Ok(CategoricalField::from_probs(x_t.height(), x_t.width(), k, out).expect("shape preserved"))
}

/// Reverse-process distribution: the posterior with the denoiser's estimate
/// standing in for `x0`.
pub fn reverse_probs(
    x_t: &CategoricalField,
    x0_hat: &CategoricalField,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<CategoricalField> {
    posterior_probs(x_t, x0_hat, t, schedule)
}

/// Mean over pixels of `sum_k p_k (ln p_k - ln q_k)`, with `0 ln 0 = 0`.
pub fn categorical_kl(p: &CategoricalField, q: &CategoricalField) -> Result<f64> {
    if !p.same_shape(q) {
        return Err(domain!("KL inputs differ in shape"));
    }
    let total: f64 = p.iter_pixels().zip(q.iter_pixels()).map(|(a, b)| pixel_kl(a, b)).sum();
    Ok(total / p.pixels() as f64)
}

/// KL divergence between two distributions over the same classes.
pub fn pixel_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pk, _)| pk > 0.0)
        .map(|(&pk, &qk)| pk * (safe_ln(pk) - safe_ln(qk)))
        .sum::<f64>()
        .max(0.0)
}

/// The scalar pieces of the posterior at one step.
#[derive(Debug, Clone, Copy)]
pub struct PosteriorCoeffs {
    /// `alpha_t`
    pub keep_t: f64,
    /// `(1 - alpha_t)/K`
    pub noise_t: f64,
    /// `alpha_bar_{t-1}`
    pub keep_prev: f64,
    /// `(1 - alpha_bar_{t-1})/K`
    pub noise_prev: f64,
}

impl PosteriorCoeffs {
    pub fn new(schedule: &NoiseSchedule, t: usize, classes: usize) -> Self {
        let k = classes as f64;
        let keep_t = schedule.alpha(t);
        let keep_prev = schedule.alpha_bar(t - 1);
        Self { keep_t, noise_t: (1.0 - keep_t) / k, keep_prev, noise_prev: (1.0 - keep_prev) / k }
    }

    #[inline]
    pub fn log_unnormalized(&self, xt: f64, x0: f64) -> f64 {
        safe_ln(self.keep_t * xt + self.noise_t) + safe_ln(self.keep_prev * x0 + self.noise_prev)
    }
}

/// Softmax of `logs` appended to `out`.
fn push_normalized(logs: &[f64], out: &mut Vec<f64>) {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = out.len();
    let mut sum = 0.0;
    for &l in logs {
        let e = libm::exp(l - max);
        sum += e;
        out.push(e);
    }
    for v in &mut out[start..] {
        *v /= sum;
    }
}
