//! Conditioned reverse processes over a trained unconditional denoiser.
//!
//! Both strategies start from uniform noise `x_T` and take one unconditioned
//! reverse step to `x_{T-1}`. Then, for each `t = T-2, ..., 0`:
//!
//! * reverse-sample `x_t` from `x_{t+1}`,
//! * noise the observation to `y_t ~ q(y_t | y0)`,
//! * merge: known pixels from `y_t`, unknown pixels from `x_t`.
//!
//! Sequential conditioning continues from the merged map. Look-back
//! conditioning instead re-noises the merged map one forward step to
//! `x_{t+1}` and reverse-samples `x_t` again, `lookbacks` times per step.
//! Sampling whose target step is `t <= 1` is the deterministic argmax.

use alloc::vec::Vec;

use crate::catdiff::{forward_step_probs, marginal_probs, reverse_probs};
use crate::denoiser::Denoiser;
use crate::error::{config, domain, Result};
use crate::field::{CategoricalField, LabelMap, Mask};
use crate::rng::RngStream;
use crate::sampler::sample_field;
use crate::schedule::NoiseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Look-back conditioning.
    LookBack,
    /// Sequential conditioning.
    Sequential,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::LookBack => "lb_con",
            Strategy::Sequential => "seq_con",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InpaintConfig {
    pub strategy: Strategy,
    /// Look-backs per reverse step for [`Strategy::LookBack`].
    pub lookbacks: usize,
    pub samples: usize,
    /// Overwrite known pixels with the observation at the end.
    pub paste_known: bool,
    pub seed: u64,
}

impl Default for InpaintConfig {
    fn default() -> Self {
        Self { strategy: Strategy::LookBack, lookbacks: 1, samples: 1, paste_known: true, seed: 0 }
    }
}

/// Known pixels from `y`, unknown pixels from `x`.
pub fn merge(x: &LabelMap, y: &LabelMap, mask: &Mask) -> Result<LabelMap> {
    if !x.same_shape(y) || !mask.matches(x) {
        return Err(domain!("merge inputs differ in shape"));
    }
    let labels = x
        .labels()
        .iter()
        .zip(y.labels())
        .zip(mask.known())
        .map(|((&xv, &yv), &known)| if known { yv } else { xv })
        .collect();
    LabelMap::new(x.height(), x.width(), x.classes(), labels)
}

fn deterministic_at(t: usize) -> bool {
    t <= 1
}

/// `x_{t-1}` from `x_t` through the denoiser.
fn reverse_step<D: Denoiser>(
    denoiser: &D,
    x_t: &LabelMap,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<LabelMap> {
    let onehot = x_t.one_hot();
    let x0_hat = denoiser.predict_x0(&onehot, t)?;
    let probs = reverse_probs(&onehot, &x0_hat, t, schedule)?;
    Ok(sample_field(&probs, rng, deterministic_at(t - 1)))
}

/// `y_t ~ q(y_t | y0)`; `y0` itself at `t = 0`.
fn noise_observation(y0: &LabelMap, t: usize, schedule: &NoiseSchedule, rng: &mut RngStream) -> Result<LabelMap> {
    if t == 0 {
        return Ok(y0.clone());
    }
    let probs = marginal_probs(&y0.one_hot(), t, schedule)?;
    Ok(sample_field(&probs, rng, deterministic_at(t)))
}

/// One forward step from the merged map at `t` to `x_{t+1}`.
fn look_back(m_t: &LabelMap, t: usize, schedule: &NoiseSchedule, rng: &mut RngStream) -> Result<LabelMap> {
    let probs = forward_step_probs(&m_t.one_hot(), t + 1, schedule)?;
    Ok(sample_field(&probs, rng, deterministic_at(t)))
}

fn check_inputs<D: Denoiser>(denoiser: &D, y0: &LabelMap, mask: &Mask, schedule: &NoiseSchedule) -> Result<()> {
    if !mask.matches(y0) {
        return Err(domain!("mask and observation differ in shape"));
    }
    if denoiser.classes() != y0.classes() {
        return Err(domain!("denoiser has {} classes, map has {}", denoiser.classes(), y0.classes()));
    }
    if schedule.steps() < 2 {
        return Err(config!("conditioned sampling needs at least 2 diffusion steps"));
    }
    Ok(())
}

/// `x_T` uniform, then the unconditioned first step to `x_{T-1}`.
fn start_chain<D: Denoiser>(
    denoiser: &D,
    height: usize,
    width: usize,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<LabelMap> {
    let k = denoiser.classes();
    let x_big_t = sample_field(&CategoricalField::uniform(height, width, k)?, rng, false);
    reverse_step(denoiser, &x_big_t, schedule.steps(), schedule, rng)
}

/// Sequential conditioning.
pub fn seq_con<D: Denoiser>(
    denoiser: &D,
    y0: &LabelMap,
    mask: &Mask,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
    paste_known: bool,
) -> Result<LabelMap> {
    check_inputs(denoiser, y0, mask, schedule)?;
    let mut x = start_chain(denoiser, y0.height(), y0.width(), schedule, rng)?;
    for t in (0..schedule.steps() - 1).rev() {
        let x_t = reverse_step(denoiser, &x, t + 1, schedule, rng)?;
        let y_t = noise_observation(y0, t, schedule, rng)?;
        x = merge(&x_t, &y_t, mask)?;
    }
    finish(x, y0, mask, paste_known)
}

/// Look-back conditioning with `lookbacks` re-noise/re-sample rounds per step.
/// `lookbacks = 0` is sequential conditioning.
pub fn lb_con<D: Denoiser>(
    denoiser: &D,
    y0: &LabelMap,
    mask: &Mask,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
    lookbacks: usize,
    paste_known: bool,
) -> Result<LabelMap> {
    check_inputs(denoiser, y0, mask, schedule)?;
    let mut x = start_chain(denoiser, y0.height(), y0.width(), schedule, rng)?;
    for t in (0..schedule.steps() - 1).rev() {
        let mut x_t = reverse_step(denoiser, &x, t + 1, schedule, rng)?;
        let y_t = noise_observation(y0, t, schedule, rng)?;
        let mut m_t = merge(&x_t, &y_t, mask)?;
        if lookbacks == 0 {
            x = m_t;
            continue;
        }
        for round in 0..lookbacks {
            if round > 0 {
                let y_t = noise_observation(y0, t, schedule, rng)?;
                m_t = merge(&x_t, &y_t, mask)?;
            }
            let x_next = look_back(&m_t, t, schedule, rng)?;
            x_t = reverse_step(denoiser, &x_next, t + 1, schedule, rng)?;
        }
        x = x_t;
    }
    finish(x, y0, mask, paste_known)
}

fn finish(x0: LabelMap, y0: &LabelMap, mask: &Mask, paste_known: bool) -> Result<LabelMap> {
    if paste_known {
        merge(&x0, y0, mask)
    } else {
        Ok(x0)
    }
}

/// One completion under `config` with the stream seeded by `config.seed`.
pub fn inpaint<D: Denoiser>(
    denoiser: &D,
    y0: &LabelMap,
    mask: &Mask,
    schedule: &NoiseSchedule,
    config: &InpaintConfig,
) -> Result<LabelMap> {
    let mut rng = RngStream::new(config.seed);
    match config.strategy {
        Strategy::LookBack => lb_con(denoiser, y0, mask, schedule, &mut rng, config.lookbacks, config.paste_known),
        Strategy::Sequential => seq_con(denoiser, y0, mask, schedule, &mut rng, config.paste_known),
    }
}

/// Unconditional sample from the reverse process.
pub fn generate<D: Denoiser>(
    denoiser: &D,
    height: usize,
    width: usize,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<LabelMap> {
    let k = denoiser.classes();
    let mut x = sample_field(&CategoricalField::uniform(height, width, k)?, rng, false);
    for t in (1..=schedule.steps()).rev() {
        x = reverse_step(denoiser, &x, t, schedule, rng)?;
    }
    Ok(x)
}

/// Per-pixel normalized entropy of the class histogram across samples:
/// 0 when all samples agree, 1 when votes are spread uniformly over `K` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl UncertaintyMap {
    /// Mean over pixels where `select(known)` holds; `None` if none do.
    pub fn mean_where(&self, mask: &Mask, select: impl Fn(bool) -> bool) -> Option<f64> {
        let (sum, n) = self
            .values
            .iter()
            .zip(mask.known())
            .filter(|(_, &k)| select(k))
            .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

pub fn uncertainty(samples: &[LabelMap]) -> Result<UncertaintyMap> {
    let first = samples.first().ok_or_else(|| domain!("no samples"))?;
    if samples.iter().any(|s| !s.same_shape(first)) {
        return Err(domain!("samples differ in shape"));
    }
    let k = first.classes();
    let norm = libm::log(k as f64);
    let n = samples.len() as f64;
    let mut counts = alloc::vec![0usize; k];
    let values = (0..first.len())
        .map(|px| {
            counts.iter_mut().for_each(|c| *c = 0);
            for s in samples {
                counts[s.labels()[px] as usize] += 1;
            }
            let h: f64 = counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * libm::log(p)
                })
                .sum();
            // Unanimous pixels give -0.0 from the sum.
            if h > 0.0 { (h / norm).min(1.0) } else { 0.0 }
        })
        .collect();
    Ok(UncertaintyMap { height: first.height(), width: first.width(), values })
}

#[derive(Debug, Clone)]
pub struct MultiSample {
    pub samples: Vec<LabelMap>,
    pub uncertainty: UncertaintyMap,
}

/// `config.samples` completions with seeds `config.seed + i`.
pub fn multi_sample<D: Denoiser>(
    denoiser: &D,
    y0: &LabelMap,
    mask: &Mask,
    schedule: &NoiseSchedule,
    config: &InpaintConfig,
) -> Result<MultiSample> {
    if config.samples == 0 {
        return Err(config!("need at least one sample"));
    }
    let samples = (0..config.samples as u64)
        .map(|i| {
            let cfg = InpaintConfig { seed: config.seed.wrapping_add(i), ..*config };
            inpaint(denoiser, y0, mask, schedule, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let uncertainty = uncertainty(&samples)?;
    Ok(MultiSample { samples, uncertainty })
}
