//! Diffusion noise schedules.
//!
//! Steps are 1-based: `t` ranges over `1..=T` and `t = 0` denotes clean data,
//! with `alpha_bar(0) == 1`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{config, domain, Result};

/// Largest per-step beta any schedule produces.
pub const MAX_BETA: f64 = 0.999;

/// Default offset of the cosine schedule.
pub const COSINE_OFFSET: f64 = 0.008;

/// How a schedule was built; stored in checkpoints so inference reuses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Cosine { offset: f64 },
    Linear { beta_start: f64, beta_end: f64 },
}

/// Precomputed `beta_t`, `alpha_t = 1 - beta_t` and `alpha_bar_t = prod alpha_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    kind: ScheduleKind,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// Cosine schedule: `alpha_bar_t = f(t)/f(0)` with
    /// `f(t) = cos^2(((t/T) + s)/(1 + s) * pi/2)`, betas clipped to [`MAX_BETA`].
    pub fn cosine(steps: usize, offset: f64) -> Result<Self> {
        if steps == 0 {
            return Err(config!("cosine schedule needs at least one step"));
        }
        if !(offset > 0.0 && offset < 0.1) {
            return Err(config!("cosine offset must lie in (0, 0.1), got {offset}"));
        }
        let betas = (1..=steps)
            .map(|t| {
                let prev = cosine_alpha_bar(t - 1, steps, offset);
                let cur = cosine_alpha_bar(t, steps, offset);
                (1.0 - cur / prev).min(MAX_BETA)
            })
            .collect();
        Ok(Self::from_betas(ScheduleKind::Cosine { offset }, betas))
    }

    /// Betas linearly spaced from `beta_start` to `beta_end` inclusive.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(config!("linear schedule needs at least one step"));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end <= MAX_BETA) {
            return Err(config!(
                "linear schedule needs 0 < beta_start <= beta_end <= {MAX_BETA}, got {beta_start}..{beta_end}"
            ));
        }
        let betas = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Ok(Self::from_betas(ScheduleKind::Linear { beta_start, beta_end }, betas))
    }

    /// Rebuild from a stored descriptor.
    pub fn from_kind(kind: ScheduleKind, steps: usize) -> Result<Self> {
        match kind {
            ScheduleKind::Cosine { offset } => Self::cosine(steps, offset),
            ScheduleKind::Linear { beta_start, beta_end } => Self::linear(steps, beta_start, beta_end),
        }
    }

    #[cfg(test)]
    pub(crate) fn test_betas(beta: Vec<f64>) -> Self {
        Self::from_betas(ScheduleKind::Cosine { offset: COSINE_OFFSET }, beta)
    }

    fn from_betas(kind: ScheduleKind, beta: Vec<f64>) -> Self {
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_bar.push(acc);
        }
        Self { kind, beta, alpha, alpha_bar }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Number of diffusion steps `T`.
    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[self.index(t)]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[self.index(t)]
    }

    /// `alpha_bar(0)` is 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[self.index(t)]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// Errors unless `1 <= t <= T`.
    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            Err(domain!("step {t} outside 1..={}", self.steps()))
        } else {
            Ok(())
        }
    }

    fn index(&self, t: usize) -> usize {
        assert!(t >= 1 && t <= self.steps(), "step {t} outside 1..={}", self.steps());
        t - 1
    }
}

/// Closed-form `f(t)/f(0)` of the cosine schedule, before beta clipping.
pub fn cosine_alpha_bar(t: usize, steps: usize, offset: f64) -> f64 {
    let f = |t: usize| {
        let c = libm::cos(((t as f64 / steps as f64) + offset) / (1.0 + offset) * FRAC_PI_2);
        c * c
    };
    f(t) / f(0)
}
