//! Gumbel-Max categorical sampling.
//!
//! Draw order for a field: pixels row-major, `K` uniforms per pixel.
//! Deterministic sampling (the final reverse steps) consumes no draws.

use alloc::vec::Vec;

use crate::catdiff::PROB_FLOOR;
use crate::field::{argmax, CategoricalField, LabelMap};
use crate::rng::{RngStream, UNIFORM_EPS};

/// `exp` of the Gumbel score `ln p - ln(-ln e)`, which preserves the argmax
/// and needs one logarithm. `p` is floored like `safe_ln`.
#[inline]
fn race_score(p: f64, e: f64) -> f64 {
    p.max(PROB_FLOOR) / -libm::log(e)
}

/// `argmax_i (ln p_i - ln(-ln eps_i))`, ties to the lowest index.
///
/// `eps` values outside the open unit interval are clamped to
/// `[UNIFORM_EPS, 1 - UNIFORM_EPS]`; `p` need not be normalized.
pub fn gumbel_max(p: &[f64], eps: &[f64]) -> usize {
    assert_eq!(p.len(), eps.len(), "one uniform per class");
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, (&pi, &e)) in p.iter().zip(eps).enumerate() {
        let e = if e.is_nan() { 0.5 } else { e.clamp(UNIFORM_EPS, 1.0 - UNIFORM_EPS) };
        let score = race_score(pi, e);
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Draws `K` uniforms from `rng` and samples one class from `p`.
pub fn sample_categorical(p: &[f64], rng: &mut RngStream) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &pi) in p.iter().enumerate() {
        let score = race_score(pi, rng.next_open01());
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Samples every pixel of `probs`. With `deterministic` set, takes the
/// per-pixel argmax instead (the zero-noise final step).
pub fn sample_field(probs: &CategoricalField, rng: &mut RngStream, deterministic: bool) -> LabelMap {
    if deterministic {
        return probs.argmax();
    }
    let labels: Vec<u16> =
        probs.iter_pixels().map(|p| sample_categorical(p, rng) as u16).collect();
    LabelMap::new(probs.height(), probs.width(), probs.classes(), labels).expect("labels below K")
}

/// Plain argmax of a distribution.
pub fn argmax_class(p: &[f64]) -> usize {
    argmax(p)
}
