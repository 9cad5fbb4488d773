//! Categorical (multinomial) diffusion for semantic label grids.
//!
//! The crate covers the whole inference stack for completing partially
//! observed label maps: noise schedules, the closed-form categorical forward
//! and posterior kernels, Gumbel-Max sampling over a counter-based RNG, a
//! small convolutional denoiser with hand-written gradients, the training
//! loop, and the sequential and look-back conditioned reverse processes.
//! Interpolation baselines, mask generators, a procedural street-map
//! generator and pixel metrics live alongside so experiments can be run
//! without any IO.
//!
//! Everything here is `no_std` with `alloc`. File formats and the command
//! line live in the companion `sepaint` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod catdiff;
pub mod denoiser;
pub mod error;
pub mod field;
pub mod inpaint;
pub mod maskgen;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use field::{CategoricalField, LabelMap, Mask};
pub use rng::RngStream;
pub use schedule::{NoiseSchedule, ScheduleKind};
