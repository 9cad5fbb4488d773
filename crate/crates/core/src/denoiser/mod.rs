//! Denoisers: `x0_hat = f(x_t, t)`.
//!
//! [`Denoiser`] is the interface the trainer and samplers use.
//! [`ConvDenoiser`] is the reference network: a 3x3 stem, a stack of dilated
//! residual 3x3 convolutions, and a zero-initialized 1x1 head producing
//! per-pixel logits. A sinusoidal embedding of `t` goes through a small MLP
//! and is projected into a per-channel bias for every convolution.

mod conv;
mod scalar;

pub use conv::{ConvDenoiser, ForwardCache};
pub use scalar::{gemm, Scalar};

use alloc::vec::Vec;

use crate::error::{config, domain, Result};
use crate::field::CategoricalField;

/// Anything that predicts a clean-map distribution from a noisy one-hot map.
pub trait Denoiser {
    fn classes(&self) -> usize;

    /// Per-pixel distribution over clean classes. Must be a valid simplex field.
    fn predict_x0(&self, x_t: &CategoricalField, t: usize) -> Result<CategoricalField>;
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn classes(&self) -> usize {
        (**self).classes()
    }
    fn predict_x0(&self, x_t: &CategoricalField, t: usize) -> Result<CategoricalField> {
        (**self).predict_x0(x_t, t)
    }
}

/// Predicts the uniform distribution everywhere.
#[derive(Debug, Clone, Copy)]
pub struct UniformDenoiser {
    pub classes: usize,
}

impl Denoiser for UniformDenoiser {
    fn classes(&self) -> usize {
        self.classes
    }
    fn predict_x0(&self, x_t: &CategoricalField, _t: usize) -> Result<CategoricalField> {
        CategoricalField::uniform(x_t.height(), x_t.width(), x_t.classes())
    }
}

/// Network shape. Everything needed to rebuild the parameter layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    /// Largest diffusion step the network is conditioned on.
    pub steps: usize,
    pub channels: usize,
    pub time_dim: usize,
    /// One residual block per entry.
    pub dilations: Vec<usize>,
}

impl ArchSpec {
    /// Default network for desk-scale maps.
    pub fn desk(height: usize, width: usize, classes: usize, steps: usize) -> Self {
        Self {
            height,
            width,
            classes,
            steps,
            channels: 32,
            time_dim: 32,
            dilations: alloc::vec![1, 2, 4, 8],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(config!("network input must be nonempty"));
        }
        if self.classes < 2 {
            return Err(config!("network needs at least 2 classes"));
        }
        if self.steps == 0 {
            return Err(config!("network needs at least one diffusion step"));
        }
        if self.channels == 0 {
            return Err(config!("network needs at least one channel"));
        }
        if self.time_dim < 2 || self.time_dim % 2 != 0 {
            return Err(config!("time embedding dimension must be even and >= 2"));
        }
        if self.dilations.contains(&0) {
            return Err(config!("dilations must be positive"));
        }
        Ok(())
    }

    /// Layer table in parameter order.
    pub fn layers(&self) -> Vec<LayerSpec> {
        let mut out = Vec::with_capacity(self.dilations.len() + 3);
        out.push(LayerSpec::TimeMlp { dim: self.time_dim });
        out.push(LayerSpec::Conv {
            input: self.classes,
            output: self.channels,
            kernel: 3,
            dilation: 1,
            time_dim: self.time_dim,
        });
        for &d in &self.dilations {
            out.push(LayerSpec::Conv {
                input: self.channels,
                output: self.channels,
                kernel: 3,
                dilation: d,
                time_dim: self.time_dim,
            });
        }
        out.push(LayerSpec::Head { input: self.channels, output: self.classes });
        out
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(LayerSpec::param_count).sum()
    }

    pub(crate) fn check_input(&self, x: &CategoricalField, t: usize) -> Result<()> {
        if x.height() != self.height || x.width() != self.width || x.classes() != self.classes {
            return Err(domain!(
                "input is {}x{}x{}, network was built for {}x{}x{}",
                x.height(),
                x.width(),
                x.classes(),
                self.height,
                self.width,
                self.classes
            ));
        }
        if t == 0 || t > self.steps {
            return Err(domain!("step {t} outside 1..={}", self.steps));
        }
        Ok(())
    }
}

/// One entry of the layer table stored in checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// `dim -> dim` dense layer with SiLU over the sinusoidal embedding.
    TimeMlp { dim: usize },
    /// Square convolution with bias and a `time_dim -> output` bias projection.
    Conv { input: usize, output: usize, kernel: usize, dilation: usize, time_dim: usize },
    /// 1x1 convolution to logits.
    Head { input: usize, output: usize },
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::TimeMlp { dim } => dim * dim + dim,
            LayerSpec::Conv { input, output, kernel, time_dim, .. } => {
                kernel * kernel * input * output + output + time_dim * output
            }
            LayerSpec::Head { input, output } => input * output + output,
        }
    }
}

/// Sinusoidal embedding of `t`: sines then cosines at geometric frequencies.
pub fn time_embedding(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut out = alloc::vec![0.0; dim];
    for i in 0..half {
        let freq = libm::exp(-libm::log(10_000.0) * i as f64 / half as f64);
        let arg = t as f64 * freq;
        out[i] = libm::sin(arg);
        out[half + i] = libm::cos(arg);
    }
    out
}
