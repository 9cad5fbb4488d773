use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid construction parameters (schedules, configs, mask specs).
    #[error("configuration error: {0}")]
    Config(String),
    /// Inputs outside an operation's domain (shape mismatch, label >= K, t out of range).
    #[error("domain error: {0}")]
    Domain(String),
    /// API misuse, such as a backward pass against a foreign forward cache.
    #[error("usage error: {0}")]
    Usage(String),
    /// The training loss stopped being a finite number.
    #[error("non-finite loss at t={t} (alpha_bar={alpha_bar:e}, min prob={min_prob:e})")]
    NonFiniteLoss { t: usize, alpha_bar: f64, min_prob: f64 },
    /// The training loss exceeded ten times its initial value for too long.
    #[error("training diverged at step {step}: loss {loss} vs initial {initial}")]
    Diverged { step: usize, loss: f64, initial: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! config {
    ($($arg:tt)*) => { $crate::error::Error::Config(alloc::format!($($arg)*)) };
}
pub(crate) use {config, domain};
