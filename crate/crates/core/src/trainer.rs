//! Unconditional training of the reverse process.
//!
//! Per example: draw `t` uniformly from `1..=T`, corrupt `x0` through the
//! closed-form marginal, predict `x0_hat`, and score the step with the KL
//! between the true posterior and the one built from `x0_hat`. The `t = 1`
//! term is the categorical negative log-likelihood of `x0` under `x0_hat`.
//! Losses are averaged over pixels, then over the batch.

use alloc::vec;
use alloc::vec::Vec;

use crate::catdiff::{categorical_kl, marginal_probs, posterior_probs, safe_ln, PosteriorCoeffs};
use crate::denoiser::{ArchSpec, ConvDenoiser, Denoiser, Scalar};
use crate::error::{config, domain, Error, Result};
use crate::field::{CategoricalField, LabelMap};
use crate::rng::RngStream;
use crate::sampler::sample_field;
use crate::schedule::{NoiseSchedule, ScheduleKind, COSINE_OFFSET};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// Heavy-ball SGD.
    SgdMomentum { momentum: f64 },
    /// Adaptive moments with bias correction.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Optimizer steps to run.
    pub steps: usize,
    /// Diffusion steps `T`.
    pub diffusion_steps: usize,
    pub schedule: ScheduleKind,
    /// Mirror each example left-to-right with probability 0.5.
    pub flip_augment: bool,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Rescale the gradient to at most this global norm.
    pub grad_clip: Option<f64>,
    /// Report a checkpoint every this many steps (0 = never).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 16,
            steps: 5000,
            diffusion_steps: 200,
            schedule: ScheduleKind::Cosine { offset: COSINE_OFFSET },
            flip_augment: true,
            seed: 0,
            optimizer: Optimizer::SgdMomentum { momentum: 0.9 },
            grad_clip: None,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    /// The original full-scale settings: `T = 4000`, learning rate `1e-4`.
    pub fn full_scale() -> Self {
        Self { diffusion_steps: 4000, ..Self::default() }
    }

    /// Settings that train the desk-scale network in minutes on one CPU core.
    pub fn desk() -> Self {
        Self { learning_rate: 2e-3, optimizer: Optimizer::adam(), grad_clip: Some(1.0), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(config!("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(config!("batch size must be positive"));
        }
        if self.diffusion_steps < 1 {
            return Err(config!("need at least one diffusion step"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(config!("gradient clip must be positive"));
            }
        }
        match self.optimizer {
            Optimizer::SgdMomentum { momentum } if !(0.0..1.0).contains(&momentum) => {
                Err(config!("momentum must lie in [0, 1)"))
            }
            Optimizer::Adam { beta1, beta2, eps }
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) =>
            {
                Err(config!("invalid Adam hyperparameters"))
            }
            _ => Ok(()),
        }
    }

    pub fn build_schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::from_kind(self.schedule, self.diffusion_steps)
    }
}

/// One example's draw: the step, the noised map, and the clean target.
#[derive(Debug, Clone)]
pub struct NoisedExample {
    pub t: usize,
    pub x_t: LabelMap,
}

/// Draws `t` and `x_t ~ q(x_t | x0)`.
pub fn noise_example(x0: &LabelMap, schedule: &NoiseSchedule, rng: &mut RngStream) -> NoisedExample {
    let t = 1 + rng.next_usize(schedule.steps());
    let probs = marginal_probs(&x0.one_hot(), t, schedule).expect("t in range");
    NoisedExample { t, x_t: sample_field(&probs, rng, false) }
}

/// Loss of one example given the prediction, and its gradient with respect
/// to `x0_hat` (pixel-major, already divided by the pixel count).
pub fn example_loss(
    x_t: &LabelMap,
    x0: &LabelMap,
    x0_hat: &CategoricalField,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<(f64, Vec<f64>)> {
    schedule.check_step(t)?;
    if !x_t.same_shape(x0)
        || x0_hat.height() != x0.height()
        || x0_hat.width() != x0.width()
        || x0_hat.classes() != x0.classes()
    {
        return Err(domain!("loss inputs differ in shape"));
    }
    let k = x0.classes();
    let px = x0.len() as f64;
    let mut grad = vec![0.0; x0_hat.probs().len()];
    let loss = if t == 1 {
        let mut nll = 0.0;
        for (i, &label) in x0.labels().iter().enumerate() {
            let p = x0_hat.pixel(i)[label as usize];
            nll -= safe_ln(p);
            grad[i * k + label as usize] = -1.0 / (px * p.max(crate::catdiff::PROB_FLOOR));
        }
        nll / px
    } else {
        let xt_field = x_t.one_hot();
        let target = posterior_probs(&xt_field, &x0.one_hot(), t, schedule)?;
        let model = posterior_probs(&xt_field, x0_hat, t, schedule)?;
        let coeffs = PosteriorCoeffs::new(schedule, t, k);
        for (i, g) in grad.iter_mut().enumerate() {
            let denom = coeffs.keep_prev * x0_hat.probs()[i] + coeffs.noise_prev;
            *g = coeffs.keep_prev * (model.probs()[i] - target.probs()[i]) / (denom * px);
        }
        categorical_kl(&target, &model)?
    };
    if !loss.is_finite() {
        let min_prob = x0_hat.probs().iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::NonFiniteLoss { t, alpha_bar: schedule.alpha_bar(t), min_prob });
    }
    Ok((loss, grad))
}

/// Mean loss of `denoiser` over `batch`, drawing `t` and `x_t` from `rng`.
pub fn evaluate_loss<D: Denoiser>(
    denoiser: &D,
    batch: &[LabelMap],
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<f64> {
    batch_loss_with(batch, schedule, rng, |x_t, t, _| denoiser.predict_x0(&x_t.one_hot(), t))
}

/// Same draws as [`evaluate_loss`] with the clean map as the prediction.
pub fn oracle_loss(batch: &[LabelMap], schedule: &NoiseSchedule, rng: &mut RngStream) -> Result<f64> {
    batch_loss_with(batch, schedule, rng, |_, _, x0| Ok(x0.one_hot()))
}

fn batch_loss_with<F>(batch: &[LabelMap], schedule: &NoiseSchedule, rng: &mut RngStream, mut predict: F) -> Result<f64>
where
    F: FnMut(&LabelMap, usize, &LabelMap) -> Result<CategoricalField>,
{
    if batch.is_empty() {
        return Err(domain!("empty batch"));
    }
    let mut total = 0.0;
    for x0 in batch {
        let ex = noise_example(x0, schedule, rng);
        let x0_hat = predict(&ex.x_t, ex.t, x0)?;
        total += example_loss(&ex.x_t, x0, &x0_hat, ex.t, schedule)?.0;
    }
    Ok(total / batch.len() as f64)
}

/// Mean batch loss and its parameter gradient.
pub fn loss_step<S: Scalar>(
    net: &ConvDenoiser<S>,
    batch: &[LabelMap],
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<(f64, Vec<S>)> {
    if batch.is_empty() {
        return Err(domain!("empty batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = vec![S::zero(); net.param_count()];
    let mut total = 0.0;
    for x0 in batch {
        let ex = noise_example(x0, schedule, rng);
        let (x0_hat, cache) = net.forward(&ex.x_t.one_hot(), ex.t)?;
        let (loss, mut dprobs) = example_loss(&ex.x_t, x0, &x0_hat, ex.t, schedule)?;
        dprobs.iter_mut().for_each(|g| *g *= scale);
        net.backward(&cache, &dprobs, &mut grads)?;
        total += loss;
    }
    Ok((total * scale, grads))
}

#[derive(Debug, Clone)]
struct OptimizerState {
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

/// Stateful training loop over an in-memory dataset.
#[derive(Debug)]
pub struct Trainer<S> {
    config: TrainConfig,
    schedule: NoiseSchedule,
    net: ConvDenoiser<S>,
    dataset: Vec<LabelMap>,
    order: Vec<usize>,
    cursor: usize,
    data_rng: RngStream,
    noise_rng: RngStream,
    state: OptimizerState,
    losses: Vec<f64>,
    above_limit: usize,
}

/// Progress of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Steps completed, counting this one.
    pub step: usize,
    pub loss: f64,
}

impl<S: Scalar> Trainer<S> {
    /// Builds a trainer around a freshly initialized network.
    pub fn new(config: TrainConfig, arch: ArchSpec, dataset: Vec<LabelMap>) -> Result<Self> {
        let root = RngStream::new(config.seed);
        let net = ConvDenoiser::init(arch, &mut root.fork(0))?;
        Self::with_network(config, net, dataset)
    }

    pub fn with_network(config: TrainConfig, net: ConvDenoiser<S>, dataset: Vec<LabelMap>) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(domain!("training set is empty"));
        }
        let arch = net.arch();
        if arch.steps != config.diffusion_steps {
            return Err(config!(
                "network conditioned on {} steps, config uses {}",
                arch.steps,
                config.diffusion_steps
            ));
        }
        if let Some(i) = dataset.iter().position(|m| {
            m.height() != arch.height || m.width() != arch.width || m.classes() != arch.classes
        }) {
            return Err(domain!("training map {i} does not match the network shape"));
        }
        let schedule = config.build_schedule()?;
        let root = RngStream::new(config.seed);
        let n = net.param_count();
        Ok(Self {
            order: (0..dataset.len()).collect(),
            cursor: dataset.len(),
            data_rng: root.fork(1),
            noise_rng: root.fork(2),
            state: OptimizerState { first: vec![0.0; n], second: vec![0.0; n], steps: 0 },
            losses: Vec::new(),
            above_limit: 0,
            config,
            schedule,
            net,
            dataset,
        })
    }

    pub fn network(&self) -> &ConvDenoiser<S> {
        &self.net
    }

    pub fn into_network(self) -> ConvDenoiser<S> {
        self.net
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    fn next_batch(&mut self) -> Vec<LabelMap> {
        let mut batch = Vec::with_capacity(self.config.batch_size);
        while batch.len() < self.config.batch_size {
            if self.cursor >= self.order.len() {
                self.data_rng.shuffle(&mut self.order);
                self.cursor = 0;
            }
            let map = &self.dataset[self.order[self.cursor]];
            self.cursor += 1;
            if self.config.flip_augment && self.data_rng.next_bool(0.5) {
                batch.push(map.flip_horizontal());
            } else {
                batch.push(map.clone());
            }
        }
        batch
    }

    /// Runs one optimizer step and returns the batch loss.
    pub fn step(&mut self) -> Result<StepReport> {
        let batch = self.next_batch();
        let (loss, grads) = loss_step(&self.net, &batch, &self.schedule, &mut self.noise_rng)?;
        self.losses.push(loss);
        let step = self.losses.len();

        let initial = self.losses[0];
        if loss > 10.0 * initial {
            self.above_limit += 1;
            if self.above_limit >= 100 {
                return Err(Error::Diverged { step, loss, initial });
            }
        } else {
            self.above_limit = 0;
        }

        let mut grads: Vec<f64> = grads.into_iter().map(Scalar::as_f64).collect();
        if let Some(limit) = self.config.grad_clip {
            let norm = libm::sqrt(grads.iter().map(|g| g * g).sum::<f64>());
            if norm > limit {
                grads.iter_mut().for_each(|g| *g *= limit / norm);
            }
        }
        self.apply(&grads);
        Ok(StepReport { step, loss })
    }

    fn apply(&mut self, grads: &[f64]) {
        let lr = self.config.learning_rate;
        let st = &mut self.state;
        st.steps += 1;
        match self.config.optimizer {
            Optimizer::SgdMomentum { momentum } => {
                for ((p, v), &g) in self.net.params_mut().iter_mut().zip(&mut st.first).zip(grads) {
                    *v = momentum * *v + g;
                    *p = S::cast_from(p.as_f64() - lr * *v);
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - libm::pow(beta1, st.steps as f64);
                let c2 = 1.0 - libm::pow(beta2, st.steps as f64);
                for (((p, m), v), &g) in
                    self.net.params_mut().iter_mut().zip(&mut st.first).zip(&mut st.second).zip(grads)
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let update = (*m / c1) / (libm::sqrt(*v / c2) + eps);
                    *p = S::cast_from(p.as_f64() - lr * update);
                }
            }
        }
    }
}

/// Trains for `config.steps` steps. `observe` sees every step report and the
/// current network; returning `false` stops early.
pub fn train<S, F>(config: TrainConfig, arch: ArchSpec, dataset: Vec<LabelMap>, mut observe: F) -> Result<(ConvDenoiser<S>, Vec<f64>)>
where
    S: Scalar,
    F: FnMut(&StepReport, &ConvDenoiser<S>) -> bool,
{
    let mut trainer = Trainer::new(config, arch, dataset)?;
    for _ in 0..trainer.config.steps {
        let report = trainer.step()?;
        if !observe(&report, trainer.network()) {
            break;
        }
    }
    let losses = trainer.losses.clone();
    Ok((trainer.into_network(), losses))
}

/// Trailing moving average with the given window.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        acc += v;
        if i >= window {
            acc -= values[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::UniformDenoiser;

    fn tiny_arch(steps: usize) -> ArchSpec {
        ArchSpec { height: 4, width: 4, classes: 3, steps, channels: 4, time_dim: 4, dilations: vec![1, 2] }
    }

    #[test]
    fn uniform_prediction_hand_example() {
        let s = NoiseSchedule::test_betas(vec![0.4, 0.2]);
        let x_t = LabelMap::new(1, 1, 2, vec![0]).unwrap();
        let x0 = LabelMap::new(1, 1, 2, vec![1]).unwrap();
        let u = CategoricalField::uniform(1, 1, 2).unwrap();
        let (loss, _) = example_loss(&x_t, &x0, &u, 2, &s).unwrap();
        let (q0, q1) = (0.18 / 0.26, 0.08 / 0.26);
        let expected = q0 * (q0 / 0.9f64).ln() + q1 * (q1 / 0.1f64).ln();
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 0.1640).abs() < 5e-4);
    }

    #[test]
    fn oracle_prediction_has_zero_loss() {
        let s = NoiseSchedule::cosine(30, COSINE_OFFSET).unwrap();
        let mut rng = RngStream::new(2);
        let x0 = LabelMap::new(2, 3, 4, vec![0, 1, 2, 3, 2, 1]).unwrap();
        for t in 1..=30 {
            let probs = marginal_probs(&x0.one_hot(), t, &s).unwrap();
            let x_t = sample_field(&probs, &mut rng, false);
            let (loss, _) = example_loss(&x_t, &x0, &x0.one_hot(), t, &s).unwrap();
            assert!(loss.abs() < 1e-12, "t={t} loss={loss}");
        }
    }

    #[test]
    fn oracle_lower_bounds_uniform() {
        let s = NoiseSchedule::cosine(30, COSINE_OFFSET).unwrap();
        let batch: Vec<LabelMap> =
            (0..8).map(|i| LabelMap::new(2, 2, 3, vec![i % 3, 1, 2, 0]).unwrap()).collect();
        let oracle = oracle_loss(&batch, &s, &mut RngStream::new(5)).unwrap();
        let uniform = evaluate_loss(&UniformDenoiser { classes: 3 }, &batch, &s, &mut RngStream::new(5)).unwrap();
        assert!(oracle <= uniform);
        assert!(oracle.abs() < 1e-12);
    }

    /// Finite differences of the full batch loss through the network.
    #[test]
    fn loss_gradient_matches_finite_differences() {
        let s = NoiseSchedule::cosine(20, COSINE_OFFSET).unwrap();
        let mut rng = RngStream::new(9);
        let mut net = ConvDenoiser::<f64>::init(tiny_arch(20), &mut rng).unwrap();
        for v in net.params_mut() {
            *v += rng.next_normal() * 0.3;
        }
        let batch: Vec<LabelMap> = (0..3)
            .map(|_| {
                let labels = (0..16).map(|_| rng.next_usize(3) as u16).collect();
                LabelMap::new(4, 4, 3, labels).unwrap()
            })
            .collect();
        let (_, grads) = loss_step(&net, &batch, &s, &mut RngStream::new(77)).unwrap();
        let h = 1e-4;
        let mut bad = 0;
        for i in 0..net.param_count() {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + h;
            let up = loss_step(&net, &batch, &s, &mut RngStream::new(77)).unwrap().0;
            net.params_mut()[i] = orig - h;
            let down = loss_step(&net, &batch, &s, &mut RngStream::new(77)).unwrap().0;
            net.params_mut()[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(1e-8);
            if rel > 1e-4 {
                bad += 1;
            }
        }
        assert!(bad * 20 <= net.param_count(), "{bad} coordinates off");
    }

    #[test]
    fn single_map_overfits() {
        let config = TrainConfig {
            steps: 500,
            batch_size: 4,
            diffusion_steps: 20,
            learning_rate: 3e-3,
            optimizer: Optimizer::adam(),
            ..TrainConfig::default()
        };
        let map = LabelMap::new(4, 4, 3, vec![0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2]).unwrap();
        let (_, losses) = train::<f32, _>(config, tiny_arch(20), vec![map], |_, _| true).unwrap();
        let sm = smooth(&losses, 50);
        let late: f64 = sm[450..].iter().sum::<f64>() / 50.0;
        assert!(late < 0.5 * sm[49], "smoothed loss {} -> {}", sm[49], late);
        // Window-50 trend is downward across the run.
        for pair in [(49usize, 149usize), (149, 299), (299, 499)] {
            assert!(sm[pair.1] < sm[pair.0], "{:?}: {} vs {}", pair, sm[pair.0], sm[pair.1]);
        }
    }

    #[test]
    fn training_replays_under_seed() {
        let config = TrainConfig { steps: 20, batch_size: 2, diffusion_steps: 10, ..TrainConfig::desk() };
        let data: Vec<LabelMap> =
            (0..5).map(|i| LabelMap::new(4, 4, 3, vec![(i % 3) as u16; 16]).unwrap()).collect();
        let a = train::<f32, _>(config.clone(), tiny_arch(10), data.clone(), |_, _| true).unwrap();
        let b = train::<f32, _>(config, tiny_arch(10), data, |_, _| true).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.params(), b.0.params());
    }

    #[test]
    fn rejects_mismatched_setup() {
        let data = vec![LabelMap::new(4, 4, 3, vec![0; 16]).unwrap()];
        let config = TrainConfig { diffusion_steps: 10, ..TrainConfig::default() };
        assert!(Trainer::<f32>::new(config.clone(), tiny_arch(11), data.clone()).is_err());
        assert!(Trainer::<f32>::new(config.clone(), tiny_arch(10), Vec::new()).is_err());
        let bad = TrainConfig { learning_rate: 0.0, ..config };
        assert!(matches!(Trainer::<f32>::new(bad, tiny_arch(10), data), Err(Error::Config(_))));
    }

    #[test]
    fn smoothing_window() {
        assert_eq!(smooth(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
    }
}
