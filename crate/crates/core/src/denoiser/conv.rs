use alloc::vec;
use alloc::vec::Vec;

use super::scalar::{gemm, Scalar};
use super::{time_embedding, ArchSpec, Denoiser, LayerSpec};
use crate::error::{config, domain, Error, Result};
use crate::field::CategoricalField;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ConvOffsets {
    weight: usize,
    bias: usize,
    proj: usize,
    input: usize,
    output: usize,
    dilation: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    time_weight: usize,
    time_bias: usize,
    convs: Vec<ConvOffsets>,
    head_weight: usize,
    head_bias: usize,
    total: usize,
}

impl Layout {
    fn new(arch: &ArchSpec) -> Self {
        let mut cursor = 0;
        let mut take = |n: usize| {
            let at = cursor;
            cursor += n;
            at
        };
        let (mut time_weight, mut time_bias) = (0, 0);
        let (mut head_weight, mut head_bias) = (0, 0);
        let mut convs = Vec::new();
        for layer in arch.layers() {
            match layer {
                LayerSpec::TimeMlp { dim } => {
                    time_weight = take(dim * dim);
                    time_bias = take(dim);
                }
                LayerSpec::Conv { input, output, kernel, dilation, time_dim } => {
                    let weight = take(kernel * kernel * input * output);
                    let bias = take(output);
                    let proj = take(time_dim * output);
                    convs.push(ConvOffsets { weight, bias, proj, input, output, dilation });
                }
                LayerSpec::Head { input, output } => {
                    head_weight = take(input * output);
                    head_bias = take(output);
                }
            }
        }
        Self { time_weight, time_bias, convs, head_weight, head_bias, total: cursor }
    }
}

/// Reference convolutional denoiser with a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvDenoiser<S> {
    arch: ArchSpec,
    layout: Layout,
    params: Vec<S>,
}

/// Activations retained by [`ConvDenoiser::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    arch: ArchSpec,
    emb: Vec<S>,
    time_pre: Vec<S>,
    time_act: Vec<S>,
    cols: Vec<Vec<S>>,
    block_inputs: Vec<Vec<S>>,
    hidden: Vec<S>,
    head_input: Vec<S>,
    probs: Vec<f64>,
}

impl<S> ForwardCache<S> {
    /// Output distribution of the cached pass, pixel-major.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[inline]
fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

#[inline]
fn silu<S: Scalar>(x: S) -> S {
    x * sigmoid(x)
}

#[inline]
fn silu_grad<S: Scalar>(x: S) -> S {
    let s = sigmoid(x);
    s * (S::one() + x * (S::one() - s))
}

/// Unfold 3x3 neighborhoods (zero padded, dilated) into rows of `9 * c`.
fn im2col<S: Scalar>(input: &[S], h: usize, w: usize, c: usize, dil: usize, cols: &mut [S]) {
    let row_len = 9 * c;
    for y in 0..h {
        for x in 0..w {
            let row = &mut cols[(y * w + x) * row_len..][..row_len];
            for ky in 0..3 {
                let yy = y as isize + (ky as isize - 1) * dil as isize;
                for kx in 0..3 {
                    let xx = x as isize + (kx as isize - 1) * dil as isize;
                    let dst = &mut row[(ky * 3 + kx) * c..][..c];
                    if yy >= 0 && yy < h as isize && xx >= 0 && xx < w as isize {
                        let src = (yy as usize * w + xx as usize) * c;
                        dst.copy_from_slice(&input[src..src + c]);
                    } else {
                        dst.fill(S::zero());
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add rows back onto the grid.
fn col2im<S: Scalar>(cols: &[S], h: usize, w: usize, c: usize, dil: usize, out: &mut [S]) {
    out.fill(S::zero());
    let row_len = 9 * c;
    for y in 0..h {
        for x in 0..w {
            let row = &cols[(y * w + x) * row_len..][..row_len];
            for ky in 0..3 {
                let yy = y as isize + (ky as isize - 1) * dil as isize;
                if yy < 0 || yy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let xx = x as isize + (kx as isize - 1) * dil as isize;
                    if xx < 0 || xx >= w as isize {
                        continue;
                    }
                    let dst = (yy as usize * w + xx as usize) * c;
                    for (o, &v) in out[dst..dst + c].iter_mut().zip(&row[(ky * 3 + kx) * c..][..c]) {
                        *o = *o + v;
                    }
                }
            }
        }
    }
}

impl<S: Scalar> ConvDenoiser<S> {
    /// All parameters zero: predicts the uniform distribution.
    pub fn zeros(arch: ArchSpec) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        let params = vec![S::zero(); layout.total];
        Ok(Self { arch, layout, params })
    }

    /// He-style random init with a zero output head.
    pub fn init(arch: ArchSpec, rng: &mut RngStream) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let e = net.arch.time_dim;
        let blocks = net.arch.dilations.len().max(1) as f64;
        let lay = net.layout.clone();
        let mut fill = |params: &mut [S], start: usize, len: usize, std: f64| {
            for v in &mut params[start..start + len] {
                *v = S::cast_from(rng.next_normal() * std);
            }
        };
        fill(&mut net.params, lay.time_weight, e * e, libm::sqrt(1.0 / e as f64));
        for (i, conv) in lay.convs.iter().enumerate() {
            let fan_in = 9 * conv.input;
            let mut std = libm::sqrt(2.0 / fan_in as f64);
            if i > 0 {
                std /= libm::sqrt(blocks);
            }
            fill(&mut net.params, conv.weight, fan_in * conv.output, std);
            fill(&mut net.params, conv.proj, e * conv.output, libm::sqrt(1.0 / e as f64));
        }
        Ok(net)
    }

    pub fn from_params(arch: ArchSpec, params: Vec<S>) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        if params.len() != layout.total {
            return Err(config!(
                "parameter vector has {} entries, architecture needs {}",
                params.len(),
                layout.total
            ));
        }
        if let Some(i) = params.iter().position(|v| !v.is_finite()) {
            return Err(config!("parameter {i} is not finite"));
        }
        Ok(Self { arch, layout, params })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Same network in another precision.
    pub fn cast<T: Scalar>(&self) -> ConvDenoiser<T> {
        ConvDenoiser {
            arch: self.arch.clone(),
            layout: self.layout.clone(),
            params: self.params.iter().map(|v| T::cast_from(v.as_f64())).collect(),
        }
    }

    fn conv_bias(&self, conv: &ConvOffsets, time_act: &[S]) -> Vec<S> {
        let c = conv.output;
        let mut bias = self.params[conv.bias..conv.bias + c].to_vec();
        for (e, &g) in time_act.iter().enumerate() {
            let row = &self.params[conv.proj + e * c..][..c];
            for (b, &p) in bias.iter_mut().zip(row) {
                *b = *b + g * p;
            }
        }
        bias
    }

    /// `out = im2col(input) * W + bias` for one convolution.
    fn conv_forward(&self, conv: &ConvOffsets, cols: &[S], bias: &[S], out: &mut [S]) {
        let px = self.arch.height * self.arch.width;
        let c = conv.output;
        for row in out.chunks_exact_mut(c) {
            row.copy_from_slice(bias);
        }
        let k = 9 * conv.input;
        gemm(
            px,
            k,
            c,
            (cols, k, 1),
            (&self.params[conv.weight..conv.weight + k * c], c, 1),
            S::one(),
            (out, c, 1),
        );
    }

    /// Forward pass keeping the activations needed by [`ConvDenoiser::backward`].
    pub fn forward(&self, x_t: &CategoricalField, t: usize) -> Result<(CategoricalField, ForwardCache<S>)> {
        let (field, cache) = self.run(x_t, t, true)?;
        Ok((field, cache.expect("cache requested")))
    }

    fn run(&self, x_t: &CategoricalField, t: usize, keep: bool) -> Result<(CategoricalField, Option<ForwardCache<S>>)> {
        self.arch.check_input(x_t, t)?;
        let (h, w) = (self.arch.height, self.arch.width);
        let px = h * w;
        let ch = self.arch.channels;
        let e = self.arch.time_dim;
        let k = self.arch.classes;
        let lay = &self.layout;

        let emb: Vec<S> = time_embedding(t, e).into_iter().map(S::cast_from).collect();
        let mut time_pre = self.params[lay.time_bias..lay.time_bias + e].to_vec();
        for (i, &v) in emb.iter().enumerate() {
            for (o, p) in time_pre.iter_mut().enumerate() {
                *p = *p + v * self.params[lay.time_weight + i * e + o];
            }
        }
        let time_act: Vec<S> = time_pre.iter().map(|&v| silu(v)).collect();

        let input: Vec<S> = x_t.probs().iter().map(|&v| S::cast_from(v)).collect();
        let mut cols = Vec::with_capacity(if keep { lay.convs.len() } else { 0 });
        let mut block_inputs = Vec::with_capacity(if keep { lay.convs.len() - 1 } else { 0 });
        // im2col overwrites every entry.
        let mut scratch = Vec::new();
        let col_buffer = |scratch: &mut Vec<S>, len: usize| {
            if keep {
                vec![S::zero(); len]
            } else {
                let mut buf = core::mem::take(scratch);
                buf.resize(len, S::zero());
                buf
            }
        };

        let stem = &lay.convs[0];
        let mut stem_cols = col_buffer(&mut scratch, px * 9 * stem.input);
        im2col(&input, h, w, stem.input, stem.dilation, &mut stem_cols);
        let mut hidden = vec![S::zero(); px * ch];
        self.conv_forward(stem, &stem_cols, &self.conv_bias(stem, &time_act), &mut hidden);
        if keep {
            cols.push(stem_cols);
        } else {
            scratch = stem_cols;
        }

        let mut act = vec![S::zero(); px * ch];
        let mut branch = vec![S::zero(); px * ch];
        for conv in &lay.convs[1..] {
            for (a, &v) in act.iter_mut().zip(&hidden) {
                *a = silu(v);
            }
            let mut block_cols = col_buffer(&mut scratch, px * 9 * ch);
            im2col(&act, h, w, ch, conv.dilation, &mut block_cols);
            self.conv_forward(conv, &block_cols, &self.conv_bias(conv, &time_act), &mut branch);
            if keep {
                block_inputs.push(hidden.clone());
                cols.push(block_cols);
            } else {
                scratch = block_cols;
            }
            for (hv, &b) in hidden.iter_mut().zip(&branch) {
                *hv = *hv + b;
            }
        }

        let head_input: Vec<S> = hidden.iter().map(|&v| silu(v)).collect();
        let mut logits = vec![S::zero(); px * k];
        for row in logits.chunks_exact_mut(k) {
            row.copy_from_slice(&self.params[lay.head_bias..lay.head_bias + k]);
        }
        gemm(
            px,
            ch,
            k,
            (&head_input, ch, 1),
            (&self.params[lay.head_weight..lay.head_weight + ch * k], k, 1),
            S::one(),
            (&mut logits, k, 1),
        );

        let mut probs = Vec::with_capacity(px * k);
        for row in logits.chunks_exact(k) {
            let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
            let start = probs.len();
            let mut sum = 0.0;
            for v in row {
                let ex = libm::exp(v.as_f64() - max);
                sum += ex;
                probs.push(ex);
            }
            for p in &mut probs[start..] {
                *p /= sum;
            }
        }
        if !keep {
            return Ok((CategoricalField::from_probs(h, w, k, probs)?, None));
        }
        let field = CategoricalField::from_probs(h, w, k, probs.clone())?;
        let cache = ForwardCache {
            arch: self.arch.clone(),
            emb,
            time_pre,
            time_act,
            cols,
            block_inputs,
            hidden,
            head_input,
            probs,
        };
        Ok((field, Some(cache)))
    }

    /// Accumulates `d loss / d params` into `grads`, given `d loss / d probs`
    /// for the pass recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache<S>, grad_probs: &[f64], grads: &mut [S]) -> Result<()> {
        if cache.arch != self.arch {
            return Err(Error::Usage("forward cache belongs to a different network".into()));
        }
        if grads.len() != self.params.len() {
            return Err(Error::Usage(alloc::format!(
                "gradient buffer has {} entries, network has {}",
                grads.len(),
                self.params.len()
            )));
        }
        if grad_probs.len() != cache.probs.len() {
            return Err(domain!(
                "output gradient has {} entries, expected {}",
                grad_probs.len(),
                cache.probs.len()
            ));
        }
        let (h, w) = (self.arch.height, self.arch.width);
        let px = h * w;
        let ch = self.arch.channels;
        let e = self.arch.time_dim;
        let k = self.arch.classes;
        let lay = &self.layout;

        let mut dlogits = vec![S::zero(); px * k];
        for ((d, p), g) in dlogits
            .chunks_exact_mut(k)
            .zip(cache.probs.chunks_exact(k))
            .zip(grad_probs.chunks_exact(k))
        {
            let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
            for ((di, &pi), &gi) in d.iter_mut().zip(p).zip(g) {
                *di = S::cast_from(pi * (gi - dot));
            }
        }

        gemm(
            ch,
            px,
            k,
            (&cache.head_input, 1, ch),
            (&dlogits, k, 1),
            S::one(),
            (&mut grads[lay.head_weight..lay.head_weight + ch * k], k, 1),
        );
        for row in dlogits.chunks_exact(k) {
            for (g, &v) in grads[lay.head_bias..lay.head_bias + k].iter_mut().zip(row) {
                *g = *g + v;
            }
        }
        let mut dhidden = vec![S::zero(); px * ch];
        gemm(
            px,
            k,
            ch,
            (&dlogits, k, 1),
            (&self.params[lay.head_weight..lay.head_weight + ch * k], 1, k),
            S::zero(),
            (&mut dhidden, ch, 1),
        );
        for (d, &hv) in dhidden.iter_mut().zip(&cache.hidden) {
            *d = *d * silu_grad(hv);
        }

        let mut dtime = vec![S::zero(); e];
        let mut dcols = vec![S::zero(); px * 9 * ch];
        let mut dact = vec![S::zero(); px * ch];
        for (i, conv) in lay.convs.iter().enumerate().rev() {
            let fan_in = 9 * conv.input;
            let cols = &cache.cols[i];
            self.conv_param_grads(conv, cols, &dhidden, &cache.time_act, &mut dtime, grads);
            if i == 0 {
                break;
            }
            gemm(
                px,
                ch,
                fan_in,
                (&dhidden, ch, 1),
                (&self.params[conv.weight..conv.weight + fan_in * ch], 1, ch),
                S::zero(),
                (&mut dcols[..px * fan_in], fan_in, 1),
            );
            col2im(&dcols[..px * fan_in], h, w, ch, conv.dilation, &mut dact);
            for ((d, &da), &hin) in dhidden.iter_mut().zip(&dact).zip(&cache.block_inputs[i - 1]) {
                *d = *d + da * silu_grad(hin);
            }
        }

        for (o, d) in dtime.iter_mut().enumerate() {
            *d = *d * silu_grad(cache.time_pre[o]);
        }
        for (i, &v) in cache.emb.iter().enumerate() {
            for (o, &d) in dtime.iter().enumerate() {
                let g = &mut grads[lay.time_weight + i * e + o];
                *g = *g + v * d;
            }
        }
        for (g, &d) in grads[lay.time_bias..lay.time_bias + e].iter_mut().zip(&dtime) {
            *g = *g + d;
        }
        Ok(())
    }

    fn conv_param_grads(
        &self,
        conv: &ConvOffsets,
        cols: &[S],
        dout: &[S],
        time_act: &[S],
        dtime: &mut [S],
        grads: &mut [S],
    ) {
        let px = self.arch.height * self.arch.width;
        let c = conv.output;
        let fan_in = 9 * conv.input;
        gemm(
            fan_in,
            px,
            c,
            (cols, 1, fan_in),
            (dout, c, 1),
            S::one(),
            (&mut grads[conv.weight..conv.weight + fan_in * c], c, 1),
        );
        let mut dbias = vec![S::zero(); c];
        for row in dout.chunks_exact(c) {
            for (b, &v) in dbias.iter_mut().zip(row) {
                *b = *b + v;
            }
        }
        for (g, &b) in grads[conv.bias..conv.bias + c].iter_mut().zip(&dbias) {
            *g = *g + b;
        }
        for (ei, &gv) in time_act.iter().enumerate() {
            let row = conv.proj + ei * c;
            let mut acc = S::zero();
            for (j, &b) in dbias.iter().enumerate() {
                grads[row + j] = grads[row + j] + gv * b;
                acc = acc + self.params[row + j] * b;
            }
            dtime[ei] = dtime[ei] + acc;
        }
    }
}

impl<S: Scalar> Denoiser for ConvDenoiser<S> {
    fn classes(&self) -> usize {
        self.arch.classes
    }

    fn predict_x0(&self, x_t: &CategoricalField, t: usize) -> Result<CategoricalField> {
        self.run(x_t, t, false).map(|(field, _)| field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LabelMap;

    pub(crate) fn tiny_arch() -> ArchSpec {
        ArchSpec { height: 4, width: 4, classes: 3, steps: 20, channels: 4, time_dim: 4, dilations: vec![1, 2] }
    }

    fn random_input(rng: &mut RngStream, arch: &ArchSpec) -> CategoricalField {
        let labels = (0..arch.height * arch.width).map(|_| rng.next_usize(arch.classes) as u16).collect();
        LabelMap::new(arch.height, arch.width, arch.classes, labels).unwrap().one_hot()
    }

    #[test]
    fn inference_path_matches_training_forward() {
        let mut rng = RngStream::new(8);
        let mut net = ConvDenoiser::<f32>::init(tiny_arch(), &mut rng).unwrap();
        net.params_mut().iter_mut().for_each(|p| *p += 0.05);
        let x = random_input(&mut rng, &tiny_arch());
        let (trained, _) = net.forward(&x, 9).unwrap();
        assert_eq!(net.predict_x0(&x, 9).unwrap(), trained);
    }

    #[test]
    fn tiny_arch_fits_budget() {
        assert!(tiny_arch().param_count() <= 500, "{}", tiny_arch().param_count());
        let net = ConvDenoiser::<f64>::zeros(tiny_arch()).unwrap();
        assert_eq!(net.param_count(), tiny_arch().param_count());
    }

    #[test]
    fn zero_head_is_uniform() {
        let mut rng = RngStream::new(1);
        let net = ConvDenoiser::<f32>::init(ArchSpec::desk(8, 8, 5, 50), &mut rng).unwrap();
        let x = random_input(&mut rng, net.arch());
        let out = net.predict_x0(&x, 7).unwrap();
        assert!(out.probs().iter().all(|&p| p == 0.2));
    }

    #[test]
    fn forward_is_pure() {
        let mut rng = RngStream::new(2);
        let mut net = ConvDenoiser::<f32>::init(tiny_arch(), &mut rng).unwrap();
        for v in net.params_mut() {
            *v += rng.next_normal() as f32 * 0.1;
        }
        let x = random_input(&mut rng, net.arch());
        let a = net.predict_x0(&x, 3).unwrap();
        let b = net.predict_x0(&x, 3).unwrap();
        assert_eq!(a, b);
        a.validate(1e-9).unwrap();
    }

    #[test]
    fn rejects_wrong_shape_and_step() {
        let net = ConvDenoiser::<f32>::zeros(tiny_arch()).unwrap();
        let x = CategoricalField::uniform(5, 4, 3).unwrap();
        assert!(matches!(net.predict_x0(&x, 1), Err(Error::Domain(_))));
        let x = CategoricalField::uniform(4, 4, 3).unwrap();
        assert!(net.predict_x0(&x, 0).is_err());
        assert!(net.predict_x0(&x, 21).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = RngStream::new(3);
        let net = ConvDenoiser::<f64>::init(tiny_arch(), &mut rng).unwrap();
        let x = random_input(&mut rng, net.arch());
        let (_, cache) = net.forward(&x, 5).unwrap();
        let mut grads = vec![0.0; net.param_count()];
        net.backward(&cache, &vec![0.0; 48], &mut grads).unwrap();
        assert!(grads.iter().all(|&g| g == 0.0));
        // A loss that ignores the output: constant upstream gradient on every
        // class projects to zero through the softmax.
        net.backward(&cache, &vec![1.0; 48], &mut grads).unwrap();
        assert!(grads.iter().all(|&g| g.abs() < 1e-12));
    }

    #[test]
    fn backward_rejects_foreign_cache() {
        let mut rng = RngStream::new(4);
        let a = ConvDenoiser::<f64>::init(tiny_arch(), &mut rng).unwrap();
        let mut other = tiny_arch();
        other.channels = 3;
        let b = ConvDenoiser::<f64>::init(other, &mut rng).unwrap();
        let x = random_input(&mut rng, a.arch());
        let (_, cache) = a.forward(&x, 2).unwrap();
        let mut grads = vec![0.0; b.param_count()];
        assert!(matches!(b.backward(&cache, &vec![0.0; 48], &mut grads), Err(Error::Usage(_))));
    }

    /// Central differences of `sum_i c_i * probs_i` against the analytic gradient.
    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(5);
        let mut net = ConvDenoiser::<f64>::init(tiny_arch(), &mut rng).unwrap();
        for v in net.params_mut() {
            *v += rng.next_normal() * 0.3;
        }
        let x = random_input(&mut rng, net.arch());
        let t = 7;
        let weights: Vec<f64> = (0..48).map(|_| rng.next_normal()).collect();
        let loss = |n: &ConvDenoiser<f64>| -> f64 {
            let (f, _) = n.forward(&x, t).unwrap();
            f.probs().iter().zip(&weights).map(|(p, c)| p * c).sum()
        };
        let (_, cache) = net.forward(&x, t).unwrap();
        let mut grads = vec![0.0; net.param_count()];
        net.backward(&cache, &weights, &mut grads).unwrap();
        let h = 1e-4;
        let mut worst = 0.0f64;
        for i in 0..net.param_count() {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + h;
            let up = loss(&net);
            net.params_mut()[i] = orig - h;
            let down = loss(&net);
            net.params_mut()[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let err = (fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(1e-6);
            worst = worst.max(err);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
