//! Method comparisons over held-out maps, shared by `ablate` and the acceptance run.

use sepaint_core::baselines::{complete, BaselineMethod};
use sepaint_core::denoiser::Denoiser;
use sepaint_core::inpaint::{inpaint, InpaintConfig, Strategy};
use sepaint_core::maskgen::{generate, MaskFamily, MaskSpec};
use sepaint_core::metrics::{evaluate, mean_percent, Region};
use sepaint_core::{LabelMap, NoiseSchedule, Result, RngStream};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LbCon { lookbacks: usize },
    SeqCon,
    Baseline(BaselineMethod),
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::LbCon { .. } => "LB-Con",
            Method::SeqCon => "Seq-Con",
            Method::Baseline(BaselineMethod::Nearest) => "Nearest",
            Method::Baseline(BaselineMethod::Linear) => "Linear",
            Method::Baseline(BaselineMethod::Cubic) => "Cubic",
        }
    }

    pub fn is_diffusion(&self) -> bool {
        !matches!(self, Method::Baseline(_))
    }
}

/// Mean scores of one method on one mask family, in percent.
#[derive(Debug, Clone, Serialize)]
pub struct Score {
    pub method: String,
    pub family: String,
    pub miou: f64,
    pub accuracy: f64,
    /// `(mIoU, Acc)` per seed, each averaged over maps.
    pub per_seed: Vec<(f64, f64)>,
}

/// Mask seed and sampling seed for map `index` under replicate `seed`.
pub fn trial_seeds(seed: u64, index: usize) -> (u64, u64) {
    let mut rng = RngStream::new(seed).fork(index as u64);
    (rng.next_u64(), rng.next_u64())
}

pub struct Comparison<'a, D> {
    pub denoiser: &'a D,
    pub schedule: &'a NoiseSchedule,
    pub region: Region,
    pub paste_known: bool,
}

impl<D: Denoiser> Comparison<'_, D> {
    /// Scores every method on every map under every seed. `progress` sees
    /// `(finished, total)` completions.
    pub fn run(
        &self,
        maps: &[LabelMap],
        family: MaskFamily,
        seeds: &[u64],
        methods: &[Method],
        mut progress: impl FnMut(usize, usize),
    ) -> Result<Vec<Score>> {
        let total = maps.len() * seeds.len() * methods.len();
        let mut done = 0;
        let mut per_seed = vec![Vec::with_capacity(seeds.len()); methods.len()];
        for &seed in seeds {
            let mut reports = vec![Vec::with_capacity(maps.len()); methods.len()];
            for (i, gt) in maps.iter().enumerate() {
                let (mask_seed, sample_seed) = trial_seeds(seed, i);
                let mask = generate(&MaskSpec::new(family, mask_seed), gt.height(), gt.width())?;
                for (m, method) in methods.iter().enumerate() {
                    let pred = match *method {
                        Method::Baseline(b) => complete(b, gt, &mask)?,
                        Method::LbCon { lookbacks } => self.sample(gt, &mask, Strategy::LookBack, lookbacks, sample_seed)?,
                        Method::SeqCon => self.sample(gt, &mask, Strategy::Sequential, 0, sample_seed)?,
                    };
                    reports[m].push(evaluate(&pred, gt, &mask, self.region)?);
                    done += 1;
                    progress(done, total);
                }
            }
            for (m, r) in reports.iter().enumerate() {
                per_seed[m].push(mean_percent(r));
            }
        }
        Ok(methods
            .iter()
            .zip(per_seed)
            .map(|(method, per_seed)| {
                let n = per_seed.len().max(1) as f64;
                Score {
                    method: method.label().into(),
                    family: family.name().into(),
                    miou: per_seed.iter().map(|s| s.0).sum::<f64>() / n,
                    accuracy: per_seed.iter().map(|s| s.1).sum::<f64>() / n,
                    per_seed,
                }
            })
            .collect())
    }

    fn sample(&self, gt: &LabelMap, mask: &sepaint_core::Mask, strategy: Strategy, lookbacks: usize, seed: u64) -> Result<LabelMap> {
        let config = InpaintConfig { strategy, lookbacks, samples: 1, paste_known: self.paste_known, seed };
        inpaint(self.denoiser, gt, mask, self.schedule, &config)
    }
}

/// Table with metric blocks as rows and families as columns.
pub fn format_table(families: &[String], methods: &[&str], scores: &[Score]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<5} {:<8}", "", ""));
    for f in families {
        out.push_str(&format!(" {f:>9}"));
    }
    out.push('\n');
    for (metric, pick) in [("mIoU", 0usize), ("Acc", 1)] {
        for (row, method) in methods.iter().enumerate() {
            let label = if row == 0 { metric } else { "" };
            out.push_str(&format!("{label:<5} {method:<8}"));
            for f in families {
                match scores.iter().find(|s| &s.family == f && s.method == *method) {
                    Some(s) => out.push_str(&format!(" {:>9.2}", if pick == 0 { s.miou } else { s.accuracy })),
                    None => out.push_str(&format!(" {:>9}", "-")),
                }
            }
            out.push('\n');
        }
    }
    out
}
