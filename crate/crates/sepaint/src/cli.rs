//! The `sepaint` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sepaint_core::baselines::{complete, BaselineMethod};
use sepaint_core::denoiser::ArchSpec;
use sepaint_core::inpaint::{generate, multi_sample, InpaintConfig, Strategy};
use sepaint_core::maskgen::{self, MaskFamily};
use sepaint_core::metrics::{evaluate, EvalReport, Region};
use sepaint_core::trainer::{Optimizer, TrainConfig, Trainer};
use sepaint_core::{LabelMap, Mask, RngStream, ScheduleKind};

use crate::config;
use crate::dataio::{self, checkpoint, render, smap, Checkpoint, SynthSpec};
use crate::error::{Error, Result};
use crate::experiment::{format_table, Comparison, Method};
use crate::manifest::{Manifest, VERSION};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SEPAINT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "sepaint", version = VERSION, about = "Categorical diffusion inpainting for semantic label maps")]
struct Cli {
    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "sepaint-out")]
    out_dir: PathBuf,
    /// key = value file pre-filling the subcommand's flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic streetscape dataset.
    Synth(SynthArgs),
    /// Train a denoiser on a directory of maps.
    Train(TrainArgs),
    /// Draw unconditional samples from a trained model.
    Sample(SampleArgs),
    /// Complete the unknown pixels of a map.
    Inpaint(InpaintArgs),
    /// Generate observation masks.
    Maskgen(MaskgenArgs),
    /// Complete a map with an interpolation baseline.
    Baseline(BaselineArgs),
    /// Score a prediction against ground truth.
    Eval(EvalArgs),
    /// Compare look-back and sequential conditioning over mask families.
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6.0)]
    building_density: f64,
    #[arg(long, default_value_t = 1.5)]
    vehicle_rate: f64,
    /// Also write a PNG per map.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    png: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// Adam, lr 2e-3, gradient clipping at 1.
    Desk,
    /// SGD with momentum, lr 1e-4, T = 4000.
    Paper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleName {
    Cosine,
    Linear,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OptimizerName {
    Adam,
    Sgd,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct TrainArgs {
    /// Directory of .smap training maps.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Diffusion steps T.
    #[arg(long)]
    diffusion_steps: Option<usize>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleName>,
    #[arg(long, default_value_t = sepaint_core::schedule::COSINE_OFFSET)]
    cosine_offset: f64,
    #[arg(long, default_value_t = 1e-4)]
    beta_start: f64,
    #[arg(long, default_value_t = 0.02)]
    beta_end: f64,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerName>,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Global gradient norm limit; 0 disables clipping.
    #[arg(long)]
    grad_clip: Option<f64>,
    #[arg(long, action = ArgAction::Set)]
    flip: Option<bool>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    channels: usize,
    #[arg(long, default_value_t = 32)]
    time_dim: usize,
    /// Comma-separated dilation per residual block.
    #[arg(long, default_value = "1,2,4,8", value_delimiter = ',')]
    dilations: Vec<usize>,
    /// Rewrite the checkpoint every this many steps (0 = only at the end).
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    /// Progress line interval on stderr.
    #[arg(long, default_value_t = 100)]
    log_every: usize,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    png: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyName {
    Lb,
    Seq,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegionName {
    Missing,
    Full,
}

impl From<RegionName> for Region {
    fn from(r: RegionName) -> Self {
        match r {
            RegionName::Missing => Region::Missing,
            RegionName::Full => Region::Full,
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct InpaintArgs {
    #[arg(long)]
    model: PathBuf,
    /// Observed map; only pixels known under the mask are read.
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum, default_value = "lb")]
    strategy: StrategyName,
    /// Number of completions S.
    #[arg(long, default_value_t = 1)]
    samples: usize,
    /// Look-backs per step r.
    #[arg(long, default_value_t = 1)]
    lookbacks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    paste_known: bool,
    /// Ground truth to score against.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "missing")]
    region: RegionName,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    png: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyName {
    Rect,
    Half,
    Speckle,
    Strokes,
    Coverage,
}

impl FamilyName {
    fn family(self) -> MaskFamily {
        match self {
            FamilyName::Rect => MaskFamily::RECT,
            FamilyName::Half => MaskFamily::HALF,
            FamilyName::Speckle => MaskFamily::SPECKLE,
            FamilyName::Strokes => MaskFamily::STROKES,
            FamilyName::Coverage => MaskFamily::COVERAGE,
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MaskgenArgs {
    #[arg(long, value_enum, default_value = "rect")]
    family: FamilyName,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    /// Take the shape from this map instead of --height/--width.
    #[arg(long)]
    like: Option<PathBuf>,
    /// Known-pixel probability for speckle masks.
    #[arg(long)]
    known_rate: Option<f64>,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaselineName {
    Nearest,
    Linear,
    Cubic,
}

impl From<BaselineName> for BaselineMethod {
    fn from(b: BaselineName) -> Self {
        match b {
            BaselineName::Nearest => BaselineMethod::Nearest,
            BaselineName::Linear => BaselineMethod::Linear,
            BaselineName::Cubic => BaselineMethod::Cubic,
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BaselineArgs {
    #[arg(long, value_enum, default_value = "nearest")]
    method: BaselineName,
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "missing")]
    region: RegionName,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    png: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Required for the missing region; without it every pixel counts.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "missing")]
    region: RegionName,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct AblateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Held-out maps; synthesized from --data-seed when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 999)]
    data_seed: u64,
    /// Maps to use.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, value_enum, default_value = "rect,speckle", value_delimiter = ',')]
    families: Vec<FamilyName>,
    /// Replicates; replicate i uses seed base + i.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    lookbacks: usize,
    #[arg(long, value_enum, default_value = "missing")]
    region: RegionName,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    paste_known: bool,
    /// Add nearest, linear and cubic rows.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    baselines: bool,
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match try_run(&argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn try_run(argv: &[OsString]) -> Result<i32> {
    let argv = match config::find_config_flag(argv) {
        Some(path) => {
            let entries = config::load(Path::new(&path))?;
            config::splice(argv, &["--out-dir", "--config"], &entries)
        }
        None => argv.to_vec(),
    };
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return Ok(code);
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Error::Usage(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let settings = resolved(sub);
    let out = &cli.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let seed = match &cli.command {
        Command::Synth(a) => Some(a.seed),
        Command::Train(a) => Some(a.seed),
        Command::Sample(a) => Some(a.seed),
        Command::Inpaint(a) => Some(a.seed),
        Command::Maskgen(a) => Some(a.seed),
        Command::Ablate(a) => Some(a.seed),
        Command::Baseline(_) | Command::Eval(_) => None,
    };
    Manifest::new(name, seed, settings).write(out)?;
    match cli.command {
        Command::Synth(a) => synth_cmd(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Sample(a) => sample_cmd(a, out),
        Command::Inpaint(a) => inpaint_cmd(a, out),
        Command::Maskgen(a) => maskgen_cmd(a, out),
        Command::Baseline(a) => baseline_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Ablate(a) => ablate_cmd(a, out),
    }?;
    Ok(0)
}

/// Every flag value of a subcommand as given or defaulted; output location excluded.
fn resolved(sub: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for id in sub.ids() {
        let id = id.as_str();
        if id == "out_dir" || id == "config" {
            continue;
        }
        if let Ok(Some(values)) = sub.try_get_raw(id) {
            let joined: Vec<String> = values.map(|v| v.to_string_lossy().into_owned()).collect();
            out.insert(id.replace('_', "-"), joined.join(","));
        }
    }
    out
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn report_json(r: &EvalReport) -> serde_json::Value {
    json!({
        "region": r.region.name(),
        "miou": round2(r.miou_percent()),
        "accuracy": round2(r.accuracy_percent()),
        "evaluated_pixels": r.evaluated,
        "per_class_iou": r.per_class_iou.iter().map(|v| v.map(|x| round2(100.0 * x))).collect::<Vec<_>>(),
    })
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn metrics_table(r: &EvalReport) -> String {
    format!("{:<8} {:>7} {:>7}\n{:<8} {:>7.2} {:>7.2}\n", "region", "mIoU", "Acc", r.region.name(), r.miou_percent(), r.accuracy_percent())
}

fn synth_cmd(a: SynthArgs, out: &Path) -> Result<()> {
    let spec = SynthSpec {
        count: a.count,
        height: a.height,
        width: a.width,
        seed: a.seed,
        building_density: a.building_density,
        vehicle_rate: a.vehicle_rate,
        ..SynthSpec::default()
    };
    let maps = dataio::synth(&spec)?;
    dataio::write_dataset(out, &maps)?;
    if a.png {
        for (i, map) in maps.iter().enumerate() {
            render::render_png(&dataio::numbered(out, "map", i, "png"), map, None, 8)?;
        }
    }
    eprintln!("wrote {} maps to {}", maps.len(), out.display());
    Ok(())
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match a.preset {
        Preset::Desk => TrainConfig::desk(),
        Preset::Paper => TrainConfig::full_scale(),
    };
    if let Some(v) = a.steps {
        cfg.steps = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.diffusion_steps {
        cfg.diffusion_steps = v;
    }
    cfg.schedule = match (a.schedule, cfg.schedule) {
        (Some(ScheduleName::Linear), _) => ScheduleKind::Linear { beta_start: a.beta_start, beta_end: a.beta_end },
        (Some(ScheduleName::Cosine), _) | (None, ScheduleKind::Cosine { .. }) => ScheduleKind::Cosine { offset: a.cosine_offset },
        (None, kind) => kind,
    };
    match a.optimizer {
        Some(OptimizerName::Adam) => cfg.optimizer = Optimizer::adam(),
        Some(OptimizerName::Sgd) => cfg.optimizer = Optimizer::SgdMomentum { momentum: a.momentum },
        None => {
            if let Optimizer::SgdMomentum { .. } = cfg.optimizer {
                cfg.optimizer = Optimizer::SgdMomentum { momentum: a.momentum };
            }
        }
    }
    if let Some(v) = a.grad_clip {
        cfg.grad_clip = (v > 0.0).then_some(v);
    }
    if let Some(v) = a.flip {
        cfg.flip_augment = v;
    }
    cfg.seed = a.seed;
    cfg.checkpoint_every = a.checkpoint_every;
    cfg.validate()?;
    Ok(cfg)
}

fn train_cmd(a: TrainArgs, out: &Path) -> Result<()> {
    let cfg = train_config(&a)?;
    let maps = dataio::read_dataset(&a.data)?;
    let first = &maps[0];
    if let Some(bad) = maps.iter().position(|m| !m.same_shape(first) || m.classes() != first.classes()) {
        return Err(sepaint_core::Error::Domain(format!("map {bad} differs in shape or class count from map 0")).into());
    }
    let arch = ArchSpec {
        height: first.height(),
        width: first.width(),
        classes: first.classes(),
        steps: cfg.diffusion_steps,
        channels: a.channels,
        time_dim: a.time_dim,
        dilations: a.dilations.clone(),
    };
    let mut trainer = Trainer::<f32>::new(cfg.clone(), arch, maps)?;
    let model_path = out.join("model.spnt");
    let log_path = out.join("train_log.csv");
    let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?);
    let io = |e| Error::io(&log_path, e);
    writeln!(log, "step,loss,wall_time").map_err(io)?;
    let start = Instant::now();
    for _ in 0..cfg.steps {
        let report = trainer.step()?;
        let elapsed = start.elapsed().as_secs_f64();
        writeln!(log, "{},{:e},{:.3}", report.step, report.loss, elapsed).map_err(io)?;
        if a.log_every > 0 && report.step % a.log_every == 0 {
            eprintln!("step {} loss {:.5} ({elapsed:.1}s)", report.step, report.loss);
        }
        if cfg.checkpoint_every > 0 && report.step % cfg.checkpoint_every == 0 {
            let ckpt = Checkpoint::new(trainer.network().clone(), trainer.schedule().clone())?;
            checkpoint::save(&model_path, &ckpt)?;
        }
    }
    log.flush().map_err(io)?;
    let ckpt = Checkpoint::new(trainer.network().clone(), trainer.schedule().clone())?;
    checkpoint::save(&model_path, &ckpt)?;
    eprintln!("wrote {}", model_path.display());
    Ok(())
}

fn sample_cmd(a: SampleArgs, out: &Path) -> Result<()> {
    let ckpt = checkpoint::load(&a.model)?;
    let arch = ckpt.network.arch().clone();
    let mut rng = RngStream::new(a.seed);
    for i in 0..a.count {
        let map = generate(&ckpt.network, arch.height, arch.width, &ckpt.schedule, &mut rng)?;
        smap::write_smap(&dataio::numbered(out, "sample", i, "smap"), &map)?;
        if a.png {
            render::render_png(&dataio::numbered(out, "sample", i, "png"), &map, None, 8)?;
        }
        eprintln!("sample {}/{}", i + 1, a.count);
    }
    Ok(())
}

fn inpaint_cmd(a: InpaintArgs, out: &Path) -> Result<()> {
    let ckpt = checkpoint::load(&a.model)?;
    let y0 = smap::read_smap(&a.map)?;
    let mask = smap::read_smask(&a.mask)?;
    let truth = a.truth.as_deref().map(smap::read_smap).transpose()?;
    let strategy = match a.strategy {
        StrategyName::Lb => Strategy::LookBack,
        StrategyName::Seq => Strategy::Sequential,
    };
    let config = InpaintConfig { strategy, lookbacks: a.lookbacks, samples: a.samples, paste_known: a.paste_known, seed: a.seed };
    let start = Instant::now();
    let result = multi_sample(&ckpt.network, &y0, &mask, &ckpt.schedule, &config)?;
    let elapsed = start.elapsed().as_secs_f64();

    for (i, sample) in result.samples.iter().enumerate() {
        let path = if i == 0 { out.join("inpaint.smap") } else { dataio::numbered(out, "inpaint", i, "smap") };
        smap::write_smap(&path, sample)?;
    }
    if a.png {
        render::render_png(&out.join("inpaint.png"), &result.samples[0], None, 8)?;
        render::render_png(&out.join("observed.png"), &y0, Some(&mask), 8)?;
        if a.samples > 1 {
            render::render_uncertainty_png(&out.join("uncertainty.png"), &result.uncertainty, 8)?;
        }
    }
    let metrics = match &truth {
        Some(gt) => {
            let reports = result
                .samples
                .iter()
                .map(|s| evaluate(s, gt, &mask, a.region.into()))
                .collect::<sepaint_core::Result<Vec<_>>>()?;
            print!("{}", metrics_table(&reports[0]));
            Some(reports.iter().map(report_json).collect::<Vec<_>>())
        }
        None => None,
    };
    let sidecar = json!({
        "seed": a.seed,
        "strategy": strategy.name(),
        "lookbacks": if strategy == Strategy::LookBack { a.lookbacks } else { 0 },
        "samples": a.samples,
        "paste_known": a.paste_known,
        "diffusion_steps": ckpt.schedule.steps(),
        "seconds": elapsed,
        "seconds_per_sample": elapsed / a.samples as f64,
        "uncertainty_unknown": result.uncertainty.mean_where(&mask, |k| !k),
        "uncertainty_known": result.uncertainty.mean_where(&mask, |k| k),
        "metrics": metrics,
    });
    write_json(&out.join("inpaint.json"), &sidecar)?;
    eprintln!("inpainted {} sample(s) in {elapsed:.2}s", a.samples);
    Ok(())
}

fn maskgen_cmd(a: MaskgenArgs, out: &Path) -> Result<()> {
    let (h, w) = match &a.like {
        Some(p) => {
            let m = smap::read_smap(p)?;
            (m.height(), m.width())
        }
        None => (a.height, a.width),
    };
    let family = match (a.family, a.known_rate) {
        (FamilyName::Speckle, Some(rate)) => MaskFamily::Speckle { known_rate: rate },
        (_, Some(_)) => return Err(Error::Usage("--known-rate applies only to --family speckle".into())),
        (f, None) => f.family(),
    };
    let masks = maskgen::generate_many(family, a.seed, a.count, h, w)?;
    for (i, mask) in masks.iter().enumerate() {
        smap::write_smask(&dataio::numbered(out, "mask", i, "smask"), mask)?;
    }
    eprintln!("wrote {} {} mask(s)", masks.len(), family.name());
    Ok(())
}

fn baseline_cmd(a: BaselineArgs, out: &Path) -> Result<()> {
    let y0 = smap::read_smap(&a.map)?;
    let mask = smap::read_smask(&a.mask)?;
    let method: BaselineMethod = a.method.into();
    let pred = complete(method, &y0, &mask)?;
    smap::write_smap(&out.join("baseline.smap"), &pred)?;
    if a.png {
        render::render_png(&out.join("baseline.png"), &pred, None, 8)?;
    }
    let metrics = match &a.truth {
        Some(p) => {
            let r = evaluate(&pred, &smap::read_smap(p)?, &mask, a.region.into())?;
            print!("{}", metrics_table(&r));
            Some(report_json(&r))
        }
        None => None,
    };
    write_json(&out.join("baseline.json"), &json!({ "method": method.name(), "metrics": metrics }))
}

fn eval_cmd(a: EvalArgs, out: &Path) -> Result<()> {
    let pred = smap::read_smap(&a.pred)?;
    let truth = smap::read_smap(&a.truth)?;
    let (mask, region) = match &a.mask {
        Some(p) => (smap::read_smask(p)?, a.region.into()),
        None => (Mask::all_unknown(truth.height(), truth.width()), Region::Full),
    };
    let r = evaluate(&pred, &truth, &mask, region)?;
    print!("{}", metrics_table(&r));
    write_json(&out.join("eval.json"), &report_json(&r))
}

fn ablate_maps(a: &AblateArgs) -> Result<Vec<LabelMap>> {
    let mut maps = match &a.data {
        Some(dir) => dataio::read_dataset(dir)?,
        None => dataio::synth(&SynthSpec { count: a.count, seed: a.data_seed, ..SynthSpec::default() })?,
    };
    maps.truncate(a.count);
    Ok(maps)
}

fn ablate_cmd(a: AblateArgs, out: &Path) -> Result<()> {
    let ckpt = checkpoint::load(&a.model)?;
    let maps = ablate_maps(&a)?;
    if a.seeds == 0 || maps.is_empty() {
        return Err(Error::Usage("ablate needs at least one seed and one map".into()));
    }
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed.wrapping_add(i)).collect();
    let mut methods = vec![Method::LbCon { lookbacks: a.lookbacks }, Method::SeqCon];
    if a.baselines {
        methods.extend([BaselineMethod::Nearest, BaselineMethod::Linear, BaselineMethod::Cubic].map(Method::Baseline));
    }
    let cmp = Comparison { denoiser: &ckpt.network, schedule: &ckpt.schedule, region: a.region.into(), paste_known: a.paste_known };
    let mut scores = Vec::new();
    let mut families = Vec::new();
    for f in &a.families {
        let family = f.family();
        families.push(family.name().to_string());
        let start = Instant::now();
        scores.extend(cmp.run(&maps, family, &seeds, &methods, |done, total| {
            if done % 20 == 0 || done == total {
                eprintln!("{}: {done}/{total} ({:.0}s)", family.name(), start.elapsed().as_secs_f64());
            }
        })?);
    }
    let labels: Vec<&str> = methods.iter().map(Method::label).collect();
    print!("{}", format_table(&families, &labels, &scores));
    write_json(&out.join("ablate.json"), &json!({ "region": Region::from(a.region).name(), "scores": scores }))
}
