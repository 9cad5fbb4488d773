//! SPNT binary checkpoints.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! "SPNT"  u32 version
//! u8 schedule kind (0 cosine, 1 linear)  u32 steps  f64 param_a  f64 param_b
//! u32 height  u32 width  u32 classes  u32 channels  u32 time_dim
//! u32 layer count, then per layer: u8 tag  u32 input  u32 output  u32 kernel  u32 dilation  u32 time_dim
//! u64 parameter count, then that many f32
//! ```
//!
//! The layer table is checked against the one rebuilt from the header on load.

use std::path::Path;

use sepaint_core::denoiser::{ArchSpec, ConvDenoiser, LayerSpec};
use sepaint_core::{NoiseSchedule, ScheduleKind};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPNT";
pub const VERSION: u32 = 1;

/// A trained network together with the schedule it was trained under.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub network: ConvDenoiser<f32>,
    pub schedule: NoiseSchedule,
}

impl Checkpoint {
    pub fn new(network: ConvDenoiser<f32>, schedule: NoiseSchedule) -> Result<Self> {
        if network.arch().steps != schedule.steps() {
            return Err(Error::Usage(format!(
                "network conditioned on {} steps but schedule has {}",
                network.arch().steps,
                schedule.steps()
            )));
        }
        Ok(Self { network, schedule })
    }
}

fn layer_fields(layer: &LayerSpec) -> (u8, [usize; 5]) {
    match *layer {
        LayerSpec::TimeMlp { dim } => (0, [dim, dim, 1, 1, 0]),
        LayerSpec::Conv { input, output, kernel, dilation, time_dim } => (1, [input, output, kernel, dilation, time_dim]),
        LayerSpec::Head { input, output } => (2, [input, output, 1, 1, 0]),
    }
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Usage(format!("{what} {v} does not fit a checkpoint")))
}

pub fn encode(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let arch = ckpt.network.arch();
    let params = ckpt.network.params();
    let mut out = Vec::with_capacity(64 + 4 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let (tag, a, b) = match ckpt.schedule.kind() {
        ScheduleKind::Cosine { offset } => (0u8, offset, 0.0),
        ScheduleKind::Linear { beta_start, beta_end } => (1u8, beta_start, beta_end),
    };
    out.push(tag);
    out.extend_from_slice(&u32_of(ckpt.schedule.steps(), "step count")?.to_le_bytes());
    out.extend_from_slice(&a.to_le_bytes());
    out.extend_from_slice(&b.to_le_bytes());
    for (v, what) in [
        (arch.height, "height"),
        (arch.width, "width"),
        (arch.classes, "class count"),
        (arch.channels, "channel count"),
        (arch.time_dim, "time dimension"),
    ] {
        out.extend_from_slice(&u32_of(v, what)?.to_le_bytes());
    }
    let layers = arch.layers();
    out.extend_from_slice(&u32_of(layers.len(), "layer count")?.to_le_bytes());
    for layer in &layers {
        let (tag, fields) = layer_fields(layer);
        out.push(tag);
        for f in fields {
            out.extend_from_slice(&u32_of(f, "layer field")?.to_le_bytes());
        }
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos.checked_add(N).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::format(self.pos, format!("truncated {what}")));
        };
        let out = self.bytes[self.pos..end].try_into().expect("length checked");
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take::<1>(what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        Ok(self.u32(what)? as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>("magic")? != MAGIC {
        return Err(Error::format(0, "not an SPNT checkpoint"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported checkpoint version {version}, expected {VERSION}")));
    }
    let kind_at = r.pos;
    let kind_tag = r.u8("schedule kind")?;
    let steps_at = r.pos;
    let steps = r.usize("step count")?;
    let a = r.f64("schedule parameter")?;
    let b = r.f64("schedule parameter")?;
    let kind = match kind_tag {
        0 => ScheduleKind::Cosine { offset: a },
        1 => ScheduleKind::Linear { beta_start: a, beta_end: b },
        other => return Err(Error::format(kind_at, format!("unknown schedule kind {other}"))),
    };
    let schedule =
        NoiseSchedule::from_kind(kind, steps).map_err(|e| Error::format(steps_at, format!("bad schedule: {e}")))?;

    let arch_at = r.pos;
    let height = r.usize("height")?;
    let width = r.usize("width")?;
    let classes = r.usize("class count")?;
    let channels = r.usize("channel count")?;
    let time_dim = r.usize("time dimension")?;
    let count_at = r.pos;
    let layer_count = r.usize("layer count")?;
    if !(3..=1 << 16).contains(&layer_count) {
        return Err(Error::format(count_at, format!("implausible layer count {layer_count}")));
    }
    let mut table = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let at = r.pos;
        let tag = r.u8("layer tag")?;
        let mut fields = [0usize; 5];
        for f in &mut fields {
            *f = r.usize("layer field")?;
        }
        table.push((at, tag, fields));
    }
    // Blocks are the conv layers after the stem.
    let dilations: Vec<usize> = table[2..layer_count - 1].iter().map(|(_, _, f)| f[3]).collect();
    let arch = ArchSpec { height, width, classes, steps, channels, time_dim, dilations };
    arch.validate().map_err(|e| Error::format(arch_at, format!("bad network header: {e}")))?;
    for ((at, tag, fields), expected) in table.iter().zip(arch.layers()) {
        if (*tag, *fields) != layer_fields(&expected) {
            return Err(Error::format(*at, format!("layer table entry does not match header, expected {expected:?}")));
        }
    }

    let params_at = r.pos;
    let n = u64::from_le_bytes(r.take("parameter count")?);
    let expected = arch.param_count() as u64;
    if n != expected {
        return Err(Error::format(params_at, format!("{n} parameters, layer table needs {expected}")));
    }
    let body = &bytes[r.pos..];
    if body.len() as u64 != 4 * n {
        return Err(Error::format(r.pos, format!("{} parameter bytes, expected {}", body.len(), 4 * n)));
    }
    let params = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    let network = ConvDenoiser::from_params(arch, params)
        .map_err(|e| Error::format(r.pos, format!("bad parameters: {e}")))?;
    Checkpoint::new(network, schedule)
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode(ckpt)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| e.at(path))
}
