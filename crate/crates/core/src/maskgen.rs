//! Deterministic mask generators. Every family is a pure function of
//! `(spec, height, width)`.

use crate::error::{config, Result};
use crate::field::Mask;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskFamily {
    /// `count` axis-aligned unknown rectangles with sides in `min_size..=max_size`.
    Rect { count: usize, min_size: usize, max_size: usize },
    /// One half unknown; a random side when `None`.
    Half { side: Option<Side> },
    /// Each pixel known independently with probability `known_rate`.
    Speckle { known_rate: f64 },
    /// `count` unknown polylines of `segments` segments, `radius` thick.
    Strokes { count: usize, segments: usize, radius: usize },
    /// Known disks of `radius` along a random walk of `steps` moves.
    Coverage { steps: usize, radius: usize },
}

impl MaskFamily {
    /// Roughly 30% unknown on 32x32 maps.
    pub const RECT: MaskFamily = MaskFamily::Rect { count: 4, min_size: 6, max_size: 12 };
    /// Sparse, LiDAR-like observation.
    pub const SPECKLE: MaskFamily = MaskFamily::Speckle { known_rate: 0.05 };
    pub const STROKES: MaskFamily = MaskFamily::Strokes { count: 3, segments: 3, radius: 1 };
    pub const COVERAGE: MaskFamily = MaskFamily::Coverage { steps: 12, radius: 4 };
    pub const HALF: MaskFamily = MaskFamily::Half { side: None };

    pub fn name(&self) -> &'static str {
        match self {
            MaskFamily::Rect { .. } => "rect",
            MaskFamily::Half { .. } => "half",
            MaskFamily::Speckle { .. } => "speckle",
            MaskFamily::Strokes { .. } => "strokes",
            MaskFamily::Coverage { .. } => "coverage",
        }
    }

    /// Default parameters for a family name.
    pub fn by_name(name: &str) -> Option<MaskFamily> {
        match name {
            "rect" => Some(Self::RECT),
            "half" => Some(Self::HALF),
            "speckle" => Some(Self::SPECKLE),
            "strokes" => Some(Self::STROKES),
            "coverage" => Some(Self::COVERAGE),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MaskFamily::Rect { min_size, max_size, .. } if min_size == 0 || min_size > max_size => {
                Err(config!("rectangle sizes must satisfy 0 < min <= max"))
            }
            MaskFamily::Speckle { known_rate } if !(0.0..=1.0).contains(&known_rate) => {
                Err(config!("known rate must lie in [0, 1], got {known_rate}"))
            }
            MaskFamily::Strokes { segments: 0, .. } => Err(config!("strokes need at least one segment")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub family: MaskFamily,
    pub seed: u64,
}

impl MaskSpec {
    pub fn new(family: MaskFamily, seed: u64) -> Self {
        Self { family, seed }
    }
}

pub fn generate(spec: &MaskSpec, height: usize, width: usize) -> Result<Mask> {
    spec.family.validate()?;
    if height == 0 || width == 0 {
        return Err(config!("mask must be nonempty"));
    }
    let mut rng = RngStream::new(spec.seed);
    let (h, w) = (height, width);
    let mask = match spec.family {
        MaskFamily::Rect { count, min_size, max_size } => {
            let mut m = Mask::all_known(h, w);
            for _ in 0..count {
                let rh = rng.range_inclusive(min_size, max_size).min(h);
                let rw = rng.range_inclusive(min_size, max_size).min(w);
                let y0 = rng.next_usize(h - rh + 1);
                let x0 = rng.next_usize(w - rw + 1);
                for y in y0..y0 + rh {
                    for x in x0..x0 + rw {
                        m.set(y, x, false);
                    }
                }
            }
            m
        }
        MaskFamily::Half { side } => {
            let side = side.unwrap_or(match rng.next_usize(4) {
                0 => Side::Left,
                1 => Side::Right,
                2 => Side::Top,
                _ => Side::Bottom,
            });
            let mut m = Mask::all_known(h, w);
            for y in 0..h {
                for x in 0..w {
                    let unknown = match side {
                        Side::Left => x < w / 2,
                        Side::Right => x >= w - w / 2,
                        Side::Top => y < h / 2,
                        Side::Bottom => y >= h - h / 2,
                    };
                    if unknown {
                        m.set(y, x, false);
                    }
                }
            }
            m
        }
        MaskFamily::Speckle { known_rate } => {
            let known = (0..h * w).map(|_| rng.next_f64() < known_rate).collect();
            Mask::new(h, w, known)?
        }
        MaskFamily::Strokes { count, segments, radius } => {
            let mut m = Mask::all_known(h, w);
            for _ in 0..count {
                let mut py = rng.next_usize(h) as f64;
                let mut px = rng.next_usize(w) as f64;
                for _ in 0..segments {
                    let ny = rng.next_usize(h) as f64;
                    let nx = rng.next_usize(w) as f64;
                    let len = libm::hypot(ny - py, nx - px).max(1.0);
                    let n = libm::ceil(len * 2.0) as usize;
                    for i in 0..=n {
                        let f = i as f64 / n as f64;
                        stamp_disk(&mut m, py + (ny - py) * f, px + (nx - px) * f, radius, false);
                    }
                    py = ny;
                    px = nx;
                }
            }
            m
        }
        MaskFamily::Coverage { steps, radius } => {
            let mut m = Mask::all_unknown(h, w);
            let mut y = rng.next_usize(h) as f64;
            let mut x = rng.next_usize(w) as f64;
            let mut heading = rng.next_f64() * core::f64::consts::TAU;
            let stride = radius.max(1) as f64;
            stamp_disk(&mut m, y, x, radius, true);
            for _ in 0..steps {
                heading += (rng.next_f64() - 0.5) * core::f64::consts::FRAC_PI_2;
                let ny = y + stride * libm::sin(heading);
                let nx = x + stride * libm::cos(heading);
                if ny < 0.0 || ny > (h - 1) as f64 || nx < 0.0 || nx > (w - 1) as f64 {
                    heading += core::f64::consts::PI;
                    continue;
                }
                for i in 1..=4 {
                    let f = i as f64 / 4.0;
                    stamp_disk(&mut m, y + (ny - y) * f, x + (nx - x) * f, radius, true);
                }
                y = ny;
                x = nx;
            }
            m
        }
    };
    Ok(mask)
}

fn stamp_disk(m: &mut Mask, cy: f64, cx: f64, radius: usize, known: bool) {
    let r = radius as isize;
    let (iy, ix) = (libm::round(cy) as isize, libm::round(cx) as isize);
    let r2 = (radius * radius) as isize;
    for dy in -r..=r {
        for dx in -r..=r {
            if dy * dy + dx * dx > r2 {
                continue;
            }
            let (y, x) = (iy + dy, ix + dx);
            if y >= 0 && x >= 0 && (y as usize) < m.height() && (x as usize) < m.width() {
                m.set(y as usize, x as usize, known);
            }
        }
    }
}

/// Generates `n` masks with seeds `seed, seed + 1, ...`.
pub fn generate_many(family: MaskFamily, seed: u64, n: usize, height: usize, width: usize) -> Result<alloc::vec::Vec<Mask>> {
    (0..n as u64).map(|i| generate(&MaskSpec::new(family, seed.wrapping_add(i)), height, width)).collect()
}
