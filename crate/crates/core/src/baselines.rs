//! Interpolation baselines over masked label maps.
//!
//! `Linear` and `Cubic` average label IDs as real numbers, so they can invent
//! classes that appear nowhere in the input (between 8 and 10 lies 9).

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::field::{LabelMap, Mask};

/// Number of known neighbours used by the weighted methods.
pub const NEIGHBORS: usize = 8;

/// Above this many pixels neighbour search switches from a full scan to rings.
const SCAN_LIMIT: usize = 256 * 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    /// Label of the closest known pixel.
    Nearest,
    /// Inverse-square-distance weighted mean of the nearest known labels.
    Linear,
    /// Tricube-weighted mean of the nearest known labels.
    Cubic,
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Nearest => "nearest",
            BaselineMethod::Linear => "linear",
            BaselineMethod::Cubic => "cubic",
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "nearest" => Some(Self::Nearest),
            "linear" => Some(Self::Linear),
            "cubic" => Some(Self::Cubic),
            _ => None,
        }
    }
}

/// A known pixel ranked by squared distance, then row, then column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    dist2: usize,
    row: usize,
    col: usize,
}

pub fn complete(method: BaselineMethod, y0: &LabelMap, mask: &Mask) -> Result<LabelMap> {
    if !mask.matches(y0) {
        return Err(domain!("mask and map differ in shape"));
    }
    if mask.known_count() == 0 {
        return Err(domain!("baseline needs at least one known pixel"));
    }
    let known: Vec<(usize, usize)> = (0..y0.height())
        .flat_map(|r| (0..y0.width()).map(move |c| (r, c)))
        .filter(|&(r, c)| mask.is_known(r, c))
        .collect();
    let scan = y0.len() <= SCAN_LIMIT;
    let want = if method == BaselineMethod::Nearest { 1 } else { NEIGHBORS };
    let mut out = y0.clone();
    let mut buf = Vec::with_capacity(want + 1);
    for r in 0..y0.height() {
        for c in 0..y0.width() {
            if mask.is_known(r, c) {
                continue;
            }
            buf.clear();
            if scan {
                nearest_by_scan(&known, r, c, want, &mut buf);
            } else {
                nearest_by_rings(mask, r, c, want, &mut buf);
            }
            out.set(r, c, fill_value(method, y0, &buf));
        }
    }
    Ok(out)
}

fn fill_value(method: BaselineMethod, y0: &LabelMap, neighbors: &[Candidate]) -> u16 {
    let nearest = y0.get(neighbors[0].row, neighbors[0].col);
    let label = |n: &Candidate| y0.get(n.row, n.col) as f64;
    let weighted = |weights: &mut dyn Iterator<Item = (f64, f64)>| -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for (wt, l) in weights {
            num += wt * l;
            den += wt;
        }
        (den > 0.0).then(|| num / den)
    };
    let value = match method {
        BaselineMethod::Nearest => return nearest,
        BaselineMethod::Linear => {
            weighted(&mut neighbors.iter().map(|n| (1.0 / n.dist2 as f64, label(n))))
        }
        BaselineMethod::Cubic => {
            let d_max = libm::sqrt(neighbors.iter().map(|n| n.dist2).max().unwrap_or(0) as f64);
            weighted(&mut neighbors.iter().map(|n| {
                let d = libm::sqrt(n.dist2 as f64);
                let wt = if d < d_max {
                    let u = 1.0 - libm::pow(d / d_max, 3.0);
                    u * u * u
                } else {
                    0.0
                };
                (wt, label(n))
            }))
        }
    };
    match value {
        Some(v) => {
            let rounded = libm::floor(v + 0.5);
            rounded.clamp(0.0, (y0.classes() - 1) as f64) as u16
        }
        None => nearest,
    }
}

fn insert_bounded(buf: &mut Vec<Candidate>, cand: Candidate, want: usize) {
    if buf.len() == want && cand >= buf[want - 1] {
        return;
    }
    let at = buf.partition_point(|c| *c < cand);
    buf.insert(at, cand);
    buf.truncate(want);
}

fn nearest_by_scan(known: &[(usize, usize)], r: usize, c: usize, want: usize, buf: &mut Vec<Candidate>) {
    for &(kr, kc) in known {
        let dist2 = kr.abs_diff(r).pow(2) + kc.abs_diff(c).pow(2);
        insert_bounded(buf, Candidate { dist2, row: kr, col: kc }, want);
    }
}

/// Exact search over square rings of growing Chebyshev radius.
fn nearest_by_rings(mask: &Mask, r: usize, c: usize, want: usize, buf: &mut Vec<Candidate>) {
    let (h, w) = (mask.height() as isize, mask.width() as isize);
    let max_radius = h.max(w);
    let (r, c) = (r as isize, c as isize);
    for radius in 0..=max_radius {
        if buf.len() == want && (radius * radius) as usize > buf[want - 1].dist2 {
            break;
        }
        for dy in -radius..=radius {
            let edge = dy.abs() == radius;
            let step = if edge { 1 } else { (2 * radius).max(1) };
            let mut dx = -radius;
            while dx <= radius {
                let (y, x) = (r + dy, c + dx);
                if y >= 0 && x >= 0 && y < h && x < w && mask.is_known(y as usize, x as usize) {
                    let dist2 = (dy * dy + dx * dx) as usize;
                    insert_bounded(buf, Candidate { dist2, row: y as usize, col: x as usize }, want);
                }
                dx += step;
            }
        }
    }
}
