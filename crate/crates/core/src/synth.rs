//! Procedural street-scene label maps.
//!
//! Each map has one or more straight roads crossing the grid, sidewalks
//! bordering every road, rectangular buildings on the remaining background,
//! and small vehicles on road pixels only.

use alloc::vec::Vec;

use crate::error::{config, Result};
use crate::field::LabelMap;
use crate::rng::RngStream;

pub const BACKGROUND: u16 = 0;
pub const ROAD: u16 = 1;
pub const SIDEWALK: u16 = 2;
pub const BUILDING: u16 = 3;
pub const VEHICLE: u16 = 4;

/// Class names for the default five-class layout.
pub const CLASS_NAMES: [&str; 5] = ["background", "road", "sidewalk", "building", "vehicle"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub seed: u64,
    /// Inclusive range of roads per map.
    pub roads: (usize, usize),
    /// Inclusive range of road widths in pixels.
    pub road_width: (usize, usize),
    pub sidewalk_width: usize,
    /// Expected building placement attempts per map.
    pub building_density: f64,
    /// Inclusive range of building side lengths.
    pub building_size: (usize, usize),
    /// Expected vehicles per road.
    pub vehicle_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            count: 1000,
            height: 32,
            width: 32,
            classes: 5,
            seed: 0,
            roads: (1, 2),
            road_width: (3, 6),
            sidewalk_width: 1,
            building_density: 6.0,
            building_size: (3, 8),
            vehicle_rate: 1.5,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(config!("maps must be nonempty"));
        }
        if self.classes < 3 {
            return Err(config!("street maps need at least 3 classes"));
        }
        if self.building_density > 0.0 && self.classes <= BUILDING as usize {
            return Err(config!("buildings need at least 4 classes"));
        }
        if self.vehicle_rate > 0.0 && self.classes <= VEHICLE as usize {
            return Err(config!("vehicles need at least 5 classes"));
        }
        if self.roads.0 > self.roads.1 || self.road_width.0 == 0 || self.road_width.0 > self.road_width.1 {
            return Err(config!("invalid road ranges"));
        }
        if self.building_size.0 == 0 || self.building_size.0 > self.building_size.1 {
            return Err(config!("invalid building size range"));
        }
        if !(self.building_density >= 0.0) || !(self.vehicle_rate >= 0.0) {
            return Err(config!("densities must be nonnegative"));
        }
        Ok(())
    }
}

/// Generates `spec.count` maps. Map `i` depends only on `(spec, i)`.
pub fn synth(spec: &SynthSpec) -> Result<Vec<LabelMap>> {
    spec.validate()?;
    let root = RngStream::new(spec.seed);
    Ok((0..spec.count).map(|i| synth_one(spec, &mut root.fork(i as u64))).collect())
}

/// Draws `floor(rate)` plus one more with probability `frac(rate)`.
fn draw_count(rate: f64, rng: &mut RngStream) -> usize {
    let base = libm::floor(rate);
    base as usize + usize::from(rng.next_bool(rate - base))
}

struct Road {
    vertical: bool,
    start: usize,
    end: usize,
}

fn synth_one(spec: &SynthSpec, rng: &mut RngStream) -> LabelMap {
    let (h, w) = (spec.height, spec.width);
    let mut grid = alloc::vec![BACKGROUND; h * w];

    let n_roads = rng.range_inclusive(spec.roads.0, spec.roads.1);
    let mut roads = Vec::with_capacity(n_roads);
    for _ in 0..n_roads {
        let vertical = rng.next_bool(0.5);
        let span = if vertical { w } else { h };
        let width = rng.range_inclusive(spec.road_width.0, spec.road_width.1).min(span);
        let start = rng.next_usize(span - width + 1);
        roads.push(Road { vertical, start, end: start + width });
        for y in 0..h {
            for x in 0..w {
                let c = if vertical { x } else { y };
                if c >= start && c < start + width {
                    grid[y * w + x] = ROAD;
                }
            }
        }
    }

    let sw = spec.sidewalk_width as isize;
    if sw > 0 {
        let snapshot = grid.clone();
        for y in 0..h as isize {
            for x in 0..w as isize {
                if snapshot[(y * w as isize + x) as usize] == ROAD {
                    continue;
                }
                let near = (-sw..=sw).any(|dy| {
                    (-sw..=sw).any(|dx| {
                        let (yy, xx) = (y + dy, x + dx);
                        yy >= 0
                            && xx >= 0
                            && yy < h as isize
                            && xx < w as isize
                            && snapshot[(yy * w as isize + xx) as usize] == ROAD
                    })
                });
                if near {
                    grid[(y * w as isize + x) as usize] = SIDEWALK;
                }
            }
        }
    }

    if spec.building_density > 0.0 {
        for _ in 0..draw_count(spec.building_density, rng) {
            let bh = rng.range_inclusive(spec.building_size.0, spec.building_size.1).min(h);
            let bw = rng.range_inclusive(spec.building_size.0, spec.building_size.1).min(w);
            let y0 = rng.next_usize(h - bh + 1);
            let x0 = rng.next_usize(w - bw + 1);
            for y in y0..y0 + bh {
                for x in x0..x0 + bw {
                    if grid[y * w + x] == BACKGROUND {
                        grid[y * w + x] = BUILDING;
                    }
                }
            }
        }
    }

    if spec.vehicle_rate > 0.0 {
        for road in &roads {
            for _ in 0..draw_count(spec.vehicle_rate, rng) {
                let lane = road.end - road.start;
                let across = 2.min(lane);
                let along_len = 3;
                let off = road.start + rng.next_usize(lane - across + 1);
                let span = if road.vertical { h } else { w };
                let pos = rng.next_usize(span.saturating_sub(along_len) + 1);
                for a in pos..(pos + along_len).min(span) {
                    for c in off..off + across {
                        let (y, x) = if road.vertical { (a, c) } else { (c, a) };
                        if grid[y * w + x] == ROAD {
                            grid[y * w + x] = VEHICLE;
                        }
                    }
                }
            }
        }
    }

    LabelMap::new(h, w, spec.classes, grid).expect("labels below K")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec { count: 20, ..SynthSpec::default() };
        assert_eq!(synth(&spec).unwrap(), synth(&spec).unwrap());
        let other = SynthSpec { seed: 1, ..spec.clone() };
        assert_ne!(synth(&spec).unwrap(), synth(&other).unwrap());
    }

    #[test]
    fn without_buildings_or_vehicles() {
        let spec = SynthSpec { count: 50, building_density: 0.0, vehicle_rate: 0.0, ..SynthSpec::default() };
        for m in synth(&spec).unwrap() {
            assert!(m.labels().iter().all(|&l| l <= SIDEWALK));
        }
    }

    #[test]
    fn structure_invariants() {
        let spec = SynthSpec { count: 100, ..SynthSpec::default() };
        for m in synth(&spec).unwrap() {
            let (h, w) = (m.height(), m.width());
            for y in 0..h {
                for x in 0..w {
                    let l = m.get(y, x);
                    if l == SIDEWALK {
                        // every sidewalk pixel touches a road or vehicle pixel
                        let mut touches = false;
                        for dy in -1isize..=1 {
                            for dx in -1isize..=1 {
                                let (yy, xx) = (y as isize + dy, x as isize + dx);
                                if yy >= 0 && xx >= 0 && (yy as usize) < h && (xx as usize) < w {
                                    let n = m.get(yy as usize, xx as usize);
                                    touches |= n == ROAD || n == VEHICLE;
                                }
                            }
                        }
                        assert!(touches);
                    }
                }
            }
        }
    }

    #[test]
    fn road_frequency_in_band() {
        let maps = synth(&SynthSpec::default()).unwrap();
        let total: usize = maps.iter().map(|m| m.len()).sum();
        let road: usize = maps.iter().map(|m| m.histogram()[ROAD as usize]).sum();
        let frac = road as f64 / total as f64;
        assert!(frac > 0.10 && frac < 0.40, "road fraction {frac}");
    }

    #[test]
    fn rejects_too_few_classes() {
        let spec = SynthSpec { classes: 4, ..SynthSpec::default() };
        assert!(synth(&spec).is_err());
    }
}
