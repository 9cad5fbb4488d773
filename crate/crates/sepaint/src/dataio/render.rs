//! PNG renders of label maps.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use sepaint_core::inpaint::UncertaintyMap;
use sepaint_core::{LabelMap, Mask};

use crate::error::{Error, Result};

/// Fixed class palette; label `i` uses entry `i % 20`. Black is reserved for unknown pixels.
pub const PALETTE: [[u8; 3]; 20] = [
    [128, 128, 128],
    [128, 64, 128],
    [244, 35, 232],
    [70, 70, 200],
    [220, 20, 60],
    [107, 142, 35],
    [250, 170, 30],
    [0, 130, 180],
    [255, 255, 255],
    [152, 251, 152],
    [190, 153, 153],
    [220, 220, 0],
    [119, 11, 32],
    [0, 200, 200],
    [255, 127, 80],
    [160, 82, 45],
    [240, 230, 140],
    [75, 0, 130],
    [46, 139, 87],
    [255, 192, 203],
];

pub const UNKNOWN: [u8; 3] = [0, 0, 0];

/// RGB bytes of `map` scaled up by `scale`, with pixels unknown under `mask` drawn black.
pub fn render_rgb(map: &LabelMap, mask: Option<&Mask>, scale: usize) -> Result<Vec<u8>> {
    if let Some(m) = mask {
        if !m.matches(map) {
            return Err(sepaint_core::Error::Domain("mask and map shapes differ".into()).into());
        }
    }
    let scale = scale.max(1);
    let (h, w) = (map.height(), map.width());
    let mut out = Vec::with_capacity(h * w * scale * scale * 3);
    for r in 0..h * scale {
        for c in 0..w * scale {
            let (row, col) = (r / scale, c / scale);
            let color = match mask {
                Some(m) if !m.is_known(row, col) => UNKNOWN,
                _ => PALETTE[map.get(row, col) as usize % PALETTE.len()],
            };
            out.extend_from_slice(&color);
        }
    }
    Ok(out)
}

fn write_png(path: &Path, width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let to_io = |e: png::EncodingError| Error::io(path, std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(to_io)?;
    writer.write_image_data(data).map_err(to_io)?;
    writer.finish().map_err(to_io)
}

pub fn render_png(path: &Path, map: &LabelMap, mask: Option<&Mask>, scale: usize) -> Result<()> {
    let scale = scale.max(1);
    let rgb = render_rgb(map, mask, scale)?;
    write_png(path, map.width() * scale, map.height() * scale, png::ColorType::Rgb, &rgb)
}

/// Grayscale render, white = maximal uncertainty.
pub fn render_uncertainty_png(path: &Path, map: &UncertaintyMap, scale: usize) -> Result<()> {
    let scale = scale.max(1);
    let (h, w) = (map.height, map.width);
    let mut out = Vec::with_capacity(h * w * scale * scale);
    for r in 0..h * scale {
        for c in 0..w * scale {
            let v = map.values[(r / scale) * w + c / scale].clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    write_png(path, w * scale, h * scale, png::ColorType::Grayscale, &out)
}
