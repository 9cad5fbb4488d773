//! Grids: label maps, per-pixel categorical fields and binary masks.
//!
//! All grids are stored row-major. A [`CategoricalField`] keeps the `K`
//! class probabilities of a pixel contiguous.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};

/// A grid of integer class IDs in `[0, classes)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    height: usize,
    width: usize,
    classes: usize,
    labels: Vec<u16>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, classes: usize, labels: Vec<u16>) -> Result<Self> {
        if classes < 2 {
            return Err(domain!("class count must be at least 2, got {classes}"));
        }
        if classes > u16::MAX as usize + 1 {
            return Err(domain!("class count {classes} does not fit 16-bit labels"));
        }
        if labels.len() != height * width {
            return Err(domain!(
                "label buffer has {} entries, expected {}x{}",
                labels.len(),
                height,
                width
            ));
        }
        if let Some(pos) = labels.iter().position(|&l| l as usize >= classes) {
            return Err(domain!(
                "label {} at pixel {} is not below K={}",
                labels[pos],
                pos,
                classes
            ));
        }
        Ok(Self { height, width, classes, labels })
    }

    /// A map filled with one label.
    pub fn filled(height: usize, width: usize, classes: usize, label: u16) -> Result<Self> {
        Self::new(height, width, classes, vec![label; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.labels[row * self.width + col]
    }

    /// Writes one pixel. Panics if `label >= classes`.
    pub fn set(&mut self, row: usize, col: usize, label: u16) {
        assert!((label as usize) < self.classes, "label {label} out of range");
        self.labels[row * self.width + col] = label;
    }

    pub fn same_shape(&self, other: &LabelMap) -> bool {
        self.height == other.height && self.width == other.width && self.classes == other.classes
    }

    /// Mirror left to right.
    pub fn flip_horizontal(&self) -> LabelMap {
        let mut labels = Vec::with_capacity(self.labels.len());
        for row in self.labels.chunks(self.width.max(1)) {
            labels.extend(row.iter().rev());
        }
        LabelMap { labels, ..*self }
    }

    /// Per-class pixel counts.
    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Encode as a one-hot field.
    pub fn one_hot(&self) -> CategoricalField {
        let k = self.classes;
        let mut probs = vec![0.0; self.labels.len() * k];
        for (px, &l) in self.labels.iter().enumerate() {
            probs[px * k + l as usize] = 1.0;
        }
        CategoricalField { height: self.height, width: self.width, classes: k, probs }
    }
}

/// One-hot encode `map` against an explicit class count, which may exceed the
/// map's own `K`.
pub fn one_hot(map: &LabelMap, classes: usize) -> Result<CategoricalField> {
    if classes < map.classes() {
        if let Some(&l) = map.labels().iter().find(|&&l| l as usize >= classes) {
            return Err(domain!("label {l} is not below K={classes}"));
        }
    }
    let relabeled = LabelMap::new(map.height(), map.width(), classes, map.labels().to_vec())?;
    Ok(relabeled.one_hot())
}

/// Per-pixel probability simplex over `classes` categories.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalField {
    height: usize,
    width: usize,
    classes: usize,
    probs: Vec<f64>,
}

impl CategoricalField {
    /// Wraps a buffer without normalizing it. Use [`CategoricalField::validate`]
    /// to check the simplex invariant.
    pub fn from_probs(height: usize, width: usize, classes: usize, probs: Vec<f64>) -> Result<Self> {
        if classes < 2 {
            return Err(domain!("class count must be at least 2, got {classes}"));
        }
        if probs.len() != height * width * classes {
            return Err(domain!(
                "probability buffer has {} entries, expected {}x{}x{}",
                probs.len(),
                height,
                width,
                classes
            ));
        }
        Ok(Self { height, width, classes, probs })
    }

    /// Every pixel at `1/K`.
    pub fn uniform(height: usize, width: usize, classes: usize) -> Result<Self> {
        let p = 1.0 / classes as f64;
        Self::from_probs(height, width, classes, vec![p; height * width * classes])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probs_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Distribution at pixel index `px` (row-major).
    pub fn pixel(&self, px: usize) -> &[f64] {
        &self.probs[px * self.classes..(px + 1) * self.classes]
    }

    pub fn iter_pixels(&self) -> core::slice::ChunksExact<'_, f64> {
        self.probs.chunks_exact(self.classes)
    }

    pub fn same_shape(&self, other: &CategoricalField) -> bool {
        self.height == other.height && self.width == other.width && self.classes == other.classes
    }

    /// Checks nonnegativity and unit sums within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (px, p) in self.iter_pixels().enumerate() {
            if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(domain!("pixel {px} has a negative or non-finite probability"));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(domain!("pixel {px} sums to {s}"));
            }
        }
        Ok(())
    }

    /// Per-pixel argmax, lowest index on ties.
    pub fn argmax(&self) -> LabelMap {
        let labels = self.iter_pixels().map(|p| argmax(p) as u16).collect();
        LabelMap { height: self.height, width: self.width, classes: self.classes, labels }
    }
}

/// Decode a field by per-pixel argmax.
pub fn argmax_decode(field: &CategoricalField) -> LabelMap {
    field.argmax()
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Binary grid; `true` marks a known (observed) pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    height: usize,
    width: usize,
    known: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize, known: Vec<bool>) -> Result<Self> {
        if known.len() != height * width {
            return Err(domain!(
                "mask buffer has {} entries, expected {}x{}",
                known.len(),
                height,
                width
            ));
        }
        Ok(Self { height, width, known })
    }

    pub fn all_known(height: usize, width: usize) -> Self {
        Self { height, width, known: vec![true; height * width] }
    }

    pub fn all_unknown(height: usize, width: usize) -> Self {
        Self { height, width, known: vec![false; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn known(&self) -> &[bool] {
        &self.known
    }

    pub fn is_known(&self, row: usize, col: usize) -> bool {
        self.known[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, known: bool) {
        self.known[row * self.width + col] = known;
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    pub fn unknown_count(&self) -> usize {
        self.known.len() - self.known_count()
    }

    pub fn unknown_fraction(&self) -> f64 {
        if self.known.is_empty() {
            0.0
        } else {
            self.unknown_count() as f64 / self.known.len() as f64
        }
    }

    pub fn matches(&self, map: &LabelMap) -> bool {
        self.height == map.height() && self.width == map.width()
    }
}
