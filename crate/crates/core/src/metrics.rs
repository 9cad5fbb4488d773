//! Pixel accuracy and mean IoU over a region of evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::field::{LabelMap, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Only pixels with `mask = 0`.
    Missing,
    /// Every pixel.
    Full,
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Region::Missing => "missing",
            Region::Full => "full",
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "missing" => Some(Region::Missing),
            "full" => Some(Region::Full),
            _ => None,
        }
    }
}

/// One-vs-rest counts for a class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ClassCounts {
    /// `tp / (tp + fp + fn)`, `None` when the class is absent from both maps.
    pub fn iou(&self) -> Option<f64> {
        let union = self.tp + self.fp + self.fn_;
        (union > 0).then(|| self.tp as f64 / union as f64)
    }

    /// `(tp + tn) / (tp + tn + fp + fn)`.
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / (self.tp + self.tn + self.fp + self.fn_) as f64
    }
}

/// Scores as fractions in `[0, 1]`; use the `*_percent` accessors for tables.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub counts: Vec<ClassCounts>,
    pub per_class_iou: Vec<Option<f64>>,
    pub miou: f64,
    pub accuracy: f64,
    pub evaluated: usize,
    pub region: Region,
}

impl EvalReport {
    pub fn miou_percent(&self) -> f64 {
        self.miou * 100.0
    }

    pub fn accuracy_percent(&self) -> f64 {
        self.accuracy * 100.0
    }
}

pub fn evaluate(pred: &LabelMap, gt: &LabelMap, mask: &Mask, region: Region) -> Result<EvalReport> {
    if pred.height() != gt.height() || pred.width() != gt.width() || !mask.matches(gt) {
        return Err(domain!("prediction, ground truth and mask differ in shape"));
    }
    let k = pred.classes().max(gt.classes());
    let mut confusion = vec![0usize; k * k];
    let mut evaluated = 0;
    for (i, (&p, &g)) in pred.labels().iter().zip(gt.labels()).enumerate() {
        if region == Region::Missing && mask.known()[i] {
            continue;
        }
        confusion[g as usize * k + p as usize] += 1;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(domain!("no pixels in the {} region", region.name()));
    }
    let counts: Vec<ClassCounts> = (0..k)
        .map(|c| {
            let tp = confusion[c * k + c];
            let fn_: usize = (0..k).map(|p| confusion[c * k + p]).sum::<usize>() - tp;
            let fp: usize = (0..k).map(|g| confusion[g * k + c]).sum::<usize>() - tp;
            ClassCounts { tp, fp, fn_, tn: evaluated - tp - fp - fn_ }
        })
        .collect();
    let per_class_iou: Vec<Option<f64>> = counts.iter().map(ClassCounts::iou).collect();
    let present: Vec<f64> = per_class_iou.iter().flatten().copied().collect();
    let miou = present.iter().sum::<f64>() / present.len() as f64;
    let correct: usize = (0..k).map(|c| confusion[c * k + c]).sum();
    Ok(EvalReport {
        counts,
        per_class_iou,
        miou,
        accuracy: correct as f64 / evaluated as f64,
        evaluated,
        region,
    })
}

/// Mean of several reports' mIoU and accuracy, as percentages.
pub fn mean_percent(reports: &[EvalReport]) -> (f64, f64) {
    let n = reports.len().max(1) as f64;
    (
        reports.iter().map(EvalReport::miou_percent).sum::<f64>() / n,
        reports.iter().map(EvalReport::accuracy_percent).sum::<f64>() / n,
    )
}
