use serde::{Deserialize, Serialize};

use super::{BinaryMask, VectorizeError};

/// Pixel confusion counts with building as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegConfusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl SegConfusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for SegConfusion {
    type Output = SegConfusion;
    fn add(self, o: SegConfusion) -> SegConfusion {
        SegConfusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

pub fn seg_confusion(pred: &BinaryMask, truth: &BinaryMask) -> Result<SegConfusion, VectorizeError> {
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(VectorizeError::DimensionMismatch {
            expected: (truth.width(), truth.height()),
            got: (pred.width(), pred.height()),
        });
    }
    let mut c = SegConfusion::default();
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p, t) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fp += 1,
            (_, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

/// Precision, recall, F1, accuracy and per-class IoU. A metric whose
/// denominator is zero is reported as 0 and its name listed in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub iou_building: f64,
    pub iou_background: f64,
    pub miou: f64,
    pub undefined: Vec<String>,
}

pub fn seg_metrics(c: &SegConfusion) -> SegMetrics {
    let mut undefined = Vec::new();
    let mut ratio = |name: &str, num: u64, den: u64| {
        if den == 0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio("precision", c.tp, c.tp + c.fp);
    let recall = ratio("recall", c.tp, c.tp + c.fn_);
    let accuracy = ratio("accuracy", c.tp + c.tn, c.total());
    let iou_building = ratio("iou_building", c.tp, c.tp + c.fp + c.fn_);
    let iou_background = ratio("iou_background", c.tn, c.tn + c.fn_ + c.fp);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        undefined.push("f1".into());
        0.0
    };
    SegMetrics {
        precision,
        recall,
        f1,
        accuracy,
        iou_building,
        iou_background,
        miou: (iou_building + iou_background) / 2.0,
        undefined,
    }
}
