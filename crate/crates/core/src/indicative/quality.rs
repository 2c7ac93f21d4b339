//! Street-view disorder quality. For year y and disorder type k, each
//! in-buffer observation point m with N_ym > 0 images contributes its mean
//! flag Σ_n S_yknm / N_ym; T_yk sums these over the M contributing points
//! and Q_iy = Σ_k T_yk / M.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IndicativeError;
use crate::geom::{BBox, Point, SpatialIndex};

pub const DISORDER_TYPES: [&str; 6] = [
    "damaged_facade",
    "illegal_temporary",
    "graffiti_advertisement",
    "poor_store_facade",
    "unkempt_facade",
    "poor_signboard",
];

pub const SVI_FIRST_YEAR: i32 = 2014;
pub const SVI_LAST_YEAR: i32 = 2023;
/// Buffer radius around the building centroid, metres.
pub const QUALITY_BUFFER: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SviObservation {
    pub point_id: String,
    pub point: Point,
    pub heading: f64,
    /// Per year, one six-flag vector per image.
    pub images: BTreeMap<i32, Vec<[bool; 6]>>,
}

impl SviObservation {
    pub fn new(point_id: &str, point: Point, heading: f64) -> Self {
        Self {
            point_id: point_id.into(),
            point,
            heading,
            images: BTreeMap::new(),
        }
    }

    pub fn add_image(&mut self, year: i32, flags: [bool; 6]) -> Result<(), IndicativeError> {
        if !(SVI_FIRST_YEAR..=SVI_LAST_YEAR).contains(&year) {
            return Err(IndicativeError::BadYear(year));
        }
        self.images.entry(year).or_default().push(flags);
        Ok(())
    }
}

/// Eq. 1 outcome for one (year, type).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DisorderTotal {
    NoObservationPoints,
    NoImagesThatYear,
    /// T_yk over the `m` points with images that year.
    Total { t: f64, m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QualityMode {
    NoObservationPoints,
    NoImagesThatYear,
    /// T_yk / M ∈ [0, 1].
    Score(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityResult {
    /// Assessment year; `None` when nothing was scored.
    pub year: Option<i32>,
    pub types: [QualityMode; 6],
    /// Q ∈ [0, 6] when scored.
    pub total: Option<f64>,
}

impl QualityResult {
    fn unscored(mode: QualityMode) -> Self {
        Self {
            year: None,
            types: [mode; 6],
            total: None,
        }
    }
}

/// Eq. 1 over the in-buffer observations.
pub fn quality_t(obs: &[&SviObservation], year: i32, k: usize) -> DisorderTotal {
    if obs.is_empty() {
        return DisorderTotal::NoObservationPoints;
    }
    let mut t = 0.0;
    let mut m = 0;
    for o in obs {
        let Some(imgs) = o.images.get(&year).filter(|v| !v.is_empty()) else { continue };
        t += imgs.iter().filter(|f| f[k]).count() as f64 / imgs.len() as f64;
        m += 1;
    }
    if m == 0 {
        DisorderTotal::NoImagesThatYear
    } else {
        DisorderTotal::Total { t, m }
    }
}

/// Eq. 2 for one year.
pub fn quality_q(obs: &[&SviObservation], year: i32) -> QualityResult {
    let mut types = [QualityMode::NoObservationPoints; 6];
    for (k, slot) in types.iter_mut().enumerate() {
        *slot = match quality_t(obs, year, k) {
            DisorderTotal::NoObservationPoints => return QualityResult::unscored(QualityMode::NoObservationPoints),
            DisorderTotal::NoImagesThatYear => return QualityResult::unscored(QualityMode::NoImagesThatYear),
            DisorderTotal::Total { t, m } => QualityMode::Score(t / m as f64),
        };
    }
    let total = types
        .iter()
        .map(|t| match t {
            QualityMode::Score(v) => *v,
            _ => 0.0,
        })
        .sum();
    QualityResult {
        year: Some(year),
        types,
        total: Some(total),
    }
}

/// Result for the most recent year with images at any in-buffer point.
pub fn quality_latest(obs: &[&SviObservation]) -> QualityResult {
    if obs.is_empty() {
        return QualityResult::unscored(QualityMode::NoObservationPoints);
    }
    match obs.iter().filter_map(|o| o.images.iter().rev().find(|(_, v)| !v.is_empty()).map(|(y, _)| *y)).max() {
        Some(y) => quality_q(obs, y),
        None => QualityResult::unscored(QualityMode::NoImagesThatYear),
    }
}

/// Observations with a spatial index for buffer queries.
pub struct SviLayer {
    pub observations: Vec<SviObservation>,
    index: SpatialIndex,
}

impl SviLayer {
    pub fn new(observations: Vec<SviObservation>) -> Self {
        let pts: Vec<Point> = observations.iter().map(|o| o.point).collect();
        Self {
            index: SpatialIndex::from_points(&pts),
            observations,
        }
    }

    /// Points within `radius` of `c` (inclusive), in input order.
    pub fn in_buffer(&self, c: &Point, radius: f64) -> Vec<&SviObservation> {
        let mut ids: Vec<usize> = self
            .index
            .query(&BBox::around(*c, radius))
            .into_iter()
            .filter(|&i| self.observations[i].point.distance(c) <= radius)
            .collect();
        ids.sort_unstable();
        ids.into_iter().map(|i| &self.observations[i]).collect()
    }
}
