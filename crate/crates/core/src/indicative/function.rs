use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IndicativeError;
use crate::geom::{BBox, Point, Polygon, SpatialIndex};

/// The 30 primary AOI types, in table order.
pub const AOI_PRIMARY_TYPES: [&str; 30] = [
    "Restaurants",
    "Hotels",
    "Shopping",
    "Lifestyle Services",
    "Beauty and Wellness",
    "Tourist Attractions",
    "Leisure and Entertainment",
    "Sports and Fitness",
    "Education and Training",
    "Culture and Media",
    "Healthcare",
    "Automotive Services",
    "Transportation Infrastructure",
    "Finance",
    "Real Estate",
    "Corporations and Enterprises",
    "Government Institutions",
    "Entrances and Exits",
    "Natural Features",
    "Administrative Landmarks",
    "Addresses",
    "Roads",
    "Railways",
    "Administrative Boundaries",
    "Other Linear Elements",
    "Administrative Divisions",
    "Water Bodies",
    "Green Spaces",
    "Labels",
    "Bus Routes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionLabel {
    Residential,
    Commercial,
    PublicService,
    Industry,
    Office,
}

impl FunctionLabel {
    pub const ALL: [FunctionLabel; 5] = [
        FunctionLabel::Residential,
        FunctionLabel::Commercial,
        FunctionLabel::PublicService,
        FunctionLabel::Industry,
        FunctionLabel::Office,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionLabel::Residential => "residential",
            FunctionLabel::Commercial => "commercial",
            FunctionLabel::PublicService => "public_service",
            FunctionLabel::Industry => "industry",
            FunctionLabel::Office => "office",
        }
    }
}

impl fmt::Display for FunctionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionLabel {
    type Err = IndicativeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IndicativeError::UnknownFunction(s.into()))
    }
}

/// Reclassification of (primary type index, secondary type) into the five
/// building functions; other plots carry no function.
pub fn reclass(primary: usize, secondary: &str) -> Option<FunctionLabel> {
    use FunctionLabel::*;
    let s = secondary.trim().to_ascii_lowercase();
    match AOI_PRIMARY_TYPES.get(primary).copied()? {
        "Real Estate" => match s.as_str() {
            "residential areas" | "dormitories" => Some(Residential),
            "office buildings" => Some(Office),
            _ => None,
        },
        "Shopping" => matches!(s.as_str(), "shopping centers" | "markets" | "supermarkets").then_some(Commercial),
        "Education and Training" | "Healthcare" => Some(PublicService),
        "Sports and Fitness" => (s == "sports venues").then_some(PublicService),
        "Transportation Infrastructure" => matches!(
            s.as_str(),
            "airports" | "railway stations" | "subway stations" | "long-distance bus stations"
        )
        .then_some(PublicService),
        "Corporations and Enterprises" => matches!(s.as_str(), "factories and mines" | "industrial parks").then_some(Industry),
        "Government Institutions" => Some(Office),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoiPlot {
    pub polygon: Polygon,
    /// Index into [`AOI_PRIMARY_TYPES`].
    pub primary_type: usize,
    pub secondary_type: String,
    pub reclass: Option<FunctionLabel>,
}

impl AoiPlot {
    pub fn new(polygon: Polygon, primary_type: usize, secondary_type: &str) -> Result<Self, IndicativeError> {
        if primary_type >= AOI_PRIMARY_TYPES.len() {
            return Err(IndicativeError::BadAoiType(primary_type));
        }
        Ok(Self {
            reclass: reclass(primary_type, secondary_type),
            polygon,
            primary_type,
            secondary_type: secondary_type.into(),
        })
    }
}

/// Label of the reclassified plot containing each centroid; among
/// overlapping plots the smallest area wins (then the lowest index). `None`
/// = unlabeled.
pub fn assign_function_labels(centroids: &[Point], plots: &[AoiPlot]) -> Vec<Option<FunctionLabel>> {
    let labeled: Vec<(usize, f64)> = plots
        .iter()
        .enumerate()
        .filter(|(_, p)| p.reclass.is_some())
        .map(|(i, p)| (i, p.polygon.area()))
        .collect();
    let index = SpatialIndex::build(labeled.iter().enumerate().map(|(k, &(i, _))| (k, plots[i].polygon.bbox())));
    centroids
        .iter()
        .map(|c| {
            let mut best: Option<(f64, usize)> = None;
            for k in index.query(&BBox::new(c.x, c.y, c.x, c.y)) {
                let (i, area) = labeled[k];
                if plots[i].polygon.contains(c) && best.is_none_or(|(a, j)| area < a || (area == a && i < j)) {
                    best = Some((area, i));
                }
            }
            best.and_then(|(_, i)| plots[i].reclass)
        })
        .collect()
}
