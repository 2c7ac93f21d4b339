use serde::{Deserialize, Serialize};

use crate::geom::{Point, Polygon};

use super::FeatureError;

/// Administrative city tier, highest rank first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CityTier {
    Municipality,
    ProvincialCapital,
    PrefectureLevel,
    CountyLevel,
    NonUrban,
}

impl CityTier {
    pub const ALL: [CityTier; 5] = [
        CityTier::Municipality,
        CityTier::ProvincialCapital,
        CityTier::PrefectureLevel,
        CityTier::CountyLevel,
        CityTier::NonUrban,
    ];

    /// 0 is the highest rank.
    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CityTier::Municipality => "Municipality",
            CityTier::ProvincialCapital => "ProvincialCapital",
            CityTier::PrefectureLevel => "PrefectureLevel",
            CityTier::CountyLevel => "CountyLevel",
            CityTier::NonUrban => "NonUrban",
        }
    }
}

impl std::fmt::Display for CityTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CityTier {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CityTier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| FeatureError::UnknownTier(s.to_string()))
    }
}

/// Administrative city polygon labelled with one of the four urban tiers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdminArea {
    pub city_id: String,
    pub tier: CityTier,
    pub polygon: Polygon,
}

/// Highest-ranked admin area containing `centroid`, or `None` (non-urban).
pub fn city_tier_assign<'a>(centroid: &Point, admins: &'a [AdminArea]) -> (CityTier, Option<&'a AdminArea>) {
    admins
        .iter()
        .filter(|a| a.tier != CityTier::NonUrban && a.polygon.contains(centroid))
        .min_by_key(|a| a.tier.rank())
        .map_or((CityTier::NonUrban, None), |a| (a.tier, Some(a)))
}
