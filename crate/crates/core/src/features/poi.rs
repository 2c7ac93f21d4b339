use crate::geom::{BBox, Point, SpatialIndex};

use super::{kde_at, FeatureError};

/// The 19 point-feature categories (the point-like primary AOI types).
pub const POI_CATEGORIES: [&str; 19] = [
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
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poi {
    pub point: Point,
    /// Index into [`POI_CATEGORIES`].
    pub category: usize,
}

/// Per-category counts within the radius and kernel densities at the centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiFeatures {
    pub counts: [usize; 19],
    pub densities: [f64; 19],
}

/// POIs split by category, with a point index per category.
pub(crate) struct PoiLayer {
    by_cat: Vec<Vec<Point>>,
    index: Vec<SpatialIndex>,
}

impl PoiLayer {
    pub fn new(pois: &[Poi]) -> Result<Self, FeatureError> {
        let mut by_cat = vec![Vec::new(); POI_CATEGORIES.len()];
        for p in pois {
            by_cat
                .get_mut(p.category)
                .ok_or(FeatureError::BadCategory(p.category))?
                .push(p.point);
        }
        let index = by_cat.iter().map(|pts| SpatialIndex::from_points(pts)).collect();
        Ok(Self { by_cat, index })
    }

    pub fn features(&self, c: &Point, radius: f64, h: f64) -> PoiFeatures {
        let mut counts = [0; 19];
        let mut densities = [0.0; 19];
        for k in 0..POI_CATEGORIES.len() {
            let pts = &self.by_cat[k];
            if pts.is_empty() {
                continue;
            }
            counts[k] = self.index[k]
                .query(&BBox::around(*c, radius))
                .into_iter()
                .filter(|&i| pts[i].distance(c) <= radius)
                .count();
            let near: Vec<Point> = self.index[k]
                .query(&BBox::around(*c, 10.0 * h))
                .into_iter()
                .map(|i| pts[i])
                .collect();
            if !near.is_empty() {
                // kde_at normalizes by the points given; rescale to the category n
                densities[k] = kde_at(&near, h, c).expect("non-empty") * near.len() as f64 / pts.len() as f64;
            }
        }
        PoiFeatures { counts, densities }
    }
}

/// Counts within `radius` of `centroid` and Eq. S6 density (bandwidth `h`,
/// category-specific n) at the centroid, per category.
pub fn poi_density_features(centroid: &Point, pois: &[Poi], radius: f64, h: f64) -> Result<PoiFeatures, FeatureError> {
    if !(radius > 0.0) {
        return Err(FeatureError::NonPositiveRadius(radius));
    }
    if !(h > 0.0) {
        return Err(FeatureError::NonPositiveBandwidth(h));
    }
    Ok(PoiLayer::new(pois)?.features(centroid, radius, h))
}
