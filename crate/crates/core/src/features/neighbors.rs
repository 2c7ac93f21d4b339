use crate::geom::{BBox, Point, Polygon, SpatialIndex};

use super::FeatureError;

/// Neighbour statistics; distances are `None` when there are no neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborStats {
    pub count: usize,
    pub mean_distance: Option<f64>,
    pub nearest_distance: Option<f64>,
}

/// Buildings whose centroid lies within `radius` of `centroids[i]`,
/// excluding `i`. `index` must be built over `centroids` by position.
pub fn neighbor_features(
    i: usize,
    centroids: &[Point],
    index: &SpatialIndex,
    radius: f64,
) -> Result<NeighborStats, FeatureError> {
    if !(radius > 0.0) {
        return Err(FeatureError::NonPositiveRadius(radius));
    }
    let c = centroids[i];
    let mut count = 0;
    let mut sum = 0.0;
    let mut nearest = f64::INFINITY;
    for j in index.query(&BBox::around(c, radius)) {
        if j == i {
            continue;
        }
        let d = c.distance(&centroids[j]);
        if d <= radius {
            count += 1;
            sum += d;
            nearest = nearest.min(d);
        }
    }
    Ok(NeighborStats {
        count,
        mean_distance: (count > 0).then(|| sum / count as f64),
        nearest_distance: (count > 0).then_some(nearest),
    })
}

/// Building-to-block assignment by centroid containment.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAssignment {
    /// Block index per building; `None` when no block contains the centroid
    /// (the building forms its own singleton block).
    pub block_of: Vec<Option<usize>>,
    /// Member building indices per block, ascending.
    pub members: Vec<Vec<usize>>,
}

impl BlockAssignment {
    /// Buildings sharing `i`'s block, including `i` itself.
    pub fn block_members(&self, i: usize) -> Vec<usize> {
        match self.block_of[i] {
            Some(b) => self.members[b].clone(),
            None => vec![i],
        }
    }
}

/// Overlapping blocks resolve to the lowest block index.
pub fn assign_blocks(centroids: &[Point], blocks: &[Polygon]) -> BlockAssignment {
    let index = SpatialIndex::build(blocks.iter().enumerate().map(|(i, b)| (i, b.bbox())));
    let mut members = vec![Vec::new(); blocks.len()];
    let block_of: Vec<Option<usize>> = centroids
        .iter()
        .map(|c| {
            index
                .query(&BBox::new(c.x, c.y, c.x, c.y))
                .into_iter()
                .find(|&b| blocks[b].contains(c))
        })
        .collect();
    for (i, b) in block_of.iter().enumerate() {
        if let Some(b) = b {
            members[*b].push(i);
        }
    }
    BlockAssignment { block_of, members }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isolated_building() {
        let c = [Point::new(0., 0.), Point::new(500., 0.)];
        let idx = SpatialIndex::from_points(&c);
        let s = neighbor_features(0, &c, &idx, 100.0).unwrap();
        assert_eq!(s.count, 0);
        assert_eq!(s.mean_distance, None);
        assert!(neighbor_features(0, &c, &idx, 0.0).is_err());
    }

    #[test]
    fn grid_center_has_four() {
        // 4 m squares with 10 m gaps: centroids 14 m apart, diagonals 19.8 m
        let c: Vec<Point> = (0..9)
            .map(|k| Polygon::rect((k % 3) as f64 * 14.0, (k / 3) as f64 * 14.0, (k % 3) as f64 * 14.0 + 4.0, (k / 3) as f64 * 14.0 + 4.0).unwrap().centroid())
            .collect();
        let idx = SpatialIndex::from_points(&c);
        let s = neighbor_features(4, &c, &idx, 15.0).unwrap();
        assert_eq!(s.count, 4);
        assert!((s.nearest_distance.unwrap() - 14.0).abs() < 1e-9);
        assert!((s.mean_distance.unwrap() - 14.0).abs() < 1e-9);
    }

    #[test]
    fn blocks_by_centroid() {
        let blocks = [Polygon::rect(0., 0., 10., 10.).unwrap(), Polygon::rect(5., 0., 20., 10.).unwrap()];
        let c = [Point::new(1., 1.), Point::new(7., 5.), Point::new(15., 5.), Point::new(50., 5.)];
        let a = assign_blocks(&c, &blocks);
        assert_eq!(a.block_of, vec![Some(0), Some(0), Some(1), None]);
        assert_eq!(a.block_members(3), vec![3]);
        assert_eq!(a.block_members(0), vec![0, 1]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn matches_brute_force(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<Point> = (0..500).map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0))).collect();
            let idx = SpatialIndex::from_points(&c);
            for i in 0..c.len() {
                let s = neighbor_features(i, &c, &idx, 100.0).unwrap();
                let d: Vec<f64> = (0..c.len()).filter(|&j| j != i).map(|j| c[i].distance(&c[j])).filter(|&d| d <= 100.0).collect();
                prop_assert_eq!(s.count, d.len());
                if !d.is_empty() {
                    let mean = d.iter().sum::<f64>() / d.len() as f64;
                    prop_assert!((s.mean_distance.unwrap() - mean).abs() < 1e-9);
                    prop_assert_eq!(s.nearest_distance.unwrap(), d.iter().cloned().fold(f64::INFINITY, f64::min));
                }
            }
        }
    }
}
