use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};

use super::{BBox, Point};

type Entry = GeomWithData<Rectangle<[f64; 2]>, usize>;

/// Immutable bulk-loaded R-tree over `(id, bbox)` entries.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    tree: RTree<Entry>,
}

impl SpatialIndex {
    pub fn build(items: impl IntoIterator<Item = (usize, BBox)>) -> Self {
        let entries: Vec<Entry> = items
            .into_iter()
            .map(|(id, b)| {
                GeomWithData::new(
                    Rectangle::from_corners([b.min_x, b.min_y], [b.max_x, b.max_y]),
                    id,
                )
            })
            .collect();
        Self {
            tree: RTree::bulk_load(entries),
        }
    }

    /// Index where every entry is a point.
    pub fn from_points(points: &[Point]) -> Self {
        Self::build(
            points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, BBox::new(p.x, p.y, p.x, p.y))),
        )
    }

    pub fn len(&self) -> usize {
        self.tree.size()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.size() == 0
    }

    /// Ids whose boxes intersect `query` (touching included), sorted and
    /// deduplicated.
    pub fn query(&self, query: &BBox) -> Vec<usize> {
        let env = AABB::from_corners([query.min_x, query.min_y], [query.max_x, query.max_y]);
        let mut ids: Vec<usize> = self
            .tree
            .locate_in_envelope_intersecting(&env)
            .map(|e| e.data)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn query_point(&self, p: &Point) -> Vec<usize> {
        self.query(&BBox::new(p.x, p.y, p.x, p.y))
    }
}
