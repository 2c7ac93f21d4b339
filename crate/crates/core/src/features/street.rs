use crate::geom::{alpha_shape, segment_segment_distance, BBox, Point, Polygon, Polyline, SpatialIndex};

/// Distance from `p` to the nearest road, searching outward through the road
/// index; `None` when there are no roads.
pub(crate) fn nearest_road_distance(p: &Polygon, roads: &[Polyline], index: &SpatialIndex) -> Option<f64> {
    if roads.is_empty() {
        return None;
    }
    let bb = p.bbox();
    let mut r = 50.0;
    loop {
        let hits = index.query(&bb.inflate(r));
        let best = hits
            .iter()
            .map(|&k| polygon_polyline_distance(p, &roads[k]))
            .fold(f64::INFINITY, f64::min);
        // any road closer than r is guaranteed to be among the hits
        if best <= r || hits.len() == roads.len() {
            return Some(best);
        }
        r *= 4.0;
    }
}

pub(crate) fn road_index(roads: &[Polyline]) -> SpatialIndex {
    SpatialIndex::build(roads.iter().enumerate().map(|(i, r)| (i, r.bbox())))
}

fn polygon_polyline_distance(p: &Polygon, road: &Polyline) -> f64 {
    let v = road.vertices()[0];
    if p.contains(&v) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (a, b) in p.all_segments() {
        for (c, d) in road.segments() {
            best = best.min(segment_segment_distance(&a, &b, &c, &d));
        }
    }
    best
}

fn touches_boundary(b: &Polygon, hull: &Polygon) -> bool {
    let hb = hull.bbox();
    let hull_segs: Vec<(Point, Point)> = hull.exterior_segments().collect();
    b.exterior_segments().any(|(a, c)| {
        if !BBox::of_points([&a, &c]).is_some_and(|s| s.inflate(1e-9).intersects(&hb)) {
            return false;
        }
        hull_segs
            .iter()
            .any(|(h0, h1)| segment_segment_distance(&a, &c, h0, h1) <= 1e-9)
    })
}

/// Street adjacency for the buildings of one block: a building is adjacent
/// when it touches the boundary of the alpha shape of all block vertices and
/// lies within `setback` of a road. Blocks with fewer than three buildings
/// (or whose vertices are collinear) use the setback rule alone.
pub fn street_adjacency(block_buildings: &[&Polygon], roads: &[Polyline], alpha: f64, setback: f64) -> Vec<bool> {
    let index = road_index(roads);
    street_adjacency_indexed(block_buildings, roads, &index, alpha, setback)
}

pub(crate) fn street_adjacency_indexed(
    block_buildings: &[&Polygon],
    roads: &[Polyline],
    index: &SpatialIndex,
    alpha: f64,
    setback: f64,
) -> Vec<bool> {
    let near_road: Vec<bool> = block_buildings
        .iter()
        .map(|b| nearest_road_distance(b, roads, index).is_some_and(|d| d <= setback))
        .collect();
    if block_buildings.len() < 3 {
        return near_road;
    }
    let pts: Vec<Point> = block_buildings.iter().flat_map(|b| b.exterior().iter().copied()).collect();
    let Ok(hull) = alpha_shape(&pts, alpha) else {
        return near_road;
    };
    block_buildings
        .iter()
        .zip(near_road)
        .map(|(b, near)| near && touches_boundary(b, &hull))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 3×3 grid of 10 m squares spaced 30 m, ringed by roads 20 m outside.
    fn fixture(dx: f64, dy: f64) -> (Vec<Polygon>, Vec<Polyline>) {
        let b: Vec<Polygon> = (0..9)
            .map(|k| {
                let (x, y) = ((k % 3) as f64 * 30.0 + dx, (k / 3) as f64 * 30.0 + dy);
                Polygon::rect(x, y, x + 10.0, y + 10.0).unwrap()
            })
            .collect();
        let (lo, hi) = (-20.0, 90.0);
        let ring = [(lo, lo), (hi, lo), (hi, hi), (lo, hi), (lo, lo)];
        let roads = ring
            .windows(2)
            .map(|w| Polyline::new(vec![Point::new(w[0].0 + dx, w[0].1 + dy), Point::new(w[1].0 + dx, w[1].1 + dy)]).unwrap())
            .collect();
        (b, roads)
    }

    #[test]
    fn outer_ring_is_adjacent() {
        let (b, roads) = fixture(0.0, 0.0);
        let refs: Vec<&Polygon> = b.iter().collect();
        let adj = street_adjacency(&refs, &roads, 0.01, 100.0);
        let expect: Vec<bool> = (0..9).map(|k| k != 4).collect();
        assert_eq!(adj, expect);
    }

    #[test]
    fn far_from_roads_is_never_adjacent() {
        let (b, _) = fixture(0.0, 0.0);
        let road = Polyline::new(vec![Point::new(-300., -300.), Point::new(-300., 400.)]).unwrap();
        let refs: Vec<&Polygon> = b.iter().collect();
        assert!(street_adjacency(&refs, &[road.clone()], 0.01, 100.0).iter().all(|&a| !a));
        // 150 m away
        let lone = Polygon::rect(-150., 0., -140., 10.).unwrap();
        assert_eq!(street_adjacency(&[&lone], &[road], 0.01, 100.0), vec![false]);
    }

    #[test]
    fn single_building_uses_setback_rule() {
        let b = Polygon::rect(0., 0., 10., 10.).unwrap();
        let road = Polyline::new(vec![Point::new(40., -100.), Point::new(40., 100.)]).unwrap();
        assert_eq!(street_adjacency(&[&b], &[road], 0.01, 100.0), vec![true]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn invariant_under_translation(dx in -5e4f64..5e4, dy in -5e4f64..5e4) {
            let (b, roads) = fixture(dx, dy);
            let refs: Vec<&Polygon> = b.iter().collect();
            let (b0, r0) = fixture(0.0, 0.0);
            let refs0: Vec<&Polygon> = b0.iter().collect();
            prop_assert_eq!(street_adjacency(&refs, &roads, 0.01, 100.0), street_adjacency(&refs0, &r0, 0.01, 100.0));
        }
    }
}
