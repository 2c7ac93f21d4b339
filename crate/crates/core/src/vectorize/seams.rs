//! Seam repair: polygons cut by tile edges are stitched back together.
//!
//! A boundary segment is a seam segment when both endpoints lie within
//! `seam_buffer` of an interior tile edge. Two polygons from different tiles
//! merge when a pair of their seam segments on the same edge overlaps, along
//! the edge, by at least `edge_similarity` of the shorter segment and the gap
//! between them is at most `seam_buffer`. Gaps are bridged with a quad over
//! the overlapping stretch before the union.

use crate::geom::{GeomError, Point, Polygon};

use super::{TileGrid, VectorizeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamParams {
    pub seam_buffer: f64,
    pub edge_similarity: f64,
}

impl Default for SeamParams {
    fn default() -> Self {
        Self {
            seam_buffer: 2.0,
            edge_similarity: 0.5,
        }
    }
}

/// A polygon tagged with the `(row, col)` tile it was traced in.
#[derive(Debug, Clone, PartialEq)]
pub struct TiledPolygon {
    pub tile: (usize, usize),
    pub polygon: Polygon,
}

#[derive(Debug, Clone, Copy)]
struct SeamSeg {
    /// false: vertical edge (along y), true: horizontal edge (along x)
    horizontal: bool,
    seam: usize,
    lo: f64,
    hi: f64,
    a: Point,
    b: Point,
}

impl SeamSeg {
    fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Cross-seam coordinate of the segment at along-seam position `t`.
    fn across(&self, t: f64) -> f64 {
        let (a_t, b_t, a_c, b_c) = if self.horizontal {
            (self.a.x, self.b.x, self.a.y, self.b.y)
        } else {
            (self.a.y, self.b.y, self.a.x, self.b.x)
        };
        a_c + (t - a_t) * (b_c - a_c) / (b_t - a_t)
    }

    fn point(&self, t: f64, c: f64) -> Point {
        if self.horizontal {
            Point::new(t, c)
        } else {
            Point::new(c, t)
        }
    }
}

fn seam_segments(p: &Polygon, xs: &[f64], ys: &[f64], buf: f64) -> Vec<SeamSeg> {
    let mut out = Vec::new();
    for (a, b) in p.exterior_segments() {
        for (k, &sx) in xs.iter().enumerate() {
            if (a.x - sx).abs() <= buf && (b.x - sx).abs() <= buf && (a.y - b.y).abs() > 1e-9 {
                out.push(SeamSeg {
                    horizontal: false,
                    seam: k,
                    lo: a.y.min(b.y),
                    hi: a.y.max(b.y),
                    a,
                    b,
                });
            }
        }
        for (k, &sy) in ys.iter().enumerate() {
            if (a.y - sy).abs() <= buf && (b.y - sy).abs() <= buf && (a.x - b.x).abs() > 1e-9 {
                out.push(SeamSeg {
                    horizontal: true,
                    seam: k,
                    lo: a.x.min(b.x),
                    hi: a.x.max(b.x),
                    a,
                    b,
                });
            }
        }
    }
    out
}

/// Returns `Some(bridge)` when the two segments match; the bridge is `None`
/// when they already abut.
fn match_segments(s: &SeamSeg, t: &SeamSeg, params: &SeamParams) -> Option<Option<Polygon>> {
    if s.horizontal != t.horizontal || s.seam != t.seam {
        return None;
    }
    let (lo, hi) = (s.lo.max(t.lo), s.hi.min(t.hi));
    let overlap = hi - lo;
    if overlap <= 0.0 || overlap / s.len().min(t.len()) < params.edge_similarity {
        return None;
    }
    let (s0, s1, t0, t1) = (s.across(lo), s.across(hi), t.across(lo), t.across(hi));
    if (s0 - t0).abs() > params.seam_buffer || (s1 - t1).abs() > params.seam_buffer {
        return None;
    }
    let quad = vec![s.point(lo, s0), s.point(lo, t0), s.point(hi, t1), s.point(hi, s1)];
    Some(Polygon::from_ring(quad).ok())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Removes vertices lying on the straight line through their neighbours.
fn drop_collinear(ring: &[Point]) -> Vec<Point> {
    let mut r: Vec<Point> = ring.to_vec();
    let mut changed = true;
    while changed && r.len() > 3 {
        changed = false;
        let n = r.len();
        for i in 0..n {
            let (p, v, q) = (r[(i + n - 1) % n], r[i], r[(i + 1) % n]);
            let scale = p.distance(&v).max(v.distance(&q)).max(1.0);
            let cr = (v.x - p.x) * (q.y - p.y) - (v.y - p.y) * (q.x - p.x);
            if cr.abs() <= 1e-9 * scale * scale {
                r.remove(i);
                changed = true;
                break;
            }
        }
    }
    r
}

fn tidy(p: Polygon) -> Polygon {
    let ext = drop_collinear(p.exterior());
    let holes = p.holes().iter().map(|h| drop_collinear(h)).collect();
    Polygon::new(ext, holes).unwrap_or(p)
}

fn merge(parts: &[Polygon]) -> Result<Polygon, GeomError> {
    crate::geom::union_single(parts).map(tidy)
}

/// Stitches polygons split by tile edges. Merged polygons take the tile and
/// position of their first member; everything else passes through unchanged.
pub fn repair_seams(
    polys: &[TiledPolygon],
    grid: &TileGrid,
    params: SeamParams,
) -> Result<Vec<TiledPolygon>, VectorizeError> {
    if !(params.seam_buffer > 0.0) || !(params.edge_similarity > 0.0 && params.edge_similarity <= 1.0) {
        return Err(VectorizeError::BadSeamParams);
    }
    let (xs, ys) = (grid.seam_xs(), grid.seam_ys());
    let segs: Vec<Vec<SeamSeg>> = polys
        .iter()
        .map(|p| seam_segments(&p.polygon, &xs, &ys, params.seam_buffer))
        .collect();
    let candidates: Vec<usize> = (0..polys.len()).filter(|&i| !segs[i].is_empty()).collect();
    let index = crate::geom::SpatialIndex::build(
        candidates
            .iter()
            .map(|&i| (i, polys[i].polygon.bbox().inflate(params.seam_buffer))),
    );

    let mut parent: Vec<usize> = (0..polys.len()).collect();
    let mut bridges: Vec<(usize, Polygon)> = Vec::new();
    for &i in &candidates {
        for j in index.query(&polys[i].polygon.bbox().inflate(params.seam_buffer)) {
            if j <= i || polys[i].tile == polys[j].tile {
                continue;
            }
            let mut matched = false;
            for s in &segs[i] {
                for t in &segs[j] {
                    if let Some(bridge) = match_segments(s, t, &params) {
                        matched = true;
                        if let Some(b) = bridge {
                            bridges.push((i, b));
                        }
                    }
                }
            }
            if matched {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let roots: Vec<usize> = (0..polys.len()).map(|i| find(&mut parent, i)).collect();
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &r) in roots.iter().enumerate() {
        groups.entry(r).or_default().push(i);
    }
    let mut out = Vec::with_capacity(groups.len());
    for i in 0..polys.len() {
        let members = &groups[&roots[i]];
        if members.len() == 1 {
            out.push(polys[i].clone());
            continue;
        }
        if members[0] != i {
            continue;
        }
        let mut parts: Vec<Polygon> = members.iter().map(|&m| polys[m].polygon.clone()).collect();
        parts.extend(
            bridges
                .iter()
                .filter(|(owner, _)| roots[*owner] == roots[i])
                .map(|(_, b)| b.clone()),
        );
        match merge(&parts) {
            Ok(polygon) => out.push(TiledPolygon {
                tile: polys[i].tile,
                polygon,
            }),
            // a union that does not come out as one piece is left alone
            Err(_) => out.extend(members.iter().map(|&m| polys[m].clone())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tile_extent;
    use super::*;
    use crate::geom::BBox;
    use proptest::prelude::*;

    fn grid() -> TileGrid {
        // 2×2 tiles of 100 m, seams at x = 100 and y = 100
        tile_extent(&BBox::new(0., 0., 200., 200.), 100, 1.0).unwrap()
    }

    fn tp(tile: (usize, usize), x0: f64, y0: f64, x1: f64, y1: f64) -> TiledPolygon {
        TiledPolygon {
            tile,
            polygon: Polygon::rect(x0, y0, x1, y1).unwrap(),
        }
    }

    #[test]
    fn split_rectangle_is_rejoined() {
        let polys = [tp((0, 0), 95., 50., 100., 54.), tp((0, 1), 100., 50., 105., 54.)];
        let out = repair_seams(&polys, &grid(), SeamParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].polygon.area() - 40.0).abs() < 1e-6);
        assert_eq!(out[0].polygon.exterior().len(), 4);
        assert_eq!(out[0].tile, (0, 0));
    }

    #[test]
    fn far_apart_polygons_unchanged() {
        let polys = [tp((0, 0), 40., 50., 50., 54.), tp((0, 1), 150., 50., 160., 54.)];
        let out = repair_seams(&polys, &grid(), SeamParams::default()).unwrap();
        assert_eq!(out, polys.to_vec());
    }

    #[test]
    fn low_edge_overlap_not_merged() {
        // shared edge overlaps 1 m of the shorter 10 m edge: ratio 0.1
        let polys = [tp((0, 0), 90., 0., 100., 10.), tp((0, 1), 100., 9., 110., 19.)];
        let out = repair_seams(&polys, &grid(), SeamParams::default()).unwrap();
        assert_eq!(out, polys.to_vec());
    }

    #[test]
    fn gap_is_bridged_within_bound() {
        let polys = [tp((0, 0), 90., 20., 99.5, 30.), tp((0, 1), 100.5, 20., 110., 30.)];
        let out = repair_seams(&polys, &grid(), SeamParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        let before: f64 = polys.iter().map(|p| p.polygon.area()).sum();
        let gain = out[0].polygon.area() - before;
        assert!(gain > 0.0 && gain <= 2.0 * 10.0 + 1e-9, "{gain}");
    }

    #[test]
    fn four_way_corner_merges_once() {
        let polys = [
            tp((0, 0), 95., 95., 100., 100.),
            tp((0, 1), 100., 95., 105., 100.),
            tp((1, 0), 95., 100., 100., 105.),
            tp((1, 1), 100., 100., 105., 105.),
        ];
        let out = repair_seams(&polys, &grid(), SeamParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].polygon.area() - 100.0).abs() < 1e-6);
    }

    #[test]
    fn bad_params_rejected() {
        let p = SeamParams {
            seam_buffer: 0.0,
            edge_similarity: 0.5,
        };
        assert!(repair_seams(&[], &grid(), p).is_err());
        let p = SeamParams {
            seam_buffer: 1.0,
            edge_similarity: 1.5,
        };
        assert!(repair_seams(&[], &grid(), p).is_err());
    }

    fn cut(r: (f64, f64, f64, f64)) -> Vec<TiledPolygon> {
        // cut an axis-aligned rectangle at the seams into per-tile pieces
        let (x0, y0, x1, y1) = r;
        let xs = [x0, 100.0_f64.clamp(x0, x1), x1];
        let ys = [y0, 100.0_f64.clamp(y0, y1), y1];
        let mut out = Vec::new();
        for (ri, w) in ys.windows(2).enumerate() {
            for (ci, v) in xs.windows(2).enumerate() {
                if v[1] > v[0] && w[1] > w[0] {
                    let tile = (usize::from(ri == 1 || w[0] >= 100.0), usize::from(ci == 1 || v[0] >= 100.0));
                    out.push(tp(tile, v[0], w[0], v[1], w[1]));
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn repair_is_idempotent_and_area_preserving(
            rects in proptest::collection::vec((60i32..140, 60i32..140, 2i32..30, 2i32..30), 1..6)
        ) {
            let mut polys = Vec::new();
            for (x, y, w, h) in rects {
                let r = (x as f64, y as f64, (x + w) as f64, (y + h) as f64);
                // keep the fixture free of overlaps between rectangles
                let b = BBox::new(r.0, r.1, r.2, r.3);
                if polys.iter().any(|p: &TiledPolygon| p.polygon.bbox().inflate(3.0).intersects(&b)) {
                    continue;
                }
                polys.extend(cut(r));
            }
            let once = repair_seams(&polys, &grid(), SeamParams::default()).unwrap();
            let twice = repair_seams(&once, &grid(), SeamParams::default()).unwrap();
            prop_assert!(once.len() <= polys.len());
            prop_assert_eq!(&once, &twice);
            let a0: f64 = polys.iter().map(|p| p.polygon.area()).sum();
            let a1: f64 = once.iter().map(|p| p.polygon.area()).sum();
            prop_assert!((a0 - a1).abs() < 1e-6);
        }
    }
}
