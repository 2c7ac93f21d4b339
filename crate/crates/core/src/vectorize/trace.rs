//! Pixel-edge boundary tracing.
//!
//! Works on the lattice of pixel corners with y pointing up (lattice row
//! `Y = height - row`). Every foreground pixel side that faces a pixel outside
//! its component becomes a directed edge with the foreground on its left, so
//! outer boundaries come out counter-clockwise and holes clockwise. Where two
//! diagonal pixels pinch a vertex the trace turns right, which keeps every
//! ring simple.

use std::collections::{HashMap, VecDeque};

use crate::geom::{Point, Polygon};

use super::BinaryMask;

/// Default Douglas-Peucker tolerance: half a pixel.
pub fn default_tolerance(pixel_size: f64) -> f64 {
    0.5 * pixel_size
}

/// 4-connected component labels (row-major, 0 = background, components
/// numbered from 1 in scan order) and the component count.
pub fn label_components(m: &BinaryMask) -> (Vec<u32>, usize) {
    let (w, h) = (m.width(), m.height());
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if m.data()[start] == 0 || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (c, r) = (i % w, i / w);
            let mut visit = |j: usize| {
                if m.data()[j] == 1 && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            };
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
        }
    }
    (labels, next as usize)
}

const E: (i64, i64) = (1, 0);
const N: (i64, i64) = (0, 1);
const W: (i64, i64) = (-1, 0);
const S: (i64, i64) = (0, -1);

type Lattice = (i64, i64);

/// Rings of one component in lattice coordinates, corners only.
fn trace_component(pixels: &[usize], labels: &[u32], label: u32, w: usize, h: usize) -> Vec<Vec<Lattice>> {
    let same = |c: i64, r: i64| -> bool {
        c >= 0 && r >= 0 && (c as usize) < w && (r as usize) < h && labels[r as usize * w + c as usize] == label
    };
    // outgoing edges per lattice vertex; at most two
    let mut out: HashMap<Lattice, Vec<((i64, i64), bool)>> = HashMap::new();
    let mut order: Vec<Lattice> = Vec::new();
    let mut add = |from: Lattice, d: (i64, i64)| {
        let e = out.entry(from).or_default();
        if e.is_empty() {
            order.push(from);
        }
        e.push((d, false));
    };
    for &i in pixels {
        let (c, r) = ((i % w) as i64, (i / w) as i64);
        let y = h as i64 - 1 - r; // lattice y of the pixel's lower edge
        if !same(c, r + 1) {
            add((c, y), E);
        }
        if !same(c + 1, r) {
            add((c + 1, y), N);
        }
        if !same(c, r - 1) {
            add((c + 1, y + 1), W);
        }
        if !same(c - 1, r) {
            add((c, y + 1), S);
        }
    }
    order.sort_by_key(|&(x, y)| (std::cmp::Reverse(y), x));

    let mut rings = Vec::new();
    for &start in &order {
        loop {
            let Some(first) = out[&start].iter().position(|&(_, used)| !used) else {
                break;
            };
            let mut v = start;
            let mut k = first;
            let mut path: Vec<(Lattice, (i64, i64))> = Vec::new();
            loop {
                let edges = out.get_mut(&v).expect("traced vertex has edges");
                edges[k].1 = true;
                let d = edges[k].0;
                path.push((v, d));
                v = (v.0 + d.0, v.1 + d.1);
                if v == start {
                    break;
                }
                let edges = &out[&v];
                let free: Vec<usize> = (0..edges.len()).filter(|&j| !edges[j].1).collect();
                if free.is_empty() {
                    break;
                }
                k = if free.len() == 1 {
                    free[0]
                } else {
                    let right = (d.1, -d.0);
                    free.iter().copied().find(|&j| edges[j].0 == right).unwrap_or(free[0])
                };
            }
            // keep only corners
            let n = path.len();
            let ring: Vec<Lattice> = (0..n)
                .filter(|&i| path[(i + n - 1) % n].1 != path[i].1)
                .map(|i| path[i].0)
                .collect();
            rings.push(ring);
        }
    }
    rings
}

fn lattice_area2(ring: &[Lattice]) -> i64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum()
}

/// Traces every 4-connected foreground component into a polygon with holes,
/// then simplifies with `tolerance` (0 keeps the exact pixel outline).
/// Output follows component scan order.
pub fn mask_to_polygons(m: &BinaryMask, tolerance: f64) -> Vec<Polygon> {
    let (w, h) = (m.width(), m.height());
    let (labels, count) = label_components(m);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            members[l as usize - 1].push(i);
        }
    }
    let t = m.transform;
    let world = |ring: &[Lattice]| -> Vec<Point> {
        ring.iter()
            .map(|&(x, y)| Point::new(t.x_ll + x as f64 * t.pixel_size, t.y_ll + y as f64 * t.pixel_size))
            .collect()
    };
    let mut polys = Vec::with_capacity(count);
    for (k, pixels) in members.iter().enumerate() {
        let rings = trace_component(pixels, &labels, k as u32 + 1, w, h);
        let mut exterior = None;
        let mut holes = Vec::new();
        for ring in rings {
            if lattice_area2(&ring) > 0 {
                exterior = Some(world(&ring));
            } else {
                holes.push(world(&ring));
            }
        }
        let exterior = exterior.expect("every component has one outer ring");
        let poly = Polygon::new(exterior, holes).expect("pixel-edge rings are valid");
        polys.push(poly.simplify(tolerance));
    }
    polys
}

/// Burns polygons onto the mask grid: a pixel is set when its center lies
/// inside any polygon.
pub fn rasterize(polys: &[Polygon], like: &BinaryMask) -> BinaryMask {
    let mut out = BinaryMask::zeros(like.width(), like.height(), like.transform);
    let t = like.transform;
    let (w, h) = (like.width() as i64, like.height() as i64);
    for p in polys {
        let b = p.bbox();
        let c0 = (((b.min_x - t.x_ll) / t.pixel_size).floor() as i64).clamp(0, w);
        let c1 = (((b.max_x - t.x_ll) / t.pixel_size).ceil() as i64).clamp(0, w);
        let y0 = (((b.min_y - t.y_ll) / t.pixel_size).floor() as i64).clamp(0, h);
        let y1 = (((b.max_y - t.y_ll) / t.pixel_size).ceil() as i64).clamp(0, h);
        for py in y0..y1 {
            let row = (h - 1 - py) as usize;
            for c in c0..c1 {
                let c = c as usize;
                if !out.get(c, row) && p.contains(&like.pixel_center(c, row)) {
                    out.set(c, row, true);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::MaskTransform;
    use super::*;
    use proptest::prelude::*;

    fn tf() -> MaskTransform {
        MaskTransform {
            x_ll: 0.0,
            y_ll: 0.0,
            pixel_size: 1.0,
        }
    }

    fn mask(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        let data = rows.iter().flat_map(|r| r.bytes().map(|b| (b == b'#') as u8)).collect();
        BinaryMask::from_data(w, h, data, tf()).unwrap()
    }

    #[test]
    fn full_tile_is_one_square() {
        let m = BinaryMask::from_data(10, 10, vec![1; 100], tf()).unwrap();
        let p = mask_to_polygons(&m, 0.0);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].area(), 100.0);
        assert_eq!(p[0].exterior().len(), 4);
    }

    #[test]
    fn single_pixel() {
        let m = mask(&["...", ".#.", "..."]);
        let p = mask_to_polygons(&m, 0.5);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].area(), 1.0);
        assert_eq!(p[0].bbox(), crate::geom::BBox::new(1., 1., 2., 2.));
    }

    #[test]
    fn diagonal_pixels_are_separate() {
        let m = mask(&["#.", ".#"]);
        let (_, n) = label_components(&m);
        assert_eq!(n, 2);
        let p = mask_to_polygons(&m, 0.0);
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|q| q.area() == 1.0));
    }

    #[test]
    fn ring_with_hole_and_pinch() {
        // the hole touches the outside at a diagonal pinch
        let m = mask(&["####.", "#..##", "#...#", "#####"]);
        let p = mask_to_polygons(&m, 0.0);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].area(), m.count_ones() as f64);
        assert_eq!(rasterize(&p, &m), m);
    }

    #[test]
    fn hole_is_preserved() {
        let m = mask(&["###", "#.#", "###"]);
        let p = mask_to_polygons(&m, 0.0);
        assert_eq!(p[0].holes().len(), 1);
        assert_eq!(p[0].area(), 8.0);
    }

    fn random_mask(w: usize, h: usize, bits: &[bool]) -> BinaryMask {
        let t = MaskTransform {
            x_ll: 100.0,
            y_ll: -50.0,
            pixel_size: 0.5,
        };
        BinaryMask::from_data(w, h, bits.iter().map(|&b| b as u8).collect(), t).unwrap()
    }

    proptest! {
        #[test]
        fn raster_roundtrip_is_exact(bits in proptest::collection::vec(any::<bool>(), 12 * 9)) {
            let m = random_mask(12, 9, &bits);
            let polys = mask_to_polygons(&m, 0.0);
            let area: f64 = polys.iter().map(|p| p.area()).sum();
            prop_assert!((area - m.count_ones() as f64 * 0.25).abs() < 1e-9);
            prop_assert_eq!(polys.len(), label_components(&m).1);
            prop_assert_eq!(rasterize(&polys, &m), m);
        }

        #[test]
        fn simplified_polygons_stay_valid(bits in proptest::collection::vec(any::<bool>(), 16 * 16)) {
            let m = random_mask(16, 16, &bits);
            let polys = mask_to_polygons(&m, default_tolerance(0.5));
            prop_assert_eq!(polys.len(), label_components(&m).1);
            for p in &polys {
                prop_assert!(p.area() > 0.0);
            }
        }
    }
}
