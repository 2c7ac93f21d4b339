use crate::geom::{BBox, Point};

use super::VectorizeError;

/// Regular tiling of an extent. Tile `(row, col)` has row 0 at the south
/// edge and col 0 at the west edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileGrid {
    pub origin: Point,
    pub tile_size_px: usize,
    pub pixel_size: f64,
    pub rows: usize,
    pub cols: usize,
}

/// Minimal grid of `tile_size_px` tiles covering `extent`, anchored at its
/// lower-left corner.
pub fn tile_extent(extent: &BBox, tile_size_px: usize, pixel_size: f64) -> Result<TileGrid, VectorizeError> {
    if tile_size_px == 0 || !(pixel_size > 0.0) || !pixel_size.is_finite() {
        return Err(VectorizeError::BadTileSize);
    }
    let (w, h) = (extent.width(), extent.height());
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(VectorizeError::EmptyExtent);
    }
    let tile_m = tile_size_px as f64 * pixel_size;
    // 1e-9 slack so exact multiples do not pick up an extra tile from rounding
    let count = |len: f64| ((len / tile_m - 1e-9).ceil() as usize).max(1);
    Ok(TileGrid {
        origin: Point::new(extent.min_x, extent.min_y),
        tile_size_px,
        pixel_size,
        rows: count(h),
        cols: count(w),
    })
}

impl TileGrid {
    pub fn tile_meters(&self) -> f64 {
        self.tile_size_px as f64 * self.pixel_size
    }

    pub fn tile_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Tiles in (row, col) order.
    pub fn tiles(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| (r, c)))
    }

    pub fn tile_bbox(&self, row: usize, col: usize) -> BBox {
        let t = self.tile_meters();
        let x0 = self.origin.x + col as f64 * t;
        let y0 = self.origin.y + row as f64 * t;
        BBox::new(x0, y0, x0 + t, y0 + t)
    }

    pub fn bbox(&self) -> BBox {
        let t = self.tile_meters();
        BBox::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.cols as f64 * t,
            self.origin.y + self.rows as f64 * t,
        )
    }

    /// Tile containing `p`; points on an interior edge go to the east/north tile.
    pub fn tile_of(&self, p: &Point) -> Option<(usize, usize)> {
        let t = self.tile_meters();
        let fc = (p.x - self.origin.x) / t;
        let fr = (p.y - self.origin.y) / t;
        if !(fc >= 0.0 && fr >= 0.0) {
            return None;
        }
        let (c, r) = (fc.floor() as usize, fr.floor() as usize);
        (c < self.cols && r < self.rows).then_some((r, c))
    }

    /// Interior vertical seam x-coordinates.
    pub fn seam_xs(&self) -> Vec<f64> {
        let t = self.tile_meters();
        (1..self.cols).map(|k| self.origin.x + k as f64 * t).collect()
    }

    /// Interior horizontal seam y-coordinates.
    pub fn seam_ys(&self) -> Vec<f64> {
        let t = self.tile_meters();
        (1..self.rows).map(|k| self.origin.y + k as f64 * t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_division() {
        let g = tile_extent(&BBox::new(0., 0., 1000., 1000.), 500, 1.0).unwrap();
        assert_eq!((g.rows, g.cols), (2, 2));
    }

    #[test]
    fn ceiling_rule() {
        let g = tile_extent(&BBox::new(0., 0., 1001., 1000.), 500, 1.0).unwrap();
        assert_eq!((g.cols, g.rows), (3, 2));
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            tile_extent(&BBox::new(0., 0., 0., 10.), 500, 1.0),
            Err(VectorizeError::EmptyExtent)
        ));
        assert!(tile_extent(&BBox::new(0., 0., 10., 10.), 0, 1.0).is_err());
        assert!(tile_extent(&BBox::new(0., 0., 10., 10.), 5, -1.0).is_err());
    }

    #[test]
    fn tile_lookup_and_seams() {
        let g = tile_extent(&BBox::new(0., 0., 1000., 600.), 500, 1.0).unwrap();
        assert_eq!(g.tile_of(&Point::new(10., 10.)), Some((0, 0)));
        assert_eq!(g.tile_of(&Point::new(600., 550.)), Some((1, 1)));
        assert_eq!(g.seam_xs(), vec![500.0]);
        assert_eq!(g.seam_ys(), vec![500.0]);
    }

    proptest! {
        #[test]
        fn tiles_cover_and_do_not_overlap(
            x0 in -1e4f64..1e4, y0 in -1e4f64..1e4,
            w in 1f64..3000.0, h in 1f64..3000.0,
            px in 100usize..600, ps in 0.3f64..2.0,
        ) {
            let ext = BBox::new(x0, y0, x0 + w, y0 + h);
            let g = tile_extent(&ext, px, ps).unwrap();
            let all = g.bbox();
            prop_assert!(all.min_x <= ext.min_x && all.min_y <= ext.min_y);
            prop_assert!(all.max_x >= ext.max_x - 1e-6 && all.max_y >= ext.max_y - 1e-6);
            // minimal: dropping a row or column would leave the extent uncovered
            let t = g.tile_meters();
            prop_assert!((g.cols as f64 - 1.0) * t < w + 1e-6);
            prop_assert!((g.rows as f64 - 1.0) * t < h + 1e-6);
            let tiles: Vec<_> = g.tiles().map(|(r, c)| g.tile_bbox(r, c)).collect();
            let area: f64 = tiles.iter().map(|b| b.width() * b.height()).sum();
            prop_assert!((area - all.width() * all.height()).abs() <= 1e-6 * area);
            for (i, a) in tiles.iter().enumerate() {
                for b in &tiles[i + 1..] {
                    let ox = a.max_x.min(b.max_x) - a.min_x.max(b.min_x);
                    let oy = a.max_y.min(b.max_y) - a.min_y.max(b.min_y);
                    prop_assert!(ox <= 1e-6 || oy <= 1e-6);
                }
            }
        }
    }
}
