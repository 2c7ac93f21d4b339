use std::path::PathBuf;

use rayon::prelude::*;

use crate::geom::BBox;
use crate::grid::AsciiGrid;

use super::{mask_to_polygons, BinaryMask, MaskTransform, TileGrid, TiledPolygon, VectorizeError};

/// One tile handed to a segmenter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileRequest {
    pub row: usize,
    pub col: usize,
    pub bbox: BBox,
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
}

impl TileRequest {
    pub fn for_tile(grid: &TileGrid, row: usize, col: usize) -> Self {
        Self {
            row,
            col,
            bbox: grid.tile_bbox(row, col),
            width: grid.tile_size_px,
            height: grid.tile_size_px,
            pixel_size: grid.pixel_size,
        }
    }

    pub fn transform(&self) -> MaskTransform {
        MaskTransform {
            x_ll: self.bbox.min_x,
            y_ll: self.bbox.min_y,
            pixel_size: self.pixel_size,
        }
    }
}

/// Produces a rooftop mask for a tile. Stands in for the segmentation network.
pub trait Segmenter: Sync {
    fn run(&self, tile: &TileRequest) -> Result<BinaryMask, VectorizeError>;
}

/// Reads precomputed masks named `tile_r{row}_c{col}.asc` from a directory.
/// A missing file means the tile has no buildings.
#[derive(Debug, Clone)]
pub struct MaskFileSegmenter {
    pub dir: PathBuf,
}

impl MaskFileSegmenter {
    pub fn file_name(row: usize, col: usize) -> String {
        format!("tile_r{row}_c{col}.asc")
    }
}

impl Segmenter for MaskFileSegmenter {
    fn run(&self, tile: &TileRequest) -> Result<BinaryMask, VectorizeError> {
        let path = self.dir.join(Self::file_name(tile.row, tile.col));
        if !path.exists() {
            return Ok(BinaryMask::zeros(tile.width, tile.height, tile.transform()));
        }
        let mut m = BinaryMask::from_grid(&AsciiGrid::read(&path)?)?;
        if (m.width(), m.height()) != (tile.width, tile.height) {
            return Err(VectorizeError::DimensionMismatch {
                expected: (tile.width, tile.height),
                got: (m.width(), m.height()),
            });
        }
        // the tile grid is authoritative for placement
        m.transform = tile.transform();
        Ok(m)
    }
}

/// Thresholds a score raster covering the whole extent: a pixel is building
/// when its score is at least `threshold`. Pixels off the raster are background.
#[derive(Debug, Clone)]
pub struct ThresholdSegmenter {
    pub scores: AsciiGrid,
    pub threshold: f64,
}

impl Segmenter for ThresholdSegmenter {
    fn run(&self, tile: &TileRequest) -> Result<BinaryMask, VectorizeError> {
        let mut m = BinaryMask::zeros(tile.width, tile.height, tile.transform());
        for row in 0..tile.height {
            for col in 0..tile.width {
                let c = m.pixel_center(col, row);
                if let Some((gc, gr)) = self.scores.cell_of(c.x, c.y) {
                    let v = self.scores.get(gc, gr);
                    if !self.scores.is_nodata(v) && v >= self.threshold {
                        m.set(col, row, true);
                    }
                }
            }
        }
        Ok(m)
    }
}

/// Segments and vectorizes every tile. Tiles run in parallel; output is
/// ordered by (tile row, tile col, component id).
pub fn segment_grid(
    grid: &TileGrid,
    segmenter: &dyn Segmenter,
    tolerance: f64,
) -> Result<Vec<TiledPolygon>, VectorizeError> {
    let tiles: Vec<(usize, usize)> = grid.tiles().collect();
    let per_tile: Vec<Result<Vec<TiledPolygon>, VectorizeError>> = tiles
        .par_iter()
        .map(|&(row, col)| {
            let req = TileRequest::for_tile(grid, row, col);
            let m = segmenter.run(&req)?;
            if (m.width(), m.height()) != (req.width, req.height) {
                return Err(VectorizeError::DimensionMismatch {
                    expected: (req.width, req.height),
                    got: (m.width(), m.height()),
                });
            }
            Ok(mask_to_polygons(&m, tolerance)
                .into_iter()
                .map(|polygon| TiledPolygon {
                    tile: (row, col),
                    polygon,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_tile {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tile_extent;
    use super::*;

    #[test]
    fn threshold_segmenter_splits_building_across_tiles() {
        let mut scores = AsciiGrid::new(20, 10, 0.0, 0.0, 1.0);
        for r in 3..7 {
            for c in 5..15 {
                scores.set(c, r, 0.9);
            }
        }
        let grid = tile_extent(&BBox::new(0., 0., 20., 10.), 10, 1.0).unwrap();
        let seg = ThresholdSegmenter { scores, threshold: 0.5 };
        let polys = segment_grid(&grid, &seg, 0.0).unwrap();
        assert_eq!(polys.len(), 2);
        assert_eq!(polys[0].tile, (0, 0));
        assert_eq!(polys[1].tile, (0, 1));
        assert_eq!(polys.iter().map(|p| p.polygon.area()).sum::<f64>(), 40.0);
    }

    #[test]
    fn mask_files_are_read_and_checked() {
        let dir = tempfile::tempdir().unwrap();
        let grid = tile_extent(&BBox::new(0., 0., 8., 4.), 4, 1.0).unwrap();
        let mut g = AsciiGrid::new(4, 4, 0.0, 0.0, 1.0);
        g.set(1, 1, 1.0);
        g.write(&dir.path().join("tile_r0_c1.asc")).unwrap();
        let seg = MaskFileSegmenter {
            dir: dir.path().to_path_buf(),
        };
        let polys = segment_grid(&grid, &seg, 0.0).unwrap();
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].tile, (0, 1));
        assert_eq!(polys[0].polygon.bbox(), BBox::new(5., 2., 6., 3.));

        AsciiGrid::new(3, 4, 0.0, 0.0, 1.0)
            .write(&dir.path().join("tile_r0_c0.asc"))
            .unwrap();
        assert!(matches!(
            segment_grid(&grid, &seg, 0.0),
            Err(VectorizeError::DimensionMismatch { .. })
        ));
    }
}
