//! Rooftop masks to a seamless vector building layer.
//!
//! Tiles are cut from the extent ([`tile_extent`]), each tile is segmented
//! into a [`BinaryMask`], components are traced into polygons
//! ([`mask_to_polygons`]) and polygons split by tile edges are stitched back
//! together ([`repair_seams`]).

mod metrics;
mod seams;
mod segmenter;
mod tiles;
mod trace;

pub use metrics::{seg_confusion, seg_metrics, SegConfusion, SegMetrics};
pub use seams::{repair_seams, SeamParams, TiledPolygon};
pub use segmenter::{segment_grid, MaskFileSegmenter, Segmenter, ThresholdSegmenter, TileRequest};
pub use tiles::{tile_extent, TileGrid};
pub use trace::{default_tolerance, label_components, mask_to_polygons, rasterize};

use crate::grid::{AsciiGrid, GridError};

#[derive(Debug, thiserror::Error)]
pub enum VectorizeError {
    #[error("extent is empty or not finite")]
    EmptyExtent,
    #[error("tile size and pixel size must be positive")]
    BadTileSize,
    #[error("mask dimensions {got:?} do not match expected {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("mask value {value} at cell {index} is not 0 or 1")]
    NotBinary { value: f64, index: usize },
    #[error("seam buffer must be positive and edge similarity in (0, 1]")]
    BadSeamParams,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Pixel grid placement: lower-left corner and square pixel size in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskTransform {
    pub x_ll: f64,
    pub y_ll: f64,
    pub pixel_size: f64,
}

/// Row-major 0/1 raster, row 0 at the north edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
    pub transform: MaskTransform,
}

impl BinaryMask {
    pub fn zeros(width: usize, height: usize, transform: MaskTransform) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
            transform,
        }
    }

    pub fn from_data(
        width: usize,
        height: usize,
        data: Vec<u8>,
        transform: MaskTransform,
    ) -> Result<Self, VectorizeError> {
        if data.len() != width * height {
            return Err(VectorizeError::DimensionMismatch {
                expected: (width, height),
                got: (data.len(), 1),
            });
        }
        if let Some(index) = data.iter().position(|&v| v > 1) {
            return Err(VectorizeError::NotBinary {
                value: data[index] as f64,
                index,
            });
        }
        Ok(Self {
            width,
            height,
            data,
            transform,
        })
    }

    /// NODATA cells read as background.
    pub fn from_grid(g: &AsciiGrid) -> Result<Self, VectorizeError> {
        let mut data = Vec::with_capacity(g.values.len());
        for (index, &v) in g.values.iter().enumerate() {
            if g.is_nodata(v) || v == 0.0 {
                data.push(0);
            } else if v == 1.0 {
                data.push(1);
            } else {
                return Err(VectorizeError::NotBinary { value: v, index });
            }
        }
        Ok(Self {
            width: g.ncols,
            height: g.nrows,
            data,
            transform: MaskTransform {
                x_ll: g.xll,
                y_ll: g.yll,
                pixel_size: g.cellsize,
            },
        })
    }

    pub fn to_grid(&self) -> AsciiGrid {
        let mut g = AsciiGrid::new(
            self.width,
            self.height,
            self.transform.x_ll,
            self.transform.y_ll,
            self.transform.pixel_size,
        );
        g.values = self.data.iter().map(|&v| v as f64).collect();
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.data[row * self.width + col] == 1
    }

    pub fn set(&mut self, col: usize, row: usize, on: bool) {
        self.data[row * self.width + col] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// World coordinates of pixel `(col, row)`'s center.
    pub fn pixel_center(&self, col: usize, row: usize) -> crate::geom::Point {
        let t = &self.transform;
        crate::geom::Point::new(
            t.x_ll + (col as f64 + 0.5) * t.pixel_size,
            t.y_ll + (self.height as f64 - row as f64 - 0.5) * t.pixel_size,
        )
    }
}
