//! Rooftop masks to polygons: trace a mask, repair a tile seam, score a
//! predicted mask against truth.

use geoattrib::geom::{BBox, Polygon};
use geoattrib::vectorize::{
    mask_to_polygons, rasterize, repair_seams, seg_confusion, seg_metrics, tile_extent, BinaryMask, MaskTransform,
    SeamParams, TiledPolygon,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = MaskTransform { x_ll: 0.0, y_ll: 0.0, pixel_size: 1.0 };
    let mut truth = BinaryMask::zeros(32, 32, t);
    for r in 4..14 {
        for c in 6..26 {
            truth.set(c, r, true);
        }
    }
    let polys = mask_to_polygons(&truth, 0.5);
    println!("traced {} polygon(s), area {}", polys.len(), polys[0].area());

    let mut pred = rasterize(&polys, &truth);
    pred.set(0, 0, true);
    let m = seg_metrics(&seg_confusion(&pred, &truth)?);
    println!("precision {:.4} recall {:.4} f1 {:.4} mIoU {:.4}", m.precision, m.recall, m.f1, m.miou);

    // a rooftop split by the seam at x = 100
    let grid = tile_extent(&BBox::new(0.0, 0.0, 200.0, 100.0), 100, 1.0)?;
    let halves = [
        TiledPolygon { tile: (0, 0), polygon: Polygon::rect(90.0, 40.0, 100.0, 52.0)? },
        TiledPolygon { tile: (0, 1), polygon: Polygon::rect(100.0, 40.0, 115.0, 52.0)? },
    ];
    let merged = repair_seams(&halves, &grid, SeamParams::default())?;
    println!("seam repair: {} -> {} polygon(s), area {}", halves.len(), merged.len(), merged[0].polygon.area());
    Ok(())
}
