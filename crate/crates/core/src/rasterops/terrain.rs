use super::FeatureLayer;
use crate::geoformats::{RasterDataset, RasterKind};
use crate::NODATA;

/// Horn 3x3 slope and aspect, both in degrees.
///
/// Aspect is the compass bearing of steepest descent, clockwise from north
/// in [0, 360); flat cells get nodata. Neighbors beyond the edge replicate the
/// edge cell; nodata neighbors take the center value.
pub fn slope_aspect(dem: &FeatureLayer) -> (FeatureLayer, FeatureLayer) {
    let r = &dem.raster;
    let (w, h) = (r.width, r.height);
    let (res_x, res_y) = (r.transform.pixel_w, r.transform.pixel_h);
    let mut slope = vec![NODATA; w * h];
    let mut aspect = vec![NODATA; w * h];
    for row in 0..h {
        for col in 0..w {
            let Some(center) = r.value(row, col) else {
                continue;
            };
            // z[0..9] = z1..z9, row-major from the NW corner
            let mut z = [0.0f64; 9];
            for (k, zk) in z.iter_mut().enumerate() {
                let dr = k as isize / 3 - 1;
                let dc = k as isize % 3 - 1;
                let rr = (row as isize + dr).clamp(0, h as isize - 1) as usize;
                let cc = (col as isize + dc).clamp(0, w as isize - 1) as usize;
                *zk = r.value(rr, cc).unwrap_or(center);
            }
            let dzdx = ((z[2] + 2.0 * z[5] + z[8]) - (z[0] + 2.0 * z[3] + z[6])) / (8.0 * res_x);
            // positive when elevation increases southward
            let dzdy = ((z[6] + 2.0 * z[7] + z[8]) - (z[0] + 2.0 * z[1] + z[2])) / (8.0 * res_y);
            let i = row * w + col;
            slope[i] = dzdx.hypot(dzdy).atan().to_degrees();
            if dzdx != 0.0 || dzdy != 0.0 {
                // descent vector: east = -dzdx, north = +dzdy
                let bearing = (-dzdx).atan2(dzdy).to_degrees();
                let bearing = if bearing < 0.0 { bearing + 360.0 } else { bearing };
                aspect[i] = if bearing >= 360.0 { 0.0 } else { bearing };
            }
        }
    }
    let make = |name: &str, values: Vec<f64>| {
        FeatureLayer::new(
            name,
            dem.source,
            RasterDataset {
                width: w,
                height: h,
                transform: r.transform,
                values,
                nodata: Some(NODATA),
                kind: RasterKind::Continuous,
                crs_code: r.crs_code.clone(),
            },
        )
    };
    (make("slope", slope), make("aspect", aspect))
}
