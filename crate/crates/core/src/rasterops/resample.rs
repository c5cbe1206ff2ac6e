use std::collections::BTreeMap;

use super::{FeatureLayer, Source};
use crate::error::{Error, Result};
use crate::geoformats::{RasterDataset, RasterKind};
use crate::grid::ParkGrid;
use crate::NODATA;

/// Aggregates a finer source raster onto the park grid.
///
/// Each source pixel is assigned to the grid cell containing its center.
/// Continuous layers take the mean of contributing pixels, categorical layers
/// the mode with ties going to the smallest category. Cells without any
/// contributing pixel, and unmasked cells, are nodata.
pub fn resample_to_grid(
    src: &RasterDataset,
    grid: &ParkGrid,
    kind: RasterKind,
    name: &str,
    source: Source,
) -> Result<FeatureLayer> {
    let res = grid.resolution;
    let (sw, sh) = (src.transform.pixel_w, src.transform.pixel_h);
    if sw > res * (1.0 + 1e-9) || sh > res * (1.0 + 1e-9) {
        return Err(Error::Raster(format!(
            "{name}: source pixels {sw}x{sh} m are coarser than the {res} m grid"
        )));
    }
    let n = grid.n_cells();
    let mut sums = vec![0.0f64; n];
    let mut counts = vec![0usize; n];
    let mut votes: Vec<BTreeMap<i64, usize>> = match kind {
        RasterKind::Categorical => vec![BTreeMap::new(); n],
        RasterKind::Continuous => Vec::new(),
    };
    let mut inside_grid = 0usize;
    for row in 0..src.height {
        for col in 0..src.width {
            let Some(cell) = grid.locate(src.transform.pixel_center(row, col)) else {
                continue;
            };
            inside_grid += 1;
            let flat = cell.0 * grid.width + cell.1;
            if !grid.mask()[flat] {
                continue;
            }
            let Some(v) = src.value(row, col) else {
                continue;
            };
            match kind {
                RasterKind::Continuous => {
                    sums[flat] += v;
                    counts[flat] += 1;
                }
                RasterKind::Categorical => {
                    if v.fract() != 0.0 {
                        return Err(Error::Raster(format!(
                            "{name}: categorical source holds non-integral value {v}"
                        )));
                    }
                    *votes[flat].entry(v as i64).or_default() += 1;
                }
            }
        }
    }
    if inside_grid == 0 {
        return Err(Error::Raster(format!("{name}: source raster lies entirely outside the grid")));
    }
    let values = (0..n)
        .map(|flat| match kind {
            RasterKind::Continuous if counts[flat] > 0 => sums[flat] / counts[flat] as f64,
            RasterKind::Categorical => {
                let mut best: Option<(i64, usize)> = None;
                for (&cat, &count) in &votes[flat] {
                    if best.is_none_or(|(_, c)| count > c) {
                        best = Some((cat, count));
                    }
                }
                best.map_or(NODATA, |(cat, _)| cat as f64)
            }
            _ => NODATA,
        })
        .collect();
    let raster = RasterDataset {
        width: grid.width,
        height: grid.height,
        transform: grid.transform,
        values,
        nodata: Some(NODATA),
        kind,
        crs_code: src.crs_code.clone(),
    };
    Ok(FeatureLayer::new(name, source, raster))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoformats::GeoTransform;

    fn grid(w: usize, h: usize) -> ParkGrid {
        let t = GeoTransform::new(0.0, h as f64 * 1000.0, 1000.0, 1000.0).unwrap();
        ParkGrid::from_mask(t, w, h, vec![true; w * h]).unwrap()
    }

    fn src(w: usize, h: usize, px: f64, values: Vec<f64>, kind: RasterKind) -> RasterDataset {
        let t = GeoTransform::new(0.0, h as f64 * px, px, px).unwrap();
        RasterDataset::new(w, h, t, values, Some(-1.0), kind).unwrap()
    }

    #[test]
    fn constant_preserved() {
        let g = grid(3, 2);
        let s = src(6, 4, 500.0, vec![5.0; 24], RasterKind::Continuous);
        let l = resample_to_grid(&s, &g, RasterKind::Continuous, "c", Source::Park).unwrap();
        assert!(l.raster.values.iter().all(|v| *v == 5.0));
        assert!(l.is_aligned(&g));
    }

    #[test]
    fn block_mean() {
        let g = grid(1, 1);
        let s = src(2, 2, 500.0, vec![1.0, 2.0, 3.0, 4.0], RasterKind::Continuous);
        let l = resample_to_grid(&s, &g, RasterKind::Continuous, "c", Source::Park).unwrap();
        assert_eq!(l.raster.values, vec![2.5]);
    }

    #[test]
    fn nodata_pixels_skipped() {
        let g = grid(1, 1);
        let s = src(2, 2, 500.0, vec![1.0, -1.0, 3.0, -1.0], RasterKind::Continuous);
        let l = resample_to_grid(&s, &g, RasterKind::Continuous, "c", Source::Park).unwrap();
        assert_eq!(l.raster.values, vec![2.0]);
        let s = src(2, 2, 500.0, vec![-1.0; 4], RasterKind::Continuous);
        let l = resample_to_grid(&s, &g, RasterKind::Continuous, "c", Source::Park).unwrap();
        assert_eq!(l.raster.values, vec![NODATA]);
    }

    #[test]
    fn categorical_mode_and_tie() {
        let g = grid(1, 1);
        let s = src(3, 1, 333.0, vec![1.0, 1.0, 2.0], RasterKind::Categorical);
        let l = resample_to_grid(&s, &g, RasterKind::Categorical, "c", Source::Park).unwrap();
        assert_eq!(l.raster.values, vec![1.0]);
        let s = src(2, 1, 500.0, vec![2.0, 1.0], RasterKind::Categorical);
        let l = resample_to_grid(&s, &g, RasterKind::Categorical, "c", Source::Park).unwrap();
        assert_eq!(l.raster.values, vec![1.0]);
    }

    #[test]
    fn outside_or_coarse_rejected() {
        let g = grid(2, 2);
        let t = GeoTransform::new(1e6, 1e6, 500.0, 500.0).unwrap();
        let far = RasterDataset::new(2, 2, t, vec![1.0; 4], None, RasterKind::Continuous).unwrap();
        assert!(resample_to_grid(&far, &g, RasterKind::Continuous, "c", Source::Park).is_err());
        let coarse = src(1, 1, 2000.0, vec![1.0], RasterKind::Continuous);
        assert!(resample_to_grid(&coarse, &g, RasterKind::Continuous, "c", Source::Park).is_err());
    }

    #[test]
    fn unmasked_cells_are_nodata() {
        let t = GeoTransform::new(0.0, 1000.0, 1000.0, 1000.0).unwrap();
        let g = ParkGrid::from_mask(t, 2, 1, vec![true, false]).unwrap();
        let s = src(4, 2, 500.0, vec![3.0; 8], RasterKind::Continuous);
        let l = resample_to_grid(&s, &g, RasterKind::Continuous, "c", Source::Park).unwrap();
        assert_eq!(l.raster.values, vec![3.0, NODATA]);
    }
}
