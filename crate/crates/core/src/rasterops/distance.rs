//! Euclidean distance layers: to vector features and to source cells.

use rayon::prelude::*;

use super::{FeatureLayer, Source};
use crate::error::{Error, Result};
use crate::geoformats::{Geometry, Point2, RasterDataset, RasterKind, VectorDataset};
use crate::grid::{point_in_polygon, ParkGrid};
use crate::NODATA;

/// Which cells of a source layer count as features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellPredicate {
    AtLeast(f64),
    Equals(f64),
}

impl CellPredicate {
    pub fn matches(self, v: f64) -> bool {
        match self {
            CellPredicate::AtLeast(t) => v >= t,
            CellPredicate::Equals(c) => v == c,
        }
    }
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0);
    p.distance(Point2::new(a.x + t * vx, a.y + t * vy))
}

fn polyline_distance(p: Point2, pts: &[Point2]) -> f64 {
    pts.windows(2)
        .map(|s| segment_distance(p, s[0], s[1]))
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn geometry_distance(p: Point2, g: &Geometry) -> f64 {
    match g {
        Geometry::Point(q) => p.distance(*q),
        Geometry::Polyline(pts) => polyline_distance(p, pts),
        Geometry::Polygon(rings) => {
            if point_in_polygon(p, g) {
                0.0
            } else {
                rings
                    .iter()
                    .map(|r| polyline_distance(p, r))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Exact distance in meters from each masked cell center to the nearest
/// geometry. Polygons count as zero distance for centers inside them.
pub fn distance_to_geometries(
    grid: &ParkGrid,
    features: &VectorDataset,
    name: &str,
    source: Source,
) -> Result<FeatureLayer> {
    if features.is_empty() {
        return Err(Error::Raster(format!("{name}: no geometries to measure distance to")));
    }
    let values: Vec<f64> = (0..grid.n_cells())
        .into_par_iter()
        .map(|flat| {
            if !grid.mask()[flat] {
                return NODATA;
            }
            let c = grid.transform.pixel_center(flat / grid.width, flat % grid.width);
            features
                .geometries
                .iter()
                .map(|g| geometry_distance(c, g))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(FeatureLayer::new(name, source, grid_raster(grid, values)))
}

/// Distance in meters from each masked cell center to the nearest center of
/// a cell whose source value satisfies `predicate`.
///
/// Uses the exact separable squared-distance transform (lower envelope of
/// parabolas, one pass per axis) in cell units, then scales by resolution.
pub fn distance_to_cells(
    grid: &ParkGrid,
    source_layer: &FeatureLayer,
    predicate: CellPredicate,
    name: &str,
    source: Source,
) -> Result<FeatureLayer> {
    source_layer.ensure_aligned(grid)?;
    let (w, h) = (grid.width, grid.height);
    let r = &source_layer.raster;
    let seeds: Vec<bool> = r.values.iter().map(|&v| r.is_valid(v) && predicate.matches(v)).collect();
    if !seeds.iter().any(|s| *s) {
        return Err(Error::Raster(format!(
            "{name}: no cell of {:?} satisfies {predicate:?}",
            source_layer.name
        )));
    }
    let sq = squared_edt(&seeds, w, h);
    let res = grid.resolution;
    let values = (0..w * h)
        .map(|i| if grid.mask()[i] { sq[i].sqrt() * res } else { NODATA })
        .collect();
    Ok(FeatureLayer::new(name, source, grid_raster(grid, values)))
}

fn grid_raster(grid: &ParkGrid, values: Vec<f64>) -> RasterDataset {
    RasterDataset {
        width: grid.width,
        height: grid.height,
        transform: grid.transform,
        values,
        nodata: Some(NODATA),
        kind: RasterKind::Continuous,
        crs_code: String::new(),
    }
}

/// Squared distance (in cells) to the nearest seed, exact.
fn squared_edt(seeds: &[bool], w: usize, h: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let mut line = Vec::new();
    let mut out = Vec::new();
    for col in 0..w {
        line.clear();
        line.extend((0..h).map(|row| grid[row * w + col]));
        edt_1d(&line, &mut out);
        for row in 0..h {
            grid[row * w + col] = out[row];
        }
    }
    for row in 0..h {
        line.clear();
        line.extend_from_slice(&grid[row * w..(row + 1) * w]);
        edt_1d(&line, &mut out);
        grid[row * w..(row + 1) * w].copy_from_slice(&out);
    }
    grid
}

/// 1-D lower envelope of parabolas `f[q] + (p - q)^2`.
fn edt_1d(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let sites: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if sites.is_empty() {
        return;
    }
    let mut v: Vec<usize> = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    let intersect = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    for &q in &sites {
        while let Some(&p) = v.last() {
            let s = intersect(q, p);
            if v.len() > 1 && s <= z[z.len() - 1] {
                v.pop();
                z.pop();
            } else {
                break;
            }
        }
        if let Some(&p) = v.last() {
            z.push(intersect(q, p));
        }
        v.push(q);
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while k < z.len() && z[k] < p as f64 {
            k += 1;
        }
        let q = v[k];
        let d = p as f64 - q as f64;
        *o = d * d + f[q];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoformats::GeoTransform;

    fn full_grid(w: usize, h: usize) -> ParkGrid {
        let t = GeoTransform::new(0.0, h as f64 * 1000.0, 1000.0, 1000.0).unwrap();
        ParkGrid::from_mask(t, w, h, vec![true; w * h]).unwrap()
    }

    #[test]
    fn point_distances() {
        let p = Point2::new(0.0, 0.0);
        assert_eq!(geometry_distance(Point2::new(3000.0, 4000.0), &Geometry::Point(p)), 5000.0);
        let seg = Geometry::Polyline(vec![Point2::new(0.0, 0.0), Point2::new(10_000.0, 0.0)]);
        assert_eq!(geometry_distance(Point2::new(5000.0, 2000.0), &seg), 2000.0);
        assert_eq!(geometry_distance(Point2::new(-3000.0, 4000.0), &seg), 5000.0);
    }

    #[test]
    fn point_at_center_is_zero() {
        let g = full_grid(4, 4);
        let v = VectorDataset::new(vec![Geometry::Point(Point2::new(1500.0, 2500.0))]).unwrap();
        let l = distance_to_geometries(&g, &v, "d", Source::Park).unwrap();
        assert_eq!(l.raster.get(1, 1), 0.0);
        assert_eq!(l.raster.get(1, 2), 1000.0);
    }

    #[test]
    fn polygon_interior_is_zero() {
        let g = full_grid(6, 6);
        let ring = vec![
            Point2::new(1000.0, 1000.0),
            Point2::new(4000.0, 1000.0),
            Point2::new(4000.0, 4000.0),
            Point2::new(1000.0, 4000.0),
        ];
        let v = VectorDataset::new(vec![Geometry::Polygon(vec![ring])]).unwrap();
        let l = distance_to_geometries(&g, &v, "d", Source::Park).unwrap();
        // center (2500, 2500) inside; (5500, 2500) is 1500 m east of the ring
        assert_eq!(l.raster.get(3, 2), 0.0);
        assert_eq!(l.raster.get(3, 5), 1500.0);
    }

    #[test]
    fn empty_features_rejected() {
        let g = full_grid(2, 2);
        let v = VectorDataset::new(vec![]).unwrap();
        assert!(distance_to_geometries(&g, &v, "d", Source::Park).is_err());
    }

    #[test]
    fn single_source_cell() {
        let g = full_grid(5, 3);
        let mut src = g.blank_raster(0.0, NODATA, RasterKind::Continuous);
        src.values[5] = 1.0; // (1, 0)
        let layer = FeatureLayer::new("water", Source::RemoteSensing, src);
        let d = distance_to_cells(&g, &layer, CellPredicate::AtLeast(0.5), "d", Source::RemoteSensing)
            .unwrap();
        assert_eq!(d.raster.get(1, 0), 0.0);
        assert_eq!(d.raster.get(1, 3), 3000.0);
        assert!((d.raster.get(0, 1) - 2f64.sqrt() * 1000.0).abs() < 1e-9);
    }

    #[test]
    fn all_sources_zero_and_none_rejected() {
        let g = full_grid(3, 3);
        let layer = FeatureLayer::new("c", Source::Park, g.blank_raster(2.0, NODATA, RasterKind::Categorical));
        let d = distance_to_cells(&g, &layer, CellPredicate::Equals(2.0), "d", Source::Park).unwrap();
        assert!(d.raster.values.iter().all(|v| *v == 0.0));
        assert!(distance_to_cells(&g, &layer, CellPredicate::Equals(3.0), "d", Source::Park).is_err());
    }
}
