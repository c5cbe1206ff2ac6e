//! GeoTIFF and ESRI shapefile subsets.
//!
//! Only what the pipeline exchanges is supported: striped single-band TIFFs
//! (uncompressed or Deflate) georeferenced by tiepoint + pixel scale, and
//! `.shp` main files holding points, polylines or polygons. Attribute tables,
//! projections and tiled layouts are ignored or rejected.

mod shapefile;
mod tiff;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::shapefile::{read_shapefile, write_shapefile};
pub use self::tiff::{read_geotiff, write_geotiff};

/// Affine georeferencing of a north-up raster.
///
/// `origin_*` is the top-left corner of the top-left pixel; rows grow
/// southward, so `pixel_h` is stored positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_w: f64,
    pub pixel_h: f64,
}

impl GeoTransform {
    pub fn new(origin_x: f64, origin_y: f64, pixel_w: f64, pixel_h: f64) -> Result<Self> {
        if !(pixel_w > 0.0 && pixel_h > 0.0) || !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(Error::Raster(format!(
                "invalid transform: origin ({origin_x}, {origin_y}), pixel {pixel_w}x{pixel_h}"
            )));
        }
        Ok(Self { origin_x, origin_y, pixel_w, pixel_h })
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> Point2 {
        Point2::new(
            self.origin_x + (col as f64 + 0.5) * self.pixel_w,
            self.origin_y - (row as f64 + 0.5) * self.pixel_h,
        )
    }

    /// Signed (row, col) of the pixel containing `p`; may lie outside any raster.
    pub fn locate(&self, p: Point2) -> (i64, i64) {
        let col = ((p.x - self.origin_x) / self.pixel_w).floor() as i64;
        let row = ((self.origin_y - p.y) / self.pixel_h).floor() as i64;
        (row, col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RasterKind {
    Continuous,
    Categorical,
}

impl RasterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RasterKind::Continuous => "continuous",
            RasterKind::Categorical => "categorical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous" => Some(RasterKind::Continuous),
            "categorical" => Some(RasterKind::Categorical),
            _ => None,
        }
    }
}

/// Georeferenced single-band grid, row-major, widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterDataset {
    pub width: usize,
    pub height: usize,
    pub transform: GeoTransform,
    pub values: Vec<f64>,
    pub nodata: Option<f64>,
    pub kind: RasterKind,
    /// Informational CRS tag such as `EPSG:32636`; empty when unknown.
    pub crs_code: String,
}

impl RasterDataset {
    pub fn new(
        width: usize,
        height: usize,
        transform: GeoTransform,
        values: Vec<f64>,
        nodata: Option<f64>,
        kind: RasterKind,
    ) -> Result<Self> {
        let raster = Self {
            width,
            height,
            transform,
            values,
            nodata,
            kind,
            crs_code: String::new(),
        };
        raster.validate()?;
        Ok(raster)
    }

    /// A raster of `width`x`height` filled with `value`.
    pub fn filled(
        width: usize,
        height: usize,
        transform: GeoTransform,
        value: f64,
        nodata: Option<f64>,
        kind: RasterKind,
    ) -> Result<Self> {
        Self::new(width, height, transform, vec![value; width * height], nodata, kind)
    }

    pub fn with_crs(mut self, crs: impl Into<String>) -> Self {
        self.crs_code = crs.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Raster("raster has zero width or height".into()));
        }
        if self.values.len() != self.width * self.height {
            return Err(Error::Raster(format!(
                "value count {} does not match {}x{}",
                self.values.len(),
                self.width,
                self.height
            )));
        }
        if !(self.transform.pixel_w > 0.0 && self.transform.pixel_h > 0.0) {
            return Err(Error::Raster("pixel size must be positive".into()));
        }
        if self.kind == RasterKind::Categorical {
            if let Some(v) = self
                .values
                .iter()
                .find(|v| self.is_valid(**v) && v.fract() != 0.0)
            {
                return Err(Error::Raster(format!("categorical raster holds non-integral value {v}")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.index(row, col)]
    }

    /// True when `v` is a data value (not the nodata sentinel, not NaN).
    #[inline]
    pub fn is_valid(&self, v: f64) -> bool {
        if v.is_nan() {
            return false;
        }
        match self.nodata {
            Some(nd) => v != nd,
            None => true,
        }
    }

    /// The value at (row, col) if it is data.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.get(row, col);
        self.is_valid(v).then_some(v)
    }

    /// Same size and georeferencing.
    pub fn aligned_with(&self, other: &RasterDataset) -> bool {
        self.width == other.width && self.height == other.height && self.transform == other.transform
    }

    /// Field-for-field equality with values compared bit-for-bit.
    pub fn bit_eq(&self, other: &RasterDataset) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.transform == other.transform
            && self.kind == other.kind
            && self.crs_code == other.crs_code
            && match (self.nodata, other.nodata) {
                (None, None) => true,
                (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
                _ => false,
            }
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Point,
    Polyline,
    Polygon,
}

/// One point, one polyline part, or one polygon (outer ring first, then holes).
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point2),
    Polyline(Vec<Point2>),
    Polygon(Vec<Vec<Point2>>),
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::Polyline(_) => GeometryKind::Polyline,
            Geometry::Polygon(_) => GeometryKind::Polygon,
        }
    }

    pub fn vertices(&self) -> Box<dyn Iterator<Item = Point2> + '_> {
        match self {
            Geometry::Point(p) => Box::new(std::iter::once(*p)),
            Geometry::Polyline(pts) => Box::new(pts.iter().copied()),
            Geometry::Polygon(rings) => Box::new(rings.iter().flatten().copied()),
        }
    }

    /// Checks part sizes and closes polygon rings.
    fn normalized(self) -> Result<Self> {
        match self {
            Geometry::Point(p) => {
                if !(p.x.is_finite() && p.y.is_finite()) {
                    return Err(Error::Geometry("non-finite point".into()));
                }
                Ok(Geometry::Point(p))
            }
            Geometry::Polyline(pts) => {
                if pts.len() < 2 {
                    return Err(Error::Geometry(format!(
                        "polyline part has {} vertices, need at least 2",
                        pts.len()
                    )));
                }
                Ok(Geometry::Polyline(pts))
            }
            Geometry::Polygon(mut rings) => {
                if rings.is_empty() {
                    return Err(Error::Geometry("polygon without rings".into()));
                }
                for ring in &mut rings {
                    if ring.len() < 3 {
                        return Err(Error::Geometry(format!(
                            "polygon ring has {} vertices, need at least 3",
                            ring.len()
                        )));
                    }
                    if ring.first() != ring.last() {
                        ring.push(ring[0]);
                    }
                }
                Ok(Geometry::Polygon(rings))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bbox {
    pub const EMPTY: Bbox = Bbox {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };

    pub fn is_empty(&self) -> bool {
        self.min_x > self.max_x || self.min_y > self.max_y
    }

    pub fn expand(&mut self, p: Point2) {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
    }

    pub fn of_points(points: impl IntoIterator<Item = Point2>) -> Bbox {
        let mut b = Bbox::EMPTY;
        for p in points {
            b.expand(p);
        }
        b
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.min_x - tol
            && p.x <= self.max_x + tol
            && p.y >= self.min_y - tol
            && p.y <= self.max_y + tol
    }
}

/// Geometries of a single variant plus their bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    pub geometries: Vec<Geometry>,
    pub bbox: Bbox,
}

impl VectorDataset {
    /// Validates, closes polygon rings and computes the vertex bbox.
    pub fn new(geometries: Vec<Geometry>) -> Result<Self> {
        let geometries = normalize_all(geometries)?;
        let bbox = Bbox::of_points(geometries.iter().flat_map(|g| g.vertices()));
        Ok(Self { geometries, bbox })
    }

    pub fn kind(&self) -> Option<GeometryKind> {
        self.geometries.first().map(Geometry::kind)
    }

    pub fn is_empty(&self) -> bool {
        self.geometries.is_empty()
    }

    pub fn vertex_bbox(&self) -> Bbox {
        Bbox::of_points(self.geometries.iter().flat_map(|g| g.vertices()))
    }

    pub fn translated(&self, dx: f64, dy: f64) -> VectorDataset {
        let shift = |p: &Point2| Point2::new(p.x + dx, p.y + dy);
        let geometries = self
            .geometries
            .iter()
            .map(|g| match g {
                Geometry::Point(p) => Geometry::Point(shift(p)),
                Geometry::Polyline(pts) => Geometry::Polyline(pts.iter().map(shift).collect()),
                Geometry::Polygon(rings) => Geometry::Polygon(
                    rings.iter().map(|r| r.iter().map(shift).collect()).collect(),
                ),
            })
            .collect::<Vec<_>>();
        let bbox = if self.bbox.is_empty() {
            self.bbox
        } else {
            Bbox {
                min_x: self.bbox.min_x + dx,
                min_y: self.bbox.min_y + dy,
                max_x: self.bbox.max_x + dx,
                max_y: self.bbox.max_y + dy,
            }
        };
        VectorDataset { geometries, bbox }
    }
}

fn normalize_all(geometries: Vec<Geometry>) -> Result<Vec<Geometry>> {
    let kind = geometries.first().map(Geometry::kind);
    geometries
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            if Some(g.kind()) != kind {
                return Err(Error::Geometry(format!(
                    "geometry {i} is a {:?}, dataset holds {:?}",
                    g.kind(),
                    kind.unwrap()
                )));
            }
            g.normalized().map_err(|e| e.context(format!("geometry {i}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_rejects_non_positive_pixels() {
        assert!(GeoTransform::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(GeoTransform::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(GeoTransform::new(0.0, 0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn raster_invariants() {
        let t = GeoTransform::new(0.0, 10.0, 1.0, 1.0).unwrap();
        assert!(RasterDataset::new(2, 2, t, vec![0.0; 3], None, RasterKind::Continuous).is_err());
        assert!(RasterDataset::new(2, 1, t, vec![1.0, 2.5], None, RasterKind::Categorical).is_err());
        // nodata may be non-integral in a categorical raster
        let r = RasterDataset::new(2, 1, t, vec![1.0, -0.5], Some(-0.5), RasterKind::Categorical);
        assert!(r.is_ok());
    }

    #[test]
    fn polygon_rings_are_closed() {
        let ring = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let v = VectorDataset::new(vec![Geometry::Polygon(vec![ring])]).unwrap();
        match &v.geometries[0] {
            Geometry::Polygon(rings) => {
                assert_eq!(rings[0].len(), 4);
                assert_eq!(rings[0][0], rings[0][3]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn mixed_variants_rejected() {
        let g = vec![
            Geometry::Point(Point2::new(0.0, 0.0)),
            Geometry::Polyline(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]),
        ];
        assert!(VectorDataset::new(g).is_err());
    }

    #[test]
    fn short_polyline_rejected() {
        let g = vec![Geometry::Polyline(vec![Point2::new(0.0, 0.0)])];
        assert!(VectorDataset::new(g).is_err());
    }
}
