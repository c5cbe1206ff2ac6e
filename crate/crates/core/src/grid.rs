//! Park discretization into square cells.

use crate::error::{Error, Result};
use crate::geoformats::{GeoTransform, Geometry, Point2, RasterDataset, RasterKind, VectorDataset};

/// The park's cell grid. A cell belongs to the park when its center lies
/// inside a boundary polygon (even-odd rule, so inner rings are holes).
#[derive(Debug, Clone, PartialEq)]
pub struct ParkGrid {
    pub transform: GeoTransform,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    mask: Vec<bool>,
    /// Flat raster indices of masked cells; a cell id indexes this list.
    masked: Vec<usize>,
    /// Inverse of `masked`: flat index -> cell id.
    ids: Vec<Option<usize>>,
}

impl ParkGrid {
    /// Builds a grid directly from a mask. `mask` is row-major.
    pub fn from_mask(transform: GeoTransform, width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if transform.pixel_w != transform.pixel_h {
            return Err(Error::Grid("cells must be square".into()));
        }
        if mask.len() != width * height {
            return Err(Error::Grid(format!(
                "mask length {} does not match {width}x{height}",
                mask.len()
            )));
        }
        let masked: Vec<usize> = mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect();
        if masked.is_empty() {
            return Err(Error::Grid("no cell center falls inside the boundary".into()));
        }
        let mut ids = vec![None; mask.len()];
        for (id, &flat) in masked.iter().enumerate() {
            ids[flat] = Some(id);
        }
        Ok(Self {
            resolution: transform.pixel_w,
            transform,
            width,
            height,
            mask,
            masked,
            ids,
        })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_masked(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn n_masked(&self) -> usize {
        self.masked.len()
    }

    /// Flat raster index of each masked cell, in cell-id order.
    pub fn masked_indices(&self) -> &[usize] {
        &self.masked
    }

    pub fn cell_id(&self, row: usize, col: usize) -> Option<usize> {
        self.ids[row * self.width + col]
    }

    pub fn cell_id_of_flat(&self, flat: usize) -> Option<usize> {
        self.ids.get(flat).copied().flatten()
    }

    /// (row, col) of a masked cell id.
    pub fn cell_rc(&self, id: usize) -> (usize, usize) {
        let flat = self.masked[id];
        (flat / self.width, flat % self.width)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Result<Point2> {
        if row >= self.height || col >= self.width {
            return Err(Error::Grid(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                self.height, self.width
            )));
        }
        Ok(self.transform.pixel_center(row, col))
    }

    /// (row, col) of the cell containing `p`, or `None` outside the grid.
    pub fn locate(&self, p: Point2) -> Option<(usize, usize)> {
        let (row, col) = self.transform.locate(p);
        (row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width)
            .then_some((row as usize, col as usize))
    }

    /// A raster aligned with this grid: `value` on masked cells, nodata elsewhere.
    pub fn blank_raster(&self, value: f64, nodata: f64, kind: RasterKind) -> RasterDataset {
        let values = self.mask.iter().map(|&m| if m { value } else { nodata }).collect();
        RasterDataset {
            width: self.width,
            height: self.height,
            transform: self.transform,
            values,
            nodata: Some(nodata),
            kind,
            crs_code: String::new(),
        }
    }

    /// The mask as a 0/1 raster.
    pub fn mask_raster(&self) -> RasterDataset {
        RasterDataset {
            width: self.width,
            height: self.height,
            transform: self.transform,
            values: self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
            nodata: None,
            kind: RasterKind::Categorical,
            crs_code: String::new(),
        }
    }
}

/// Discretizes the boundary polygons into square cells of `resolution` meters.
///
/// The origin is the bbox min corner snapped outward to a multiple of the
/// resolution, so layers built for the same park always line up.
pub fn build_grid(boundary: &VectorDataset, resolution: f64) -> Result<ParkGrid> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Grid(format!("resolution must be positive, got {resolution}")));
    }
    let polygons: Vec<&Vec<Vec<Point2>>> = boundary
        .geometries
        .iter()
        .filter_map(|g| match g {
            Geometry::Polygon(rings) => Some(rings),
            _ => None,
        })
        .collect();
    if polygons.is_empty() {
        return Err(Error::Grid("boundary holds no polygon".into()));
    }
    for (i, rings) in polygons.iter().enumerate() {
        if ring_area(&rings[0]) == 0.0 {
            return Err(Error::Grid(format!("boundary polygon {i} is degenerate (zero area)")));
        }
    }
    let bbox = boundary.vertex_bbox();
    let x0 = (bbox.min_x / resolution).floor() * resolution;
    let y1 = (bbox.max_y / resolution).ceil() * resolution;
    let x1 = (bbox.max_x / resolution).ceil() * resolution;
    let y0 = (bbox.min_y / resolution).floor() * resolution;
    let width = (((x1 - x0) / resolution).round() as usize).max(1);
    let height = (((y1 - y0) / resolution).round() as usize).max(1);
    let transform = GeoTransform::new(x0, y1, resolution, resolution)?;

    let mut mask = vec![false; width * height];
    for row in 0..height {
        for col in 0..width {
            let c = transform.pixel_center(row, col);
            mask[row * width + col] = polygons.iter().any(|rings| point_in_rings(c, rings));
        }
    }
    ParkGrid::from_mask(transform, width, height, mask)
}

/// Even-odd ray casting against a polygon geometry; non-polygons are never
/// "inside".
pub fn point_in_polygon(p: Point2, poly: &Geometry) -> bool {
    match poly {
        Geometry::Polygon(rings) => point_in_rings(p, rings),
        _ => false,
    }
}

/// Crossing parity over all rings. Edges are half-open in y, so a vertex on
/// the ray is counted once and points on the boundary resolve consistently.
fn point_in_rings(p: Point2, rings: &[Vec<Point2>]) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        if n < 2 {
            continue;
        }
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (ring[i], ring[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
    }
    inside
}

fn ring_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        twice += a.x * b.y - b.x * a.y;
    }
    (twice / 2.0).abs()
}
