//! Static feature layers derived on the park grid.

mod distance;
mod hydrology;
mod resample;
mod terrain;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geoformats::{RasterDataset, RasterKind};
use crate::grid::ParkGrid;
use crate::NODATA;

pub use self::distance::{distance_to_cells, distance_to_geometries, CellPredicate};
pub use self::hydrology::{d8_flow_direction, flow_accumulation, D8_OFFSETS};
pub use self::resample::resample_to_grid;
pub use self::terrain::slope_aspect;

/// Who supplied a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Park,
    RemoteSensing,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Park => "park",
            Source::RemoteSensing => "remote-sensing",
        }
    }
}

/// A named raster aligned to the park grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayer {
    pub name: String,
    pub source: Source,
    pub raster: RasterDataset,
}

impl FeatureLayer {
    pub fn new(name: impl Into<String>, source: Source, raster: RasterDataset) -> Self {
        Self { name: name.into(), source, raster }
    }

    pub fn kind(&self) -> RasterKind {
        self.raster.kind
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn is_aligned(&self, grid: &ParkGrid) -> bool {
        self.raster.width == grid.width
            && self.raster.height == grid.height
            && self.raster.transform == grid.transform
    }

    pub fn ensure_aligned(&self, grid: &ParkGrid) -> Result<()> {
        if self.is_aligned(grid) {
            Ok(())
        } else {
            Err(Error::Raster(format!("layer {:?} is not aligned with the park grid", self.name)))
        }
    }
}

/// Z-scores each continuous layer over its valid cells (population standard
/// deviation). Zero-variance layers become all zeros; categorical layers pass
/// through unchanged.
pub fn standardize(layers: &[FeatureLayer]) -> Vec<FeatureLayer> {
    layers
        .iter()
        .map(|l| standardize_pooled(std::slice::from_ref(l)).remove(0))
        .collect()
}

/// Z-scores a series of layers of one feature with a single shared mean and
/// deviation, so the rescaling is the same monotone map for every layer.
pub fn standardize_pooled(layers: &[FeatureLayer]) -> Vec<FeatureLayer> {
    let continuous = layers.iter().all(|l| l.kind() == RasterKind::Continuous);
    if !continuous {
        return layers.to_vec();
    }
    let (mut n, mut sum) = (0usize, 0.0f64);
    for l in layers {
        for &v in l.raster.values.iter().filter(|v| l.raster.is_valid(**v)) {
            n += 1;
            sum += v;
        }
    }
    let mean = if n > 0 { sum / n as f64 } else { 0.0 };
    let mut ss = 0.0;
    for l in layers {
        for &v in l.raster.values.iter().filter(|v| l.raster.is_valid(**v)) {
            ss += (v - mean) * (v - mean);
        }
    }
    let std = if n > 0 { (ss / n as f64).sqrt() } else { 0.0 };
    layers
        .iter()
        .map(|l| {
            let mut out = l.clone();
            let nodata = l.raster.nodata.unwrap_or(NODATA);
            out.raster.nodata = Some(nodata);
            for v in out.raster.values.iter_mut() {
                *v = if !l.raster.is_valid(*v) {
                    nodata
                } else if std > 0.0 {
                    (*v - mean) / std
                } else {
                    0.0
                };
            }
            out
        })
        .collect()
}
