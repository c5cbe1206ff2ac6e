//! Core algorithms for the poachgrid pipeline.
//!
//! The pipeline turns a park boundary, park-provided vector layers and
//! remote-sensing rasters into a 1 km feature grid, trains an effort-binned
//! bagged decision-tree ensemble on patrol observations and scores risk maps.
//!
//! Modules, bottom-up:
//!
//! * [`geoformats`]: GeoTIFF and ESRI shapefile subsets, read and write.
//! * [`grid`]: park discretization and cell/coordinate mapping.
//! * [`rasterops`]: resampling, Horn slope/aspect, D8 routing, distance maps.
//! * [`temporal`]: monthly to quarterly aggregation of dynamic layers.
//! * [`dataset`]: feature catalog, observation table, splits and conditions.
//! * [`model`]: CART trees and the effort-binned ensemble.
//! * [`eval`]: ROC-AUC, the experiment harness and risk-map roughness.
//! * [`synth`]: deterministic synthetic park generator.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod geoformats;
pub mod grid;
pub mod model;
pub mod rasterops;
pub mod synth;
pub mod temporal;

pub use dataset::{
    ActivityRecord, Condition, EffortRecord, FeatureCatalog, FeatureInput, FeatureSpec,
    ObservationTable, Temporality,
};
pub use error::{Error, Result};
pub use eval::{roc_auc, roughness, MetricsRow, YearLabel};
pub use geoformats::{
    GeoTransform, Geometry, Point2, RasterDataset, RasterKind, VectorDataset,
};
pub use grid::ParkGrid;
pub use model::{DecisionTree, IWareEnsemble, TrainConfig};
pub use rasterops::{FeatureLayer, Source};
pub use temporal::{Quarter, YearMonth};

/// Nodata sentinel used for every raster the pipeline derives.
pub const NODATA: f64 = -9999.0;
