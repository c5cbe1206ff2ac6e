//! The pipeline configuration file.
//!
//! A single JSON document; relative paths resolve against the directory
//! holding the config file.
//!
//! ```json
//! {
//!   "version": 1,
//!   "park": "synthetic",
//!   "crs": "EPSG:32736",
//!   "boundary": "boundary.shp",
//!   "resolution": 1000,
//!   "static_features": [
//!     {"name": "roads", "source": "park", "input": {"type": "vector", "path": "roads.shp"}},
//!     {"name": "elevation", "source": "remote-sensing",
//!      "input": {"type": "raster", "path": "rasters/elevation.tif", "kind": "continuous"}},
//!     {"name": "slope", "source": "remote-sensing",
//!      "input": {"type": "derive", "op": "slope", "from": "elevation"}},
//!     {"name": "rivers", "source": "remote-sensing",
//!      "input": {"type": "cell-distance", "path": "rasters/rivers.tif", "test": {"at_least": 0.1}}}
//!   ],
//!   "dynamic_features": [
//!     {"name": "npp", "source": "remote-sensing", "dir": "dynamic/npp", "kind": "continuous"}
//!   ],
//!   "efforts": "efforts.csv",
//!   "activities": "activities.csv",
//!   "test_years": [2019],
//!   "conditions": ["baseline", "remote-sensing", "all"],
//!   "effort_thresholds": [1.0, 3.0],
//!   "standardize": false,
//!   "train": {"num_bins": 5, "trees_per_bin": 32, "max_depth": 8, "min_leaf": 5,
//!             "bootstrap_fraction": 1.0, "seed": 0, "bootstrap": true},
//!   "output": "out"
//! }
//! ```
//!
//! Dynamic feature directories hold one `YYYY-MM.tif` per month.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use poachgrid_core::{Condition, RasterKind, Source, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub park: String,
    #[serde(default)]
    pub crs: String,
    pub boundary: PathBuf,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    pub static_features: Vec<StaticFeature>,
    #[serde(default)]
    pub dynamic_features: Vec<DynamicFeature>,
    pub efforts: PathBuf,
    pub activities: PathBuf,
    pub test_years: Vec<i32>,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<Condition>,
    #[serde(default = "default_thresholds")]
    pub effort_thresholds: Vec<f64>,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_resolution() -> f64 {
    1000.0
}

fn default_conditions() -> Vec<Condition> {
    Condition::ALL.to_vec()
}

fn default_thresholds() -> Vec<f64> {
    vec![1.0]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticFeature {
    pub name: String,
    pub source: Source,
    pub input: StaticInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StaticInput {
    /// Distance to the shapes of a shapefile.
    Vector { path: PathBuf },
    /// A raster resampled onto the grid.
    Raster {
        path: PathBuf,
        #[serde(default = "continuous")]
        kind: RasterKind,
    },
    /// A terrain product of an earlier raster feature.
    Derive { op: DeriveOp, from: String },
    /// Distance to grid cells whose resampled value passes `test`.
    CellDistance {
        path: PathBuf,
        #[serde(default = "continuous")]
        kind: RasterKind,
        test: CellTest,
    },
}

fn continuous() -> RasterKind {
    RasterKind::Continuous
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeriveOp {
    Slope,
    Aspect,
    DrainageDirection,
    FlowAccumulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CellTest {
    AtLeast(f64),
    Equals(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicFeature {
    pub name: String,
    pub source: Source,
    pub dir: PathBuf,
    #[serde(default = "continuous")]
    pub kind: RasterKind,
}

/// A parsed config plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub base: PathBuf,
}

const STAGE: &str = "config";

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(STAGE, format!("cannot read config {}: {e}", path.display())))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(STAGE, format!("{}: {e}", path.display())))?;
        config.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output)
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::config(STAGE, m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        if self.test_years.is_empty() {
            return bad("test_years is empty".into());
        }
        if self.conditions.is_empty() {
            return bad("conditions is empty".into());
        }
        if self.effort_thresholds.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return bad("effort_thresholds must be nonnegative numbers".into());
        }
        if let Err(e) = self.train.validate() {
            return bad(format!("train: {e}"));
        }
        let mut seen = HashSet::new();
        let names = self
            .static_features
            .iter()
            .map(|f| &f.name)
            .chain(self.dynamic_features.iter().map(|f| &f.name));
        for name in names {
            if !seen.insert(name.as_str()) {
                return bad(format!("feature {name:?} is declared twice"));
            }
            if name.is_empty() || name.contains(['/', '\\', '.']) {
                return bad(format!("feature name {name:?} must be a plain file stem"));
            }
        }
        for (i, f) in self.static_features.iter().enumerate() {
            if let StaticInput::Derive { from, .. } = &f.input {
                let ok = self.static_features[..i]
                    .iter()
                    .any(|g| &g.name == from && matches!(g.input, StaticInput::Raster { .. }));
                if !ok {
                    return bad(format!("{}: derives from {from:?}, which must be an earlier raster feature", f.name));
                }
            }
        }
        Ok(())
    }

    /// First and last year with observations in any split.
    pub fn year_span(&self) -> (i32, i32) {
        let lo = *self.test_years.iter().min().expect("validated non-empty");
        let hi = *self.test_years.iter().max().expect("validated non-empty");
        (lo - 3, hi)
    }
}
