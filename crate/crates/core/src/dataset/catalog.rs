use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geoformats::RasterKind;
use crate::rasterops::Source;

/// Names reserved for remote-sensing features. The list covers every
/// static and dynamic product the pipeline knows how to ingest.
pub const REMOTE_SENSING_NAMES: [&str; 14] = [
    "land_cover",
    "rivers",
    "surface_water",
    "flow_accumulation",
    "elevation",
    "slope",
    "aspect",
    "drainage_direction",
    "temperature",
    "precipitation",
    "npp",
    "gpp",
    "aerosol",
    "cirrus",
];

pub fn is_reserved(name: &str) -> bool {
    REMOTE_SENSING_NAMES.contains(&name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Temporality {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub source: Source,
    pub temporality: Temporality,
    pub kind: RasterKind,
}

/// Ordered, uniquely named feature columns.
///
/// Remote-sensing features must use a reserved name and park features must
/// not, so the source split is unambiguous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureSpec>", into = "Vec<FeatureSpec>")]
pub struct FeatureCatalog {
    entries: Vec<FeatureSpec>,
}

impl FeatureCatalog {
    pub fn new(entries: Vec<FeatureSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Dataset(format!("duplicate feature name {:?}", e.name)));
            }
            match (e.source, is_reserved(&e.name)) {
                (Source::RemoteSensing, false) => {
                    return Err(Error::Dataset(format!(
                        "remote-sensing feature {:?} must use one of the reserved names",
                        e.name
                    )))
                }
                (Source::Park, true) => {
                    return Err(Error::Dataset(format!(
                        "park feature {:?} uses a name reserved for remote sensing",
                        e.name
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[FeatureSpec] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }
}

impl TryFrom<Vec<FeatureSpec>> for FeatureCatalog {
    type Error = Error;

    fn try_from(entries: Vec<FeatureSpec>) -> Result<Self> {
        FeatureCatalog::new(entries)
    }
}

impl From<FeatureCatalog> for Vec<FeatureSpec> {
    fn from(c: FeatureCatalog) -> Self {
        c.entries
    }
}
