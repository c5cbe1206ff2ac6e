//! Monthly dynamic layers and their quarterly aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rasterops::FeatureLayer;
use crate::NODATA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Dataset(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn quarter(self) -> Quarter {
        Quarter { year: self.year, index: (self.month - 1) / 3 + 1 }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Dataset(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

/// Calendar quarter; Q1 is January to March.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    pub index: u32,
}

impl Quarter {
    pub fn new(year: i32, index: u32) -> Result<Self> {
        if !(1..=4).contains(&index) {
            return Err(Error::Dataset(format!("quarter index {index} out of range")));
        }
        Ok(Self { year, index })
    }

    /// All quarters of the years `first..=last`, in order.
    pub fn span(first: i32, last: i32) -> Vec<Quarter> {
        (first..=last)
            .flat_map(|year| (1..=4).map(move |index| Quarter { year, index }))
            .collect()
    }

    pub fn months(self) -> [YearMonth; 3] {
        let m0 = (self.index - 1) * 3 + 1;
        [0, 1, 2].map(|k| YearMonth { year: self.year, month: m0 + k })
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.index)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    /// Parses `YYYYQn`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Dataset(format!("expected YYYYQn, got {s:?}"));
        let (y, q) = s.split_once('Q').ok_or_else(bad)?;
        Quarter::new(y.parse().map_err(|_| bad())?, q.parse().map_err(|_| bad())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeStampedLayer {
    pub timestamp: YearMonth,
    pub layer: FeatureLayer,
}

/// Per-cell mean of each quarter's monthly layers. Nodata months are skipped
/// per cell; a cell with no valid month is nodata. Quarters without layers
/// are absent from the result.
pub fn aggregate_quarters(series: &[TimeStampedLayer]) -> Result<BTreeMap<Quarter, FeatureLayer>> {
    let Some(first) = series.first() else {
        return Ok(BTreeMap::new());
    };
    let mut groups: BTreeMap<Quarter, Vec<&FeatureLayer>> = BTreeMap::new();
    for item in series {
        if !item.layer.raster.aligned_with(&first.layer.raster) {
            return Err(Error::Raster(format!(
                "{} layer for {} is not aligned with {}",
                item.layer.name, item.timestamp, first.timestamp
            )));
        }
        groups.entry(item.timestamp.quarter()).or_default().push(&item.layer);
    }
    let n = first.layer.raster.values.len();
    let mut out = BTreeMap::new();
    for (quarter, layers) in groups {
        let mut sums = vec![0.0; n];
        let mut counts = vec![0u32; n];
        for l in &layers {
            for (i, &v) in l.raster.values.iter().enumerate() {
                if l.raster.is_valid(v) {
                    sums[i] += v;
                    counts[i] += 1;
                }
            }
        }
        let mut layer = layers[0].clone();
        layer.raster.nodata = Some(NODATA);
        layer.raster.values = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { NODATA })
            .collect();
        out.insert(quarter, layer);
    }
    Ok(out)
}
