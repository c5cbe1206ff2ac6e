//! The per-cell, per-quarter observation table.

mod catalog;
mod records;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geoformats::RasterKind;
use crate::grid::ParkGrid;
use crate::rasterops::{FeatureLayer, Source};
use crate::temporal::Quarter;

pub use self::catalog::{is_reserved, FeatureCatalog, FeatureSpec, Temporality, REMOTE_SENSING_NAMES};
pub use self::records::{
    read_activities, read_efforts, write_activities, write_efforts, ActivityRecord, EffortRecord,
};

/// A feature column as fed to [`assemble`]: one layer, or one layer per quarter.
#[derive(Debug, Clone)]
pub enum FeatureInput {
    Static(FeatureLayer),
    Dynamic {
        name: String,
        source: Source,
        kind: RasterKind,
        quarters: BTreeMap<Quarter, FeatureLayer>,
    },
}

impl FeatureInput {
    pub fn name(&self) -> &str {
        match self {
            FeatureInput::Static(l) => &l.name,
            FeatureInput::Dynamic { name, .. } => name,
        }
    }

    pub fn spec(&self) -> FeatureSpec {
        match self {
            FeatureInput::Static(l) => FeatureSpec {
                name: l.name.clone(),
                source: l.source,
                temporality: Temporality::Static,
                kind: l.kind(),
            },
            FeatureInput::Dynamic { name, source, kind, .. } => FeatureSpec {
                name: name.clone(),
                source: *source,
                temporality: Temporality::Dynamic,
                kind: *kind,
            },
        }
    }

    /// The layer in effect for `quarter`, if any.
    pub fn layer_for(&self, quarter: Quarter) -> Option<&FeatureLayer> {
        match self {
            FeatureInput::Static(l) => Some(l),
            FeatureInput::Dynamic { quarters, .. } => quarters.get(&quarter),
        }
    }
}

/// Layers in effect for one quarter, renamed to their column names.
pub fn layers_for_quarter(inputs: &[FeatureInput], quarter: Quarter) -> Vec<FeatureLayer> {
    inputs
        .iter()
        .filter_map(|i| i.layer_for(quarter).map(|l| l.clone().renamed(i.name())))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub cell_id: usize,
    pub quarter: Quarter,
    /// In catalog order; missing values already imputed.
    pub features: Vec<f64>,
    pub effort: f64,
    pub label: u8,
    /// Column indices whose value was imputed.
    pub imputed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    pub catalog: FeatureCatalog,
    pub rows: Vec<Observation>,
    /// Per-column imputation value (masked mean or mode).
    pub fill_values: Vec<f64>,
}

impl ObservationTable {
    pub fn columns(&self) -> Vec<&str> {
        self.catalog.names()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.rows.iter().filter(|r| r.label == 1).count()
    }

    pub fn quarters(&self) -> BTreeSet<Quarter> {
        self.rows.iter().map(|r| r.quarter).collect()
    }

    fn with_rows(&self, rows: Vec<Observation>) -> ObservationTable {
        ObservationTable {
            catalog: self.catalog.clone(),
            rows,
            fill_values: self.fill_values.clone(),
        }
    }
}

/// Records dropped while mapping onto the grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyReport {
    /// Outside the grid bbox or in an unmasked cell.
    pub efforts_outside: usize,
    pub activities_outside: usize,
    /// Dated outside the requested quarters.
    pub efforts_out_of_period: usize,
    pub activities_out_of_period: usize,
}

/// Builds one row per (masked cell, quarter).
///
/// Effort is the sum of effort records in the cell and quarter; the label is
/// 1 when at least one activity record falls there. Nodata feature values are
/// replaced by the column's mean (continuous) or mode (categorical) over all
/// valid values in the table.
pub fn assemble(
    grid: &ParkGrid,
    inputs: &[FeatureInput],
    efforts: &[EffortRecord],
    activities: &[ActivityRecord],
    quarters: &[Quarter],
) -> Result<(ObservationTable, AssemblyReport)> {
    let catalog = FeatureCatalog::new(inputs.iter().map(FeatureInput::spec).collect())?;
    for input in inputs {
        let layers: Vec<&FeatureLayer> = match input {
            FeatureInput::Static(l) => vec![l],
            FeatureInput::Dynamic { quarters, .. } => quarters.values().collect(),
        };
        for l in layers {
            if !l.is_aligned(grid) {
                return Err(Error::Dataset(format!("layer {:?} is not aligned with the grid", input.name())));
            }
        }
    }
    let quarters: Vec<Quarter> = quarters.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let q_index: HashMap<Quarter, usize> = quarters.iter().enumerate().map(|(i, q)| (*q, i)).collect();
    let n_cells = grid.n_masked();
    let mut report = AssemblyReport::default();

    let mut effort = vec![0.0f64; quarters.len() * n_cells];
    for rec in efforts {
        let Some(&qi) = q_index.get(&rec.quarter()) else {
            report.efforts_out_of_period += 1;
            continue;
        };
        match grid.locate(rec.point()).and_then(|(r, c)| grid.cell_id(r, c)) {
            Some(id) => effort[qi * n_cells + id] += rec.effort,
            None => report.efforts_outside += 1,
        }
    }
    let mut label = vec![0u8; quarters.len() * n_cells];
    for rec in activities {
        let Some(&qi) = q_index.get(&rec.quarter()) else {
            report.activities_out_of_period += 1;
            continue;
        };
        match grid.locate(rec.point()).and_then(|(r, c)| grid.cell_id(r, c)) {
            Some(id) => label[qi * n_cells + id] = 1,
            None => report.activities_outside += 1,
        }
    }

    let n_cols = inputs.len();
    let mut rows = Vec::with_capacity(quarters.len() * n_cells);
    for (qi, &quarter) in quarters.iter().enumerate() {
        let layers: Vec<Option<&FeatureLayer>> = inputs.iter().map(|i| i.layer_for(quarter)).collect();
        for id in 0..n_cells {
            let flat = grid.masked_indices()[id];
            let mut features = Vec::with_capacity(n_cols);
            let mut imputed = Vec::new();
            for (col, layer) in layers.iter().enumerate() {
                match layer.and_then(|l| {
                    let v = l.raster.values[flat];
                    l.raster.is_valid(v).then_some(v)
                }) {
                    Some(v) => features.push(v),
                    None => {
                        features.push(f64::NAN);
                        imputed.push(col);
                    }
                }
            }
            rows.push(Observation {
                cell_id: id,
                quarter,
                features,
                effort: effort[qi * n_cells + id],
                label: label[qi * n_cells + id],
                imputed,
            });
        }
    }

    let fill_values: Vec<f64> = catalog
        .entries()
        .iter()
        .enumerate()
        .map(|(col, spec)| {
            let valid = rows.iter().filter(|r| !r.imputed.contains(&col)).map(|r| r.features[col]);
            match spec.kind {
                RasterKind::Continuous => {
                    let (n, sum) = valid.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
                    if n > 0 {
                        sum / n as f64
                    } else {
                        0.0
                    }
                }
                RasterKind::Categorical => {
                    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
                    for v in valid {
                        *counts.entry(v as i64).or_default() += 1;
                    }
                    let mut best: Option<(i64, usize)> = None;
                    for (cat, n) in counts {
                        if best.is_none_or(|(_, b)| n > b) {
                            best = Some((cat, n));
                        }
                    }
                    best.map_or(0.0, |(c, _)| c as f64)
                }
            }
        })
        .collect();
    for row in &mut rows {
        for &col in &row.imputed {
            row.features[col] = fill_values[col];
        }
    }
    Ok((ObservationTable { catalog, rows, fill_values }, report))
}

/// Train on the three years before `test_year`, test on `test_year`.
/// Rows without patrol effort are dropped from both sides.
pub fn split_by_year(table: &ObservationTable, test_year: i32) -> Result<(ObservationTable, ObservationTable)> {
    let years: BTreeSet<i32> = table.rows.iter().map(|r| r.quarter.year).collect();
    if let Some(missing) = (test_year - 3..=test_year).find(|y| !years.contains(y)) {
        return Err(Error::Dataset(format!(
            "test year {test_year} needs data for {}..={test_year}; year {missing} is absent",
            test_year - 3
        )));
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for row in table.rows.iter().filter(|r| r.effort > 0.0) {
        let y = row.quarter.year;
        if y == test_year {
            test.push(row.clone());
        } else if (test_year - 3..test_year).contains(&y) {
            train.push(row.clone());
        }
    }
    if test.is_empty() {
        return Err(Error::Dataset(format!("test year {test_year} has no patrolled rows to evaluate")));
    }
    Ok((table.with_rows(train), table.with_rows(test)))
}

/// Feature-set conditions compared in the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Park-provided features only.
    Baseline,
    /// Remote-sensing features only.
    RemoteSensing,
    All,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Baseline, Condition::RemoteSensing, Condition::All];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::RemoteSensing => "remote-sensing",
            Condition::All => "all",
        }
    }

    pub fn includes(self, source: Source) -> bool {
        match self {
            Condition::Baseline => source == Source::Park,
            Condition::RemoteSensing => source == Source::RemoteSensing,
            Condition::All => true,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Condition::Baseline),
            "remote-sensing" => Ok(Condition::RemoteSensing),
            "all" => Ok(Condition::All),
            _ => Err(Error::Dataset(format!("unknown condition {s:?}"))),
        }
    }
}

/// Keeps the columns whose source the condition includes.
pub fn select_feature_set(table: &ObservationTable, condition: Condition) -> Result<ObservationTable> {
    let keep: Vec<usize> = table
        .catalog
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| condition.includes(e.source))
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::Dataset(format!("condition {condition} selects no feature columns")));
    }
    let catalog = FeatureCatalog::new(keep.iter().map(|&i| table.catalog.entries()[i].clone()).collect())?;
    let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let rows = table
        .rows
        .iter()
        .map(|r| Observation {
            features: keep.iter().map(|&i| r.features[i]).collect(),
            imputed: r.imputed.iter().filter_map(|c| remap.get(c).copied()).collect(),
            ..r.clone()
        })
        .collect();
    Ok(ObservationTable {
        catalog,
        rows,
        fill_values: keep.iter().map(|&i| table.fill_values[i]).collect(),
    })
}
