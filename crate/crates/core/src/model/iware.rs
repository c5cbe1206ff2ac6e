use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::tree::{train_tree, DecisionTree, TreeParams};
use super::TrainConfig;
use crate::dataset::{FeatureCatalog, ObservationTable};
use crate::error::{Error, Result};
use crate::geoformats::RasterKind;
use crate::grid::ParkGrid;
use crate::rasterops::{FeatureLayer, Source};
use crate::NODATA;

/// One bin's trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    /// Set when the bin had no rows and the forest was trained on this
    /// lower bin instead.
    pub fallback_from: Option<usize>,
}

impl Forest {
    /// Mean leaf fraction over the trees.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IWareEnsemble {
    pub config: TrainConfig,
    pub catalog: FeatureCatalog,
    /// Imputation values used at training time, one per catalog column.
    pub fill_values: Vec<f64>,
    /// Strictly increasing lower bin edges; `thresholds[0]` is the smallest
    /// training effort.
    pub thresholds: Vec<f64>,
    pub forests: Vec<Forest>,
}

impl IWareEnsemble {
    pub fn num_features(&self) -> usize {
        self.catalog.len()
    }

    /// Indices of the forests that vote at effort `e`.
    pub fn qualified(&self, effort: f64) -> Vec<usize> {
        let q: Vec<usize> = (0..self.thresholds.len()).filter(|&m| self.thresholds[m] <= effort).collect();
        if q.is_empty() {
            vec![0]
        } else {
            q
        }
    }

    pub fn predict_at_effort(&self, x: &[f64], effort: f64) -> Result<f64> {
        if x.len() != self.num_features() {
            return Err(Error::Model(format!(
                "feature vector has {} values, model expects {}",
                x.len(),
                self.num_features()
            )));
        }
        let q = self.qualified(effort);
        Ok(q.iter().map(|&m| self.forests[m].predict(x)).sum::<f64>() / q.len() as f64)
    }

    /// Structural sanity checks, used after deserializing.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.thresholds.is_empty() || self.thresholds.len() != self.forests.len() {
            return Err(Error::Model(format!(
                "{} thresholds for {} forests",
                self.thresholds.len(),
                self.forests.len()
            )));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) || self.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::Model("thresholds must be finite and strictly increasing".into()));
        }
        if self.fill_values.len() != self.catalog.len() {
            return Err(Error::Model("fill_values length differs from the catalog".into()));
        }
        for (m, f) in self.forests.iter().enumerate() {
            if f.trees.is_empty() {
                return Err(Error::Model(format!("forest {m} has no trees")));
            }
            for t in &f.trees {
                t.check(self.catalog.len()).map_err(|e| Error::Model(format!("forest {m}: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Lower bin edges: the 1-based order statistic at `max(1, ceil(k*n/M))`
/// for k = 0..M, with duplicates removed.
pub fn effort_thresholds(efforts: &[f64], num_bins: usize) -> Vec<f64> {
    let mut sorted = efforts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out: Vec<f64> = Vec::with_capacity(num_bins);
    for k in 0..num_bins {
        let idx = (k * n).div_ceil(num_bins).max(1);
        let v = sorted[idx - 1];
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

fn substream(seed: u64, bin: usize, tree: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"poachgrid-bootstrap");
    h.update(seed.to_le_bytes());
    h.update((bin as u64).to_le_bytes());
    h.update((tree as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Draws `ceil(fraction * rows.len())` rows with replacement from the
/// (bin, tree) stream.
pub fn bootstrap_sample(rows: &[usize], fraction: f64, seed: u64, bin: usize, tree: usize) -> Vec<usize> {
    let n = rows.len();
    let draws = ((fraction * n as f64).ceil() as usize).clamp(1, n.max(1));
    let mut rng = substream(seed, bin, tree);
    (0..draws)
        .map(|_| rows[((rng.next_u64() as u128 * n as u128) >> 64) as usize])
        .collect()
}

/// A plain bagged forest over `rows`, using the substreams of `bin`.
pub fn bagged_forest(x: &[&[f64]], y: &[u8], rows: &[usize], config: &TrainConfig, bin: usize) -> Vec<DecisionTree> {
    let params = config.tree_params();
    (0..config.trees_per_bin)
        .into_par_iter()
        .map(|t| fit_one(x, y, rows, config, &params, bin, t))
        .collect()
}

fn fit_one(
    x: &[&[f64]],
    y: &[u8],
    rows: &[usize],
    config: &TrainConfig,
    params: &TreeParams,
    bin: usize,
    tree: usize,
) -> DecisionTree {
    if config.bootstrap {
        train_tree(x, y, &bootstrap_sample(rows, config.bootstrap_fraction, config.seed, bin, tree), params)
    } else {
        train_tree(x, y, rows, params)
    }
}

/// Trains one forest per effort bin. Rows with zero effort are ignored.
pub fn train_iware(train: &ObservationTable, config: &TrainConfig) -> Result<IWareEnsemble> {
    config.validate()?;
    let rows: Vec<usize> = (0..train.rows.len()).filter(|&i| train.rows[i].effort > 0.0).collect();
    if rows.is_empty() {
        return Err(Error::Model("training table has no rows with positive patrol effort".into()));
    }
    let width = train.catalog.len();
    if let Some(r) = train.rows.iter().find(|r| r.features.len() != width) {
        return Err(Error::Model(format!(
            "row for cell {} has {} features, catalog has {width}",
            r.cell_id,
            r.features.len()
        )));
    }
    let x: Vec<&[f64]> = train.rows.iter().map(|r| r.features.as_slice()).collect();
    let y: Vec<u8> = train.rows.iter().map(|r| r.label).collect();
    let efforts: Vec<f64> = rows.iter().map(|&i| train.rows[i].effort).collect();
    let thresholds = effort_thresholds(&efforts, config.num_bins);

    let m = thresholds.len();
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &i in &rows {
        let e = train.rows[i].effort;
        let b = thresholds.partition_point(|&t| t <= e).saturating_sub(1);
        bins[b].push(i);
    }
    // an empty bin borrows the nearest non-empty lower bin
    let mut source = vec![(0, None); m];
    for b in 0..m {
        source[b] = if !bins[b].is_empty() {
            (b, None)
        } else {
            let lower = (0..b).rev().find(|&l| !bins[l].is_empty()).unwrap_or(0);
            (lower, Some(lower))
        };
    }

    let params = config.tree_params();
    let jobs: Vec<(usize, usize)> = (0..m).flat_map(|b| (0..config.trees_per_bin).map(move |t| (b, t))).collect();
    let trees: Vec<DecisionTree> = jobs
        .par_iter()
        .map(|&(b, t)| fit_one(&x, &y, &bins[source[b].0], config, &params, b, t))
        .collect();
    let mut it = trees.into_iter();
    let forests = (0..m)
        .map(|b| Forest {
            trees: it.by_ref().take(config.trees_per_bin).collect(),
            fallback_from: source[b].1,
        })
        .collect();
    Ok(IWareEnsemble {
        config: *config,
        catalog: train.catalog.clone(),
        fill_values: train.fill_values.clone(),
        thresholds,
        forests,
    })
}

/// Risk at effort `e` for every masked cell of `grid`. `layers` must include
/// one aligned layer per catalog column, matched by name; invalid values take
/// the ensemble's training fill value.
pub fn predict_risk_map(
    ens: &IWareEnsemble,
    grid: &ParkGrid,
    layers: &[FeatureLayer],
    effort: f64,
) -> Result<FeatureLayer> {
    let mut cols = Vec::with_capacity(ens.catalog.len());
    for spec in ens.catalog.entries() {
        let layer = layers
            .iter()
            .find(|l| l.name == spec.name)
            .ok_or_else(|| Error::Model(format!("missing feature layer {:?}", spec.name)))?;
        layer.ensure_aligned(grid)?;
        cols.push(layer);
    }
    let cells = grid.masked_indices();
    let risks: Vec<f64> = cells
        .par_iter()
        .map(|&flat| {
            let x: Vec<f64> = cols
                .iter()
                .enumerate()
                .map(|(c, l)| {
                    let v = l.raster.values[flat];
                    if l.raster.is_valid(v) {
                        v
                    } else {
                        ens.fill_values[c]
                    }
                })
                .collect();
            ens.predict_at_effort(&x, effort)
        })
        .collect::<Result<_>>()?;
    let mut raster = grid.blank_raster(NODATA, NODATA, RasterKind::Continuous);
    for (&flat, r) in cells.iter().zip(risks) {
        raster.values[flat] = r;
    }
    Ok(FeatureLayer::new("risk", Source::Park, raster))
}
