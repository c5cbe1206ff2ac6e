//! Effort-binned bagged decision trees.
//!
//! Training rows are split into disjoint patrol-effort bins and each bin gets
//! its own bagged forest. At prediction time every forest whose bin starts at
//! or below the queried effort contributes, so higher-effort queries average
//! over more forests.
//!
//! Bootstrap draws use ChaCha8. The stream for (bin, tree) is seeded with
//! `SHA-256("poachgrid-bootstrap" || seed || bin || tree)` (integers as
//! little-endian u64), and a draw over `n` rows takes
//! `(next_u64 as u128 * n) >> 64`. Training order therefore never affects
//! the result.

mod iware;
mod json;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::iware::{
    bagged_forest, bootstrap_sample, effort_thresholds, predict_risk_map, train_iware, Forest, IWareEnsemble,
};
pub use self::json::{ensemble_from_json, ensemble_to_json, MODEL_FORMAT, MODEL_VERSION};
pub use self::tree::{gini, split_gain, train_tree, DecisionTree, Node, TreeParams};

/// Largest accepted `max_depth`; keeps the nested model file within parser limits.
pub const MAX_DEPTH_LIMIT: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub num_bins: usize,
    pub trees_per_bin: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub bootstrap_fraction: f64,
    pub seed: u64,
    /// When false every tree sees its bin's rows exactly once, in order.
    pub bootstrap: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_bins: 5,
            trees_per_bin: 32,
            max_depth: 8,
            min_leaf: 5,
            bootstrap_fraction: 1.0,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(m));
        if self.num_bins == 0 {
            return bad("num_bins must be at least 1".into());
        }
        if self.trees_per_bin == 0 {
            return bad("trees_per_bin must be at least 1".into());
        }
        if !(1..=MAX_DEPTH_LIMIT).contains(&self.max_depth) {
            return bad(format!("max_depth must be in 1..={MAX_DEPTH_LIMIT}, got {}", self.max_depth));
        }
        if self.min_leaf == 0 {
            return bad("min_leaf must be at least 1".into());
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return bad(format!("bootstrap_fraction must be in (0, 1], got {}", self.bootstrap_fraction));
        }
        Ok(())
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams { max_depth: self.max_depth, min_leaf: self.min_leaf }
    }
}
