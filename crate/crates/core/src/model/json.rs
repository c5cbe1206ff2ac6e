//! `model.json`: the serialized ensemble.
//!
//! ```text
//! {
//!   "format": "poachgrid-iware",
//!   "version": 1,
//!   "config": {num_bins, trees_per_bin, max_depth, min_leaf,
//!              bootstrap_fraction, seed, bootstrap},
//!   "catalog": [{name, source, temporality, kind}, ...],   // column order
//!   "fill_values": [f64, ...],                             // per column
//!   "thresholds": [f64, ...],                              // lower bin edges
//!   "forests": [
//!     {"bin": 0, "fallback_from": null | usize, "trees": [node, ...]}, ...
//!   ]
//! }
//! node = {"feature": usize, "threshold": f64, "left": node, "right": node}
//!      | {"leaf": f64}
//! ```
//!
//! A row goes left when `x[feature] <= threshold`. Floats are written in
//! shortest round-trip form.

use serde::{Deserialize, Serialize};

use super::iware::{Forest, IWareEnsemble};
use super::tree::{DecisionTree, Node};
use super::TrainConfig;
use crate::dataset::FeatureCatalog;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "poachgrid-iware";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    config: TrainConfig,
    catalog: FeatureCatalog,
    fill_values: Vec<f64>,
    thresholds: Vec<f64>,
    forests: Vec<ForestRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestRecord {
    bin: usize,
    fallback_from: Option<usize>,
    trees: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRecord {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<NodeRecord>,
        right: Box<NodeRecord>,
    },
    Leaf {
        leaf: f64,
    },
}

fn to_record(nodes: &[Node], i: usize) -> NodeRecord {
    match nodes[i] {
        Node::Leaf { fraction } => NodeRecord::Leaf { leaf: fraction },
        Node::Split { feature, threshold, left, right } => NodeRecord::Split {
            feature,
            threshold,
            left: Box::new(to_record(nodes, left)),
            right: Box::new(to_record(nodes, right)),
        },
    }
}

/// Rebuilds the flat node list in the same pre-order the trainer uses.
fn from_record(rec: NodeRecord, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    match rec {
        NodeRecord::Leaf { leaf } => nodes.push(Node::Leaf { fraction: leaf }),
        NodeRecord::Split { feature, threshold, left, right } => {
            nodes.push(Node::Leaf { fraction: 0.0 });
            let l = from_record(*left, nodes);
            let r = from_record(*right, nodes);
            nodes[id] = Node::Split { feature, threshold, left: l, right: r };
        }
    }
    id
}

pub fn ensemble_to_json(ens: &IWareEnsemble) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        config: ens.config,
        catalog: ens.catalog.clone(),
        fill_values: ens.fill_values.clone(),
        thresholds: ens.thresholds.clone(),
        forests: ens
            .forests
            .iter()
            .enumerate()
            .map(|(bin, f)| ForestRecord {
                bin,
                fallback_from: f.fallback_from,
                trees: f.trees.iter().map(|t| to_record(t.nodes(), 0)).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("model serialization cannot fail")
}

pub fn ensemble_from_json(text: &str) -> Result<IWareEnsemble> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Model(format!("not a model file: format {:?}", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::Model(format!(
            "unsupported model version {} (expected {MODEL_VERSION})",
            file.version
        )));
    }
    let mut forests = Vec::with_capacity(file.forests.len());
    for (i, f) in file.forests.into_iter().enumerate() {
        if f.bin != i {
            return Err(Error::Model(format!("forest {i} is labelled bin {}", f.bin)));
        }
        let trees = f
            .trees
            .into_iter()
            .map(|r| {
                let mut nodes = Vec::new();
                from_record(r, &mut nodes);
                DecisionTree::from_nodes(nodes)
            })
            .collect();
        forests.push(Forest { trees, fallback_from: f.fallback_from });
    }
    let ens = IWareEnsemble {
        config: file.config,
        catalog: file.catalog,
        fill_values: file.fill_values,
        thresholds: file.thresholds,
        forests,
    };
    ens.validate()?;
    Ok(ens)
}
