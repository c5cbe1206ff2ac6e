//! CART classification trees with Gini impurity.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Gains closer than this are treated as ties.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Fraction of positive training rows that reached the leaf.
    Leaf { fraction: f64 },
}

/// A trained tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { fraction } => return fraction,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Children exist and come after their parent, features are in range and
    /// leaf fractions lie in [0, 1].
    pub fn check(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match *n {
                Node::Leaf { fraction } if !(0.0..=1.0).contains(&fraction) => {
                    return Err(format!("node {i}: leaf fraction {fraction} outside [0, 1]"));
                }
                Node::Split { feature, threshold, left, right } => {
                    if feature >= n_features {
                        return Err(format!("node {i}: feature {feature} out of range"));
                    }
                    if threshold.is_nan() {
                        return Err(format!("node {i}: NaN threshold"));
                    }
                    if left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len() {
                        return Err(format!("node {i}: bad child index"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Gini impurity of a node with `pos` positives out of `n` rows.
pub fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Impurity decrease of splitting (pos, n) into (left_pos, left_n) and the rest.
pub fn split_gain(pos: usize, n: usize, left_pos: usize, left_n: usize) -> f64 {
    let (right_pos, right_n) = (pos - left_pos, n - left_n);
    let weighted = (left_n as f64 * gini(left_pos, left_n) + right_n as f64 * gini(right_pos, right_n)) / n as f64;
    gini(pos, n) - weighted
}

/// Trains a tree on the rows `sample` (indices into `x`/`y`, repeats allowed).
///
/// Candidate thresholds are midpoints between consecutive distinct values of
/// each feature. Gain ties go to the lowest feature index, then the lowest
/// threshold. Growth stops at `max_depth`, when a child would hold fewer
/// than `min_leaf` rows, or at pure nodes.
pub fn train_tree(x: &[&[f64]], y: &[u8], sample: &[usize], params: &TreeParams) -> DecisionTree {
    let n_features = x.first().map_or(0, |r| r.len());
    let mut builder = Builder { x, y, params, n_features, nodes: Vec::new(), scratch: Vec::new() };
    let mut idx = sample.to_vec();
    if idx.is_empty() {
        return DecisionTree { nodes: vec![Node::Leaf { fraction: 0.0 }] };
    }
    builder.build(&mut idx, 0);
    DecisionTree { nodes: builder.nodes }
}

struct Builder<'a> {
    x: &'a [&'a [f64]],
    y: &'a [u8],
    params: &'a TreeParams,
    n_features: usize,
    nodes: Vec<Node>,
    scratch: Vec<(f64, u8)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { fraction: pos as f64 / n as f64 });
        let min_leaf = self.params.min_leaf.max(1);
        if pos == 0 || pos == n || depth >= self.params.max_depth || n < 2 * min_leaf {
            return id;
        }
        let Some(best) = self.best_split(idx, pos) else {
            return id;
        };
        let mut split = 0;
        for k in 0..n {
            if self.x[idx[k]][best.feature] <= best.threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        // preserve a canonical order inside each child so results do not
        // depend on the swap sequence above
        let (l, r) = idx.split_at_mut(split);
        l.sort_unstable();
        r.sort_unstable();
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }

    fn best_split(&mut self, idx: &[usize], pos: usize) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        for f in 0..self.n_features {
            self.scratch.clear();
            self.scratch.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut left_pos = 0;
            for k in 0..n - 1 {
                left_pos += self.scratch[k].1 as usize;
                let (a, b) = (self.scratch[k].0, self.scratch[k + 1].0);
                let left_n = k + 1;
                if a.total_cmp(&b) == Ordering::Equal || left_n < min_leaf || n - left_n < min_leaf {
                    continue;
                }
                let gain = split_gain(pos, n, left_pos, left_n);
                if gain > best.as_ref().map_or(GAIN_EPS, |b| b.gain + GAIN_EPS) {
                    best = Some(BestSplit { feature: f, threshold: midpoint(a, b), gain });
                }
            }
        }
        best
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= a && m < b {
        m
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(rows: &[(Vec<f64>, u8)], params: TreeParams) -> DecisionTree {
        let x: Vec<&[f64]> = rows.iter().map(|r| r.0.as_slice()).collect();
        let y: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let sample: Vec<usize> = (0..rows.len()).collect();
        train_tree(&x, &y, &sample, &params)
    }

    const P: TreeParams = TreeParams { max_depth: 8, min_leaf: 1 };

    #[test]
    fn pure_node_is_leaf() {
        let t = fit(&[(vec![0.0], 1), (vec![3.0], 1)], P);
        assert_eq!(t.nodes(), &[Node::Leaf { fraction: 1.0 }]);
    }

    #[test]
    fn gini_arithmetic() {
        assert_eq!(gini(2, 4), 0.5);
        assert_eq!(split_gain(2, 4, 2, 2), 0.5);
        assert_eq!(gini(0, 3), 0.0);
    }

    /// Exhaustive search over every (feature, midpoint) pair, scored by
    /// direct label counting on each side.
    fn oracle_root(rows: &[(Vec<f64>, u8)]) -> (usize, f64) {
        let n = rows.len() as f64;
        let imp = |ys: &[u8]| {
            if ys.is_empty() {
                return 0.0;
            }
            let p = ys.iter().filter(|y| **y == 1).count() as f64 / ys.len() as f64;
            1.0 - p * p - (1.0 - p) * (1.0 - p)
        };
        let all: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let mut best = (usize::MAX, f64::NAN, f64::NEG_INFINITY);
        for f in 0..rows[0].0.len() {
            let mut vals: Vec<f64> = rows.iter().map(|r| r.0[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let l: Vec<u8> = rows.iter().filter(|r| r.0[f] <= t).map(|r| r.1).collect();
                let r: Vec<u8> = rows.iter().filter(|r| r.0[f] > t).map(|r| r.1).collect();
                let g = imp(&all) - (l.len() as f64 * imp(&l) + r.len() as f64 * imp(&r)) / n;
                if g > best.2 + 1e-12 {
                    best = (f, t, g);
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn separable_root_split() {
        let rows: Vec<(Vec<f64>, u8)> = (0..20)
            .map(|i| if i % 2 == 0 { (vec![-1.0, i as f64], 0) } else { (vec![1.0, i as f64], 1) })
            .collect();
        let t = fit(&rows, P);
        let (f, thr) = oracle_root(&rows);
        match t.nodes()[0] {
            Node::Split { feature, threshold, left, right } => {
                assert_eq!((feature, threshold), (f, thr));
                assert_eq!((feature, threshold), (0, 0.0));
                assert_eq!(t.nodes()[left], Node::Leaf { fraction: 0.0 });
                assert_eq!(t.nodes()[right], Node::Leaf { fraction: 1.0 });
            }
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn root_matches_oracle_on_noisy_data() {
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..20 {
            let rows: Vec<(Vec<f64>, u8)> = (0..40)
                .map(|_| {
                    let x = vec![(next() * 10.0).floor(), (next() * 10.0).floor(), next()];
                    let y = (x[0] + 3.0 * next() > 6.0) as u8;
                    (x, y)
                })
                .collect();
            if rows.iter().all(|r| r.1 == rows[0].1) {
                continue;
            }
            let t = fit(&rows, P);
            let (f, thr) = oracle_root(&rows);
            if let Node::Split { feature, threshold, .. } = t.nodes()[0] {
                assert_eq!(feature, f);
                assert!((threshold - thr).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn depth_and_min_leaf_respected() {
        let rows: Vec<(Vec<f64>, u8)> = (0..64).map(|i| (vec![i as f64], (i % 2) as u8)).collect();
        let t = fit(&rows, TreeParams { max_depth: 3, min_leaf: 1 });
        assert!(t.depth() <= 3);
        let t = fit(&rows, TreeParams { max_depth: 20, min_leaf: 40 });
        assert_eq!(t.nodes().len(), 1);
    }

    #[test]
    fn tie_prefers_lowest_feature() {
        // both features separate perfectly
        let rows = vec![(vec![0.0, 0.0], 0), (vec![1.0, 1.0], 1)];
        match fit(&rows, P).nodes()[0] {
            Node::Split { feature, .. } => assert_eq!(feature, 0),
            _ => panic!(),
        }
    }
}
