//! CART regression trees.
//!
//! A node holding more than `leaf_cap` rows is split on the feature/threshold
//! pair minimizing `(S_A·MSE(S_A) + S_B·MSE(S_B)) / S`, searched over a fresh
//! random subset of `mtry` features. Candidate thresholds are midpoints
//! between consecutive distinct feature values, and a row goes left when its
//! value is `<= threshold`.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::panel::DesignMatrix;
use crate::{Error, Result};

/// Row-major feature table with targets, the training input for trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    x: Vec<f64>,
    y: Vec<f64>,
    p: usize,
}

impl Samples {
    pub fn new(x: Vec<f64>, y: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 || x.len() != y.len() * p {
            return Err(Error::DimensionMismatch {
                expected: y.len() * p.max(1),
                got: x.len(),
            });
        }
        Ok(Samples { x, y, p })
    }

    pub fn from_design(design: &DesignMatrix) -> Self {
        let p = design.n_features();
        let mut x = Vec::with_capacity(design.len() * p);
        for row in design.rows() {
            x.extend_from_slice(&row.features);
        }
        Samples {
            x,
            y: design.targets(),
            p,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.x[i * self.p + k]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }
}

/// A candidate binary split and its objective value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub left_count: usize,
    pub right_count: usize,
    /// `(S_A·MSE(S_A) + S_B·MSE(S_B)) / S`.
    pub weighted_mse: f64,
}

/// Exhaustive split search over `candidates` for the node holding `rows`.
///
/// Each candidate feature is sorted once and swept with prefix/suffix sums of
/// the node-centered targets. Ties (within 1e-12 of the node MSE) go to the
/// lowest feature index, then the lowest threshold. Returns `None` when no
/// candidate feature takes two distinct values on the node.
pub fn best_split(samples: &Samples, rows: &[usize], candidates: &[usize]) -> Result<Option<SplitCandidate>> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("empty candidate feature set".into()));
    }
    if let Some(&k) = candidates.iter().find(|&&k| k >= samples.p) {
        return Err(Error::InvalidParameter(format!(
            "feature index {k} out of range for {} features",
            samples.p
        )));
    }
    let n = rows.len();
    if n < 2 {
        return Ok(None);
    }
    let mut features = candidates.to_vec();
    features.sort_unstable();
    features.dedup();

    let mean = rows.iter().map(|&i| samples.y[i]).sum::<f64>() / n as f64;
    let parent_mse = rows.iter().map(|&i| (samples.y[i] - mean).powi(2)).sum::<f64>() / n as f64;
    let tol = 1e-12 * parent_mse;

    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut suffix_sum = vec![0.0; n + 1];
    let mut suffix_sq = vec![0.0; n + 1];
    let mut best: Option<SplitCandidate> = None;

    for &k in &features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (samples.value(i, k), samples.y[i] - mean)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        for j in (0..n).rev() {
            suffix_sum[j] = suffix_sum[j + 1] + pairs[j].1;
            suffix_sq[j] = suffix_sq[j + 1] + pairs[j].1 * pairs[j].1;
        }
        let (mut sum, mut sq) = (0.0, 0.0);
        for j in 0..n - 1 {
            sum += pairs[j].1;
            sq += pairs[j].1 * pairs[j].1;
            let (lo, hi) = (pairs[j].0, pairs[j + 1].0);
            if lo == hi {
                continue;
            }
            let nl = (j + 1) as f64;
            let nr = (n - j - 1) as f64;
            let sse_left = (sq - sum * sum / nl).max(0.0);
            let sse_right = (suffix_sq[j + 1] - suffix_sum[j + 1].powi(2) / nr).max(0.0);
            let objective = (sse_left + sse_right) / n as f64;
            if best.is_none_or(|b| objective < b.weighted_mse - tol) {
                best = Some(SplitCandidate {
                    feature: k,
                    threshold: midpoint(lo, hi),
                    left_count: j + 1,
                    right_count: n - j - 1,
                    weighted_mse: objective,
                });
            }
        }
    }
    Ok(best)
}

/// Midpoint of `lo < hi` that still separates them under `<=` routing.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowConfig {
    /// A node with at most this many rows becomes a leaf.
    pub leaf_cap: usize,
    /// Features drawn per split; `None` means `max(1, ceil(p / 3))`.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
}

impl Default for GrowConfig {
    fn default() -> Self {
        GrowConfig {
            leaf_cap: 10,
            mtry: None,
            max_depth: None,
        }
    }
}

impl GrowConfig {
    pub fn with_leaf_cap(leaf_cap: usize) -> Self {
        GrowConfig {
            leaf_cap,
            ..Default::default()
        }
    }

    /// Effective `mtry` for `p` features, validated against `[1, p]`.
    pub fn resolve_mtry(&self, p: usize) -> Result<usize> {
        let m = self.mtry.unwrap_or_else(|| p.div_ceil(3).max(1));
        if m == 0 || m > p {
            return Err(Error::InvalidParameter(format!("mtry {m} outside [1, {p}]")));
        }
        Ok(m)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.leaf_cap == 0 {
            return Err(Error::InvalidParameter("leaf_cap must be at least 1".into()));
        }
        self.resolve_mtry(p).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        n: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        prediction: f64,
        n: usize,
    },
}

impl TreeNode {
    pub fn size(&self) -> usize {
        match self {
            TreeNode::Split { n, .. } | TreeNode::Leaf { n, .. } => *n,
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// One leaf with the split conditions on its root path.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafPath {
    pub prediction: f64,
    pub n: usize,
    /// `(feature, threshold, went_left)` from the root down.
    pub conditions: Vec<(usize, f64, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: TreeNode,
    pub feature_names: Vec<String>,
    pub config: GrowConfig,
    pub training_rows: Vec<usize>,
}

/// Grows a tree on `rows` of `samples`, drawing per-split feature subsets
/// from `rng`.
pub fn grow_tree<R: Rng + ?Sized>(
    samples: &Samples,
    rows: &[usize],
    feature_names: &[String],
    config: &GrowConfig,
    rng: &mut R,
) -> Result<RegressionTree> {
    if rows.is_empty() {
        return Err(Error::Degenerate("cannot grow a tree on zero rows".into()));
    }
    if feature_names.len() != samples.p {
        return Err(Error::DimensionMismatch {
            expected: samples.p,
            got: feature_names.len(),
        });
    }
    config.validate(samples.p)?;
    let mtry = config.resolve_mtry(samples.p)?;
    let mut grower = Grower {
        samples,
        config,
        mtry,
        rng,
    };
    let mut work = rows.to_vec();
    let root = grower.grow(&mut work, 0)?;
    Ok(RegressionTree {
        root,
        feature_names: feature_names.to_vec(),
        config: GrowConfig {
            mtry: Some(mtry),
            ..*config
        },
        training_rows: rows.to_vec(),
    })
}

struct Grower<'a, R: ?Sized> {
    samples: &'a Samples,
    config: &'a GrowConfig,
    mtry: usize,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Grower<'_, R> {
    fn leaf(&self, rows: &[usize]) -> TreeNode {
        let sum: f64 = rows.iter().map(|&i| self.samples.y[i]).sum();
        TreeNode::Leaf {
            prediction: sum / rows.len() as f64,
            n: rows.len(),
        }
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> Result<TreeNode> {
        let n = rows.len();
        if n <= self.config.leaf_cap || self.config.max_depth.is_some_and(|d| depth >= d) {
            return Ok(self.leaf(rows));
        }
        let mut candidates = index::sample(self.rng, self.samples.p, self.mtry).into_vec();
        candidates.sort_unstable();
        let Some(split) = best_split(self.samples, rows, &candidates)? else {
            return Ok(self.leaf(rows));
        };
        // Stable partition keeps the row order inside each child.
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.samples.value(i, split.feature) <= split.threshold);
        debug_assert_eq!(left.len(), split.left_count);
        let left_node = self.grow(&mut left, depth + 1)?;
        let right_node = self.grow(&mut right, depth + 1)?;
        Ok(TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            n,
            left: Box::new(left_node),
            right: Box::new(right_node),
        })
    }
}

impl RegressionTree {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Leaf value reached by `x` (left iff `x[k] <= t_k`).
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(self.route(x))
    }

    pub(crate) fn route(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaves(&self) -> Vec<LeafPath> {
        fn walk(node: &TreeNode, path: &mut Vec<(usize, f64, bool)>, out: &mut Vec<LeafPath>) {
            match node {
                TreeNode::Leaf { prediction, n } => out.push(LeafPath {
                    prediction: *prediction,
                    n: *n,
                    conditions: path.clone(),
                }),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    path.push((*feature, *threshold, true));
                    walk(left, path, out);
                    path.last_mut().expect("pushed").2 = false;
                    walk(right, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// Indented text rendering down to `max_depth` levels below the root;
    /// deeper subtrees are shown as `…`. Left children come first.
    pub fn render(&self, max_depth: usize) -> String {
        fn walk(tree: &RegressionTree, node: &TreeNode, depth: usize, max: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            if depth > 0 && depth >= max {
                let _ = writeln!(out, "{pad}…");
                return;
            }
            match node {
                TreeNode::Leaf { prediction, n } => {
                    let _ = writeln!(out, "{pad}leaf: pred={prediction} n={n}");
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    n,
                    left,
                    right,
                } => {
                    let name = &tree.feature_names[*feature];
                    let _ = writeln!(out, "{pad}split: {name} <= {threshold} n={n}");
                    walk(tree, left, depth + 1, max, out);
                    walk(tree, right, depth + 1, max, out);
                }
            }
        }
        let mut out = String::new();
        walk(self, &self.root, 0, max_depth.max(1), &mut out);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
