//! Depth-limited regression trees fitted to residuals by greedy
//! squared-error splitting.
//!
//! Internal nodes send an instance left iff `x[feature_index] <= threshold`.
//! Leaves are numbered `1..=J` from left to right. Fitting leaves every
//! leaf value at zero; the booster overwrites them afterwards.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

/// A split must cut the node's SSE by more than this fraction of it.
/// Guards against splitting on rounding noise when child means coincide.
const MIN_RELATIVE_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature_index: usize,
    pub threshold: f64,
    /// Sum of squared errors of the two children around their own means.
    pub sse_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 1,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        leaf_id: usize,
        gamma: f64,
    },
}

impl Node {
    fn leaf() -> Self {
        Node::Leaf {
            leaf_id: 0,
            gamma: 0.0,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn number_leaves(&mut self, next: &mut usize) {
        match self {
            Node::Leaf { leaf_id, .. } => {
                *next += 1;
                *leaf_id = *next;
            }
            Node::Split { left, right, .. } => {
                left.number_leaves(next);
                right.number_leaves(next);
            }
        }
    }

    fn for_each_leaf_mut(&mut self, f: &mut impl FnMut(usize, &mut f64)) {
        match self {
            Node::Leaf { leaf_id, gamma } => f(*leaf_id, gamma),
            Node::Split { left, right, .. } => {
                left.for_each_leaf_mut(f);
                right.for_each_leaf_mut(f);
            }
        }
    }

    fn leaves(&self, out: &mut Vec<(usize, f64)>) {
        match self {
            Node::Leaf { leaf_id, gamma } => out.push((*leaf_id, *gamma)),
            Node::Split { left, right, .. } => {
                left.leaves(out);
                right.leaves(out);
            }
        }
    }
}

/// A fitted tree `T_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    root: Node,
    n_leaves: usize,
}

impl RegressionTree {
    /// Wraps an already-numbered node structure, checking that leaf ids
    /// run `1..=J` left to right and that every value is finite.
    pub fn from_root(root: Node) -> Result<Self> {
        let mut leaves = Vec::new();
        root.leaves(&mut leaves);
        for (pos, &(id, gamma)) in leaves.iter().enumerate() {
            if id != pos + 1 {
                return Err(Error::InvalidArgument(format!(
                    "leaf ids must be 1..=J left to right; found {id} at position {}",
                    pos + 1
                )));
            }
            if !gamma.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "leaf {id} has non-finite value"
                )));
            }
        }
        check_thresholds(&root)?;
        Ok(Self {
            n_leaves: leaves.len(),
            root,
        })
    }

    fn from_unnumbered(mut root: Node) -> Self {
        let mut n = 0;
        root.number_leaves(&mut n);
        Self { root, n_leaves: n }
    }

    /// A tree with a single leaf holding every instance.
    pub fn single_leaf() -> Self {
        Self::from_unnumbered(Node::leaf())
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Largest feature index referenced by a split, if any.
    pub fn max_feature_index(&self) -> Option<usize> {
        fn walk(node: &Node, acc: &mut Option<usize>) {
            if let Node::Split {
                feature_index,
                left,
                right,
                ..
            } = node
            {
                *acc = Some(acc.map_or(*feature_index, |a| a.max(*feature_index)));
                walk(left, acc);
                walk(right, acc);
            }
        }
        let mut acc = None;
        walk(&self.root, &mut acc);
        acc
    }

    /// `(leaf_id, gamma)` pairs in leaf order.
    pub fn leaf_values(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.n_leaves);
        self.root.leaves(&mut out);
        out
    }

    /// Overwrites leaf values; `values[j - 1]` goes to leaf `j`.
    pub fn set_leaf_values(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.n_leaves, "one value per leaf required");
        self.root
            .for_each_leaf_mut(&mut |id, gamma| *gamma = values[id - 1]);
    }

    /// Routes `x` to its leaf and returns `(leaf_id, gamma)`.
    pub fn apply(&self, x: &[f64]) -> (usize, f64) {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { leaf_id, gamma } => return (*leaf_id, *gamma),
                Node::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Tree output `T_m(x)`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.apply(x).1
    }

    /// Groups `instances` by the leaf they reach.
    pub fn leaf_assignment(&self, features: &Matrix, instances: &[usize]) -> LeafAssignment {
        let mut members = vec![Vec::new(); self.n_leaves];
        for &i in instances {
            let (leaf, _) = self.apply(features.row(i));
            members[leaf - 1].push(i);
        }
        LeafAssignment { members }
    }
}

fn check_thresholds(node: &Node) -> Result<()> {
    if let Node::Split {
        threshold,
        left,
        right,
        ..
    } = node
    {
        if !threshold.is_finite() {
            return Err(Error::InvalidArgument(
                "split threshold is not finite".into(),
            ));
        }
        check_thresholds(left)?;
        check_thresholds(right)?;
    }
    Ok(())
}

/// Instance indices per leaf: the sets `Ω_{m,j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafAssignment {
    members: Vec<Vec<usize>>,
}

impl LeafAssignment {
    pub fn n_leaves(&self) -> usize {
        self.members.len()
    }

    /// Members of leaf `leaf_id` (1-based), in the order they were given.
    pub fn members(&self, leaf_id: usize) -> &[usize] {
        &self.members[leaf_id - 1]
    }

    /// `(leaf_id, members)` pairs in leaf order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.members
            .iter()
            .enumerate()
            .map(|(j, m)| (j + 1, m.as_slice()))
    }
}

/// Running mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }
}

fn node_sse(residuals: &[f64], instances: &[usize]) -> f64 {
    let mut m = Moments::default();
    for &i in instances {
        m.push(residuals[i]);
    }
    m.m2
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mut mid = (a + b) / 2.0;
    if !mid.is_finite() {
        mid = a + (b - a) / 2.0;
    }
    // Adjacent floats can round the midpoint onto `b`, which would send
    // `b` left as well.
    if mid < b {
        mid
    } else {
        a
    }
}

/// Best squared-error split of `instances`, or `None` when no split
/// strictly lowers the SSE. Ties go to the lowest feature index, then the
/// lowest threshold.
pub fn best_split(
    features: &Matrix,
    residuals: &[f64],
    instances: &[usize],
) -> Option<SplitCandidate> {
    find_split(features, residuals, instances, 1)
}

/// As [`best_split`], considering only splits that leave at least
/// `min_leaf` instances on each side.
pub fn find_split(
    features: &Matrix,
    residuals: &[f64],
    instances: &[usize],
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let n = instances.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let parent_sse = node_sse(residuals, instances);

    let mut best: Option<SplitCandidate> = None;
    let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut suffix = vec![0.0; n + 1];

    for j in 0..features.n_cols() {
        sorted.clear();
        sorted.extend(
            instances
                .iter()
                .map(|&i| (features.get(i, j), residuals[i])),
        );
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        // suffix[k] = SSE of sorted[k..]
        let mut right = Moments::default();
        suffix[n] = 0.0;
        for k in (0..n).rev() {
            right.push(sorted[k].1);
            suffix[k] = right.m2;
        }

        let mut left = Moments::default();
        for k in 0..n - 1 {
            left.push(sorted[k].1);
            let (xa, xb) = (sorted[k].0, sorted[k + 1].0);
            if xa == xb || left.count < min_leaf || n - left.count < min_leaf {
                continue;
            }
            let sse = left.m2 + suffix[k + 1];
            if best.is_none_or(|b| sse < b.sse_after) {
                best = Some(SplitCandidate {
                    feature_index: j,
                    threshold: midpoint(xa, xb),
                    sse_after: sse,
                });
            }
        }
    }

    best.filter(|b| b.sse_after < parent_sse * (1.0 - MIN_RELATIVE_GAIN))
}

/// Grows a tree on `instances` by recursive greedy splitting. Stops at
/// `max_depth`, when a child would drop below `min_leaf`, or when no split
/// lowers the SSE.
pub fn fit_tree(
    features: &Matrix,
    residuals: &[f64],
    instances: &[usize],
    params: &TreeParams,
) -> RegressionTree {
    let root = grow(features, residuals, instances.to_vec(), 0, params);
    RegressionTree::from_unnumbered(root)
}

fn grow(
    features: &Matrix,
    residuals: &[f64],
    instances: Vec<usize>,
    depth: usize,
    params: &TreeParams,
) -> Node {
    if depth >= params.max_depth {
        return Node::leaf();
    }
    let Some(split) = find_split(features, residuals, &instances, params.min_leaf) else {
        return Node::leaf();
    };
    let (left, right): (Vec<usize>, Vec<usize>) = instances
        .into_iter()
        .partition(|&i| features.get(i, split.feature_index) <= split.threshold);
    Node::Split {
        feature_index: split.feature_index,
        threshold: split.threshold,
        left: Box::new(grow(features, residuals, left, depth + 1, params)),
        right: Box::new(grow(features, residuals, right, depth + 1, params)),
    }
}

/// A decision stump on an externally chosen split. A side may end up
/// with no instances.
pub fn forced_stump(
    n_features: usize,
    feature_index: usize,
    threshold: f64,
) -> Result<RegressionTree> {
    if feature_index >= n_features {
        return Err(Error::Config(format!(
            "forced split uses feature {feature_index} but data has {n_features} features"
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::Config(
            "forced split threshold must be finite".into(),
        ));
    }
    Ok(RegressionTree::from_unnumbered(Node::Split {
        feature_index,
        threshold,
        left: Box::new(Node::leaf()),
        right: Box::new(Node::leaf()),
    }))
}
