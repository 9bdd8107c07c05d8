//! Hybrid ranking/regression decision trees.
//!
//! Splits minimise the size-weighted hybrid loss of the two children, where
//! each child's loss is measured against labels recomputed on that child: the
//! mean cost vector for the MSE term and the Borda consensus for the
//! Spearman term.
//!
//! Split search sweeps every candidate feature in sorted order and keeps
//! running sufficient statistics, so evaluating one split point costs
//! `O(k log k)` rather than a pass over the node. The Spearman term reduces
//! to a dot product: with `u_I` the centred, unit-normalised rank vector of
//! member `I` and `v` the same transform of the consensus, the mean loss of
//! a node with `n` members is `0.5 - (sum_I u_I) . v / (2n)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::NodeLabels;
use crate::losses::{rank_vector, HybridLoss};

/// Relative tolerance under which two split losses count as tied.
pub const SPLIT_TIE_TOLERANCE: f64 = 1e-12;

/// Node losses at or below this are treated as pure.
pub const PURE_TOLERANCE: f64 = 1e-12;

/// True if `candidate` beats `incumbent` by more than the tie tolerance.
pub fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - SPLIT_TIE_TOLERANCE * incumbent.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    All,
    /// `ceil(sqrt(p))`
    Sqrt,
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(&self, num_features: usize) -> usize {
        let m = match *self {
            FeaturesPerSplit::All => num_features,
            FeaturesPerSplit::Sqrt => (num_features as f64).sqrt().ceil() as usize,
            FeaturesPerSplit::Count(m) => m,
        };
        m.clamp(1, num_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub loss: HybridLoss,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub features_per_split: FeaturesPerSplit,
}

impl TreeConfig {
    pub fn new(lambda: f64, max_depth: usize) -> Result<Self> {
        Ok(TreeConfig {
            loss: HybridLoss::new(lambda)?,
            max_depth,
            min_samples_split: 2,
            features_per_split: FeaturesPerSplit::All,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Internal {
        feature: usize,
        split: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        labels: NodeLabels,
        size: usize,
    },
}

impl TreeNode {
    /// Routes `x` to a leaf; values equal to a split point go left.
    pub fn predict_leaf(&self, x: &[f64]) -> &NodeLabels {
        let mut node = self;
        loop {
            match node {
                TreeNode::Internal {
                    feature,
                    split,
                    left,
                    right,
                } => node = if x[*feature] <= *split { left } else { right },
                TreeNode::Leaf { labels, .. } => return labels,
            }
        }
    }

    /// Longest root-to-leaf path, counted in internal nodes.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => left.num_leaves() + right.num_leaves(),
            TreeNode::Leaf { .. } => 1,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub split: f64,
    pub loss: f64,
}

/// Per-row ranking data, computed once per training set.
struct PreparedLabels<'a> {
    labels: &'a [Vec<f64>],
    ranks: Vec<Vec<f64>>,
    /// Centred rank vector scaled to unit length; `None` for all-tied rows.
    units: Vec<Option<Vec<f64>>>,
    k: usize,
    centre: f64,
}

impl<'a> PreparedLabels<'a> {
    fn new(labels: &'a [Vec<f64>], with_ranks: bool) -> Self {
        let k = labels.first().map_or(0, Vec::len);
        let centre = (k as f64 + 1.0) / 2.0;
        let (mut ranks, mut units) = (Vec::new(), Vec::new());
        if with_ranks {
            for y in labels {
                let r = rank_vector(y).into_inner();
                let centred: Vec<f64> = r.iter().map(|v| v - centre).collect();
                let norm = centred.iter().map(|c| c * c).sum::<f64>().sqrt();
                units.push((norm > 0.0).then(|| centred.iter().map(|c| c / norm).collect()));
                ranks.push(r);
            }
        }
        PreparedLabels {
            labels,
            ranks,
            units,
            k,
            centre,
        }
    }
}

/// Running sums over a set of rows.
#[derive(Clone)]
struct NodeStats {
    count: usize,
    /// Sum of labels shifted by the parent node's mean.
    sum: Vec<f64>,
    sum_sq: f64,
    borda: Vec<f64>,
    unit_sum: Vec<f64>,
}

impl NodeStats {
    fn empty(k: usize) -> Self {
        NodeStats {
            count: 0,
            sum: vec![0.0; k],
            sum_sq: 0.0,
            borda: vec![0.0; k],
            unit_sum: vec![0.0; k],
        }
    }

    fn add(&mut self, prep: &PreparedLabels, shift: &[f64], row: usize, loss: HybridLoss) {
        self.count += 1;
        if loss.uses_regression() {
            for ((s, y), m) in self.sum.iter_mut().zip(&prep.labels[row]).zip(shift) {
                let d = y - m;
                *s += d;
                self.sum_sq += d * d;
            }
        }
        if loss.uses_ranking() {
            for (b, r) in self.borda.iter_mut().zip(&prep.ranks[row]) {
                *b += r;
            }
            if let Some(u) = &prep.units[row] {
                for (s, v) in self.unit_sum.iter_mut().zip(u) {
                    *s += v;
                }
            }
        }
    }

    fn minus(&self, other: &NodeStats) -> NodeStats {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        NodeStats {
            count: self.count - other.count,
            sum: sub(&self.sum, &other.sum),
            sum_sq: self.sum_sq - other.sum_sq,
            borda: sub(&self.borda, &other.borda),
            unit_sum: sub(&self.unit_sum, &other.unit_sum),
        }
    }

    fn loss(&self, prep: &PreparedLabels, loss: HybridLoss) -> f64 {
        let n = self.count as f64;
        let k = prep.k as f64;
        let mut regression = 0.0;
        if loss.uses_regression() {
            let mean_sq: f64 = self.sum.iter().map(|s| (s / n) * (s / n)).sum();
            regression = ((self.sum_sq / n - mean_sq) / k).max(0.0);
        }
        let mut ranking = 0.0;
        if loss.uses_ranking() {
            let consensus = rank_vector(&self.borda).into_inner();
            let centred: Vec<f64> = consensus.iter().map(|r| r - prep.centre).collect();
            let norm = centred.iter().map(|c| c * c).sum::<f64>().sqrt();
            ranking = if norm == 0.0 {
                0.5
            } else {
                let dot: f64 = self.unit_sum.iter().zip(&centred).map(|(u, c)| u * c).sum();
                (0.5 - dot / (norm * 2.0 * n)).clamp(0.0, 1.0)
            };
        }
        loss.combine(ranking, regression)
    }
}

fn node_mean(prep: &PreparedLabels, rows: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; prep.k];
    for &r in rows {
        for (m, y) in mean.iter_mut().zip(&prep.labels[r]) {
            *m += y;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn node_stats(prep: &PreparedLabels, rows: &[usize], shift: &[f64], loss: HybridLoss) -> NodeStats {
    let mut stats = NodeStats::empty(prep.k);
    for &r in rows {
        stats.add(prep, shift, r, loss);
    }
    stats
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    if mid < hi {
        mid
    } else {
        lo
    }
}

fn search_split(
    features: &[Vec<f64>],
    prep: &PreparedLabels,
    rows: &[usize],
    loss: HybridLoss,
    candidates: &[usize],
    shift: &[f64],
    total: &NodeStats,
) -> Option<Split> {
    let n = rows.len() as f64;
    let mut best: Option<Split> = None;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &f in candidates {
        order.clear();
        order.extend(rows.iter().map(|&r| (features[r][f], r)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = NodeStats::empty(prep.k);
        for w in 0..order.len() - 1 {
            left.add(prep, shift, order[w].1, loss);
            let (lo, hi) = (order[w].0, order[w + 1].0);
            if lo == hi {
                continue;
            }
            let right = total.minus(&left);
            let weighted = (left.count as f64 / n) * left.loss(prep, loss)
                + (right.count as f64 / n) * right.loss(prep, loss);
            // candidates arrive in (feature, split) order, so only a strict
            // improvement displaces the incumbent
            if best.is_none_or(|b| improves(weighted, b.loss)) {
                best = Some(Split {
                    feature: f,
                    split: midpoint(lo, hi),
                    loss: weighted,
                });
            }
        }
    }
    best
}

fn validate(features: &[Vec<f64>], labels: &[Vec<f64>], rows: &[usize], loss: HybridLoss) -> Result<()> {
    if features.len() != labels.len() {
        return Err(Error::domain("features and labels have different row counts"));
    }
    let p = features.first().map_or(0, Vec::len);
    let k = labels.first().map_or(0, Vec::len);
    if k == 0 || features.iter().any(|r| r.len() != p) || labels.iter().any(|r| r.len() != k) {
        return Err(Error::domain("ragged feature or label matrix"));
    }
    if loss.uses_ranking() && k < 2 {
        return Err(Error::domain("ranking loss needs at least 2 algorithms"));
    }
    if rows.iter().any(|&r| r >= features.len()) {
        return Err(Error::domain("row index out of range"));
    }
    Ok(())
}

/// Best (feature, split point) over `candidates` for the given rows, or
/// `None` if no candidate feature takes two distinct values.
///
/// Split points are midpoints between consecutive distinct values. Ties go
/// to the lowest feature index, then the lowest split point.
pub fn best_split(
    features: &[Vec<f64>],
    labels: &[Vec<f64>],
    rows: &[usize],
    loss: HybridLoss,
    candidates: &[usize],
) -> Result<Option<Split>> {
    validate(features, labels, rows, loss)?;
    if rows.len() < 2 {
        return Err(Error::domain("split search needs at least 2 rows"));
    }
    let p = features[0].len();
    if candidates.iter().any(|&f| f >= p) {
        return Err(Error::domain("candidate feature out of range"));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let prep = PreparedLabels::new(labels, loss.uses_ranking());
    let shift = node_mean(&prep, rows);
    let total = node_stats(&prep, rows, &shift, loss);
    Ok(search_split(features, &prep, rows, loss, &sorted, &shift, &total))
}

struct Builder<'a, 'r, R: Rng> {
    features: &'a [Vec<f64>],
    prep: PreparedLabels<'a>,
    config: TreeConfig,
    num_candidates: usize,
    rng: &'r mut R,
}

impl<R: Rng> Builder<'_, '_, R> {
    fn leaf(&self, rows: &[usize]) -> Result<TreeNode> {
        let members: Vec<&[f64]> = rows.iter().map(|&r| self.prep.labels[r].as_slice()).collect();
        Ok(TreeNode::Leaf {
            labels: NodeLabels::compute(&members)?,
            size: rows.len(),
        })
    }

    fn candidates(&mut self) -> Vec<usize> {
        let p = self.features[0].len();
        if self.num_candidates >= p {
            return (0..p).collect();
        }
        let mut picked = rand::seq::index::sample(self.rng, p, self.num_candidates).into_vec();
        picked.sort_unstable();
        picked
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> Result<TreeNode> {
        let loss = self.config.loss;
        if depth >= self.config.max_depth || rows.len() < self.config.min_samples_split.max(2) {
            return self.leaf(&rows);
        }
        let shift = node_mean(&self.prep, &rows);
        let total = node_stats(&self.prep, &rows, &shift, loss);
        if total.loss(&self.prep, loss) <= PURE_TOLERANCE {
            return self.leaf(&rows);
        }
        let candidates = self.candidates();
        let Some(split) = search_split(self.features, &self.prep, &rows, loss, &candidates, &shift, &total)
        else {
            return self.leaf(&rows);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.features[r][split.feature] <= split.split);
        debug_assert!(!left.is_empty() && !right.is_empty());
        Ok(TreeNode::Internal {
            feature: split.feature,
            split: split.split,
            left: Box::new(self.build(left, depth + 1)?),
            right: Box::new(self.build(right, depth + 1)?),
        })
    }
}

/// Grows a tree on `rows` (duplicates allowed, as in a bootstrap sample).
///
/// A node becomes a leaf at `max_depth`, below `min_samples_split` rows,
/// when its hybrid loss is zero, or when no candidate feature can split it.
pub fn build_tree<R: Rng>(
    features: &[Vec<f64>],
    labels: &[Vec<f64>],
    rows: &[usize],
    config: &TreeConfig,
    rng: &mut R,
) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::domain("cannot build a tree on an empty set"));
    }
    validate(features, labels, rows, config.loss)?;
    let p = features[0].len();
    if p == 0 {
        return Err(Error::domain("no features"));
    }
    let mut builder = Builder {
        features,
        prep: PreparedLabels::new(labels, config.loss.uses_ranking()),
        config: *config,
        num_candidates: config.features_per_split.resolve(p),
        rng,
    };
    builder.build(rows.to_vec(), 0)
}
