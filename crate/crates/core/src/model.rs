//! Versioned JSON model files.
//!
//! A model file is a single JSON object:
//!
//! ```text
//! {
//!   "format": "harris-forest",
//!   "version": 1,
//!   "algorithm_names": [..k names..],
//!   "feature_names": [..p names..],
//!   "imputation_medians": [..p values..],
//!   "scale": {"min": .., "max": ..},
//!   "config": {..forest config..},
//!   "trees": [{"nodes": [..]}, ..]
//! }
//! ```
//!
//! Each tree is a pre-order node list with the root at index 0. Split nodes
//! are `{"kind": "split", "feature", "threshold", "left", "right"}` where
//! `left`/`right` index into the same list and `x[feature] <= threshold`
//! goes left. Leaves are `{"kind": "leaf", "size", "regression", "ranking"}`
//! with the regression label in scaled units.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aslib::{FeatureImputer, ScaleParams};
use crate::error::{Error, Result};
use crate::forest::{ForestConfig, HybridForest};
use crate::labels::NodeLabels;
use crate::losses::{HybridLoss, Ranking};
use crate::tree::TreeNode;

pub const MODEL_FORMAT: &str = "harris-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlatNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
        regression: Vec<f64>,
        ranking: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatTree {
    pub nodes: Vec<FlatNode>,
}

impl FlatTree {
    pub fn from_tree(tree: &TreeNode) -> Self {
        fn walk(node: &TreeNode, out: &mut Vec<FlatNode>) -> usize {
            let idx = out.len();
            match node {
                TreeNode::Leaf { labels, size } => out.push(FlatNode::Leaf {
                    size: *size,
                    regression: labels.regression.clone(),
                    ranking: labels.ranking.ranks().to_vec(),
                }),
                TreeNode::Internal {
                    feature,
                    split,
                    left,
                    right,
                } => {
                    out.push(FlatNode::Split {
                        feature: *feature,
                        threshold: *split,
                        left: 0,
                        right: 0,
                    });
                    let l = walk(left, out);
                    let r = walk(right, out);
                    if let FlatNode::Split { left, right, .. } = &mut out[idx] {
                        *left = l;
                        *right = r;
                    }
                }
            }
            idx
        }
        let mut nodes = Vec::new();
        walk(tree, &mut nodes);
        FlatTree { nodes }
    }

    pub fn to_tree(&self, num_features: usize, num_algorithms: usize) -> Result<TreeNode> {
        fn build(t: &FlatTree, idx: usize, p: usize, k: usize) -> Result<TreeNode> {
            let bad = |m: String| Error::ModelFormat(m);
            match t.nodes.get(idx).ok_or_else(|| bad(format!("node {idx} missing")))? {
                FlatNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= p {
                        return Err(bad(format!("node {idx}: feature {feature} out of range")));
                    }
                    if *left <= idx || *right <= idx || !threshold.is_finite() {
                        return Err(bad(format!("node {idx}: malformed split")));
                    }
                    Ok(TreeNode::Internal {
                        feature: *feature,
                        split: *threshold,
                        left: Box::new(build(t, *left, p, k)?),
                        right: Box::new(build(t, *right, p, k)?),
                    })
                }
                FlatNode::Leaf {
                    size,
                    regression,
                    ranking,
                } => {
                    if regression.len() != k || ranking.len() != k {
                        return Err(bad(format!("node {idx}: label length differs from {k}")));
                    }
                    let ranking = Ranking::new(ranking.clone())
                        .map_err(|e| bad(format!("node {idx}: {e}")))?;
                    Ok(TreeNode::Leaf {
                        labels: NodeLabels {
                            regression: regression.clone(),
                            ranking,
                        },
                        size: *size,
                    })
                }
            }
        }
        build(self, 0, num_features, num_algorithms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub algorithm_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub imputation_medians: Vec<f64>,
    pub scale: ScaleParams,
    pub config: ForestConfig,
    pub trees: Vec<FlatTree>,
}

/// A fitted forest together with what is needed to score raw feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub forest: HybridForest,
    pub feature_names: Vec<String>,
    pub imputer: FeatureImputer,
}

impl TrainedModel {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            algorithm_names: self.forest.algorithm_names.clone(),
            feature_names: self.feature_names.clone(),
            imputation_medians: self.imputer.medians().to_vec(),
            scale: self.forest.scale,
            config: self.forest.config,
            trees: self.forest.trees.iter().map(FlatTree::from_tree).collect(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unknown format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "model version {} is not supported (expected {MODEL_VERSION})",
                file.version
            )));
        }
        let p = file.feature_names.len();
        let k = file.algorithm_names.len();
        if file.imputation_medians.len() != p {
            return Err(Error::ModelFormat("imputation medians do not match features".into()));
        }
        HybridLoss::new(file.config.tree.loss.lambda())
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.trees.len() != file.config.n_trees || file.trees.is_empty() {
            return Err(Error::ModelFormat("tree count does not match n_trees".into()));
        }
        let trees = file
            .trees
            .iter()
            .map(|t| t.to_tree(p, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainedModel {
            forest: HybridForest {
                trees,
                config: file.config,
                scale: file.scale,
                algorithm_names: file.algorithm_names,
                num_features: p,
            },
            feature_names: file.feature_names,
            imputer: FeatureImputer::from_medians(file.imputation_medians),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_file())?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Imputes missing values, then returns the selected algorithm index and
    /// the predicted costs in original units.
    pub fn predict(&self, raw: &[Option<f64>]) -> Result<(usize, Vec<f64>)> {
        if raw.len() != self.feature_names.len() {
            return Err(Error::domain(format!(
                "expected {} features, got {}",
                self.feature_names.len(),
                raw.len()
            )));
        }
        let x = self.imputer.apply(raw);
        self.forest.check_input(&x)?;
        Ok((self.forest.select_algorithm(&x), self.forest.predict_costs_original(&x)))
    }
}
