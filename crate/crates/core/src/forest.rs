//! Bagged forests of hybrid trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aslib::{argmin, ScaleParams, TrainingSet};
use crate::error::{Error, Result};
use crate::labels::NodeLabels;
use crate::tree::{build_tree, FeaturesPerSplit, TreeConfig, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestConfig {
    /// Breiman-style defaults: 100 bootstrapped trees, `ceil(sqrt(p))`
    /// candidate features per split.
    pub fn new(lambda: f64, max_depth: usize, seed: u64) -> Result<Self> {
        Ok(ForestConfig {
            n_trees: 100,
            tree: TreeConfig {
                features_per_split: FeaturesPerSplit::Sqrt,
                ..TreeConfig::new(lambda, max_depth)?
            },
            bootstrap: true,
            seed,
        })
    }

    /// One tree on the full data with exhaustive split search.
    pub fn single_tree(lambda: f64, max_depth: usize, seed: u64) -> Result<Self> {
        Ok(ForestConfig {
            n_trees: 1,
            tree: TreeConfig::new(lambda, max_depth)?,
            bootstrap: false,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::domain("a forest needs at least one tree"));
        }
        if self.tree.min_samples_split < 2 {
            return Err(Error::domain("min_samples_split must be at least 2"));
        }
        Ok(())
    }
}

/// Random stream of tree `index`, independent of build order.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridForest {
    pub(crate) trees: Vec<TreeNode>,
    pub(crate) config: ForestConfig,
    pub(crate) scale: ScaleParams,
    pub(crate) algorithm_names: Vec<String>,
    pub(crate) num_features: usize,
}

impl HybridForest {
    /// Fits on PAR10 costs in original units; costs are min-max scaled over
    /// the whole training matrix before growing trees.
    pub fn fit(train: &TrainingSet, algorithm_names: Vec<String>, config: &ForestConfig) -> Result<Self> {
        let scale = ScaleParams::fit(train.costs());
        let labels: Vec<Vec<f64>> = train.costs().iter().map(|r| scale.scale_row(r)).collect();
        Self::fit_scaled(train.features(), &labels, scale, algorithm_names, config)
    }

    /// Fits on labels that are already scaled with `scale`.
    pub fn fit_scaled(
        features: &[Vec<f64>],
        labels: &[Vec<f64>],
        scale: ScaleParams,
        algorithm_names: Vec<String>,
        config: &ForestConfig,
    ) -> Result<Self> {
        config.validate()?;
        if features.is_empty() {
            return Err(Error::domain("cannot fit a forest on an empty set"));
        }
        if labels.len() != features.len() {
            return Err(Error::domain("features and labels have different row counts"));
        }
        let k = labels[0].len();
        if algorithm_names.len() != k {
            return Err(Error::domain(format!(
                "{} algorithm names for {k} label columns",
                algorithm_names.len()
            )));
        }
        let n = features.len();
        let all_rows: Vec<usize> = (0..n).collect();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(config.seed, t);
                let rows: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    all_rows.clone()
                };
                build_tree(features, labels, &rows, &config.tree, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HybridForest {
            trees,
            config: *config,
            scale,
            algorithm_names,
            num_features: features[0].len(),
        })
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }
    pub fn config(&self) -> &ForestConfig {
        &self.config
    }
    pub fn scale(&self) -> ScaleParams {
        self.scale
    }
    pub fn algorithm_names(&self) -> &[String] {
        &self.algorithm_names
    }
    pub fn num_features(&self) -> usize {
        self.num_features
    }
    pub fn num_algorithms(&self) -> usize {
        self.algorithm_names.len()
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_features {
            return Err(Error::domain(format!(
                "expected {} features, got {}",
                self.num_features,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("feature vector contains non-finite values"));
        }
        Ok(())
    }

    pub fn predict_leaves(&self, x: &[f64]) -> Vec<&NodeLabels> {
        self.trees.iter().map(|t| t.predict_leaf(x)).collect()
    }

    /// Mean of the trees' leaf regression labels, in scaled units.
    pub fn predict_costs(&self, x: &[f64]) -> Vec<f64> {
        let mut mean = vec![0.0; self.num_algorithms()];
        for labels in self.predict_leaves(x) {
            for (m, v) in mean.iter_mut().zip(&labels.regression) {
                *m += v;
            }
        }
        let t = self.trees.len() as f64;
        mean.iter_mut().for_each(|m| *m /= t);
        mean
    }

    /// [`predict_costs`](Self::predict_costs) mapped back to seconds.
    pub fn predict_costs_original(&self, x: &[f64]) -> Vec<f64> {
        self.scale.unscale_row(&self.predict_costs(x))
    }

    /// Algorithm with the lowest predicted cost; ties go to the lowest index.
    pub fn select_algorithm(&self, x: &[f64]) -> usize {
        argmin(&self.predict_costs(x))
    }
}
