//! Per-instance algorithm selection with decision trees and forests trained
//! on a hybrid ranking/regression loss, together with the baselines and the
//! cross-validation harness used to compare them on ASLib scenarios.
//!
//! Costs are minimised throughout: a lower PAR10 is better and selection is
//! an argmin with ties resolved towards the lowest algorithm index.

pub mod arff;
pub mod aslib;
pub mod error;
pub mod evaluation;
pub mod forest;
pub mod kmeans;
pub mod labels;
pub mod losses;
pub mod model;
pub mod selectors;
pub mod synthetic;
pub mod tree;

pub use aslib::{parse_scenario, FeatureImputer, ScaleParams, Scenario, TrainingSet};
pub use error::{Error, Result};
pub use forest::{ForestConfig, HybridForest};
pub use labels::NodeLabels;
pub use losses::{HybridLoss, Ranking};
pub use model::TrainedModel;
pub use selectors::{Selector, SelectorFactory};
pub use tree::{FeaturesPerSplit, TreeConfig, TreeNode};
