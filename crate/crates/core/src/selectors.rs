//! Algorithm selectors: the hybrid forest and the comparison baselines.
//!
//! A [`SelectorFactory`] fits a [`Selector`] on one training fold. All
//! selectors work on PAR10 costs in original units at their interface and
//! scale internally with a single min-max map fit on the training costs.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aslib::{argmin, ScaleParams, TrainingSet};
use crate::error::Result;
use crate::forest::{ForestConfig, HybridForest};
use crate::kmeans;
use crate::losses::HybridLoss;

pub trait Selector: Send + Sync {
    /// Index of the chosen algorithm.
    fn select(&self, x: &[f64]) -> usize;

    /// Predicted costs in original units, when the selector produces them.
    fn predicted_costs(&self, x: &[f64]) -> Option<Vec<f64>>;
}

pub trait SelectorFactory: Send + Sync {
    fn name(&self) -> String;

    fn fit(&self, train: &TrainingSet) -> Result<Box<dyn Selector>>;

    /// The oracle reads the true test costs, which only the evaluation
    /// harness can hand it.
    fn is_oracle(&self) -> bool {
        false
    }
}

/// Per-instance best algorithm under the true costs.
pub fn oracle_select(costs: &[f64]) -> usize {
    argmin(costs)
}

fn generic_names(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("a{j}")).collect()
}

impl Selector for HybridForest {
    fn select(&self, x: &[f64]) -> usize {
        self.select_algorithm(x)
    }

    fn predicted_costs(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.predict_costs_original(x))
    }
}

/// Hybrid ranking/regression forest.
#[derive(Debug, Clone)]
pub struct Harris {
    pub forest: ForestConfig,
}

impl SelectorFactory for Harris {
    fn name(&self) -> String {
        "harris".into()
    }

    fn fit(&self, train: &TrainingSet) -> Result<Box<dyn Selector>> {
        let names = generic_names(train.num_algorithms());
        Ok(Box::new(HybridForest::fit(train, names, &self.forest)?))
    }
}

fn regression_config(base: &ForestConfig, seed: u64) -> Result<ForestConfig> {
    let mut cfg = *base;
    cfg.tree.loss = HybridLoss::new(0.0)?;
    cfg.seed = seed;
    Ok(cfg)
}

fn column(labels: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Vec<Vec<f64>> {
    labels.iter().map(|r| vec![f(r)]).collect()
}

/// One regression forest per algorithm.
#[derive(Debug, Clone)]
pub struct Rfr {
    pub forest: ForestConfig,
}

pub struct RfrModel {
    forests: Vec<HybridForest>,
    scale: ScaleParams,
}

impl SelectorFactory for Rfr {
    fn name(&self) -> String {
        "rfr".into()
    }

    fn fit(&self, train: &TrainingSet) -> Result<Box<dyn Selector>> {
        Ok(Box::new(RfrModel::fit(train, &self.forest)?))
    }
}

impl RfrModel {
    pub fn fit(train: &TrainingSet, base: &ForestConfig) -> Result<Self> {
        let scale = ScaleParams::fit(train.costs());
        let labels: Vec<Vec<f64>> = train.costs().iter().map(|r| scale.scale_row(r)).collect();
        let forests = (0..train.num_algorithms())
            .into_par_iter()
            .map(|j| {
                let cfg = regression_config(base, base.seed.wrapping_add(j as u64))?;
                let target = column(&labels, |r| r[j]);
                HybridForest::fit_scaled(train.features(), &target, scale, vec![format!("a{j}")], &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RfrModel { forests, scale })
    }

    fn scaled_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.forests.iter().map(|f| f.predict_costs(x)[0]).collect()
    }
}

impl Selector for RfrModel {
    fn select(&self, x: &[f64]) -> usize {
        argmin(&self.scaled_predictions(x))
    }

    fn predicted_costs(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.scale.unscale_row(&self.scaled_predictions(x)))
    }
}

/// Pairwise cost-difference regression with majority voting.
#[derive(Debug, Clone)]
pub struct Satzilla {
    pub forest: ForestConfig,
}

pub struct SatzillaModel {
    k: usize,
    /// (i, j, forest predicting cost_i - cost_j), i < j
    pairs: Vec<(usize, usize, HybridForest)>,
}

impl SelectorFactory for Satzilla {
    fn name(&self) -> String {
        "satzilla".into()
    }

    fn fit(&self, train: &TrainingSet) -> Result<Box<dyn Selector>> {
        Ok(Box::new(SatzillaModel::fit(train, &self.forest)?))
    }
}

impl SatzillaModel {
    pub fn fit(train: &TrainingSet, base: &ForestConfig) -> Result<Self> {
        let k = train.num_algorithms();
        let scale = ScaleParams::fit(train.costs());
        let labels: Vec<Vec<f64>> = train.costs().iter().map(|r| scale.scale_row(r)).collect();
        let pair_list: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
            .collect();
        let pairs = pair_list
            .par_iter()
            .enumerate()
            .map(|(idx, &(i, j))| {
                let cfg = regression_config(base, base.seed.wrapping_add(idx as u64))?;
                let target = column(&labels, |r| r[i] - r[j]);
                let forest = HybridForest::fit_scaled(
                    train.features(),
                    &target,
                    scale,
                    vec![format!("a{i}-a{j}")],
                    &cfg,
                )?;
                Ok((i, j, forest))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SatzillaModel { k, pairs })
    }

    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let diffs: Vec<f64> = self.pairs.iter().map(|(_, _, f)| f.predict_costs(x)[0]).collect();
        tally_votes(self.k, self.pairs.iter().map(|(i, j, _)| (*i, *j)).zip(diffs))
    }
}

/// Counts pairwise wins: a negative predicted `cost_i - cost_j` is a vote
/// for `i`, a positive one a vote for `j`; an exact zero casts no vote.
pub fn tally_votes(k: usize, predictions: impl IntoIterator<Item = ((usize, usize), f64)>) -> Vec<usize> {
    let mut votes = vec![0usize; k];
    for ((i, j), diff) in predictions {
        if diff < 0.0 {
            votes[i] += 1;
        } else if diff > 0.0 {
            votes[j] += 1;
        }
    }
    votes
}

/// Most votes, lowest index on ties.
pub fn vote_winner(votes: &[usize]) -> usize {
    let mut best = 0;
    for (j, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = j;
        }
    }
    best
}

impl Selector for SatzillaModel {
    fn select(&self, x: &[f64]) -> usize {
        vote_winner(&self.votes(x))
    }

    fn predicted_costs(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Clustering on standardised features; each cluster runs its best
/// algorithm.
#[derive(Debug, Clone)]
pub struct Isac {
    pub clusters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for Isac {
    fn default() -> Self {
        Isac {
            clusters: 10,
            restarts: 25,
            seed: 0,
        }
    }
}

/// Column-wise z-scoring fit on training rows. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let p = rows.first().map_or(0, Vec::len);
        let means: Vec<f64> = (0..p).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n).collect();
        let stds = (0..p)
            .map(|c| {
                let var = rows.iter().map(|r| (r[c] - means[c]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { means, stds }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

pub struct IsacModel {
    standardizer: Standardizer,
    centroids: Vec<Vec<f64>>,
    choice: Vec<usize>,
    cluster_costs: Vec<Vec<f64>>,
}

impl SelectorFactory for Isac {
    fn name(&self) -> String {
        "isac".into()
    }

    fn fit(&self, train: &TrainingSet) -> Result<Box<dyn Selector>> {
        Ok(Box::new(IsacModel::fit(train, self)?))
    }
}

fn mean_rows<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, k: usize) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; k];
    let mut count = 0usize;
    for r in rows {
        count += 1;
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
    }
    (count > 0).then(|| sum.into_iter().map(|s| s / count as f64).collect())
}

impl IsacModel {
    pub fn fit(train: &TrainingSet, config: &Isac) -> Result<Self> {
        let n = train.len();
        let k = train.num_algorithms();
        if config.clusters > n {
            warn!("{} clusters requested for {n} rows; using {n}", config.clusters);
        }
        let standardizer = Standardizer::fit(train.features());
        let points: Vec<Vec<f64>> = train.features().iter().map(|x| standardizer.apply(x)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let km = kmeans::fit(&points, config.clusters, config.restarts, &mut rng);

        let overall = mean_rows(train.costs().iter(), k).expect("nonempty training set");
        let mut choice = Vec::new();
        let mut cluster_costs = Vec::new();
        for c in 0..km.centroids.len() {
            let members = train
                .costs()
                .iter()
                .zip(&km.assignments)
                .filter(|(_, &a)| a == c)
                .map(|(r, _)| r);
            // argmin of mean original costs equals argmin of mean scaled costs
            let costs = mean_rows(members, k).unwrap_or_else(|| overall.clone());
            choice.push(argmin(&costs));
            cluster_costs.push(costs);
        }
        Ok(IsacModel {
            standardizer,
            centroids: km.centroids,
            choice,
            cluster_costs,
        })
    }

    pub fn cluster_of(&self, x: &[f64]) -> usize {
        kmeans::nearest(&self.centroids, &self.standardizer.apply(x))
    }

    pub fn num_clusters(&self) -> usize {
        self.centroids.len()
    }
}

impl Selector for IsacModel {
    fn select(&self, x: &[f64]) -> usize {
        self.choice[self.cluster_of(x)]
    }

    fn predicted_costs(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.cluster_costs[self.cluster_of(x)].clone())
    }
}

/// Always runs the algorithm with the lowest mean training cost.
#[derive(Debug, Clone, Default)]
pub struct SingleBest;

pub struct SingleBestModel {
    means: Vec<f64>,
    best: usize,
}

impl SelectorFactory for SingleBest {
    fn name(&self) -> String {
        "sbs".into()
    }

    fn fit(&self, train: &TrainingSet) -> Result<Box<dyn Selector>> {
        let means = mean_rows(train.costs().iter(), train.num_algorithms()).expect("nonempty training set");
        let best = argmin(&means);
        Ok(Box::new(SingleBestModel { means, best }))
    }
}

impl Selector for SingleBestModel {
    fn select(&self, _x: &[f64]) -> usize {
        self.best
    }

    fn predicted_costs(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.means.clone())
    }
}

/// Marker for the virtual best solver; the evaluation harness resolves it
/// against the true costs.
#[derive(Debug, Clone, Default)]
pub struct Oracle;

struct Unfitted;

impl Selector for Unfitted {
    fn select(&self, _x: &[f64]) -> usize {
        0
    }
    fn predicted_costs(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl SelectorFactory for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn fit(&self, _train: &TrainingSet) -> Result<Box<dyn Selector>> {
        Ok(Box::new(Unfitted))
    }

    fn is_oracle(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dominant_fixture() -> TrainingSet {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y = vec![vec![0.0, 1.0]; 20];
        TrainingSet::new(x, y).unwrap()
    }

    fn small_forest() -> ForestConfig {
        ForestConfig { n_trees: 5, ..ForestConfig::new(0.5, 4, 3).unwrap() }
    }

    #[test]
    fn oracle_and_sbs() {
        assert_eq!(oracle_select(&[3.0, 1.0, 2.0]), 1);
        let x = vec![vec![0.0]; 3];
        let y = vec![vec![5.0, 1.0, 9.0], vec![5.0, 3.0, 9.0], vec![5.0, 2.0, 9.0]];
        let sbs = SingleBest.fit(&TrainingSet::new(x, y).unwrap()).unwrap();
        assert_eq!(sbs.select(&[42.0]), 1);
        assert_eq!(sbs.predicted_costs(&[0.0]).unwrap(), vec![5.0, 2.0, 9.0]);
    }

    #[test]
    fn rfr_dominant_algorithm() {
        let rfr = Rfr { forest: small_forest() }.fit(&dominant_fixture()).unwrap();
        for i in 0..20 {
            assert_eq!(rfr.select(&[i as f64, 0.0]), 0);
        }
    }

    #[test]
    fn rfr_constant_features_predict_training_means() {
        let x = vec![vec![1.0]; 4];
        let y = vec![vec![10.0, 20.0], vec![30.0, 20.0], vec![10.0, 40.0], vec![30.0, 40.0]];
        let cfg = ForestConfig { bootstrap: false, ..small_forest() };
        let rfr = Rfr { forest: cfg }.fit(&TrainingSet::new(x, y).unwrap()).unwrap();
        let c = rfr.predicted_costs(&[1.0]).unwrap();
        assert!((c[0] - 20.0).abs() < 1e-9 && (c[1] - 30.0).abs() < 1e-9);
        assert_eq!(rfr.select(&[1.0]), 0);
    }

    #[test]
    fn satzilla_votes() {
        let sz = Satzilla { forest: small_forest() }.fit(&dominant_fixture()).unwrap();
        assert_eq!(sz.select(&[3.0, 1.0]), 0);
        assert!(sz.predicted_costs(&[3.0, 1.0]).is_none());

        // a beats b, a beats c, c beats b: a is the Condorcet winner
        let votes = tally_votes(3, [((0, 1), -0.2), ((0, 2), -0.1), ((1, 2), 0.3)]);
        assert_eq!(votes, vec![2, 0, 1]);
        assert_eq!(vote_winner(&votes), 0);

        let votes = tally_votes(3, [((0, 1), 0.0), ((0, 2), 0.0), ((1, 2), 0.0)]);
        assert_eq!(votes, vec![0, 0, 0]);
        assert_eq!(vote_winner(&votes), 0);
        assert_eq!(vote_winner(&[1, 2, 2]), 1);
    }

    fn blobs(scale: f64, offset: f64) -> TrainingSet {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..15 {
            let jitter = (i % 5) as f64 * 0.1;
            x.push(vec![jitter * scale + offset, jitter]);
            y.push(vec![1.0, 50.0]);
            x.push(vec![(10.0 + jitter) * scale + offset, 5.0 + jitter]);
            y.push(vec![50.0, 1.0]);
        }
        TrainingSet::new(x, y).unwrap()
    }

    #[test]
    fn isac_blobs() {
        let cfg = Isac { clusters: 2, restarts: 5, seed: 1 };
        let model = IsacModel::fit(&blobs(1.0, 0.0), &cfg).unwrap();
        assert_eq!(model.select(&[0.2, 0.1]), 0);
        assert_eq!(model.select(&[10.2, 5.1]), 1);
    }

    #[test]
    fn isac_single_cluster_is_sbs() {
        let cfg = Isac { clusters: 1, restarts: 2, seed: 1 };
        let train = blobs(1.0, 0.0);
        let mut y = train.costs().to_vec();
        y[0] = vec![1.0, 500.0];
        let train = TrainingSet::new(train.features().to_vec(), y).unwrap();
        let model = IsacModel::fit(&train, &cfg).unwrap();
        for x in train.features() {
            assert_eq!(model.select(x), 0);
        }
    }

    #[test]
    fn isac_too_many_clusters_is_clamped() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 2.0]];
        let model = IsacModel::fit(&TrainingSet::new(x, y).unwrap(), &Isac::default()).unwrap();
        assert_eq!(model.num_clusters(), 3);
    }

    #[test]
    fn isac_invariant_to_column_rescaling() {
        let cfg = Isac { clusters: 3, restarts: 4, seed: 9 };
        let base = IsacModel::fit(&blobs(1.0, 0.0), &cfg).unwrap();
        let exact = IsacModel::fit(&blobs(4.0, 0.0), &cfg).unwrap();
        let affine = IsacModel::fit(&blobs(3.7, -12.0), &cfg).unwrap();
        for x0 in [0.0, 0.3, 5.0, 9.0, 10.3] {
            for x1 in [0.0, 2.5, 5.2] {
                let want = base.select(&[x0, x1]);
                assert_eq!(exact.select(&[x0 * 4.0, x1]), want);
                assert_eq!(affine.select(&[x0 * 3.7 - 12.0, x1]), want);
            }
        }
    }
}
