//! Cross-validation, hyperparameter sweeps, and rank aggregation across
//! scenarios.
//!
//! # CSV schema (version 1)
//!
//! Columns, in order:
//!
//! | column          | meaning                                                         |
//! |-----------------|-----------------------------------------------------------------|
//! | `schema_version`| always `1`                                                      |
//! | `scenario`      | scenario name                                                   |
//! | `selector`      | `harris`, `rfr`, `isac`, `satzilla`, `sbs` or `oracle`          |
//! | `lambda`        | ranking weight of the hybrid loss (empty for baselines)         |
//! | `depth`         | maximum tree depth (empty for baselines)                        |
//! | `fold`          | fold id `1`..`10`, or `mean` for the aggregate row              |
//! | `n_test`        | number of test instances (summed over folds for `mean`)         |
//! | `par10`         | mean PAR10 of the selected algorithms, seconds                  |
//! | `par10_std`     | population std of fold `par10` values (`mean` rows only)        |
//! | `oracle_par10`  | mean PAR10 of the per-instance best algorithm, seconds          |
//! | `kendall_tau`   | mean Kendall tau-b of predicted vs. true ranking (may be empty) |
//! | `tau_instances` | instances for which tau-b was defined                           |
//!
//! Fold rows of a group come first, followed by its `mean` row.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aslib::{FeatureImputer, Scenario, TrainingSet};
use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::losses::{kendall_tau_b, rank_vector};
use crate::selectors::{oracle_select, Harris, SelectorFactory};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_DEPTHS: [usize; 5] = [2, 4, 6, 8, 10];

/// `0.0, 0.1, ..., 1.0`
pub fn default_lambdas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// One train/test split, with imputation fit on the training rows only.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub fold: u8,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub train: TrainingSet,
    pub test_features: Vec<Vec<f64>>,
    pub test_costs: Vec<Vec<f64>>,
    pub imputer: FeatureImputer,
}

pub fn prepare_folds(scenario: &Scenario) -> Result<Vec<FoldData>> {
    let costs = scenario.par10_costs();
    let mut fold_ids: Vec<u8> = scenario.fold_of().to_vec();
    fold_ids.sort_unstable();
    fold_ids.dedup();
    if fold_ids.len() < 2 {
        return Err(Error::domain("cross-validation needs at least two non-empty folds"));
    }
    fold_ids
        .into_iter()
        .map(|fold| {
            let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
                (0..scenario.num_instances()).partition(|&i| scenario.fold_of()[i] == fold);
            let raw_train: Vec<&Vec<Option<f64>>> =
                train_rows.iter().map(|&i| &scenario.features()[i]).collect();
            let imputer = FeatureImputer::fit(&raw_train, scenario.num_features());
            let train = TrainingSet::new(
                raw_train.iter().map(|r| imputer.apply(r)).collect(),
                train_rows.iter().map(|&i| costs[i].clone()).collect(),
            )?;
            Ok(FoldData {
                fold,
                test_features: test_rows
                    .iter()
                    .map(|&i| imputer.apply(&scenario.features()[i]))
                    .collect(),
                test_costs: test_rows.iter().map(|&i| costs[i].clone()).collect(),
                train_rows,
                test_rows,
                train,
                imputer,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub scenario: String,
    pub selector: String,
    pub lambda: Option<f64>,
    pub depth: Option<usize>,
    pub fold: u8,
    pub n_test: usize,
    pub par10: f64,
    pub oracle_par10: f64,
    pub kendall_tau: Option<f64>,
    pub tau_instances: usize,
}

/// Hyperparameters recorded alongside results; empty for baselines.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunTag {
    pub lambda: Option<f64>,
    pub depth: Option<usize>,
}

impl RunTag {
    pub fn forest(config: &ForestConfig) -> Self {
        RunTag {
            lambda: Some(config.tree.loss.lambda()),
            depth: Some(config.tree.max_depth),
        }
    }
}

fn evaluate_fold(
    scenario: &str,
    fold: &FoldData,
    factory: &dyn SelectorFactory,
    tag: RunTag,
) -> Result<FoldResult> {
    let model = if factory.is_oracle() {
        None
    } else {
        Some(factory.fit(&fold.train)?)
    };
    let n = fold.test_rows.len();
    let (mut par10, mut oracle) = (0.0, 0.0);
    let (mut tau_sum, mut tau_n) = (0.0, 0usize);
    for (x, costs) in fold.test_features.iter().zip(&fold.test_costs) {
        let best = oracle_select(costs);
        oracle += costs[best];
        let (choice, predicted) = match &model {
            Some(m) => (m.select(x), m.predicted_costs(x)),
            None => (best, Some(costs.clone())),
        };
        par10 += costs[choice];
        if let Some(pred) = predicted {
            if let Ok(t) = kendall_tau_b(&rank_vector(&pred), &rank_vector(costs)) {
                tau_sum += t;
                tau_n += 1;
            }
        }
    }
    Ok(FoldResult {
        scenario: scenario.to_string(),
        selector: factory.name(),
        lambda: tag.lambda,
        depth: tag.depth,
        fold: fold.fold,
        n_test: n,
        par10: par10 / n as f64,
        oracle_par10: oracle / n as f64,
        kendall_tau: (tau_n > 0).then(|| tau_sum / tau_n as f64),
        tau_instances: tau_n,
    })
}

/// Runs `factory` on prepared folds (in parallel) and returns one result
/// per fold, in fold order.
pub fn cross_validate_folds(
    scenario: &str,
    folds: &[FoldData],
    factory: &dyn SelectorFactory,
    tag: RunTag,
) -> Result<Vec<FoldResult>> {
    folds
        .par_iter()
        .map(|f| evaluate_fold(scenario, f, factory, tag))
        .collect()
}

pub fn cross_validate(
    scenario: &Scenario,
    factory: &dyn SelectorFactory,
    tag: RunTag,
) -> Result<Vec<FoldResult>> {
    let folds = prepare_folds(scenario)?;
    cross_validate_folds(scenario.name(), &folds, factory, tag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario: String,
    pub selector: String,
    pub lambda: Option<f64>,
    pub depth: Option<usize>,
    pub folds: usize,
    pub n_test: usize,
    pub par10_mean: f64,
    pub par10_std: f64,
    pub oracle_par10: f64,
    pub kendall_tau: Option<f64>,
    pub tau_instances: usize,
}

/// Mean and population std over folds of one (scenario, selector, lambda,
/// depth) group.
pub fn summarize(rows: &[FoldResult]) -> Result<Summary> {
    let first = rows.first().ok_or_else(|| Error::domain("nothing to summarise"))?;
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.par10).sum::<f64>() / n;
    let var = rows.iter().map(|r| (r.par10 - mean).powi(2)).sum::<f64>() / n;
    let taus: Vec<f64> = rows.iter().filter_map(|r| r.kendall_tau).collect();
    Ok(Summary {
        scenario: first.scenario.clone(),
        selector: first.selector.clone(),
        lambda: first.lambda,
        depth: first.depth,
        folds: rows.len(),
        n_test: rows.iter().map(|r| r.n_test).sum(),
        par10_mean: mean,
        par10_std: var.sqrt(),
        oracle_par10: rows.iter().map(|r| r.oracle_par10).sum::<f64>() / n,
        kendall_tau: (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64),
        tau_instances: rows.iter().map(|r| r.tau_instances).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub schema_version: u32,
    pub scenario: String,
    pub selector: String,
    pub lambda: Option<f64>,
    pub depth: Option<usize>,
    pub fold: String,
    pub n_test: usize,
    pub par10: f64,
    pub par10_std: Option<f64>,
    pub oracle_par10: f64,
    pub kendall_tau: Option<f64>,
    pub tau_instances: usize,
}

/// Per-fold results grouped with their summaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub groups: Vec<(Vec<FoldResult>, Summary)>,
}

type GroupKey = (String, String, Option<u64>, Option<usize>);

fn group_key(r: &FoldResult) -> GroupKey {
    (
        r.scenario.clone(),
        r.selector.clone(),
        r.lambda.map(f64::to_bits),
        r.depth,
    )
}

impl EvaluationReport {
    /// Groups fold results by (scenario, selector, lambda, depth), keeping
    /// first-appearance order.
    pub fn from_folds(rows: Vec<FoldResult>) -> Result<Self> {
        let mut keys: Vec<GroupKey> = Vec::new();
        let mut buckets: Vec<Vec<FoldResult>> = Vec::new();
        for r in rows {
            let key = group_key(&r);
            match keys.iter().position(|k| *k == key) {
                Some(i) => buckets[i].push(r),
                None => {
                    keys.push(key);
                    buckets.push(vec![r]);
                }
            }
        }
        let groups = buckets
            .into_iter()
            .map(|b| {
                let s = summarize(&b)?;
                Ok((b, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EvaluationReport { groups })
    }

    pub fn summaries(&self) -> Vec<&Summary> {
        self.groups.iter().map(|(_, s)| s).collect()
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let mut out = Vec::new();
        for (folds, s) in &self.groups {
            for r in folds {
                out.push(CsvRow {
                    schema_version: CSV_SCHEMA_VERSION,
                    scenario: r.scenario.clone(),
                    selector: r.selector.clone(),
                    lambda: r.lambda,
                    depth: r.depth,
                    fold: r.fold.to_string(),
                    n_test: r.n_test,
                    par10: r.par10,
                    par10_std: None,
                    oracle_par10: r.oracle_par10,
                    kendall_tau: r.kendall_tau,
                    tau_instances: r.tau_instances,
                });
            }
            out.push(CsvRow {
                schema_version: CSV_SCHEMA_VERSION,
                scenario: s.scenario.clone(),
                selector: s.selector.clone(),
                lambda: s.lambda,
                depth: s.depth,
                fold: "mean".into(),
                n_test: s.n_test,
                par10: s.par10_mean,
                par10_std: Some(s.par10_std),
                oracle_par10: s.oracle_par10,
                kendall_tau: s.kendall_tau,
                tau_instances: s.tau_instances,
            });
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.csv_rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a CSV written by [`EvaluationReport::write_csv`], checking the
/// schema version of every row.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let expected = [
        "schema_version",
        "scenario",
        "selector",
        "lambda",
        "depth",
        "fold",
        "n_test",
        "par10",
        "par10_std",
        "oracle_par10",
        "kendall_tau",
        "tau_instances",
    ];
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::domain(format!("unexpected CSV header: {headers:?}")));
    }
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        if row.schema_version != CSV_SCHEMA_VERSION {
            return Err(Error::domain(format!(
                "CSV schema version {} is not supported",
                row.schema_version
            )));
        }
        if row.fold != "mean" && row.fold.parse::<u8>().map_or(true, |f| !(1..=10).contains(&f)) {
            return Err(Error::domain(format!("bad fold value {:?}", row.fold)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub lambda: f64,
    pub depth: usize,
    pub folds: Vec<FoldResult>,
    pub summary: Summary,
}

/// Cross-validates the hybrid forest on every (lambda, depth) pair, lambda
/// outermost. All cells share one fold split and seed.
pub fn sweep(
    scenario: &Scenario,
    lambdas: &[f64],
    depths: &[usize],
    base: &ForestConfig,
) -> Result<Vec<SweepCell>> {
    if lambdas.is_empty() || depths.is_empty() {
        return Err(Error::domain("sweep grids must be nonempty"));
    }
    let folds = prepare_folds(scenario)?;
    let grid: Vec<(f64, usize)> = lambdas
        .iter()
        .flat_map(|&l| depths.iter().map(move |&d| (l, d)))
        .collect();
    grid.par_iter()
        .map(|&(lambda, depth)| {
            let mut cfg = *base;
            cfg.tree.loss = crate::losses::HybridLoss::new(lambda)?;
            cfg.tree.max_depth = depth;
            let factory = Harris { forest: cfg };
            let rows = cross_validate_folds(scenario.name(), &folds, &factory, RunTag::forest(&cfg))?;
            let summary = summarize(&rows)?;
            Ok(SweepCell {
                lambda,
                depth,
                folds: rows,
                summary,
            })
        })
        .collect()
}

/// Cell with the lowest mean PAR10; earlier cells win ties.
pub fn best_cell(cells: &[SweepCell]) -> Option<&SweepCell> {
    let mut best: Option<&SweepCell> = None;
    for c in cells {
        if best.is_none_or(|b| c.summary.par10_mean < b.summary.par10_mean) {
            best = Some(c);
        }
    }
    best
}

/// Average rank of each selector over scenarios, ranking by mean PAR10
/// ascending within each scenario (ties share average ranks). Selectors are
/// returned in first-appearance order.
pub fn average_rank(cells: &[(String, String, f64)]) -> Result<Vec<(String, f64)>> {
    let mut scenarios: Vec<&str> = Vec::new();
    let mut selectors: Vec<&str> = Vec::new();
    for (sc, sel, _) in cells {
        if !scenarios.contains(&sc.as_str()) {
            scenarios.push(sc);
        }
        if !selectors.contains(&sel.as_str()) {
            selectors.push(sel);
        }
    }
    if scenarios.is_empty() {
        return Err(Error::domain("no results to rank"));
    }
    let mut totals = vec![0.0; selectors.len()];
    for sc in &scenarios {
        let mut scores = Vec::with_capacity(selectors.len());
        for sel in &selectors {
            let matches: Vec<f64> = cells
                .iter()
                .filter(|(a, b, _)| a == sc && b == sel)
                .map(|c| c.2)
                .collect();
            match matches.as_slice() {
                [v] => scores.push(*v),
                [] => return Err(Error::domain(format!("no result for {sel} on {sc}"))),
                _ => return Err(Error::domain(format!("duplicate result for {sel} on {sc}"))),
            }
        }
        for (t, r) in totals.iter_mut().zip(rank_vector(&scores).ranks()) {
            *t += r;
        }
    }
    let m = scenarios.len() as f64;
    Ok(selectors
        .into_iter()
        .zip(totals)
        .map(|(s, t)| (s.to_string(), t / m))
        .collect())
}

/// Scenario x selector table of `mean ± std` PAR10, with an average-rank
/// row.
pub fn render_table(summaries: &[&Summary]) -> String {
    let mut scenarios: Vec<&str> = Vec::new();
    let mut selectors: Vec<&str> = Vec::new();
    for s in summaries {
        if !scenarios.contains(&s.scenario.as_str()) {
            scenarios.push(&s.scenario);
        }
        if !selectors.contains(&s.selector.as_str()) {
            selectors.push(&s.selector);
        }
    }
    let name_w = scenarios.iter().map(|s| s.len()).max().unwrap_or(0).max(12);
    let col_w = 24;
    let mut out = format!("{:<name_w$}", "scenario");
    for sel in &selectors {
        out.push_str(&format!(" | {sel:>col_w$}"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(name_w + selectors.len() * (col_w + 3)));
    out.push('\n');
    let mut cells = Vec::new();
    for sc in &scenarios {
        out.push_str(&format!("{sc:<name_w$}"));
        for sel in &selectors {
            match summaries.iter().find(|s| s.scenario == *sc && s.selector == *sel) {
                Some(s) => {
                    let text = format!("{:.2} ± {:.2}", s.par10_mean, s.par10_std);
                    out.push_str(&format!(" | {text:>col_w$}"));
                    cells.push((sc.to_string(), sel.to_string(), s.par10_mean));
                }
                None => out.push_str(&format!(" | {:>col_w$}", "-")),
            }
        }
        out.push('\n');
    }
    if let Ok(ranks) = average_rank(&cells) {
        out.push_str(&format!("{:<name_w$}", "average rank"));
        for (_, r) in ranks {
            out.push_str(&format!(" | {:>col_w$}", format!("{r:.2}")));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_rank_examples() {
        let two = vec![
            ("s".to_string(), "a".to_string(), 10.0),
            ("s".to_string(), "b".to_string(), 5.0),
        ];
        assert_eq!(average_rank(&two).unwrap(), vec![("a".into(), 2.0), ("b".into(), 1.0)]);

        let flat: Vec<_> = ["s1", "s2"]
            .iter()
            .flat_map(|s| ["a", "b", "c"].iter().map(move |x| (s.to_string(), x.to_string(), 7.0)))
            .collect();
        for (_, r) in average_rank(&flat).unwrap() {
            assert_eq!(r, 2.0);
        }

        let mut missing = flat.clone();
        missing.pop();
        assert!(average_rank(&missing).is_err());
    }

    #[test]
    fn default_grid() {
        assert_eq!(default_lambdas().len(), 11);
        assert_eq!(default_lambdas()[3], 0.3);
        assert_eq!(DEFAULT_DEPTHS.len() * default_lambdas().len(), 55);
    }

    #[test]
    fn summary_statistics() {
        let row = |fold, par10| FoldResult {
            scenario: "s".into(),
            selector: "x".into(),
            lambda: None,
            depth: None,
            fold,
            n_test: 3,
            par10,
            oracle_par10: 1.0,
            kendall_tau: (fold == 1).then_some(0.5),
            tau_instances: 1,
        };
        let s = summarize(&[row(1, 2.0), row(2, 4.0)]).unwrap();
        assert_eq!(s.par10_mean, 3.0);
        assert_eq!(s.par10_std, 1.0);
        assert_eq!(s.kendall_tau, Some(0.5));
        assert_eq!(s.n_test, 6);
    }
}
