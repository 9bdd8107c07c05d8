//! Algorithm-selection scenarios: loading ASLib directories, PAR10 labels,
//! unsolved-instance filtering, feature imputation and cost scaling.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arff::{ArffFile, Value};
use crate::error::{Error, Result};

pub const DESCRIPTION_FILE: &str = "description.txt";
pub const FEATURE_FILE: &str = "feature_values.arff";
pub const RUNS_FILE: &str = "algorithm_runs.arff";
pub const CV_FILE: &str = "cv.arff";

pub const NUM_FOLDS: u8 = 10;

/// Seed for the stratified fold split used when a scenario ships no CV file.
pub const FALLBACK_FOLD_SEED: u64 = 0;

/// Raw material for [`Scenario::from_parts`].
#[derive(Debug, Clone)]
pub struct ScenarioParts {
    pub name: String,
    pub algorithm_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub instance_ids: Vec<String>,
    pub features: Vec<Vec<Option<f64>>>,
    /// Runtimes in seconds; entries of unfinished runs may be anything,
    /// including NaN, and are clamped to the cutoff.
    pub performances: Vec<Vec<f64>>,
    pub run_ok: Vec<Vec<bool>>,
    pub cutoff: f64,
    pub fold_of: Vec<u8>,
}

/// An algorithm-selection benchmark held in memory. Rows of every matrix
/// refer to the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    algorithm_names: Vec<String>,
    feature_names: Vec<String>,
    instance_ids: Vec<String>,
    features: Vec<Vec<Option<f64>>>,
    performances: Vec<Vec<f64>>,
    run_ok: Vec<Vec<bool>>,
    cutoff: f64,
    fold_of: Vec<u8>,
}

impl Scenario {
    pub fn from_parts(parts: ScenarioParts) -> Result<Self> {
        let ScenarioParts {
            name,
            algorithm_names,
            feature_names,
            instance_ids,
            features,
            mut performances,
            run_ok,
            cutoff,
            fold_of,
        } = parts;
        let n = instance_ids.len();
        let k = algorithm_names.len();
        let p = feature_names.len();
        if n == 0 {
            return Err(Error::EmptyScenario);
        }
        if k < 2 {
            return Err(Error::Consistency(format!("need at least 2 algorithms, got {k}")));
        }
        if p == 0 {
            return Err(Error::Consistency("scenario has no features".into()));
        }
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::Consistency(format!("invalid cutoff {cutoff}")));
        }
        let shape_ok = features.len() == n
            && performances.len() == n
            && run_ok.len() == n
            && fold_of.len() == n
            && features.iter().all(|r| r.len() == p)
            && performances.iter().all(|r| r.len() == k)
            && run_ok.iter().all(|r| r.len() == k);
        if !shape_ok {
            return Err(Error::Consistency("matrix shapes disagree".into()));
        }
        if let Some(f) = fold_of.iter().find(|f| !(1..=NUM_FOLDS).contains(f)) {
            return Err(Error::Consistency(format!("fold id {f} outside 1..=10")));
        }
        for (i, (row, ok)) in performances.iter_mut().zip(&run_ok).enumerate() {
            for (j, (v, &finished)) in row.iter_mut().zip(ok).enumerate() {
                if !finished {
                    *v = cutoff;
                } else if !(v.is_finite() && *v >= 0.0) {
                    return Err(Error::Consistency(format!(
                        "instance {} algorithm {}: invalid runtime {v}",
                        instance_ids[i], algorithm_names[j]
                    )));
                }
            }
        }
        Ok(Scenario {
            name,
            algorithm_names,
            feature_names,
            instance_ids,
            features,
            performances,
            run_ok,
            cutoff,
            fold_of,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn algorithm_names(&self) -> &[String] {
        &self.algorithm_names
    }
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }
    pub fn features(&self) -> &[Vec<Option<f64>>] {
        &self.features
    }
    pub fn performances(&self) -> &[Vec<f64>] {
        &self.performances
    }
    pub fn run_ok(&self) -> &[Vec<bool>] {
        &self.run_ok
    }
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
    pub fn fold_of(&self) -> &[u8] {
        &self.fold_of
    }
    pub fn num_instances(&self) -> usize {
        self.instance_ids.len()
    }
    pub fn num_algorithms(&self) -> usize {
        self.algorithm_names.len()
    }
    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    /// PAR10 cost of one run in seconds.
    pub fn cost(&self, instance: usize, algorithm: usize) -> f64 {
        let runtime = self.performances[instance][algorithm];
        let finished = self.run_ok[instance][algorithm];
        if finished && runtime < self.cutoff {
            runtime
        } else {
            10.0 * self.cutoff
        }
    }

    /// PAR10 label vectors of every instance (n x k, original units).
    pub fn par10_costs(&self) -> Vec<Vec<f64>> {
        (0..self.num_instances())
            .map(|i| (0..self.num_algorithms()).map(|j| self.cost(i, j)).collect())
            .collect()
    }

    pub fn is_solved(&self, instance: usize) -> bool {
        (0..self.num_algorithms()).any(|j| self.cost(instance, j) < 10.0 * self.cutoff)
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Scenario> {
        if rows.is_empty() {
            return Err(Error::EmptyScenario);
        }
        fn pick<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|&i| v[i].clone()).collect()
        }
        Ok(Scenario {
            name: self.name.clone(),
            algorithm_names: self.algorithm_names.clone(),
            feature_names: self.feature_names.clone(),
            instance_ids: rows.iter().map(|&i| self.instance_ids[i].clone()).collect(),
            features: pick(&self.features, rows),
            performances: pick(&self.performances, rows),
            run_ok: pick(&self.run_ok, rows),
            cutoff: self.cutoff,
            fold_of: rows.iter().map(|&i| self.fold_of[i]).collect(),
        })
    }

    /// Replaces the fold assignment.
    pub fn with_folds(mut self, fold_of: Vec<u8>) -> Result<Scenario> {
        if fold_of.len() != self.num_instances() {
            return Err(Error::Consistency("fold vector has wrong length".into()));
        }
        if let Some(f) = fold_of.iter().find(|f| !(1..=NUM_FOLDS).contains(f)) {
            return Err(Error::Consistency(format!("fold id {f} outside 1..=10")));
        }
        self.fold_of = fold_of;
        Ok(self)
    }
}

/// PAR10: the runtime if the run finished below the cutoff, `10 * cutoff`
/// otherwise.
pub fn par10(runtime: f64, finished: bool, cutoff: f64) -> Result<f64> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::domain(format!("cutoff must be positive, got {cutoff}")));
    }
    if !(runtime >= 0.0) {
        return Err(Error::domain(format!("runtime must be nonnegative, got {runtime}")));
    }
    Ok(if finished && runtime < cutoff {
        runtime
    } else {
        10.0 * cutoff
    })
}

/// Drops instances that no algorithm solves before the cutoff.
pub fn filter_unsolved(scenario: &Scenario) -> Result<Scenario> {
    let keep: Vec<usize> = (0..scenario.num_instances())
        .filter(|&i| scenario.is_solved(i))
        .collect();
    scenario.select_rows(&keep)
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        0.5 * (values[mid - 1] + values[mid])
    } else {
        values[mid]
    })
}

/// Column medians of the rows it was fit on; fills missing feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImputer {
    medians: Vec<f64>,
}

impl FeatureImputer {
    pub fn fit<R: AsRef<[Option<f64>]>>(rows: &[R], num_features: usize) -> Self {
        let medians = (0..num_features)
            .map(|c| {
                let mut col: Vec<f64> = rows.iter().filter_map(|r| r.as_ref()[c]).collect();
                median(&mut col).unwrap_or(0.0)
            })
            .collect();
        FeatureImputer { medians }
    }

    pub fn from_medians(medians: Vec<f64>) -> Self {
        FeatureImputer { medians }
    }

    pub fn medians(&self) -> &[f64] {
        &self.medians
    }

    pub fn apply(&self, row: &[Option<f64>]) -> Vec<f64> {
        row.iter()
            .zip(&self.medians)
            .map(|(v, m)| v.unwrap_or(*m))
            .collect()
    }
}

/// Fills missing entries with the column median (0 for fully missing
/// columns).
pub fn impute_features(features: &[Vec<Option<f64>>]) -> Vec<Vec<f64>> {
    let p = features.first().map_or(0, Vec::len);
    let imputer = FeatureImputer::fit(features, p);
    features.iter().map(|r| imputer.apply(r)).collect()
}

/// Global min-max scaling of a cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub min: f64,
    pub max: f64,
}

impl ScaleParams {
    pub fn fit<R: AsRef<[f64]>>(costs: &[R]) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in costs.iter().flat_map(|r| r.as_ref().iter()) {
            min = min.min(*v);
            max = max.max(*v);
        }
        if !min.is_finite() {
            return ScaleParams { min: 0.0, max: 0.0 };
        }
        ScaleParams { min, max }
    }

    pub fn scale(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    pub fn unscale(&self, v: f64) -> f64 {
        self.min + v * (self.max - self.min)
    }

    pub fn scale_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().map(|&v| self.scale(v)).collect()
    }

    pub fn unscale_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().map(|&v| self.unscale(v)).collect()
    }
}

pub fn scale_performances(costs: &[Vec<f64>]) -> (Vec<Vec<f64>>, ScaleParams) {
    let params = ScaleParams::fit(costs);
    (costs.iter().map(|r| params.scale_row(r)).collect(), params)
}

/// Imputed features paired with PAR10 costs in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    features: Vec<Vec<f64>>,
    costs: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, costs: Vec<Vec<f64>>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::domain("training set is empty"));
        }
        if features.len() != costs.len() {
            return Err(Error::domain("features and costs have different row counts"));
        }
        let p = features[0].len();
        let k = costs[0].len();
        if k == 0 || features.iter().any(|r| r.len() != p) || costs.iter().any(|r| r.len() != k) {
            return Err(Error::domain("ragged training matrices"));
        }
        if features.iter().flatten().chain(costs.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::domain("training data contains non-finite values"));
        }
        Ok(TrainingSet { features, costs })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }
    pub fn costs(&self) -> &[Vec<f64>] {
        &self.costs
    }
    pub fn len(&self) -> usize {
        self.features.len()
    }
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
    pub fn num_features(&self) -> usize {
        self.features[0].len()
    }
    pub fn num_algorithms(&self) -> usize {
        self.costs[0].len()
    }
}

/// Index of the smallest entry; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = j;
        }
    }
    best
}

/// Seeded 10-fold split stratified by each instance's best algorithm.
pub fn stratified_folds(costs: &[Vec<f64>], seed: u64) -> Vec<u8> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, row) in costs.iter().enumerate() {
        let best = argmin(row);
        if groups.len() <= best {
            groups.resize(best + 1, Vec::new());
        }
        groups[best].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0u8; costs.len()];
    let mut next = 0usize;
    for group in &mut groups {
        group.shuffle(&mut rng);
        for &i in group.iter() {
            fold_of[i] = (next % NUM_FOLDS as usize) as u8 + 1;
            next += 1;
        }
    }
    fold_of
}

#[derive(Debug)]
struct Description {
    name: Option<String>,
    cutoff: f64,
    algorithms: Vec<String>,
    measure: Option<String>,
}

fn yaml_strings(v: Option<&serde_yaml::Value>) -> Vec<String> {
    match v {
        Some(serde_yaml::Value::Sequence(items)) => items
            .iter()
            .filter_map(|i| match i {
                serde_yaml::Value::String(s) => Some(s.clone()),
                serde_yaml::Value::Number(n) => Some(n.to_string()),
                _ => None,
            })
            .collect(),
        Some(serde_yaml::Value::String(s)) => vec![s.clone()],
        _ => Vec::new(),
    }
}

fn read_description(path: &Path) -> Result<Description> {
    let text = fs::read_to_string(path).map_err(|e| Error::MissingFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let doc: serde_yaml::Value = serde_yaml::from_str(&text).map_err(|e| {
        parse_err(e.location().map_or(0, |l| l.line()), e.to_string())
    })?;
    let name = doc
        .get("scenario_id")
        .and_then(|v| v.as_str())
        .map(str::to_string);
    let cutoff = match doc.get("algorithm_cutoff_time") {
        Some(serde_yaml::Value::Number(n)) => n.as_f64(),
        Some(serde_yaml::Value::String(s)) => s.trim().parse().ok(),
        _ => None,
    }
    .ok_or_else(|| parse_err(0, "algorithm_cutoff_time missing or not numeric".into()))?;

    if yaml_strings(doc.get("maximize")).first().map(String::as_str) == Some("true")
        || doc
            .get("maximize")
            .and_then(|v| v.as_sequence())
            .and_then(|s| s.first())
            .and_then(|b| b.as_bool())
            == Some(true)
    {
        return Err(parse_err(0, "only runtime (minimised) scenarios are supported".into()));
    }

    let mut algorithms = yaml_strings(doc.get("algorithms_deterministic"));
    algorithms.extend(yaml_strings(doc.get("algorithms_stochastic")));
    if algorithms.is_empty() {
        if let Some(serde_yaml::Value::Mapping(m)) = doc.get("metainfo_algorithms") {
            algorithms = m.keys().filter_map(|k| k.as_str().map(str::to_string)).collect();
        }
    }
    let measure = yaml_strings(doc.get("performance_measures")).into_iter().next();
    Ok(Description {
        name,
        cutoff,
        algorithms,
        measure,
    })
}

fn text_cell<'a>(file: &ArffFile, row: &'a crate::arff::Row, col: usize) -> Result<&'a str> {
    match &row.values[col] {
        Value::Text(s) => Ok(s),
        other => Err(file.error(row.line, format!("expected a string, found {other:?}"))),
    }
}

fn required_column(file: &ArffFile, name: &str) -> Result<usize> {
    file.column(name)
        .ok_or_else(|| file.error(1, format!("missing attribute {name}")))
}

fn repetition_of(row: &crate::arff::Row, col: Option<usize>) -> f64 {
    col.and_then(|c| row.values[c].as_number()).unwrap_or(1.0)
}

/// Loads an ASLib scenario directory.
///
/// `description.txt`, `feature_values.arff` and `algorithm_runs.arff` are
/// required. Without `cv.arff` the folds come from [`stratified_folds`].
/// Algorithm runs that are absent or not `ok` count as unfinished.
pub fn parse_scenario(dir: &Path) -> Result<Scenario> {
    if !dir.is_dir() {
        return Err(Error::MissingFile {
            path: dir.to_path_buf(),
            message: "not a directory".into(),
        });
    }
    let desc = read_description(&dir.join(DESCRIPTION_FILE))?;
    let feats = ArffFile::read(&dir.join(FEATURE_FILE))?;
    let runs = ArffFile::read(&dir.join(RUNS_FILE))?;

    // features
    let id_col = required_column(&feats, "instance_id")?;
    let rep_col = feats.column("repetition");
    let feature_cols: Vec<usize> = (0..feats.attributes.len())
        .filter(|&c| c != id_col && Some(c) != rep_col)
        .collect();
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&c| feats.attributes[c].name.clone())
        .collect();
    let mut instance_ids: Vec<String> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    // per instance, per feature: (sum, count) over repetitions
    let mut feature_acc: Vec<Vec<(f64, usize)>> = Vec::new();
    for row in &feats.rows {
        let id = text_cell(&feats, row, id_col)?;
        let i = *index_of.entry(id.to_string()).or_insert_with(|| {
            instance_ids.push(id.to_string());
            feature_acc.push(vec![(0.0, 0); feature_cols.len()]);
            instance_ids.len() - 1
        });
        for (slot, &c) in feature_acc[i].iter_mut().zip(&feature_cols) {
            match &row.values[c] {
                Value::Number(v) => {
                    slot.0 += v;
                    slot.1 += 1;
                }
                Value::Missing => {}
                Value::Text(t) => {
                    return Err(feats.error(row.line, format!("non-numeric feature value {t}")))
                }
            }
        }
    }
    let features: Vec<Vec<Option<f64>>> = feature_acc
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|(s, c)| (c > 0).then(|| s / c as f64))
                .collect()
        })
        .collect();

    // runs
    let run_id = required_column(&runs, "instance_id")?;
    let run_alg = required_column(&runs, "algorithm")?;
    let run_status = required_column(&runs, "runstatus")?;
    let run_rep = runs.column("repetition");
    let measure_col = desc
        .measure
        .as_deref()
        .and_then(|m| runs.column(m))
        .or_else(|| {
            (0..runs.attributes.len())
                .find(|&c| c != run_id && c != run_alg && c != run_status && Some(c) != run_rep)
        })
        .ok_or_else(|| runs.error(1, "no performance column"))?;

    let mut algorithm_names = desc.algorithms.clone();
    let from_description = !algorithm_names.is_empty();
    let n = instance_ids.len();
    // (runtime sum, count, all ok)
    let mut run_acc: Vec<Vec<Option<(f64, usize, bool)>>> = vec![Vec::new(); n];
    let mut alg_index: HashMap<String, usize> = algorithm_names
        .iter()
        .enumerate()
        .map(|(j, a)| (a.clone(), j))
        .collect();
    for row in &runs.rows {
        let id = text_cell(&runs, row, run_id)?;
        let alg = text_cell(&runs, row, run_alg)?;
        let i = *index_of.get(id).ok_or_else(|| {
            Error::Consistency(format!("instance {id} has runs but no feature values"))
        })?;
        let j = match alg_index.get(alg) {
            Some(&j) => j,
            None if from_description => {
                return Err(Error::Consistency(format!(
                    "algorithm {alg} not listed in {DESCRIPTION_FILE}"
                )))
            }
            None => {
                algorithm_names.push(alg.to_string());
                alg_index.insert(alg.to_string(), algorithm_names.len() - 1);
                algorithm_names.len() - 1
            }
        };
        let status = match &row.values[run_status] {
            Value::Text(s) => s.as_str(),
            _ => "",
        };
        let runtime = row.values[measure_col].as_number();
        let ok = status.eq_ignore_ascii_case("ok") && runtime.is_some();
        let acc = &mut run_acc[i];
        if acc.len() <= j {
            acc.resize(j + 1, None);
        }
        let entry = acc[j].get_or_insert((0.0, 0, true));
        entry.0 += runtime.unwrap_or(0.0);
        entry.1 += 1;
        entry.2 &= ok;
    }
    let k = algorithm_names.len();
    let mut performances = vec![vec![f64::NAN; k]; n];
    let mut run_ok = vec![vec![false; k]; n];
    let mut missing = 0usize;
    for i in 0..n {
        if run_acc[i].iter().all(Option::is_none) {
            return Err(Error::Consistency(format!(
                "instance {} has feature values but no algorithm runs",
                instance_ids[i]
            )));
        }
        for j in 0..k {
            match run_acc[i].get(j).copied().flatten() {
                Some((sum, count, ok)) => {
                    performances[i][j] = sum / count as f64;
                    run_ok[i][j] = ok;
                }
                None => missing += 1,
            }
        }
    }
    if missing > 0 {
        warn!("{missing} algorithm runs absent; treated as unfinished");
    }

    // folds
    let cv_path = dir.join(CV_FILE);
    let fold_of = if cv_path.exists() {
        let cv = ArffFile::read(&cv_path)?;
        let cv_id = required_column(&cv, "instance_id")?;
        let cv_fold = required_column(&cv, "fold")?;
        let cv_rep = cv.column("repetition");
        let mut fold_of = vec![0u8; n];
        for row in &cv.rows {
            if repetition_of(row, cv_rep) != 1.0 {
                continue;
            }
            let id = text_cell(&cv, row, cv_id)?;
            let i = *index_of.get(id).ok_or_else(|| {
                Error::Consistency(format!("instance {id} in {CV_FILE} has no feature values"))
            })?;
            let fold = match &row.values[cv_fold] {
                Value::Number(f) => *f,
                Value::Text(t) => t.parse().unwrap_or(f64::NAN),
                Value::Missing => f64::NAN,
            };
            if !(fold >= 1.0 && fold <= NUM_FOLDS as f64 && fold.fract() == 0.0) {
                return Err(cv.error(row.line, format!("fold {fold} outside 1..=10")));
            }
            fold_of[i] = fold as u8;
        }
        if let Some(i) = fold_of.iter().position(|&f| f == 0) {
            return Err(Error::Consistency(format!(
                "instance {} missing from {CV_FILE}",
                instance_ids[i]
            )));
        }
        fold_of
    } else {
        Vec::new()
    };

    let name = desc.name.unwrap_or_else(|| {
        dir.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let needs_folds = fold_of.is_empty();
    let scenario = Scenario::from_parts(ScenarioParts {
        name,
        algorithm_names,
        feature_names,
        instance_ids,
        features,
        performances,
        run_ok,
        cutoff: desc.cutoff,
        fold_of: if needs_folds { vec![1; n] } else { fold_of },
    })?;
    if needs_folds {
        let folds = stratified_folds(&scenario.par10_costs(), FALLBACK_FOLD_SEED);
        return scenario.with_folds(folds);
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(perf: Vec<Vec<f64>>, ok: Vec<Vec<bool>>) -> Scenario {
        let n = perf.len();
        Scenario::from_parts(ScenarioParts {
            name: "toy".into(),
            algorithm_names: vec!["a".into(), "b".into()],
            feature_names: vec!["f".into()],
            instance_ids: (0..n).map(|i| format!("i{i}")).collect(),
            features: (0..n).map(|i| vec![Some(i as f64)]).collect(),
            performances: perf,
            run_ok: ok,
            cutoff: 100.0,
            fold_of: (0..n).map(|i| (i % 10) as u8 + 1).collect(),
        })
        .unwrap()
    }

    #[test]
    fn par10_examples() {
        assert_eq!(par10(100.0, true, 1200.0).unwrap(), 100.0);
        assert_eq!(par10(1200.0, false, 1200.0).unwrap(), 12000.0);
        assert_eq!(par10(7200.0, false, 7200.0).unwrap(), 72000.0);
        assert_eq!(par10(1200.0, true, 1200.0).unwrap(), 12000.0);
        assert!(par10(-1.0, true, 10.0).is_err());
        assert!(par10(1.0, true, 0.0).is_err());
        assert!(par10(f64::NAN, true, 10.0).is_err());
    }

    #[test]
    fn unfinished_runs_clamped_to_cutoff() {
        let s = toy(vec![vec![5.0, f64::NAN]], vec![vec![true, false]]);
        assert_eq!(s.performances()[0], vec![5.0, 100.0]);
        assert_eq!(s.par10_costs()[0], vec![5.0, 1000.0]);
    }

    #[test]
    fn filter_unsolved_examples() {
        let s = toy(
            vec![vec![1.0, 2.0], vec![0.0, 0.0], vec![3.0, 4.0]],
            vec![vec![true, false], vec![false, false], vec![false, true]],
        );
        let f = filter_unsolved(&s).unwrap();
        assert_eq!(f.instance_ids(), &["i0".to_string(), "i2".to_string()]);
        assert_eq!(f.fold_of(), &[1, 3]);
        assert_eq!(f.features()[1], vec![Some(2.0)]);

        let solved = toy(vec![vec![1.0, 2.0]], vec![vec![true, true]]);
        assert_eq!(filter_unsolved(&solved).unwrap(), solved);

        let none = toy(vec![vec![1.0, 2.0]], vec![vec![false, false]]);
        assert!(matches!(filter_unsolved(&none), Err(Error::EmptyScenario)));
    }

    #[test]
    fn impute_examples() {
        let m = vec![
            vec![Some(1.0), Some(5.0), None],
            vec![None, Some(6.0), None],
            vec![Some(3.0), Some(7.0), None],
        ];
        let out = impute_features(&m);
        assert_eq!(out, vec![vec![1.0, 5.0, 0.0], vec![2.0, 6.0, 0.0], vec![3.0, 7.0, 0.0]]);
    }

    #[test]
    fn scale_examples() {
        let (s, p) = scale_performances(&[vec![0.0, 5.0, 10.0]]);
        assert_eq!(s, vec![vec![0.0, 0.5, 1.0]]);
        assert_eq!(p, ScaleParams { min: 0.0, max: 10.0 });

        let (s, _) = scale_performances(&[vec![3.0, 3.0], vec![3.0, 3.0]]);
        assert_eq!(s, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);

        let (s, _) = scale_performances(&[vec![100.0, 6050.0], vec![12000.0, 200.0]]);
        assert!((s[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stratified_folds_cover_all_folds() {
        let costs: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 3) as f64, 1.0]).collect();
        let folds = stratified_folds(&costs, 7);
        for f in 1..=10u8 {
            assert_eq!(folds.iter().filter(|&&x| x == f).count(), 5);
        }
        assert_eq!(folds, stratified_folds(&costs, 7));
    }

    #[test]
    fn missing_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(parse_scenario(dir.path()), Err(Error::MissingFile { .. })));
        assert!(parse_scenario(&dir.path().join("nope")).is_err());
    }

    proptest! {
        #[test]
        fn par10_monotone(a in 0.0f64..2000.0, b in 0.0f64..2000.0, c in 1.0f64..1500.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(par10(lo, true, c).unwrap() <= par10(hi, true, c).unwrap());
            let unfinished = par10(lo, false, c).unwrap();
            if hi < c {
                prop_assert!(unfinished > par10(hi, true, c).unwrap());
            }
        }

        #[test]
        fn scaling_preserves_order(rows in prop::collection::vec(prop::collection::vec(0.0f64..1e5, 3), 1..10)) {
            let (scaled, _) = scale_performances(&rows);
            for (raw, sc) in rows.iter().zip(&scaled) {
                prop_assert_eq!(argmin(raw), argmin(sc));
                prop_assert_eq!(crate::losses::rank_vector(raw), crate::losses::rank_vector(sc));
                prop_assert!(sc.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
