//! Seeded synthetic scenarios whose best algorithm is fixed by one feature.
//!
//! Feature `x0` lies in one of three regions `[r/3 + m, (r+1)/3 - m]` with
//! margin `m = 0.02`. In region `r`, algorithm `r` solves the instance in
//! 1-10 s, algorithm `(r+1) % 3` in 50-200 s and algorithm `(r+2) % 3`
//! times out. The remaining features are noise; `noise1` is missing for
//! roughly 5% of instances.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aslib::{
    stratified_folds, Scenario, ScenarioParts, CV_FILE, DESCRIPTION_FILE, FEATURE_FILE, RUNS_FILE,
};
use crate::error::Result;

pub const SYNTHETIC_INSTANCES: usize = 500;
pub const SYNTHETIC_CUTOFF: f64 = 1000.0;
const REGIONS: usize = 3;
const MARGIN: f64 = 0.02;
const NOISE_FEATURES: usize = 3;
const MISSING_RATE: f64 = 0.05;

/// The default fixture: 500 instances, 3 algorithms.
pub fn oracle_separable(seed: u64) -> Result<Scenario> {
    oracle_separable_with(SYNTHETIC_INSTANCES, seed)
}

pub fn oracle_separable_with(n: usize, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = REGIONS;
    let mut features = Vec::with_capacity(n);
    let mut performances = Vec::with_capacity(n);
    let mut run_ok = Vec::with_capacity(n);
    for i in 0..n {
        let r = i % REGIONS;
        let lo = r as f64 / REGIONS as f64 + MARGIN;
        let hi = (r + 1) as f64 / REGIONS as f64 - MARGIN;
        let mut row = vec![Some(rng.gen_range(lo..=hi))];
        for f in 0..NOISE_FEATURES {
            let v = rng.gen_range(-1.0..1.0);
            let missing = f == 1 && rng.gen_bool(MISSING_RATE);
            row.push((!missing).then_some(v));
        }
        features.push(row);

        let mut perf = vec![0.0; k];
        let mut ok = vec![true; k];
        perf[r] = rng.gen_range(1.0..10.0);
        perf[(r + 1) % k] = rng.gen_range(50.0..200.0);
        perf[(r + 2) % k] = SYNTHETIC_CUTOFF;
        ok[(r + 2) % k] = false;
        performances.push(perf);
        run_ok.push(ok);
    }
    let scenario = Scenario::from_parts(ScenarioParts {
        name: "synthetic".into(),
        algorithm_names: (0..k).map(|j| format!("algo{j}")).collect(),
        feature_names: std::iter::once("x0".to_string())
            .chain((1..=NOISE_FEATURES).map(|f| format!("noise{f}")))
            .collect(),
        instance_ids: (0..n).map(|i| format!("inst{i:04}")).collect(),
        features,
        performances,
        run_ok,
        cutoff: SYNTHETIC_CUTOFF,
        fold_of: vec![1; n],
    })?;
    let folds = stratified_folds(&scenario.par10_costs(), seed);
    scenario.with_folds(folds)
}

/// Mean PAR10 of the per-instance best algorithm over the whole scenario.
pub fn oracle_par10(scenario: &Scenario) -> f64 {
    let costs = scenario.par10_costs();
    costs
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / costs.len() as f64
}

fn arff_number(v: f64) -> String {
    // shortest representation that parses back to the same f64
    format!("{v:?}")
}

/// Writes `scenario` as an ASLib directory (description, features, runs and
/// folds) that [`crate::aslib::parse_scenario`] reads back.
pub fn write_aslib(scenario: &Scenario, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut desc = String::new();
    let _ = writeln!(desc, "scenario_id: {}", scenario.name());
    let _ = writeln!(desc, "performance_measures:\n  - runtime");
    let _ = writeln!(desc, "maximize:\n  - false");
    let _ = writeln!(desc, "performance_type:\n  - runtime");
    let _ = writeln!(desc, "algorithm_cutoff_time: {}", scenario.cutoff());
    let _ = writeln!(desc, "algorithms_deterministic:");
    for a in scenario.algorithm_names() {
        let _ = writeln!(desc, "  - {a}");
    }
    let _ = writeln!(desc, "features_deterministic:");
    for f in scenario.feature_names() {
        let _ = writeln!(desc, "  - {f}");
    }
    fs::write(dir.join(DESCRIPTION_FILE), desc)?;

    let mut feats = String::from("@RELATION features\n\n@ATTRIBUTE instance_id STRING\n@ATTRIBUTE repetition NUMERIC\n");
    for f in scenario.feature_names() {
        let _ = writeln!(feats, "@ATTRIBUTE {f} NUMERIC");
    }
    feats.push_str("\n@DATA\n");
    for (id, row) in scenario.instance_ids().iter().zip(scenario.features()) {
        let _ = write!(feats, "{id},1");
        for v in row {
            match v {
                Some(v) => {
                    let _ = write!(feats, ",{}", arff_number(*v));
                }
                None => feats.push_str(",?"),
            }
        }
        feats.push('\n');
    }
    fs::write(dir.join(FEATURE_FILE), feats)?;

    let mut runs = String::from(
        "@RELATION runs\n\n@ATTRIBUTE instance_id STRING\n@ATTRIBUTE repetition NUMERIC\n\
         @ATTRIBUTE algorithm STRING\n@ATTRIBUTE runtime NUMERIC\n\
         @ATTRIBUTE runstatus {ok,timeout,memout,not_applicable,crash,other}\n\n@DATA\n",
    );
    for (i, id) in scenario.instance_ids().iter().enumerate() {
        for (j, a) in scenario.algorithm_names().iter().enumerate() {
            let ok = scenario.run_ok()[i][j];
            let _ = writeln!(
                runs,
                "{id},1,{a},{},{}",
                arff_number(scenario.performances()[i][j]),
                if ok { "ok" } else { "timeout" }
            );
        }
    }
    fs::write(dir.join(RUNS_FILE), runs)?;

    let mut cv = String::from(
        "@RELATION cv\n\n@ATTRIBUTE instance_id STRING\n@ATTRIBUTE repetition NUMERIC\n@ATTRIBUTE fold NUMERIC\n\n@DATA\n",
    );
    for (id, fold) in scenario.instance_ids().iter().zip(scenario.fold_of()) {
        let _ = writeln!(cv, "{id},1,{fold}");
    }
    fs::write(dir.join(CV_FILE), cv)?;
    Ok(())
}
