//! Command-line front end: evaluate, sweep, train, predict and report.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use harris::aslib::{filter_unsolved, parse_scenario};
use harris::evaluation::{
    best_cell, cross_validate_folds, default_lambdas, prepare_folds, read_csv, render_table, sweep,
    CsvRow, EvaluationReport, RunTag, Summary, DEFAULT_DEPTHS,
};
use harris::selectors::{Harris, Isac, Oracle, Rfr, Satzilla, SingleBest};
use harris::synthetic::oracle_separable;
use harris::{
    FeatureImputer, FeaturesPerSplit, ForestConfig, HybridForest, Scenario, SelectorFactory,
    TrainedModel, TrainingSet,
};
use log::info;

/// Environment variable read for the worker thread count.
pub const THREADS_ENV: &str = "HARRIS_THREADS";

pub const DEFAULT_SELECTORS: &str = "harris,rfr,isac,satzilla";
pub const DEFAULT_DEPTH: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] harris::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "harris", version, about = "Algorithm selection with hybrid ranking/regression forests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-validate selectors on one or more scenarios.
    Evaluate(EvaluateArgs),
    /// Cross-validate the hybrid forest over a (lambda, depth) grid.
    Sweep(SweepArgs),
    /// Fit a hybrid forest on a whole scenario and save it.
    Train(TrainArgs),
    /// Select algorithms for feature vectors with a saved model.
    Predict(PredictArgs),
    /// Summarise result CSVs as a scenario x selector table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// ASLib scenario directory (repeatable).
    #[arg(long = "scenario")]
    pub scenarios: Vec<PathBuf>,
    /// Use the built-in seeded synthetic scenario.
    #[arg(long)]
    pub synthetic: bool,
    /// Keep instances that no algorithm solves.
    #[arg(long)]
    pub keep_unsolved: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ForestArgs {
    /// Ranking weight of the hybrid loss, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Maximum tree depth.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: usize,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    /// Grow every tree on the full training set.
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Candidate features per split: `all`, `sqrt` or a count.
    #[arg(long, default_value = "sqrt")]
    pub features_per_split: String,
    /// Single tree, all features, no bootstrap.
    #[arg(long)]
    pub paper_tree: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Comma-separated: harris, rfr, isac, satzilla, sbs, oracle.
    #[arg(long, default_value = DEFAULT_SELECTORS)]
    pub selectors: String,
    #[arg(long, default_value_t = 10)]
    pub isac_clusters: usize,
    /// CSV output path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Comma-separated lambda grid (default 0, 0.1, ..., 1).
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Comma-separated depth grid (default 2, 4, 6, 8, 10).
    #[arg(long)]
    pub depths: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Where to write the model file.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with a header naming the model's features; an optional
    /// `instance_id` column labels the output. Empty cells and `?` are
    /// missing.
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Result CSVs written by `evaluate` or `sweep`.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
}

pub fn forest_config(args: &ForestArgs) -> CliResult<ForestConfig> {
    if !(0.0..=1.0).contains(&args.lambda) {
        return usage(format!("--lambda must lie in [0, 1], got {}", args.lambda));
    }
    if args.paper_tree {
        return Ok(ForestConfig::single_tree(args.lambda, args.depth, args.seed)?);
    }
    let mut cfg = ForestConfig::new(args.lambda, args.depth, args.seed)?;
    if args.n_trees == 0 {
        return usage("--n-trees must be positive");
    }
    cfg.n_trees = args.n_trees;
    cfg.bootstrap = !args.no_bootstrap;
    cfg.tree.features_per_split = match args.features_per_split.as_str() {
        "all" => FeaturesPerSplit::All,
        "sqrt" => FeaturesPerSplit::Sqrt,
        n => match n.parse::<usize>() {
            Ok(m) if m > 0 => FeaturesPerSplit::Count(m),
            _ => return usage(format!("bad --features-per-split {n:?}")),
        },
    };
    Ok(cfg)
}

pub fn load_scenarios(args: &ScenarioArgs, seed: u64) -> CliResult<Vec<Scenario>> {
    if args.scenarios.is_empty() && !args.synthetic {
        return usage("give at least one --scenario or --synthetic");
    }
    let mut out = Vec::new();
    if args.synthetic {
        out.push(oracle_separable(seed)?);
    }
    for dir in &args.scenarios {
        out.push(parse_scenario(dir)?);
    }
    if !args.keep_unsolved {
        out = out
            .iter()
            .map(|s| {
                let kept = filter_unsolved(s)?;
                if kept.num_instances() < s.num_instances() {
                    info!(
                        "{}: dropped {} unsolved instances",
                        s.name(),
                        s.num_instances() - kept.num_instances()
                    );
                }
                Ok(kept)
            })
            .collect::<CliResult<Vec<_>>>()?;
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().or_else(|_| usage(format!("bad value {s:?} in {flag}"))))
        .collect()
}

pub fn selector_factories(
    names: &str,
    forest: &ForestConfig,
    isac_clusters: usize,
) -> CliResult<Vec<Box<dyn SelectorFactory>>> {
    let mut out: Vec<Box<dyn SelectorFactory>> = Vec::new();
    for name in names.split(',').map(str::trim) {
        out.push(match name {
            "harris" => Box::new(Harris { forest: *forest }),
            "rfr" => Box::new(Rfr { forest: *forest }),
            "satzilla" => Box::new(Satzilla { forest: *forest }),
            "isac" => Box::new(Isac {
                clusters: isac_clusters,
                seed: forest.seed,
                ..Isac::default()
            }),
            "sbs" => Box::new(SingleBest),
            "oracle" => Box::new(Oracle),
            other => return usage(format!("unknown selector {other:?}")),
        });
    }
    if out.is_empty() {
        return usage("no selectors given");
    }
    Ok(out)
}

fn write_report(report: &EvaluationReport, path: Option<&Path>) -> CliResult<()> {
    if let Some(path) = path {
        let mut w = BufWriter::new(File::create(path)?);
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<EvaluationReport> {
    let forest = forest_config(&args.forest)?;
    let factories = selector_factories(&args.selectors, &forest, args.isac_clusters)?;
    let scenarios = load_scenarios(&args.scenario, args.forest.seed)?;
    let mut rows = Vec::new();
    for s in &scenarios {
        let folds = prepare_folds(s)?;
        for f in &factories {
            let tag = if f.name() == "harris" {
                RunTag::forest(&forest)
            } else {
                RunTag::default()
            };
            info!("{}: {}", s.name(), f.name());
            rows.extend(cross_validate_folds(s.name(), &folds, f.as_ref(), tag)?);
        }
    }
    let report = EvaluationReport::from_folds(rows)?;
    write_report(&report, args.output.as_deref())?;
    writeln!(out, "PAR10 (mean ± std over folds)")?;
    write!(out, "{}", render_table(&report.summaries()))?;
    Ok(report)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<EvaluationReport> {
    let base = forest_config(&args.forest)?;
    let lambdas = match &args.lambdas {
        Some(l) => parse_list::<f64>(l, "--lambdas")?,
        None => default_lambdas(),
    };
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return usage(format!("lambda {l} outside [0, 1]"));
    }
    let depths = match &args.depths {
        Some(d) => parse_list::<usize>(d, "--depths")?,
        None => DEFAULT_DEPTHS.to_vec(),
    };
    let scenarios = load_scenarios(&args.scenario, args.forest.seed)?;
    let mut rows = Vec::new();
    for s in &scenarios {
        let cells = sweep(s, &lambdas, &depths, &base)?;
        if let Some(best) = best_cell(&cells) {
            writeln!(
                out,
                "{}: best lambda {} depth {} PAR10 {:.2} ± {:.2} (oracle {:.2})",
                s.name(),
                best.lambda,
                best.depth,
                best.summary.par10_mean,
                best.summary.par10_std,
                best.summary.oracle_par10
            )?;
        }
        rows.extend(cells.into_iter().flat_map(|c| c.folds));
    }
    let report = EvaluationReport::from_folds(rows)?;
    write_report(&report, args.output.as_deref())?;
    Ok(report)
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult<TrainedModel> {
    let cfg = forest_config(&args.forest)?;
    let scenarios = load_scenarios(&args.scenario, args.forest.seed)?;
    let [s] = scenarios.as_slice() else {
        return usage("train takes exactly one scenario");
    };
    let imputer = FeatureImputer::fit(s.features(), s.num_features());
    let train = TrainingSet::new(
        s.features().iter().map(|r| imputer.apply(r)).collect(),
        s.par10_costs(),
    )?;
    let forest = HybridForest::fit(&train, s.algorithm_names().to_vec(), &cfg)?;
    let model = TrainedModel {
        forest,
        feature_names: s.feature_names().to_vec(),
        imputer,
    };
    model.save(&args.model)?;
    writeln!(
        out,
        "trained {} trees on {} instances of {}; model written to {}",
        cfg.n_trees,
        s.num_instances(),
        s.name(),
        args.model.display()
    )?;
    Ok(model)
}

/// One line per input row: `<id> <algorithm> <cost>,<cost>,...` with costs
/// in seconds.
pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> CliResult<Vec<(String, usize, Vec<f64>)>> {
    let model = TrainedModel::load(&args.model)?;
    let mut rdr = csv::Reader::from_path(&args.features).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Core(harris::Error::MissingFile {
            path: args.features.clone(),
            message: e.to_string(),
        }),
        _ => CliError::Csv(e),
    })?;
    let header = rdr.headers()?.clone();
    let id_col = header.iter().position(|h| h.eq_ignore_ascii_case("instance_id"));
    let value_cols: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != id_col).collect();
    // map model features to CSV columns by name; fall back to position when
    // the header does not name them
    let named: Option<Vec<usize>> = model
        .feature_names
        .iter()
        .map(|f| value_cols.iter().copied().find(|&c| &header[c] == f))
        .collect();
    if value_cols.len() != model.feature_names.len() {
        return Err(harris::Error::domain(format!(
            "model expects {} features, {} has {}",
            model.feature_names.len(),
            args.features.display(),
            value_cols.len()
        ))
        .into());
    }
    let cols = named.unwrap_or(value_cols);
    let mut results = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let raw: Vec<Option<f64>> = cols
            .iter()
            .map(|&c| {
                let cell = record.get(c).unwrap_or("").trim();
                if cell.is_empty() || cell == "?" {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|_| {
                        CliError::Core(harris::Error::Parse {
                            path: args.features.clone(),
                            line: line + 2,
                            message: format!("non-numeric feature value {cell:?}"),
                        })
                    })
                }
            })
            .collect::<CliResult<_>>()?;
        let id = id_col
            .and_then(|c| record.get(c))
            .map_or_else(|| format!("row{}", line + 1), str::to_string);
        let (choice, costs) = model.predict(&raw)?;
        let cost_text: Vec<String> = costs.iter().map(|c| format!("{c:.6}")).collect();
        writeln!(out, "{id} {} {}", model.forest.algorithm_names()[choice], cost_text.join(","))?;
        results.push((id, choice, costs));
    }
    Ok(results)
}

/// Aggregate rows of the given CSVs. When a selector has several (lambda,
/// depth) cells for a scenario, the one with the lowest mean PAR10 is shown.
pub fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> CliResult<Vec<Summary>> {
    let mut rows: Vec<CsvRow> = Vec::new();
    for path in &args.inputs {
        let file = File::open(path).map_err(|e| {
            CliError::Core(harris::Error::MissingFile {
                path: path.clone(),
                message: e.to_string(),
            })
        })?;
        rows.extend(read_csv(file)?);
    }
    let mut best: Vec<Summary> = Vec::new();
    for r in rows.iter().filter(|r| r.fold == "mean") {
        let s = Summary {
            scenario: r.scenario.clone(),
            selector: r.selector.clone(),
            lambda: r.lambda,
            depth: r.depth,
            folds: 0,
            n_test: r.n_test,
            par10_mean: r.par10,
            par10_std: r.par10_std.unwrap_or(0.0),
            oracle_par10: r.oracle_par10,
            kendall_tau: r.kendall_tau,
            tau_instances: r.tau_instances,
        };
        match best
            .iter_mut()
            .find(|b| b.scenario == s.scenario && b.selector == s.selector)
        {
            Some(b) if s.par10_mean < b.par10_mean => *b = s,
            Some(_) => {}
            None => best.push(s),
        }
    }
    if best.is_empty() {
        return Err(harris::Error::domain("no aggregate rows in the input").into());
    }
    let refs: Vec<&Summary> = best.iter().collect();
    writeln!(out, "PAR10 (mean ± std over folds)")?;
    write!(out, "{}", render_table(&refs))?;
    for b in best.iter().filter(|b| b.lambda.is_some()) {
        writeln!(
            out,
            "{} {}: lambda {} depth {}",
            b.scenario,
            b.selector,
            b.lambda.unwrap_or_default(),
            b.depth.map_or_else(String::new, |d| d.to_string())
        )?;
    }
    Ok(best)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Evaluate(a) => cmd_evaluate(a, out).map(drop),
        Command::Sweep(a) => cmd_sweep(a, out).map(drop),
        Command::Train(a) => cmd_train(a, out).map(drop),
        Command::Predict(a) => cmd_predict(a, out).map(drop),
        Command::Report(a) => cmd_report(a, out).map(drop),
    }
}

/// Size of the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}
