//! Command-line front end for the release-then-attack study pipeline.
//!
//! Subcommands mirror the stages: generate study data, select features,
//! train (and release) a model, synthesize a training stand-in, evaluate
//! utility, attack a released model, re-emit reports, or run the whole
//! experiment into a self-contained directory.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use synthleak::attack::{run_lomia_with_marginals, run_marginals_only, FallbackMode, TargetSet};
use synthleak::classifier::{fit, Algorithm, ClassifierSpec, FittedModel};
use synthleak::experiment::{run_all, ExperimentConfig};
use synthleak::features::{rank_features, select_k_best};
use synthleak::metrics;
use synthleak::report::ReportBundle;
use synthleak::seed;
use synthleak::surrogate::{default_drift, default_population, make_study_splits, DriftSpec, GeneratorSpec};
use synthleak::synth::{fit_sequential_cart, marginal_tv_report, SynthesisConfig, DEFAULT_SYNTH_MIN_LEAF};
use synthleak::{Dataset, MarginalSet, Schema};

#[derive(Parser)]
#[command(
    name = "synthleak",
    version,
    about = "Train, synthesize, release, and attack categorical tabular classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the three study datasets from a population spec
    GenData(GenDataArgs),
    /// Rank features by association with the target and write a reduced schema
    SelectFeatures(SelectFeaturesArgs),
    /// Fit a classifier and persist it, optionally with its training marginals
    Train(TrainArgs),
    /// Fit the sequential-CART synthesizer and sample a synthetic dataset
    Synth(SynthArgs),
    /// Score a persisted model on a test dataset
    Evaluate(EvaluateArgs),
    /// Run an attribute-inference attack against a persisted model
    Attack(AttackArgs),
    /// Re-emit report tables from a saved bundle
    Report(ReportArgs),
    /// Run the full experiment and write a self-contained run directory
    RunAll(RunAllArgs),
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenData(args) => gen_data(args),
        Command::SelectFeatures(args) => select_features(args),
        Command::Train(args) => train(args),
        Command::Synth(args) => synth(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Attack(args) => attack(args),
        Command::Report(args) => report(args),
        Command::RunAll(args) => run_all_cmd(args),
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Output directory, created if missing
    #[arg(long)]
    out_dir: PathBuf,
    /// Population spec TOML; the built-in housing-survey population when absent
    #[arg(long)]
    generator: Option<PathBuf>,
    /// Drift spec TOML; the built-in defaults when absent
    #[arg(long)]
    drift: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    n_train: usize,
    #[arg(long, default_value_t = 3_000)]
    n_exclusive: usize,
    #[arg(long, default_value_t = 20130)]
    seed: u64,
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let generator = match &args.generator {
        Some(path) => GeneratorSpec::load(path)
            .with_context(|| format!("loading generator spec {}", path.display()))?,
        None => default_population(),
    };
    let drift = match &args.drift {
        Some(path) => DriftSpec::load(path)
            .with_context(|| format!("loading drift spec {}", path.display()))?,
        None => default_drift(),
    };
    drift.validate_against(generator.schema())?;
    let splits =
        make_study_splits(&generator, &drift, args.n_train, args.n_exclusive, args.seed)?;

    fs::create_dir_all(&args.out_dir)?;
    generator.schema().save(&args.out_dir.join("schema.toml"))?;
    generator.save(&args.out_dir.join("generator.toml"))?;
    drift.save(&args.out_dir.join("drift.toml"))?;
    splits.inclusive_2013.to_csv_path(&args.out_dir.join("inclusive_2013.csv"))?;
    splits.inclusive_2015.to_csv_path(&args.out_dir.join("inclusive_2015.csv"))?;
    splits.exclusive_2015.to_csv_path(&args.out_dir.join("exclusive_2015.csv"))?;

    println!(
        "wrote {} training rows, {} drifted rows, {} exclusive rows to {}",
        splits.inclusive_2013.len(),
        splits.inclusive_2015.len(),
        splits.exclusive_2015.len(),
        args.out_dir.display()
    );
    Ok(())
}

#[derive(Args)]
struct SelectFeaturesArgs {
    /// Full schema the data was written with
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// How many top-ranked features to keep
    #[arg(long)]
    k: usize,
    /// Attributes kept regardless of rank; defaults to every sensitive attribute
    #[arg(long, value_delimiter = ',')]
    keep: Vec<String>,
    /// Where the reduced schema goes
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV with the full ranking
    #[arg(long)]
    ranking_out: Option<PathBuf>,
}

fn select_features(args: SelectFeaturesArgs) -> Result<()> {
    let schema = Schema::load(&args.schema)?;
    let data = Dataset::from_csv_path(&args.data, &schema)?;
    let target_idx = schema.target_index().context("schema has no target attribute")?;
    let target = schema.attribute(target_idx).name.clone();

    let keep: Vec<String> = if args.keep.is_empty() {
        schema
            .sensitive_indices()
            .into_iter()
            .map(|i| schema.attribute(i).name.clone())
            .collect()
    } else {
        args.keep
    };
    let keep_refs: Vec<&str> = keep.iter().map(String::as_str).collect();

    let ranking = rank_features(&data, &target, &keep_refs)?;
    let selected = select_k_best(&data, &target, args.k, &keep_refs)?;
    selected.save(&args.out)?;

    if let Some(path) = &args.ranking_out {
        let mut csv = String::from("rank,feature,chi2\n");
        for score in &ranking {
            csv.push_str(&format!("{},{},{:.4}\n", score.rank, score.name, score.chi2));
        }
        fs::write(path, csv)?;
    }

    println!("kept unconditionally: {}", keep.join(", "));
    for score in ranking.iter().take(args.k) {
        println!("{:>3}  {:<24} chi2 {:.1}", score.rank, score.name, score.chi2);
    }
    println!("wrote {}-attribute schema to {}", selected.len(), args.out.display());
    Ok(())
}

#[derive(Args)]
struct TrainArgs {
    /// Schema to interpret the data with (a reduced one projects on load)
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 100)]
    n_trees: usize,
    #[arg(long, default_value_t = 5)]
    k_neighbors: usize,
    #[arg(long, default_value_t = 1.0)]
    laplace_alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model_out: PathBuf,
    /// Also release the training data's marginal distributions
    #[arg(long)]
    marginals_out: Option<PathBuf>,
}

fn train(args: TrainArgs) -> Result<()> {
    let schema = Schema::load(&args.schema)?;
    let data = Dataset::from_csv_path(&args.data, &schema)?;
    let mut spec = ClassifierSpec::new(args.algorithm, args.seed);
    spec.min_leaf = args.min_leaf;
    spec.max_depth = args.max_depth;
    spec.n_trees = args.n_trees;
    spec.k_neighbors = args.k_neighbors;
    spec.laplace_alpha = args.laplace_alpha;

    let model = fit(&spec, &data)?;
    model.save(&args.model_out)?;
    if let Some(path) = &args.marginals_out {
        MarginalSet::from_dataset(&data)?.save(path)?;
    }

    let target_idx = schema.target_index().context("schema has no target attribute")?;
    let truth = data.column(target_idx);
    let predictions = model.predict_dataset(&data)?;
    let n_labels = schema.attribute(target_idx).n_levels() as usize;
    println!(
        "trained {} on {} rows; training accuracy {:.4}; model at {}",
        args.algorithm,
        data.len(),
        metrics::accuracy(&truth, &predictions, n_labels)?,
        args.model_out.display()
    );
    Ok(())
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Rows to sample; defaults to the input's row count
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SYNTH_MIN_LEAF)]
    min_leaf: usize,
    /// Visiting sequence as a comma list; defaults to descending association
    /// with the target, target last
    #[arg(long, value_delimiter = ',')]
    sequence: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn synth(args: SynthArgs) -> Result<()> {
    let schema = Schema::load(&args.schema)?;
    let data = Dataset::from_csv_path(&args.data, &schema)?;
    let config = match args.sequence {
        Some(visiting_sequence) => SynthesisConfig {
            visiting_sequence,
            min_leaf: args.min_leaf,
            seed: args.seed,
        },
        None => {
            let mut config = SynthesisConfig::chi2_default(&data, args.seed)?;
            config.min_leaf = args.min_leaf;
            config
        }
    };
    let model = fit_sequential_cart(&data, &config)?;
    let rows = args.rows.unwrap_or(data.len());
    let synthetic = model.generate(rows, seed::derive(args.seed, "synthetic-rows"))?;
    synthetic.to_csv_path(&args.out)?;

    let report = marginal_tv_report(&data, &synthetic)?;
    let worst = report.iter().map(|(_, tv)| *tv).fold(0.0, f64::max);
    println!(
        "wrote {} synthetic rows to {}; worst marginal TV distance {:.4}",
        rows,
        args.out.display(),
        worst
    );
    Ok(())
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Optional one-row CSV with the scores
    #[arg(long)]
    out: Option<PathBuf>,
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let model = FittedModel::load(&args.model)?;
    let test = Dataset::from_csv_path(&args.test, model.schema())?;
    let target_idx = model.schema().target_index().context("model schema has no target")?;
    let n_labels = model.schema().attribute(target_idx).n_levels() as usize;

    let truth = test.column(target_idx);
    let predictions = model.predict_dataset(&test)?;
    let scores = model.score_dataset(&test)?;

    let auc = metrics::auc(&truth, &scores)?;
    let mcc = metrics::mcc(&truth, &predictions)?;
    let f1 = metrics::f1_macro(&truth, &predictions, n_labels)?;
    let accuracy = metrics::accuracy(&truth, &predictions, n_labels)?;

    if let Some(path) = &args.out {
        fs::write(
            path,
            format!("auc,mcc,f1_macro,accuracy\n{auc:.4},{mcc:.4},{f1:.4},{accuracy:.4}\n"),
        )?;
    }
    println!(
        "{} on {} rows: auc {auc:.4}  mcc {mcc:.4}  f1_macro {f1:.4}  accuracy {accuracy:.4}",
        model.algorithm(),
        test.len()
    );
    Ok(())
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    /// Released marginals JSON
    #[arg(long)]
    marginals: PathBuf,
    /// Target individuals (full true records; the attacked attribute is
    /// hidden from the attack internally)
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    sensitive: String,
    #[arg(long, default_value = "sample")]
    fallback: FallbackMode,
    /// Skip model queries entirely and predict from the marginals alone
    #[arg(long)]
    marginals_only: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional per-target prediction CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

fn attack(args: AttackArgs) -> Result<()> {
    let model = FittedModel::load(&args.model)?;
    let marginals = MarginalSet::load(&args.marginals)?;
    let targets = TargetSet::new(Dataset::from_csv_path(&args.targets, model.schema())?)?;

    let outcome = if args.marginals_only {
        run_marginals_only(&targets, &args.sensitive, &marginals, args.fallback, args.seed)?
    } else {
        let oracle = model.as_oracle();
        run_lomia_with_marginals(
            &oracle,
            &targets,
            &args.sensitive,
            &marginals,
            args.fallback,
            args.seed,
        )?
    };

    if let Some(path) = &args.out {
        fs::write(path, outcome.to_csv_string())?;
    }
    println!(
        "attacked `{}` for {} targets: {} exactly-one-match ({} correct), {} fallback, {} queries",
        outcome.sensitive,
        outcome.n_targets,
        outcome.n_case1_predicted,
        outcome.n_case1_correct,
        outcome.fallback.n,
        outcome.queries_issued
    );
    println!(
        "accuracy {:.4}  f1_macro {:.4}  precision_macro {:.4}  recall_macro {:.4}",
        outcome.metrics.accuracy,
        outcome.metrics.f1_macro,
        outcome.metrics.precision_macro,
        outcome.metrics.recall_macro
    );
    println!(
        "per provenance: exactly-one-match accuracy {:.4} (n={}), fallback accuracy {:.4} (n={})",
        outcome.case1.accuracy, outcome.case1.n, outcome.fallback.accuracy, outcome.fallback.n
    );
    Ok(())
}

#[derive(Args)]
struct ReportArgs {
    /// A bundle.json written by run-all
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn report(args: ReportArgs) -> Result<()> {
    let bundle = ReportBundle::load(&args.bundle)?;
    for path in bundle.emit(&args.out_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Args)]
struct RunAllArgs {
    /// Experiment config TOML; built-in defaults when absent
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's root seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn run_all_cmd(args: RunAllArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;

    let output = run_all(&config)?;

    let dir = &args.out_dir;
    let data_dir = dir.join("data");
    let released_dir = dir.join("released");
    fs::create_dir_all(&data_dir)?;
    fs::create_dir_all(&released_dir)?;

    config.save(&dir.join("config.toml"))?;
    output.bundle.save(&dir.join("bundle.json"))?;
    output.bundle.emit(&dir.join("reports"))?;

    let study = &output.study;
    study.schema().save(&data_dir.join("schema.toml"))?;
    study.inclusive_2013.to_csv_path(&data_dir.join("inclusive_2013.csv"))?;
    study.inclusive_2015.to_csv_path(&data_dir.join("inclusive_2015.csv"))?;
    study.exclusive_2015.to_csv_path(&data_dir.join("exclusive_2015.csv"))?;
    study.synthetic_2013.to_csv_path(&data_dir.join("synthetic_2013.csv"))?;

    output.attack.original_model.save(&released_dir.join("original_model.json"))?;
    output.attack.synthetic_model.save(&released_dir.join("synthetic_model.json"))?;
    output.attack.original_marginals.save(&released_dir.join("original_marginals.json"))?;
    output.attack.synthetic_marginals.save(&released_dir.join("synthetic_marginals.json"))?;

    print!("{}", output.bundle.summary_text());
    println!("\nrun directory: {}", dir.display());
    Ok(())
}
