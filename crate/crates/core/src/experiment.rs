//! End-to-end experiment orchestration.
//!
//! One run walks the whole release-then-attack story: build (or load) the
//! three study datasets — a training wave, the same individuals two years
//! later, and fresh individuals — select features, synthesize a training
//! stand-in, fit the classifier zoo on original and synthetic data, score
//! utility on the later wave, then attack released models over repeated
//! target draws and aggregate. Every stage seeds its randomness from the
//! root seed through named streams, so a run is one number away from exact
//! reproduction.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{
    run_lomia_with_marginals, run_marginals_only, AttackOutcome, FallbackMode, TargetSet,
};
use crate::classifier::{fit, Algorithm, ClassifierSpec, FittedModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::select_k_best;
use crate::marginals::MarginalSet;
use crate::metrics::{auc, f1_macro, mcc, mean_std};
use crate::report::{
    sha256_hex, AttackMetricRow, Case1Row, RawAttackRecord, ReportBundle, RunManifest,
    UtilityRow,
};
use crate::schema::{Role, Schema};
use crate::seed;
use crate::surrogate::{
    default_drift, default_population, make_study_splits, DriftSpec, GeneratorSpec, SplitBundle,
};
use crate::synth::{fit_sequential_cart, SynthesisConfig};

pub const DEFAULT_TARGET_SET_SIZE: usize = 2904;

/// Everything a full run needs. The data source is either the built-in (or
/// file-provided) population generator, or a pre-made trio of CSVs sharing
/// one schema file — never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Training-wave size when generating data.
    pub n_train: usize,
    /// Fresh later-wave individuals when generating data.
    pub n_exclusive: usize,
    /// Individuals per attacked target set.
    pub target_set_size: usize,
    /// Attack repetitions; aggregation std is over exactly this many runs.
    pub repetitions: usize,
    /// Explicit per-repetition seeds; derived from `seed` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rep_seeds: Option<Vec<u64>>,
    /// Features kept by the association filter (sensitive attributes and the
    /// target are kept on top of these).
    pub k_features: usize,
    /// Zoo evaluated for utility.
    pub classifiers: Vec<Algorithm>,
    /// The released model the attacks run against.
    pub attack_algorithm: Algorithm,
    pub attack_min_leaf: usize,
    /// Attributes attacked, each in its own pass.
    pub sensitive_attributes: Vec<String>,
    pub fallback: FallbackMode,
    pub synthesis_min_leaf: usize,
    /// Release the original training marginals alongside the
    /// synthetic-trained model instead of the synthetic ones.
    pub release_original_marginals: bool,
    /// Draw one target subset per resource set and reuse it across
    /// repetitions instead of resampling each time.
    pub fix_target_sets: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inclusive_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusive_csv: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_train: 20_000,
            n_exclusive: 3_000,
            target_set_size: DEFAULT_TARGET_SET_SIZE,
            repetitions: 10,
            rep_seeds: None,
            k_features: 10,
            classifiers: Algorithm::ALL.to_vec(),
            attack_algorithm: Algorithm::DecisionTree,
            attack_min_leaf: 1,
            sensitive_attributes: vec![
                "gender".into(),
                "age_band".into(),
                "income_band".into(),
            ],
            fallback: FallbackMode::Sample,
            synthesis_min_leaf: crate::synth::DEFAULT_SYNTH_MIN_LEAF,
            release_original_marginals: false,
            fix_target_sets: false,
            seed: 20130,
            generator_file: None,
            drift_file: None,
            schema_file: None,
            train_csv: None,
            inclusive_csv: None,
            exclusive_csv: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if let Some(seeds) = &self.rep_seeds {
            if seeds.len() != self.repetitions {
                return Err(Error::Config(format!(
                    "{} repetition seeds given for {} repetitions",
                    seeds.len(),
                    self.repetitions
                )));
            }
        }
        if self.k_features == 0 {
            return Err(Error::Config("k_features must be at least 1".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("classifier list is empty".into()));
        }
        if self.sensitive_attributes.is_empty() {
            return Err(Error::Config("no sensitive attributes to attack".into()));
        }
        for (i, name) in self.sensitive_attributes.iter().enumerate() {
            if self.sensitive_attributes[..i].contains(name) {
                return Err(Error::Config(format!("duplicate sensitive attribute `{name}`")));
            }
        }
        if self.target_set_size == 0 {
            return Err(Error::Config("target_set_size must be at least 1".into()));
        }
        if self.attack_min_leaf == 0 || self.synthesis_min_leaf == 0 {
            return Err(Error::Config("min_leaf values must be at least 1".into()));
        }

        let csv_parts = [&self.schema_file, &self.train_csv, &self.inclusive_csv, &self.exclusive_csv];
        let n_csv = csv_parts.iter().filter(|p| p.is_some()).count();
        if n_csv != 0 && n_csv != csv_parts.len() {
            return Err(Error::Config(
                "CSV input needs schema_file, train_csv, inclusive_csv, and exclusive_csv together"
                    .into(),
            ));
        }
        let from_csv = n_csv == csv_parts.len();
        if from_csv && (self.generator_file.is_some() || self.drift_file.is_some()) {
            return Err(Error::Config(
                "choose either CSV inputs or a generator, not both".into(),
            ));
        }
        if !from_csv {
            if self.n_train == 0 || self.n_exclusive == 0 {
                return Err(Error::Config("generated split sizes must be at least 1".into()));
            }
            if self.target_set_size > self.n_train || self.target_set_size > self.n_exclusive {
                return Err(Error::Config(format!(
                    "target_set_size {} exceeds a split ({} train / {} exclusive)",
                    self.target_set_size, self.n_train, self.n_exclusive
                )));
            }
        }
        Ok(())
    }

    pub fn resolved_rep_seeds(&self) -> Vec<u64> {
        match &self.rep_seeds {
            Some(seeds) => seeds.clone(),
            None => (0..self.repetitions as u64)
                .map(|r| seed::derive_indexed(self.seed, "repetition", r))
                .collect(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// The post-selection datasets every experiment consumes.
pub struct StudyData {
    /// Training wave — the original data the released models are fitted on.
    pub inclusive_2013: Dataset,
    /// The same individuals after temporal drift.
    pub inclusive_2015: Dataset,
    /// Individuals the model never saw, drawn at the later wave.
    pub exclusive_2015: Dataset,
    /// Sequential-CART stand-in for the training wave.
    pub synthetic_2013: Dataset,
    /// Later-wave union used as the broad utility test set.
    pub combined_2015: Dataset,
}

impl StudyData {
    pub fn schema(&self) -> &Schema {
        self.inclusive_2013.schema()
    }
}

fn load_bundle(config: &ExperimentConfig) -> Result<SplitBundle> {
    if let (Some(schema_file), Some(train), Some(inclusive), Some(exclusive)) = (
        &config.schema_file,
        &config.train_csv,
        &config.inclusive_csv,
        &config.exclusive_csv,
    ) {
        let schema = Schema::load(Path::new(schema_file))?;
        let bundle = SplitBundle {
            inclusive_2013: Dataset::from_csv_path(Path::new(train), &schema)?,
            inclusive_2015: Dataset::from_csv_path(Path::new(inclusive), &schema)?,
            exclusive_2015: Dataset::from_csv_path(Path::new(exclusive), &schema)?,
        };
        bundle.validate()?;
        return Ok(bundle);
    }
    let generator = match &config.generator_file {
        Some(path) => GeneratorSpec::load(Path::new(path))?,
        None => default_population(),
    };
    let drift = match &config.drift_file {
        Some(path) => DriftSpec::load(Path::new(path))?,
        None => default_drift(),
    };
    drift.validate_against(generator.schema())?;
    make_study_splits(
        &generator,
        &drift,
        config.n_train,
        config.n_exclusive,
        seed::derive(config.seed, "splits"),
    )
}

/// Builds the study datasets: load or generate the three splits, keep the
/// top-k features (plus the attacked attributes and the target), and
/// synthesize the training-wave stand-in.
pub fn prepare_study_data(config: &ExperimentConfig) -> Result<StudyData> {
    config.validate()?;
    let bundle = load_bundle(config)?;
    let schema = bundle.inclusive_2013.schema();
    schema.check_experiment_ready()?;

    for name in &config.sensitive_attributes {
        let idx = schema.require(name)?;
        if schema.attribute(idx).role != Role::Sensitive {
            return Err(Error::Config(format!("attribute `{name}` is not sensitive")));
        }
    }
    if config.target_set_size > bundle.inclusive_2013.len()
        || config.target_set_size > bundle.exclusive_2015.len()
    {
        return Err(Error::Config(format!(
            "target_set_size {} exceeds a split ({} train / {} exclusive)",
            config.target_set_size,
            bundle.inclusive_2013.len(),
            bundle.exclusive_2015.len()
        )));
    }

    let target_idx = schema.target_index().expect("checked experiment-ready");
    let target = schema.attribute(target_idx).name.clone();
    let keep: Vec<&str> = config.sensitive_attributes.iter().map(|s| s.as_str()).collect();
    let selected = select_k_best(&bundle.inclusive_2013, &target, config.k_features, &keep)?;

    let inclusive_2013 = bundle.inclusive_2013.project(&selected)?;
    let inclusive_2015 = bundle.inclusive_2015.project(&selected)?;
    let exclusive_2015 = bundle.exclusive_2015.project(&selected)?;

    let mut synthesis =
        SynthesisConfig::chi2_default(&inclusive_2013, seed::derive(config.seed, "synthesis"))?;
    synthesis.min_leaf = config.synthesis_min_leaf;
    let synth_model = fit_sequential_cart(&inclusive_2013, &synthesis)?;
    let synthetic_2013 =
        synth_model.generate(inclusive_2013.len(), seed::derive(config.seed, "synthetic-rows"))?;

    let combined_2015 = inclusive_2015.concat(&exclusive_2015)?;
    Ok(StudyData { inclusive_2013, inclusive_2015, exclusive_2015, synthetic_2013, combined_2015 })
}

/// Fits every configured classifier on the original and on the synthetic
/// training wave and scores both on the later-wave test sets. Row order:
/// classifier, then training data, then test set.
pub fn run_utility_experiment(
    config: &ExperimentConfig,
    study: &StudyData,
) -> Result<Vec<UtilityRow>> {
    let target_idx = study.schema().target_index().expect("study schema has a target");

    let trainings: [(&str, &Dataset); 2] =
        [("original", &study.inclusive_2013), ("synthetic", &study.synthetic_2013)];
    let tests: [(&str, &Dataset); 2] =
        [("combined_2015", &study.combined_2015), ("exclusive_2015", &study.exclusive_2015)];

    let jobs: Vec<(Algorithm, &str, &Dataset, u64)> = config
        .classifiers
        .iter()
        .flat_map(|alg| trainings.iter().map(move |(name, data)| (*alg, *name, *data)))
        .enumerate()
        .map(|(i, (alg, name, data))| {
            (alg, name, data, seed::derive_indexed(config.seed, "utility-model", i as u64))
        })
        .collect();

    let per_job: Vec<Vec<UtilityRow>> = jobs
        .into_par_iter()
        .map(|(algorithm, training_name, training_data, model_seed)| {
            let spec = ClassifierSpec::new(algorithm, model_seed);
            let model = fit(&spec, training_data)?;
            let mut rows = Vec::with_capacity(tests.len());
            for (test_name, test_data) in tests {
                let truth = test_data.column(target_idx);
                let predictions = model.predict_dataset(test_data)?;
                let scores = model.score_dataset(test_data)?;
                rows.push(UtilityRow {
                    classifier: algorithm.name().to_string(),
                    training_data: training_name.to_string(),
                    test_set: test_name.to_string(),
                    auc: auc(&truth, &scores)?,
                    mcc: mcc(&truth, &predictions)?,
                    f1_macro: f1_macro(&truth, &predictions, 2)?,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    Ok(per_job.into_iter().flatten().collect())
}

/// The two released models with their released marginals, plus every attack
/// table. Marginals always describe the dataset the released model was
/// actually trained on; the one sanctioned exception is
/// `release_original_marginals`, which publishes the original training
/// marginals next to the synthetic-trained model.
pub struct AttackStudy {
    pub case1: Vec<Case1Row>,
    pub metrics: Vec<AttackMetricRow>,
    pub raw: Vec<RawAttackRecord>,
    pub original_model: FittedModel,
    pub synthetic_model: FittedModel,
    pub original_marginals: MarginalSet,
    pub synthetic_marginals: MarginalSet,
}

/// Canonical resource-set names, in report row order.
pub const RESOURCE_SETS: [&str; 3] = ["inclusive_2013", "inclusive_2015", "exclusive_2015"];
/// Attack names as they appear in report rows.
pub const LOMIA: &str = "lomia_marginals";
pub const MARGINALS_ONLY: &str = "marginals_only";

fn released_model(config: &ExperimentConfig, train: &Dataset, tag: &str) -> Result<FittedModel> {
    let mut spec =
        ClassifierSpec::new(config.attack_algorithm, seed::derive(config.seed, tag));
    spec.min_leaf = config.attack_min_leaf;
    fit(&spec, train)
}

struct RepOutcomes {
    outcomes: Vec<AttackOutcome>,
}

impl RepOutcomes {
    fn raw_records(
        &self,
        resource_set: &str,
        training_data: &str,
        sensitive: &str,
        attack: &str,
    ) -> Vec<RawAttackRecord> {
        self.outcomes
            .iter()
            .enumerate()
            .map(|(repetition, o)| RawAttackRecord {
                resource_set: resource_set.to_string(),
                training_data: training_data.to_string(),
                sensitive: sensitive.to_string(),
                attack: attack.to_string(),
                repetition,
                n_targets: o.n_targets,
                n_case1_predicted: o.n_case1_predicted,
                n_case1_correct: o.n_case1_correct,
                queries_issued: o.queries_issued,
                accuracy: o.metrics.accuracy,
                f1_macro: o.metrics.f1_macro,
                precision_macro: o.metrics.precision_macro,
                recall_macro: o.metrics.recall_macro,
            })
            .collect()
    }

    fn agg(&self, pick: impl Fn(&AttackOutcome) -> f64) -> (f64, f64) {
        let values: Vec<f64> = self.outcomes.iter().map(pick).collect();
        mean_std(&values)
    }

    fn case1_row(&self, resource_set: &str, training_data: &str, sensitive: &str) -> Case1Row {
        let (predicted_mean, predicted_std) = self.agg(|o| o.n_case1_predicted as f64);
        let (correct_mean, correct_std) = self.agg(|o| o.n_case1_correct as f64);
        Case1Row {
            resource_set: resource_set.to_string(),
            training_data: training_data.to_string(),
            sensitive: sensitive.to_string(),
            predicted_mean,
            predicted_std,
            correct_mean,
            correct_std,
        }
    }

    fn metric_row(
        &self,
        resource_set: &str,
        training_data: &str,
        sensitive: &str,
        attack: &str,
    ) -> AttackMetricRow {
        let (accuracy_mean, accuracy_std) = self.agg(|o| o.metrics.accuracy);
        let (f1_macro_mean, f1_macro_std) = self.agg(|o| o.metrics.f1_macro);
        let (precision_macro_mean, precision_macro_std) = self.agg(|o| o.metrics.precision_macro);
        let (recall_macro_mean, recall_macro_std) = self.agg(|o| o.metrics.recall_macro);
        AttackMetricRow {
            resource_set: resource_set.to_string(),
            training_data: training_data.to_string(),
            sensitive: sensitive.to_string(),
            attack: attack.to_string(),
            accuracy_mean,
            accuracy_std,
            f1_macro_mean,
            f1_macro_std,
            precision_macro_mean,
            precision_macro_std,
            recall_macro_mean,
            recall_macro_std,
        }
    }
}

/// Runs both attacks for every resource set × released model × sensitive
/// attribute, over the configured repetitions. Target subsets are resampled
/// per repetition unless `fix_target_sets` holds them constant; the baseline
/// attack's randomness deliberately ignores which model was released, so
/// with a shared marginals source its rows are identical across training
/// data.
pub fn run_attack_experiment(
    config: &ExperimentConfig,
    study: &StudyData,
) -> Result<AttackStudy> {
    let original_model = released_model(config, &study.inclusive_2013, "attack-model-original")?;
    let synthetic_model = released_model(config, &study.synthetic_2013, "attack-model-synthetic")?;
    let original_marginals = MarginalSet::from_dataset(&study.inclusive_2013)?;
    let synthetic_marginals = if config.release_original_marginals {
        MarginalSet::from_dataset(&study.inclusive_2013)?
    } else {
        MarginalSet::from_dataset(&study.synthetic_2013)?
    };

    let rep_seeds = config.resolved_rep_seeds();
    let resources: [(&str, &Dataset); 3] = [
        ("inclusive_2013", &study.inclusive_2013),
        ("inclusive_2015", &study.inclusive_2015),
        ("exclusive_2015", &study.exclusive_2015),
    ];

    // one target subset per resource set per repetition, shared by every
    // model × attribute × attack in that cell
    let mut subsets: Vec<Vec<TargetSet>> = Vec::with_capacity(resources.len());
    for (name, data) in resources {
        let base = seed::derive(config.seed, &format!("targets-{name}"));
        let mut per_rep = Vec::with_capacity(rep_seeds.len());
        for r in 0..rep_seeds.len() as u64 {
            let subset_seed =
                if config.fix_target_sets { base } else { seed::derive_indexed(base, "rep", r) };
            per_rep.push(TargetSet::new(data.sample_rows(config.target_set_size, subset_seed)?)?);
        }
        subsets.push(per_rep);
    }

    let models: [(&str, &FittedModel, &MarginalSet); 2] = [
        ("original", &original_model, &original_marginals),
        ("synthetic", &synthetic_model, &synthetic_marginals),
    ];

    let mut case1 = Vec::new();
    let mut metrics = Vec::new();
    let mut raw = Vec::new();

    for ((resource_set, _), per_rep) in resources.iter().zip(&subsets) {
        for (training_data, model, marginals) in models {
            for sensitive in &config.sensitive_attributes {
                let lomia = RepOutcomes {
                    outcomes: per_rep
                        .iter()
                        .zip(&rep_seeds)
                        .map(|(targets, &rep_seed)| {
                            let oracle = model.as_oracle();
                            run_lomia_with_marginals(
                                &oracle,
                                targets,
                                sensitive,
                                marginals,
                                config.fallback,
                                seed::derive(
                                    rep_seed,
                                    &format!("lomia|{resource_set}|{training_data}|{sensitive}"),
                                ),
                            )
                        })
                        .collect::<Result<_>>()?,
                };
                let baseline = RepOutcomes {
                    outcomes: per_rep
                        .iter()
                        .zip(&rep_seeds)
                        .map(|(targets, &rep_seed)| {
                            run_marginals_only(
                                targets,
                                sensitive,
                                marginals,
                                config.fallback,
                                // no training-data component: with the same
                                // marginals source the baseline is identical
                                // whichever model was released
                                seed::derive(
                                    rep_seed,
                                    &format!("baseline|{resource_set}|{sensitive}"),
                                ),
                            )
                        })
                        .collect::<Result<_>>()?,
                };

                case1.push(lomia.case1_row(resource_set, training_data, sensitive));
                metrics.push(lomia.metric_row(resource_set, training_data, sensitive, LOMIA));
                metrics.push(baseline.metric_row(
                    resource_set,
                    training_data,
                    sensitive,
                    MARGINALS_ONLY,
                ));
                raw.extend(lomia.raw_records(resource_set, training_data, sensitive, LOMIA));
                raw.extend(baseline.raw_records(
                    resource_set,
                    training_data,
                    sensitive,
                    MARGINALS_ONLY,
                ));
            }
        }
    }

    Ok(AttackStudy {
        case1,
        metrics,
        raw,
        original_model,
        synthetic_model,
        original_marginals,
        synthetic_marginals,
    })
}

/// The bundle plus the artifacts a run directory persists.
pub struct RunOutput {
    pub bundle: ReportBundle,
    pub study: StudyData,
    pub attack: AttackStudy,
}

/// The whole pipeline under one root seed: prepare data, measure utility,
/// run the attack grid, and assemble the report bundle.
pub fn run_all(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let study = prepare_study_data(config)?;
    let utility = run_utility_experiment(config, &study)?;
    let attack = run_attack_experiment(config, &study)?;

    let manifest = RunManifest {
        config_hash: sha256_hex(&config.to_toml_string()),
        root_seed: config.seed,
        repetition_seeds: config.resolved_rep_seeds(),
        schema_hash: study.schema().hash(),
        n_train: study.inclusive_2013.len(),
        n_exclusive: study.exclusive_2015.len(),
        target_set_size: config.target_set_size,
    };
    let bundle = ReportBundle {
        utility,
        case1: attack.case1.clone(),
        attack_metrics: attack.metrics.clone(),
        raw_attacks: attack.raw.clone(),
        manifest,
    };
    Ok(RunOutput { bundle, study, attack })
}
