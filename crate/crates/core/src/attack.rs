//! Label-only attribute-inference attacks against a released model.
//!
//! The attacker holds, for each target individual, every attribute except
//! one sensitive attribute, plus the individual's true outcome label, plus
//! the released marginal distributions. The main attack substitutes each
//! possible sensitive value into the record and queries the model: if the
//! model's prediction matches the true label for exactly one candidate
//! value, that value is the guess; otherwise the attacker falls back to the
//! released marginal. A baseline attack uses the marginal alone.
//!
//! Attack logic sees models exclusively through [`QueryOracle`], which
//! exposes labels and nothing else.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::QueryOracle;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::marginals::MarginalSet;
use crate::metrics;
use crate::schema::{LevelIdx, Role, Schema};
use crate::seed;

/// What the fallback does with the released marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackMode {
    /// Draw once from the marginal (default — keeps the baseline honest on
    /// balanced attributes instead of collapsing to a constant guess).
    Sample,
    /// Always the most probable level, ties to the lowest index.
    Mode,
}

impl FromStr for FallbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(FallbackMode::Sample),
            "mode" => Ok(FallbackMode::Mode),
            other => Err(Error::InvalidArgument(format!("unknown fallback mode `{other}`"))),
        }
    }
}

/// The individuals under attack: full true records over the model's schema.
/// Attack code never reads them directly — it goes through
/// [`TargetSet::attacker_view`], which hides the attacked attribute.
pub struct TargetSet {
    data: Dataset,
}

impl TargetSet {
    pub fn new(data: Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.schema().target_index().is_none() {
            return Err(Error::Schema("target set schema has no target attribute".into()));
        }
        Ok(TargetSet { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn schema(&self) -> &Schema {
        self.data.schema()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// The attacker's knowledge when going after `sensitive`: every
    /// attribute except that one, plus the true outcome label.
    pub fn attacker_view(&self, sensitive: &str) -> Result<AttackerView<'_>> {
        let hidden_col = self.data.schema().require(sensitive)?;
        if self.data.schema().attribute(hidden_col).role != Role::Sensitive {
            return Err(Error::InvalidArgument(format!(
                "attribute `{sensitive}` is not sensitive"
            )));
        }
        let target_col = self.data.schema().target_index().expect("checked in new");
        Ok(AttackerView { data: &self.data, hidden_col, target_col })
    }

    /// Ground truth for the attacked attribute — evaluation only.
    fn truth(&self, sensitive_col: usize) -> Vec<LevelIdx> {
        self.data.rows().iter().map(|r| r[sensitive_col]).collect()
    }
}

/// Per-individual attacker knowledge with the attacked attribute excised.
/// `query_row` is the only way to materialize a full-width row, and it
/// requires the caller to supply the substituted value.
pub struct AttackerView<'a> {
    data: &'a Dataset,
    hidden_col: usize,
    target_col: usize,
}

impl AttackerView<'_> {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn hidden_attribute(&self) -> &str {
        &self.data.schema().attribute(self.hidden_col).name
    }

    pub fn n_candidate_levels(&self) -> usize {
        self.data.schema().attribute(self.hidden_col).n_levels() as usize
    }

    pub fn id(&self, i: usize) -> u64 {
        self.data.ids()[i]
    }

    pub fn true_label(&self, i: usize) -> LevelIdx {
        self.data.rows()[i][self.target_col]
    }

    /// The record with `candidate` substituted for the hidden attribute.
    pub fn query_row(&self, i: usize, candidate: LevelIdx) -> Vec<LevelIdx> {
        let mut row = self.data.rows()[i].clone();
        row[self.hidden_col] = candidate;
        row
    }
}

/// Attempts the exactly-one-match inference for record `i`: substitute every
/// candidate level, query the model each time (always exactly K queries),
/// and return the candidate iff precisely one candidate made the model
/// reproduce the true label.
pub fn lomia_case1(oracle: &QueryOracle, view: &AttackerView, i: usize) -> Option<LevelIdx> {
    let y = view.true_label(i);
    let mut matched = None;
    let mut n_matches = 0;
    for v in 0..view.n_candidate_levels() as LevelIdx {
        let row = view.query_row(i, v);
        if oracle.predict_label(&row) == y {
            matched = Some(v);
            n_matches += 1;
        }
    }
    if n_matches == 1 {
        matched
    } else {
        None
    }
}

/// One guess from the released marginal.
pub fn marginal_predict(
    marginals: &MarginalSet,
    sensitive: &str,
    mode: FallbackMode,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<LevelIdx> {
    let marginal = marginals.get(sensitive)?;
    match mode {
        FallbackMode::Mode => Ok(marginal.argmax_level()),
        FallbackMode::Sample => marginal.sample_level(rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Case1,
    MarginalFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPrediction {
    pub id: u64,
    pub predicted: LevelIdx,
    pub provenance: Provenance,
    pub correct: bool,
}

/// Accuracy and macro-averaged scores of the final predictions against the
/// held-out truth, plus the same breakdown per provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackMetrics {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceSlice {
    pub n: usize,
    pub n_correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub sensitive: String,
    /// Level labels of the attacked attribute, for rendering predictions.
    pub levels: Vec<String>,
    pub predictions: Vec<TargetPrediction>,
    pub n_targets: usize,
    pub n_case1_predicted: usize,
    pub n_case1_correct: usize,
    pub queries_issued: u64,
    pub metrics: AttackMetrics,
    pub case1: ProvenanceSlice,
    pub fallback: ProvenanceSlice,
}

impl AttackOutcome {
    fn assemble(
        sensitive: &str,
        levels: Vec<String>,
        n_levels: usize,
        truth: &[LevelIdx],
        raw: Vec<(u64, LevelIdx, Provenance)>,
        queries_issued: u64,
    ) -> Result<AttackOutcome> {
        let predictions: Vec<TargetPrediction> = raw
            .iter()
            .zip(truth)
            .map(|(&(id, predicted, provenance), &t)| TargetPrediction {
                id,
                predicted,
                provenance,
                correct: predicted == t,
            })
            .collect();
        let predicted_levels: Vec<LevelIdx> = predictions.iter().map(|p| p.predicted).collect();

        let slice = |which: Provenance| {
            let of: Vec<&TargetPrediction> =
                predictions.iter().filter(|p| p.provenance == which).collect();
            let n = of.len();
            let n_correct = of.iter().filter(|p| p.correct).count();
            ProvenanceSlice {
                n,
                n_correct,
                accuracy: if n == 0 { 0.0 } else { n_correct as f64 / n as f64 },
            }
        };
        let case1 = slice(Provenance::Case1);
        let fallback = slice(Provenance::MarginalFallback);

        let (precision_macro, recall_macro) =
            metrics::precision_recall_macro(truth, &predicted_levels, n_levels)?;
        let metrics = AttackMetrics {
            accuracy: metrics::accuracy(truth, &predicted_levels, n_levels)?,
            f1_macro: metrics::f1_macro(truth, &predicted_levels, n_levels)?,
            precision_macro,
            recall_macro,
        };

        Ok(AttackOutcome {
            sensitive: sensitive.to_string(),
            levels,
            n_targets: predictions.len(),
            n_case1_predicted: case1.n,
            n_case1_correct: case1.n_correct,
            predictions,
            queries_issued,
            metrics,
            case1,
            fallback,
        })
    }

    /// Per-target predictions as CSV: id, predicted level, provenance,
    /// correctness.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,predicted,provenance,correct\n");
        for p in &self.predictions {
            let provenance = match p.provenance {
                Provenance::Case1 => "case1",
                Provenance::MarginalFallback => "marginal_fallback",
            };
            out.push_str(&format!(
                "{},{},{provenance},{}\n",
                p.id, self.levels[p.predicted as usize], p.correct as u8
            ));
        }
        out
    }
}

/// The composite attack: exactly-one-match inference per target, marginal
/// fallback for everyone else. Query count is exactly K per target. Fallback
/// draws use per-target RNG streams, so the outcome is identical however the
/// targets are scheduled across threads.
pub fn run_lomia_with_marginals(
    oracle: &QueryOracle,
    targets: &TargetSet,
    sensitive: &str,
    marginals: &MarginalSet,
    mode: FallbackMode,
    seed_value: u64,
) -> Result<AttackOutcome> {
    if oracle.schema().hash() != targets.schema().hash() {
        return Err(Error::Schema("target records do not match the model's schema".into()));
    }
    let view = targets.attacker_view(sensitive)?;
    let hidden_col = targets.schema().require(sensitive)?;
    let attr = targets.schema().attribute(hidden_col);
    marginals.get(sensitive)?;

    let raw: Vec<(u64, LevelIdx, Provenance)> = (0..view.len())
        .into_par_iter()
        .map(|i| {
            match lomia_case1(oracle, &view, i) {
                Some(v) => Ok((view.id(i), v, Provenance::Case1)),
                None => {
                    let mut rng =
                        seed::rng(seed::derive_indexed(seed_value, "attack-fallback", i as u64));
                    let v = marginal_predict(marginals, sensitive, mode, &mut rng)?;
                    Ok((view.id(i), v, Provenance::MarginalFallback))
                }
            }
        })
        .collect::<Result<_>>()?;

    AttackOutcome::assemble(
        sensitive,
        attr.levels.clone(),
        attr.n_levels() as usize,
        &targets.truth(hidden_col),
        raw,
        oracle.query_count(),
    )
}

/// The baseline: every prediction straight from the released marginal; the
/// model is never queried.
pub fn run_marginals_only(
    targets: &TargetSet,
    sensitive: &str,
    marginals: &MarginalSet,
    mode: FallbackMode,
    seed_value: u64,
) -> Result<AttackOutcome> {
    let view = targets.attacker_view(sensitive)?;
    let hidden_col = targets.schema().require(sensitive)?;
    let attr = targets.schema().attribute(hidden_col);
    marginals.get(sensitive)?;

    let raw: Vec<(u64, LevelIdx, Provenance)> = (0..view.len())
        .into_par_iter()
        .map(|i| {
            let mut rng =
                seed::rng(seed::derive_indexed(seed_value, "attack-fallback", i as u64));
            let v = marginal_predict(marginals, sensitive, mode, &mut rng)?;
            Ok((view.id(i), v, Provenance::MarginalFallback))
        })
        .collect::<Result<_>>()?;

    AttackOutcome::assemble(
        sensitive,
        attr.levels.clone(),
        attr.n_levels() as usize,
        &targets.truth(hidden_col),
        raw,
        0,
    )
}

/// Marginals released alongside a model: per-attribute frequencies of the
/// training data, and nothing else.
pub fn released_marginals(train: &Dataset) -> Result<MarginalSet> {
    MarginalSet::from_dataset(train)
}
