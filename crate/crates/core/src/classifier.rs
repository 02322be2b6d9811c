//! The classifier zoo released to the attacker, plus the label-only oracle
//! view of a fitted model.
//!
//! Six algorithms share one interface: fit on a dataset whose schema has a
//! target attribute, predict a target level for any schema-conforming row,
//! and (for utility evaluation only) score the positive class. The attack
//! side never sees scores — [`QueryOracle`] exposes nothing but labels and
//! a query counter.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::schema::{LevelIdx, Schema};
use crate::seed;
use crate::tree::{grow_tree, SplitSearch, TrainView, Tree, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Majority,
    NaiveBayes,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    Knn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Majority,
        Algorithm::NaiveBayes,
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::ExtraTrees,
        Algorithm::Knn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Majority => "majority",
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForest => "random_forest",
            Algorithm::ExtraTrees => "extra_trees",
            Algorithm::Knn => "knn",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}`")))
    }
}

/// Algorithm choice plus hyperparameters. Fields irrelevant to the chosen
/// algorithm are ignored at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub algorithm: Algorithm,
    /// Tree depth cap (trees and ensembles); `None` is unbounded.
    #[serde(default)]
    pub max_depth: Option<usize>,
    /// Minimum rows per leaf (trees and ensembles).
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    /// Ensemble size.
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    /// Features drawn per split in ensembles; `None` means ⌈√m⌉.
    #[serde(default)]
    pub features_per_split: Option<usize>,
    /// Neighborhood size for knn.
    #[serde(default = "default_k_neighbors")]
    pub k_neighbors: usize,
    /// Additive smoothing for naive Bayes class-conditional tables.
    #[serde(default = "default_laplace_alpha")]
    pub laplace_alpha: f64,
    pub seed: u64,
}

fn default_min_leaf() -> usize {
    1
}
fn default_n_trees() -> usize {
    100
}
fn default_k_neighbors() -> usize {
    5
}
fn default_laplace_alpha() -> f64 {
    1.0
}

impl ClassifierSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        ClassifierSpec {
            algorithm,
            max_depth: None,
            min_leaf: default_min_leaf(),
            n_trees: default_n_trees(),
            features_per_split: None,
            k_neighbors: default_k_neighbors(),
            laplace_alpha: default_laplace_alpha(),
            seed,
        }
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::InvalidArgument("min_leaf must be ≥ 1".into()));
        }
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be ≥ 1".into()));
        }
        if self.k_neighbors == 0 {
            return Err(Error::InvalidArgument("k_neighbors must be ≥ 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidArgument("max_depth must be ≥ 1".into()));
        }
        if !(self.laplace_alpha > 0.0) {
            return Err(Error::InvalidArgument("laplace_alpha must be > 0".into()));
        }
        if let Some(f) = self.features_per_split {
            if f == 0 || f > n_features {
                return Err(Error::InvalidArgument(format!(
                    "features_per_split = {f} outside 1..={n_features}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum ModelKind {
    Majority {
        label: LevelIdx,
        positive_rate: f64,
    },
    NaiveBayes {
        /// Unsmoothed class prior.
        prior: Vec<f64>,
        /// `cond[f][c][l]` = smoothed P(feature f = level l | class c),
        /// indexed by position in `feature_cols`.
        cond: Vec<Vec<Vec<f64>>>,
    },
    Tree {
        tree: Tree,
    },
    Forest {
        trees: Vec<Tree>,
    },
    Knn {
        rows: Vec<Vec<LevelIdx>>,
        labels: Vec<LevelIdx>,
        k: usize,
    },
}

/// An immutable fitted classifier. Rows passed to prediction use the full
/// training-schema layout; the target cell is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    spec: ClassifierSpec,
    schema: Arc<Schema>,
    target_col: usize,
    feature_cols: Vec<usize>,
    kind: ModelKind,
}

fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn fit(spec: &ClassifierSpec, train: &Dataset) -> Result<FittedModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let schema = train.schema_arc();
    let target_col = schema
        .target_index()
        .ok_or_else(|| Error::Model("training schema has no target attribute".into()))?;
    let feature_cols: Vec<usize> =
        (0..schema.attributes().len()).filter(|&i| i != target_col).collect();
    if feature_cols.is_empty() {
        return Err(Error::Model("training schema has no feature attributes".into()));
    }
    spec.validate(feature_cols.len())?;

    let n_labels = schema.attribute(target_col).n_levels() as usize;
    let labels: Vec<LevelIdx> = train.rows().iter().map(|r| r[target_col]).collect();

    let kind = match spec.algorithm {
        Algorithm::Majority => {
            let mut counts = vec![0u64; n_labels];
            for &l in &labels {
                counts[l as usize] += 1;
            }
            let label = argmax_lowest(&counts) as LevelIdx;
            let positive_rate = counts.get(1).copied().unwrap_or(0) as f64 / labels.len() as f64;
            ModelKind::Majority { label, positive_rate }
        }
        Algorithm::NaiveBayes => {
            let n = labels.len() as f64;
            let mut class_counts = vec![0u64; n_labels];
            for &l in &labels {
                class_counts[l as usize] += 1;
            }
            let prior: Vec<f64> = class_counts.iter().map(|&c| c as f64 / n).collect();
            let alpha = spec.laplace_alpha;
            let cond: Vec<Vec<Vec<f64>>> = feature_cols
                .iter()
                .map(|&f| {
                    let n_levels = schema.attribute(f).n_levels() as usize;
                    let mut counts = vec![vec![0u64; n_levels]; n_labels];
                    for row in train.rows() {
                        counts[row[target_col] as usize][row[f] as usize] += 1;
                    }
                    (0..n_labels)
                        .map(|c| {
                            let denom = class_counts[c] as f64 + alpha * n_levels as f64;
                            counts[c].iter().map(|&k| (k as f64 + alpha) / denom).collect()
                        })
                        .collect()
                })
                .collect();
            ModelKind::NaiveBayes { prior, cond }
        }
        Algorithm::DecisionTree => {
            let all: Vec<u32> = (0..train.len() as u32).collect();
            let view = TrainView {
                data: train,
                feature_cols: &feature_cols,
                label_col: target_col,
                row_indices: &all,
            };
            let params = TreeParams { min_leaf: spec.min_leaf, max_depth: spec.max_depth };
            let mut rng = seed::rng(seed::derive(spec.seed, "decision-tree"));
            ModelKind::Tree { tree: grow_tree(&view, &params, SplitSearch::Exhaustive, &mut rng) }
        }
        Algorithm::RandomForest | Algorithm::ExtraTrees => {
            let mtry = spec
                .features_per_split
                .unwrap_or_else(|| (feature_cols.len() as f64).sqrt().ceil() as usize)
                .max(1);
            let params = TreeParams { min_leaf: spec.min_leaf, max_depth: spec.max_depth };
            let bootstrap = spec.algorithm == Algorithm::RandomForest;
            let search = if bootstrap {
                SplitSearch::RandomSubset { features_per_split: mtry }
            } else {
                SplitSearch::RandomLevel { features_per_split: mtry }
            };
            let n = train.len();
            let trees: Vec<Tree> = (0..spec.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng =
                        seed::rng(seed::derive_indexed(spec.seed, "ensemble-tree", t as u64));
                    let rows: Vec<u32> = if bootstrap {
                        (0..n).map(|_| rng.gen_range(0..n) as u32).collect()
                    } else {
                        (0..n as u32).collect()
                    };
                    let view = TrainView {
                        data: train,
                        feature_cols: &feature_cols,
                        label_col: target_col,
                        row_indices: &rows,
                    };
                    grow_tree(&view, &params, search, &mut rng)
                })
                .collect();
            ModelKind::Forest { trees }
        }
        Algorithm::Knn => ModelKind::Knn {
            rows: train.rows().to_vec(),
            labels,
            k: spec.k_neighbors,
        },
    };

    Ok(FittedModel {
        spec: spec.clone(),
        schema,
        target_col,
        feature_cols,
        kind,
    })
}

impl FittedModel {
    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm
    }

    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    fn n_labels(&self) -> usize {
        self.schema.attribute(self.target_col).n_levels() as usize
    }

    /// The k nearest stored rows by Hamming distance over feature columns;
    /// distance ties break toward earlier training rows.
    fn knn_neighbor_labels(
        &self,
        rows: &[Vec<LevelIdx>],
        labels: &[LevelIdx],
        k: usize,
        row: &[LevelIdx],
    ) -> Vec<LevelIdx> {
        let mut scored: Vec<(u32, usize)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d = self
                    .feature_cols
                    .iter()
                    .filter(|&&f| r[f] != row[f])
                    .count() as u32;
                (d, i)
            })
            .collect();
        let k = k.min(scored.len());
        scored.select_nth_unstable(k - 1);
        scored.truncate(k);
        scored.sort_unstable();
        scored.into_iter().map(|(_, i)| labels[i]).collect()
    }

    /// Predicted target level for one row in the training-schema layout
    /// (the target cell is ignored). Total over all schema-conforming rows.
    pub fn predict(&self, row: &[LevelIdx]) -> LevelIdx {
        assert_eq!(
            row.len(),
            self.schema.attributes().len(),
            "row width does not match the training schema"
        );
        match &self.kind {
            ModelKind::Majority { label, .. } => *label,
            ModelKind::NaiveBayes { prior, cond } => {
                let scores = self.nb_log_posterior(prior, cond, row);
                argmax_lowest(&scores) as LevelIdx
            }
            ModelKind::Tree { tree } => tree.predict(row),
            ModelKind::Forest { trees } => {
                let mut votes = vec![0u32; self.n_labels()];
                for tree in trees {
                    votes[tree.predict(row) as usize] += 1;
                }
                argmax_lowest(&votes) as LevelIdx
            }
            ModelKind::Knn { rows, labels, k } => {
                let neighbors = self.knn_neighbor_labels(rows, labels, *k, row);
                let mut votes = vec![0u32; self.n_labels()];
                for l in neighbors {
                    votes[l as usize] += 1;
                }
                argmax_lowest(&votes) as LevelIdx
            }
        }
    }

    fn nb_log_posterior(&self, prior: &[f64], cond: &[Vec<Vec<f64>>], row: &[LevelIdx]) -> Vec<f64> {
        (0..prior.len())
            .map(|c| {
                if prior[c] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut s = prior[c].ln();
                for (fi, &f) in self.feature_cols.iter().enumerate() {
                    s += cond[fi][c][row[f] as usize].ln();
                }
                s
            })
            .collect()
    }

    /// Probability-like score for the positive class (target level 1),
    /// used only for utility evaluation. Always in [0, 1].
    pub fn predict_score(&self, row: &[LevelIdx]) -> f64 {
        assert_eq!(
            row.len(),
            self.schema.attributes().len(),
            "row width does not match the training schema"
        );
        match &self.kind {
            ModelKind::Majority { positive_rate, .. } => *positive_rate,
            ModelKind::NaiveBayes { prior, cond } => {
                let log_post = self.nb_log_posterior(prior, cond, row);
                let m = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if m == f64::NEG_INFINITY {
                    return 0.0;
                }
                let exp: Vec<f64> = log_post.iter().map(|&s| (s - m).exp()).collect();
                let total: f64 = exp.iter().sum();
                exp.get(1).copied().unwrap_or(0.0) / total
            }
            ModelKind::Tree { tree } => tree.positive_fraction(row),
            ModelKind::Forest { trees } => {
                trees.iter().map(|t| t.positive_fraction(row)).sum::<f64>() / trees.len() as f64
            }
            ModelKind::Knn { rows, labels, k } => {
                let neighbors = self.knn_neighbor_labels(rows, labels, *k, row);
                let pos = neighbors.iter().filter(|&&l| l == 1).count();
                pos as f64 / neighbors.len() as f64
            }
        }
    }

    fn check_schema(&self, data: &Dataset) -> Result<()> {
        if data.schema().hash() != self.schema.hash() {
            return Err(Error::Schema(
                "dataset schema does not match the model's training schema".into(),
            ));
        }
        Ok(())
    }

    /// Batch prediction over a dataset carrying the training schema.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<LevelIdx>> {
        self.check_schema(data)?;
        Ok(data.rows().par_iter().map(|r| self.predict(r)).collect())
    }

    /// Batch positive-class scores over a dataset carrying the training schema.
    pub fn score_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_schema(data)?;
        Ok(data.rows().par_iter().map(|r| self.predict_score(r)).collect())
    }

    /// The label-only view handed to the attack.
    pub fn as_oracle(&self) -> QueryOracle<'_> {
        QueryOracle { model: self, queries: AtomicU64::new(0) }
    }

    #[cfg(test)]
    pub(crate) fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            schema_hash: self.schema.hash(),
            schema: (*self.schema).clone(),
            spec: self.spec.clone(),
            target_col: self.target_col,
            feature_cols: self.feature_cols.clone(),
            kind: self.kind.clone(),
        };
        let json = serde_json::to_string(&file)
            .map_err(|e| Error::Model(format!("model serialization failed: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FittedModel> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("model file parse failed: {e}")))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        if file.schema.hash() != file.schema_hash {
            return Err(Error::Model(
                "schema hash mismatch: model file is corrupt or was edited".into(),
            ));
        }
        Ok(FittedModel {
            spec: file.spec,
            schema: Arc::new(file.schema),
            target_col: file.target_col,
            feature_cols: file.feature_cols,
            kind: file.kind,
        })
    }
}

/// Versioned on-disk model representation (JSON).
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    schema_hash: String,
    schema: Schema,
    spec: ClassifierSpec,
    target_col: usize,
    feature_cols: Vec<usize>,
    kind: ModelKind,
}

/// Label-only access to a fitted model: the attacker's entire interface.
/// There is deliberately no way to reach scores through this type. The
/// counter is atomic, so concurrent attack workers may share one oracle.
pub struct QueryOracle<'m> {
    model: &'m FittedModel,
    queries: AtomicU64,
}

impl QueryOracle<'_> {
    pub fn predict_label(&self, row: &[LevelIdx]) -> LevelIdx {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.model.predict(row)
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn schema(&self) -> &Schema {
        self.model.schema()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{AttributeSpec, Role};
    use crate::tree::Node;
    use std::collections::HashSet;

    fn toy_schema(n_features: usize, levels: usize) -> Arc<Schema> {
        let mut attrs: Vec<AttributeSpec> = (0..n_features)
            .map(|i| {
                let names: Vec<String> = (0..levels).map(|l| format!("v{l}")).collect();
                let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                AttributeSpec::new(&format!("f{i}"), &refs, Role::NonSensitive)
            })
            .collect();
        attrs.push(AttributeSpec::new("y", &["0", "1"], Role::Target));
        Arc::new(Schema::new(attrs).unwrap())
    }

    fn toy_data(n_features: usize, levels: usize, rows: Vec<Vec<LevelIdx>>) -> Dataset {
        let n = rows.len();
        Dataset::new(toy_schema(n_features, levels), (0..n as u64).collect(), rows).unwrap()
    }

    #[test]
    fn majority_is_constant_mode_predictor() {
        let data = toy_data(1, 2, vec![vec![0, 0], vec![1, 0], vec![0, 0], vec![1, 1]]);
        let model = fit(&ClassifierSpec::new(Algorithm::Majority, 0), &data).unwrap();
        for row in data.rows() {
            assert_eq!(model.predict(row), 0);
            assert!((model.predict_score(row) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_tie_goes_to_lowest_label() {
        let data = toy_data(1, 2, vec![vec![0, 1], vec![1, 0]]);
        let model = fit(&ClassifierSpec::new(Algorithm::Majority, 0), &data).unwrap();
        assert_eq!(model.predict(&[0, 0]), 0);
    }

    #[test]
    fn single_class_training_predicts_that_class() {
        let data = toy_data(1, 2, vec![vec![0, 1], vec![1, 1], vec![0, 1]]);
        for alg in Algorithm::ALL {
            let model = fit(&ClassifierSpec::new(alg, 3), &data).unwrap();
            assert_eq!(model.predict(&[0, 0]), 1, "{alg}");
            assert_eq!(model.predict(&[1, 0]), 1, "{alg}");
        }
    }

    #[test]
    fn naive_bayes_matches_enumeration_oracle() {
        // joint counts over (f0, f1, y), 2 levels each
        let rows = vec![
            vec![0, 0, 0],
            vec![0, 0, 0],
            vec![0, 1, 0],
            vec![1, 1, 0],
            vec![1, 0, 1],
            vec![1, 1, 1],
            vec![1, 1, 1],
            vec![0, 1, 1],
            vec![1, 1, 1],
            vec![0, 0, 0],
        ];
        let data = toy_data(2, 2, rows.clone());
        let alpha = 1.0;
        let model = fit(&ClassifierSpec::new(Algorithm::NaiveBayes, 0), &data).unwrap();

        // independent oracle: recount and apply Bayes with the same smoothing
        let n = rows.len() as f64;
        for probe in [[0u16, 0], [0, 1], [1, 0], [1, 1]] {
            let mut post = [0.0f64; 2];
            for c in 0..2u16 {
                let nc = rows.iter().filter(|r| r[2] == c).count() as f64;
                let mut p = nc / n;
                for f in 0..2usize {
                    let nfc = rows.iter().filter(|r| r[2] == c && r[f] == probe[f]).count() as f64;
                    p *= (nfc + alpha) / (nc + alpha * 2.0);
                }
                post[c as usize] = p;
            }
            let expected_label = if post[1] > post[0] { 1 } else { 0 };
            let expected_score = post[1] / (post[0] + post[1]);
            let row = [probe[0], probe[1], 0];
            assert_eq!(model.predict(&row), expected_label, "probe {probe:?}");
            assert!(
                (model.predict_score(&row) - expected_score).abs() < 1e-9,
                "probe {probe:?}"
            );
        }
    }

    #[test]
    fn decision_tree_memorizes_unique_rows() {
        let mut rng = seed::rng(12);
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        while rows.len() < 20 {
            let r: Vec<LevelIdx> = (0..3).map(|_| rng.gen_range(0..3u16)).collect();
            if seen.insert(r.clone()) {
                let mut full = r;
                full.push(rng.gen_range(0..2u16));
                rows.push(full);
            }
        }
        let data = toy_data(3, 3, rows.clone());
        let model = fit(&ClassifierSpec::new(Algorithm::DecisionTree, 0), &data).unwrap();
        let predictions = model.predict_dataset(&data).unwrap();
        for (row, p) in rows.iter().zip(predictions) {
            assert_eq!(p, row[3]);
        }
    }

    #[test]
    fn forest_prediction_equals_recomputed_tree_vote() {
        let mut rng = seed::rng(13);
        let rows: Vec<Vec<LevelIdx>> = (0..150)
            .map(|_| {
                let mut r: Vec<LevelIdx> = (0..4).map(|_| rng.gen_range(0..3u16)).collect();
                let y = ((r[0] == r[1]) as u16 + rng.gen_range(0..2u16)).min(1);
                r.push(y);
                r
            })
            .collect();
        let data = toy_data(4, 3, rows);
        let mut spec = ClassifierSpec::new(Algorithm::RandomForest, 7);
        spec.n_trees = 15;
        let model = fit(&spec, &data).unwrap();
        let ModelKind::Forest { trees } = model.kind() else { panic!("expected forest") };

        let mut rng = seed::rng(14);
        for _ in 0..200 {
            let mut row: Vec<LevelIdx> = (0..4).map(|_| rng.gen_range(0..3u16)).collect();
            row.push(0);
            let mut votes = [0u32; 2];
            for t in trees {
                votes[t.predict(&row) as usize] += 1;
            }
            let expected = if votes[1] > votes[0] { 1 } else { 0 };
            assert_eq!(model.predict(&row), expected);
        }
    }

    #[test]
    fn forest_score_three_to_one_vote_is_075() {
        // hand-built forest of four single-leaf (pure) trees
        let data = toy_data(1, 2, vec![vec![0, 0], vec![0, 1]]);
        let mut spec = ClassifierSpec::new(Algorithm::RandomForest, 0);
        spec.n_trees = 4;
        let mut model = fit(&spec, &data).unwrap();
        model.kind = ModelKind::Forest {
            trees: vec![
                Tree { root: Node::Leaf { counts: vec![0, 5] }, n_labels: 2 },
                Tree { root: Node::Leaf { counts: vec![0, 2] }, n_labels: 2 },
                Tree { root: Node::Leaf { counts: vec![0, 9] }, n_labels: 2 },
                Tree { root: Node::Leaf { counts: vec![3, 0] }, n_labels: 2 },
            ],
        };
        assert!((model.predict_score(&[0, 0]) - 0.75).abs() < 1e-12);
        assert_eq!(model.predict(&[0, 0]), 1);
    }

    #[test]
    fn knn_k1_returns_stored_label() {
        let rows = vec![vec![0, 0, 0], vec![1, 1, 1], vec![2, 2, 0], vec![0, 2, 1]];
        let data = toy_data(2, 3, rows.clone());
        let mut spec = ClassifierSpec::new(Algorithm::Knn, 0);
        spec.k_neighbors = 1;
        let model = fit(&spec, &data).unwrap();
        for row in &rows {
            assert_eq!(model.predict(row), row[2]);
        }
    }

    #[test]
    fn knn_distance_ties_break_by_training_order() {
        // probe equidistant (d=1) from rows 0 (label 0) and 1 (label 1):
        // with k=1 the earlier row wins
        let rows = vec![vec![0, 0, 0], vec![1, 1, 1]];
        let data = toy_data(2, 3, rows);
        let mut spec = ClassifierSpec::new(Algorithm::Knn, 0);
        spec.k_neighbors = 1;
        let model = fit(&spec, &data).unwrap();
        assert_eq!(model.predict(&[0, 1, 0]), 0);
    }

    #[test]
    fn knn_score_is_neighbor_fraction() {
        let rows = vec![
            vec![0, 0, 1],
            vec![0, 1, 1],
            vec![1, 0, 1],
            vec![1, 1, 0],
            vec![2, 2, 0],
        ];
        let data = toy_data(2, 3, rows);
        let mut spec = ClassifierSpec::new(Algorithm::Knn, 0);
        spec.k_neighbors = 5;
        let model = fit(&spec, &data).unwrap();
        assert!((model.predict_score(&[0, 0, 0]) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn ensembles_are_deterministic_under_seed() {
        let mut rng = seed::rng(21);
        let rows: Vec<Vec<LevelIdx>> = (0..300)
            .map(|_| {
                let mut r: Vec<LevelIdx> = (0..5).map(|_| rng.gen_range(0..3u16)).collect();
                let y = (r[0] == 0 || r[2] == 1) as u16;
                r.push(y);
                r
            })
            .collect();
        let data = toy_data(5, 3, rows);
        let probes: Vec<Vec<LevelIdx>> = (0..100)
            .map(|_| {
                let mut r: Vec<LevelIdx> = (0..5).map(|_| rng.gen_range(0..3u16)).collect();
                r.push(0);
                r
            })
            .collect();

        for alg in [Algorithm::RandomForest, Algorithm::ExtraTrees] {
            let mut spec = ClassifierSpec::new(alg, 99);
            spec.n_trees = 20;
            let a = fit(&spec, &data).unwrap();
            let b = fit(&spec, &data).unwrap();
            let pa: Vec<_> = probes.iter().map(|r| a.predict(r)).collect();
            let pb: Vec<_> = probes.iter().map(|r| b.predict(r)).collect();
            assert_eq!(pa, pb, "{alg}");

            let mut spec2 = spec.clone();
            spec2.seed = 100;
            let c = fit(&spec2, &data).unwrap();
            let pc: Vec<_> = probes.iter().map(|r| c.predict(r)).collect();
            // scores should differ somewhere under a different seed
            let sa: Vec<f64> = probes.iter().map(|r| a.predict_score(r)).collect();
            let sc: Vec<f64> = probes.iter().map(|r| c.predict_score(r)).collect();
            assert!(sa != sc || pa != pc, "{alg}: seed change had no effect");
        }
    }

    #[test]
    fn predictions_are_total_and_valid() {
        let mut rng = seed::rng(31);
        let rows: Vec<Vec<LevelIdx>> = (0..100)
            .map(|_| {
                let mut r: Vec<LevelIdx> = (0..3).map(|_| rng.gen_range(0..4u16)).collect();
                r.push(rng.gen_range(0..2u16));
                r
            })
            .collect();
        let data = toy_data(3, 4, rows);
        for alg in Algorithm::ALL {
            let mut spec = ClassifierSpec::new(alg, 1);
            spec.n_trees = 10;
            let model = fit(&spec, &data).unwrap();
            // exhaustive probe space, including combinations never trained on
            for a in 0..4u16 {
                for b in 0..4u16 {
                    for c in 0..4u16 {
                        let row = [a, b, c, 0];
                        assert!(model.predict(&row) < 2, "{alg}");
                        let s = model.predict_score(&row);
                        assert!((0.0..=1.0).contains(&s), "{alg}: score {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_counts_queries_and_matches_predict() {
        let mut rng = seed::rng(41);
        let rows: Vec<Vec<LevelIdx>> = (0..200)
            .map(|_| {
                let mut r: Vec<LevelIdx> = (0..3).map(|_| rng.gen_range(0..3u16)).collect();
                r.push((r[0] == r[1]) as u16);
                r
            })
            .collect();
        let data = toy_data(3, 3, rows);
        let model = fit(&ClassifierSpec::new(Algorithm::DecisionTree, 0), &data).unwrap();
        let oracle = model.as_oracle();

        let probes: Vec<Vec<LevelIdx>> = (0..1000)
            .map(|_| {
                let mut r: Vec<LevelIdx> = (0..3).map(|_| rng.gen_range(0..3u16)).collect();
                r.push(0);
                r
            })
            .collect();
        for p in &probes {
            assert_eq!(oracle.predict_label(p), model.predict(p));
        }
        assert_eq!(oracle.query_count(), 1000);
    }

    #[test]
    fn oracle_counter_is_safe_under_concurrency() {
        let data = toy_data(1, 2, vec![vec![0, 0], vec![1, 1]]);
        let model = fit(&ClassifierSpec::new(Algorithm::Majority, 0), &data).unwrap();
        let oracle = model.as_oracle();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for _ in 0..500 {
                        oracle.predict_label(&[0, 0]);
                    }
                });
            }
        });
        assert_eq!(oracle.query_count(), 4000);
    }

    #[test]
    fn model_file_round_trips_and_detects_tampering() {
        let mut rng = seed::rng(51);
        let rows: Vec<Vec<LevelIdx>> = (0..120)
            .map(|_| {
                let mut r: Vec<LevelIdx> = (0..3).map(|_| rng.gen_range(0..3u16)).collect();
                r.push(((r[0] + r[1]) % 2 == 0) as u16);
                r
            })
            .collect();
        let data = toy_data(3, 3, rows);
        let dir = tempfile::tempdir().unwrap();

        for alg in Algorithm::ALL {
            let mut spec = ClassifierSpec::new(alg, 5);
            spec.n_trees = 8;
            let model = fit(&spec, &data).unwrap();
            let path = dir.path().join(format!("{alg}.model.json"));
            model.save(&path).unwrap();
            let loaded = FittedModel::load(&path).unwrap();
            let probes = data.rows();
            for p in probes {
                assert_eq!(model.predict(p), loaded.predict(p), "{alg}");
                assert!((model.predict_score(p) - loaded.predict_score(p)).abs() < 1e-15);
            }
        }

        // corrupt the embedded schema: hash check must fail
        let path = dir.path().join("majority.model.json");
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replace("\"f0\"", "\"fX\"");
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        let err = FittedModel::load(&path).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn hyperparameter_validation() {
        let data = toy_data(1, 2, vec![vec![0, 0], vec![1, 1]]);
        let mut spec = ClassifierSpec::new(Algorithm::RandomForest, 0);
        spec.n_trees = 0;
        assert!(fit(&spec, &data).is_err());
        let mut spec = ClassifierSpec::new(Algorithm::Knn, 0);
        spec.k_neighbors = 0;
        assert!(fit(&spec, &data).is_err());
        let mut spec = ClassifierSpec::new(Algorithm::RandomForest, 0);
        spec.features_per_split = Some(5);
        assert!(fit(&spec, &data).is_err());
        let mut spec = ClassifierSpec::new(Algorithm::NaiveBayes, 0);
        spec.laplace_alpha = 0.0;
        assert!(fit(&spec, &data).is_err());
    }
}
