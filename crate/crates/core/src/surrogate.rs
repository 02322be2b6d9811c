//! Surrogate population generator: a stand-in for confidential survey data
//! with known, configurable structure.
//!
//! A [`GeneratorSpec`] declares attributes in dependency order; each is
//! either independent, driven by a conditional table over at most two
//! earlier attributes, or — for the binary target — a logistic combination
//! of several earlier attributes. Rows are sampled ancestrally. A
//! [`DriftSpec`] re-draws each attribute with some probability to model a
//! second survey wave two years later, and [`make_study_splits`] packages
//! the train/test structure the experiments need: the training wave, the
//! same people two years on, and a fresh sample of unseen people.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::schema::{AttributeSpec, LevelIdx, Role, Schema};
use crate::seed;

/// How one attribute is sampled given the attributes before it.
#[derive(Debug, Clone, PartialEq)]
enum CondKind {
    Independent {
        dist: Vec<f64>,
    },
    /// `rows` is indexed by the parent level combination:
    /// one parent → its level; two parents → `l1 * levels2 + l2`.
    Table {
        parents: Vec<usize>,
        rows: Vec<Vec<f64>>,
    },
    /// P(level 1) = sigmoid(bias + Σ weights[parent][level]); binary only.
    Logistic {
        parents: Vec<usize>,
        weights: Vec<Vec<f64>>,
        bias: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct GenNode {
    col: usize,
    kind: CondKind,
}

/// A complete sampling recipe for a population. Attribute declaration order
/// is the dependency order: parents must be declared first.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    schema: Arc<Schema>,
    nodes: Vec<GenNode>,
}

fn check_dist(name: &str, dist: &[f64], n_levels: usize) -> Result<()> {
    if dist.len() != n_levels {
        return Err(Error::Generator(format!(
            "`{name}`: distribution has {} entries for {n_levels} levels",
            dist.len()
        )));
    }
    if dist.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Generator(format!("`{name}`: probabilities outside [0, 1]")));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Generator(format!("`{name}`: distribution sums to {total}")));
    }
    Ok(())
}

fn sample_dist(dist: &[f64], rng: &mut ChaCha8Rng) -> LevelIdx {
    let mut u = rng.gen::<f64>();
    for (i, &p) in dist.iter().enumerate() {
        if u < p {
            return i as LevelIdx;
        }
        u -= p;
    }
    (dist.len() - 1) as LevelIdx
}

impl CondKind {
    fn combo_index(parents: &[usize], schema: &Schema, row: &[LevelIdx]) -> usize {
        match parents {
            [p] => row[*p] as usize,
            [p1, p2] => {
                let l2 = schema.attribute(*p2).n_levels() as usize;
                row[*p1] as usize * l2 + row[*p2] as usize
            }
            _ => unreachable!("tables have one or two parents"),
        }
    }

    fn sample(&self, schema: &Schema, row: &[LevelIdx], rng: &mut ChaCha8Rng) -> LevelIdx {
        match self {
            CondKind::Independent { dist } => sample_dist(dist, rng),
            CondKind::Table { parents, rows } => {
                sample_dist(&rows[Self::combo_index(parents, schema, row)], rng)
            }
            CondKind::Logistic { parents, weights, bias } => {
                let logit: f64 = bias
                    + parents
                        .iter()
                        .zip(weights)
                        .map(|(&p, w)| w[row[p] as usize])
                        .sum::<f64>();
                let p1 = 1.0 / (1.0 + (-logit).exp());
                (rng.gen::<f64>() < p1) as LevelIdx
            }
        }
    }
}

/// Declarative builder consumed by [`GeneratorSpec::new`]; this is also the
/// shape of the TOML config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeGen {
    pub name: String,
    pub levels: Vec<String>,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parents: Vec<String>,
    /// Level distribution for parent-free attributes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<f64>>,
    /// Conditional table keyed by parent levels (two parents join with ","),
    /// e.g. `"city"` or `"own,q3"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<BTreeMap<String, Vec<f64>>>,
    /// Logistic conditional for the binary target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logistic: Option<LogisticGen>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticGen {
    pub bias: f64,
    /// Per-parent weight vectors, one weight per parent level.
    pub weights: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeneratorFile {
    attribute: Vec<AttributeGen>,
}

impl GeneratorSpec {
    pub fn new(attributes: Vec<AttributeGen>) -> Result<Self> {
        let specs: Vec<AttributeSpec> = attributes
            .iter()
            .map(|a| {
                let refs: Vec<&str> = a.levels.iter().map(|s| s.as_str()).collect();
                AttributeSpec::new(&a.name, &refs, a.role)
            })
            .collect();
        let schema = Arc::new(Schema::new(specs)?);
        schema.check_experiment_ready()?;

        let mut nodes = Vec::with_capacity(attributes.len());
        for (col, attr) in attributes.iter().enumerate() {
            let n_levels = schema.attribute(col).n_levels() as usize;
            let mut parent_cols = Vec::with_capacity(attr.parents.len());
            for p in &attr.parents {
                let idx = schema.require(p)?;
                if idx >= col {
                    return Err(Error::Generator(format!(
                        "`{}`: parent `{p}` must be declared earlier",
                        attr.name
                    )));
                }
                if parent_cols.contains(&idx) {
                    return Err(Error::Generator(format!(
                        "`{}`: duplicate parent `{p}`",
                        attr.name
                    )));
                }
                parent_cols.push(idx);
            }

            let kind = match (&attr.dist, &attr.table, &attr.logistic) {
                (Some(dist), None, None) => {
                    if !parent_cols.is_empty() {
                        return Err(Error::Generator(format!(
                            "`{}`: plain distribution cannot have parents",
                            attr.name
                        )));
                    }
                    check_dist(&attr.name, dist, n_levels)?;
                    CondKind::Independent { dist: dist.clone() }
                }
                (None, Some(table), None) => {
                    if parent_cols.is_empty() || parent_cols.len() > 2 {
                        return Err(Error::Generator(format!(
                            "`{}`: conditional tables take one or two parents",
                            attr.name
                        )));
                    }
                    let combos: Vec<String> = match parent_cols.as_slice() {
                        [p] => schema.attribute(*p).levels.clone(),
                        [p1, p2] => {
                            let a = &schema.attribute(*p1).levels;
                            let b = &schema.attribute(*p2).levels;
                            a.iter()
                                .flat_map(|x| b.iter().map(move |y| format!("{x},{y}")))
                                .collect()
                        }
                        _ => unreachable!(),
                    };
                    let mut rows = Vec::with_capacity(combos.len());
                    for combo in &combos {
                        let dist = table.get(combo).ok_or_else(|| {
                            Error::Generator(format!(
                                "`{}`: missing parent combination `{combo}`",
                                attr.name
                            ))
                        })?;
                        check_dist(&format!("{} | {combo}", attr.name), dist, n_levels)?;
                        rows.push(dist.clone());
                    }
                    for key in table.keys() {
                        if !combos.contains(key) {
                            return Err(Error::Generator(format!(
                                "`{}`: unknown parent combination `{key}`",
                                attr.name
                            )));
                        }
                    }
                    CondKind::Table { parents: parent_cols, rows }
                }
                (None, None, Some(logistic)) => {
                    if attr.role != Role::Target {
                        return Err(Error::Generator(format!(
                            "`{}`: logistic conditionals are reserved for the target",
                            attr.name
                        )));
                    }
                    if parent_cols.is_empty() {
                        return Err(Error::Generator(format!(
                            "`{}`: logistic conditional needs parents",
                            attr.name
                        )));
                    }
                    if logistic.weights.len() != parent_cols.len()
                        || attr.parents.iter().any(|p| !logistic.weights.contains_key(p))
                    {
                        return Err(Error::Generator(format!(
                            "`{}`: logistic weights must cover exactly the parents",
                            attr.name
                        )));
                    }
                    let mut weights = Vec::with_capacity(parent_cols.len());
                    for (p, &pc) in attr.parents.iter().zip(&parent_cols) {
                        let w = &logistic.weights[p];
                        let expect = schema.attribute(pc).n_levels() as usize;
                        if w.len() != expect {
                            return Err(Error::Generator(format!(
                                "`{}`: weight vector for `{p}` has {} entries for {expect} levels",
                                attr.name,
                                w.len()
                            )));
                        }
                        if w.iter().any(|x| !x.is_finite()) {
                            return Err(Error::Generator(format!(
                                "`{}`: non-finite weight for `{p}`",
                                attr.name
                            )));
                        }
                        weights.push(w.clone());
                    }
                    if !logistic.bias.is_finite() {
                        return Err(Error::Generator(format!("`{}`: non-finite bias", attr.name)));
                    }
                    CondKind::Logistic { parents: parent_cols, weights, bias: logistic.bias }
                }
                _ => {
                    return Err(Error::Generator(format!(
                        "`{}`: declare exactly one of dist, table, or logistic",
                        attr.name
                    )));
                }
            };
            nodes.push(GenNode { col, kind });
        }

        let spec = GeneratorSpec { schema, nodes };
        spec.check_target_dependencies(&attributes)?;
        Ok(spec)
    }

    /// The target must depend on at least two non-sensitive and one
    /// sensitive attribute, otherwise the leakage experiments are vacuous.
    fn check_target_dependencies(&self, attributes: &[AttributeGen]) -> Result<()> {
        let target_col = self.schema.target_index().expect("experiment-ready schema");
        let target = &attributes[target_col];
        let mut n_sensitive = 0;
        let mut n_plain = 0;
        for p in &target.parents {
            match self.schema.attribute(self.schema.require(p)?).role {
                Role::Sensitive => n_sensitive += 1,
                Role::NonSensitive => n_plain += 1,
                Role::Target => {}
            }
        }
        if n_plain < 2 || n_sensitive < 1 {
            return Err(Error::Generator(format!(
                "target `{}` needs ≥2 non-sensitive and ≥1 sensitive parents (has {n_plain}/{n_sensitive})",
                target.name
            )));
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        self.schema.clone()
    }

    fn sample_row(&self, rng: &mut ChaCha8Rng) -> Vec<LevelIdx> {
        let mut row = vec![0 as LevelIdx; self.nodes.len()];
        for node in &self.nodes {
            row[node.col] = node.kind.sample(&self.schema, &row, rng);
        }
        row
    }

    /// Samples one row per id, each from its own RNG stream derived from
    /// the id, so any subset of ids yields the same rows in any order.
    pub fn generate_with_ids(&self, ids: &[u64], seed_value: u64) -> Result<Dataset> {
        if ids.is_empty() {
            return Err(Error::InvalidArgument("cannot generate 0 rows".into()));
        }
        let rows: Vec<Vec<LevelIdx>> = ids
            .par_iter()
            .map(|&id| {
                let mut rng = seed::rng(seed::derive_indexed(seed_value, "population-row", id));
                self.sample_row(&mut rng)
            })
            .collect();
        Dataset::new(self.schema.clone(), ids.to_vec(), rows)
    }

    pub fn generate_population(&self, n: usize, seed_value: u64) -> Result<Dataset> {
        let ids: Vec<u64> = (0..n as u64).collect();
        self.generate_with_ids(&ids, seed_value)
    }

    pub fn to_toml_string(&self) -> String {
        let file = GeneratorFile { attribute: self.to_attribute_gens() };
        toml::to_string(&file).expect("generator spec serializes")
    }

    fn to_attribute_gens(&self) -> Vec<AttributeGen> {
        self.nodes
            .iter()
            .map(|node| {
                let attr = self.schema.attribute(node.col);
                let parent_names = |parents: &[usize]| {
                    parents
                        .iter()
                        .map(|&p| self.schema.attribute(p).name.clone())
                        .collect::<Vec<_>>()
                };
                let (parents, dist, table, logistic) = match &node.kind {
                    CondKind::Independent { dist } => (Vec::new(), Some(dist.clone()), None, None),
                    CondKind::Table { parents, rows } => {
                        let combos: Vec<String> = match parents.as_slice() {
                            [p] => self.schema.attribute(*p).levels.clone(),
                            [p1, p2] => {
                                let a = &self.schema.attribute(*p1).levels;
                                let b = &self.schema.attribute(*p2).levels;
                                a.iter()
                                    .flat_map(|x| b.iter().map(move |y| format!("{x},{y}")))
                                    .collect()
                            }
                            _ => unreachable!(),
                        };
                        let map: BTreeMap<String, Vec<f64>> =
                            combos.into_iter().zip(rows.iter().cloned()).collect();
                        (parent_names(parents), None, Some(map), None)
                    }
                    CondKind::Logistic { parents, weights, bias } => {
                        let names = parent_names(parents);
                        let map: BTreeMap<String, Vec<f64>> =
                            names.iter().cloned().zip(weights.iter().cloned()).collect();
                        (names, None, None, Some(LogisticGen { bias: *bias, weights: map }))
                    }
                };
                AttributeGen {
                    name: attr.name.clone(),
                    levels: attr.levels.clone(),
                    role: attr.role,
                    parents,
                    dist,
                    table,
                    logistic,
                }
            })
            .collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: GeneratorFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("generator config: {e}")))?;
        GeneratorSpec::new(file.attribute)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Per-attribute probability that a value survives the two-year gap
/// untouched; anything not listed persists with probability 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub persistence: BTreeMap<String, f64>,
}

impl DriftSpec {
    pub fn new(persistence: BTreeMap<String, f64>) -> Result<Self> {
        for (name, &p) in &persistence {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("drift for `{name}` = {p} outside [0, 1]")));
            }
        }
        Ok(DriftSpec { persistence })
    }

    pub fn identity() -> Self {
        DriftSpec { persistence: BTreeMap::new() }
    }

    pub fn persistence_for(&self, name: &str) -> f64 {
        self.persistence.get(name).copied().unwrap_or(1.0)
    }

    pub fn validate_against(&self, schema: &Schema) -> Result<()> {
        for name in self.persistence.keys() {
            schema.require(name)?;
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("drift spec serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: DriftSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("drift config: {e}")))?;
        DriftSpec::new(spec.persistence)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Re-draws each attribute with probability 1 − persistence, in dependency
/// order, conditioning on the already-drifted parents. Ids are preserved and
/// keyed into the RNG, so drift is stable per individual.
pub fn apply_temporal_drift(
    data: &Dataset,
    spec: &GeneratorSpec,
    drift: &DriftSpec,
    seed_value: u64,
) -> Result<Dataset> {
    if data.schema().hash() != spec.schema().hash() {
        return Err(Error::Schema("dataset schema does not match the generator spec".into()));
    }
    drift.validate_against(spec.schema())?;
    let persistence: Vec<f64> = spec
        .nodes
        .iter()
        .map(|n| drift.persistence_for(&spec.schema.attribute(n.col).name))
        .collect();

    let rows: Vec<Vec<LevelIdx>> = data
        .ids()
        .par_iter()
        .zip(data.rows())
        .map(|(&id, row)| {
            let mut rng = seed::rng(seed::derive_indexed(seed_value, "drift-row", id));
            let mut out = row.clone();
            for (node, &p) in spec.nodes.iter().zip(&persistence) {
                let keep = rng.gen::<f64>() < p;
                if !keep {
                    out[node.col] = node.kind.sample(&spec.schema, &out, &mut rng);
                }
            }
            out
        })
        .collect();
    Dataset::new(spec.schema_arc(), data.ids().to_vec(), rows)
}

/// The three datasets every experiment runs on: the training wave, the same
/// individuals two years later, and individuals never seen in training.
pub struct SplitBundle {
    pub inclusive_2013: Dataset,
    pub inclusive_2015: Dataset,
    pub exclusive_2015: Dataset,
}

impl SplitBundle {
    pub fn validate(&self) -> Result<()> {
        use std::collections::HashSet;
        let a: HashSet<u64> = self.inclusive_2013.ids().iter().copied().collect();
        let b: HashSet<u64> = self.inclusive_2015.ids().iter().copied().collect();
        let c: HashSet<u64> = self.exclusive_2015.ids().iter().copied().collect();
        if a != b {
            return Err(Error::InvalidArgument(
                "inclusive waves must share exactly the same ids".into(),
            ));
        }
        if !a.is_disjoint(&c) {
            return Err(Error::InvalidArgument(
                "exclusive ids overlap the inclusive waves".into(),
            ));
        }
        Ok(())
    }
}

/// Generates `n_train` training-wave individuals, drifts them two years, and
/// samples `n_exclusive` fresh individuals directly at the later wave (drift
/// re-draws from the same conditionals, so the later wave's distribution
/// matches the generator's and fresh individuals need no transformation).
pub fn make_study_splits(
    spec: &GeneratorSpec,
    drift: &DriftSpec,
    n_train: usize,
    n_exclusive: usize,
    seed_value: u64,
) -> Result<SplitBundle> {
    if n_train == 0 || n_exclusive == 0 {
        return Err(Error::InvalidArgument("split sizes must be ≥ 1".into()));
    }
    let train_ids: Vec<u64> = (0..n_train as u64).collect();
    let exclusive_ids: Vec<u64> = (n_train as u64..(n_train + n_exclusive) as u64).collect();
    let inclusive_2013 = spec.generate_with_ids(&train_ids, seed_value)?;
    let inclusive_2015 = apply_temporal_drift(
        &inclusive_2013,
        spec,
        drift,
        seed::derive(seed_value, "temporal-drift"),
    )?;
    let exclusive_2015 = spec.generate_with_ids(&exclusive_ids, seed_value)?;
    let bundle = SplitBundle { inclusive_2013, inclusive_2015, exclusive_2015 };
    bundle.validate()?;
    Ok(bundle)
}

fn gen(
    name: &str,
    levels: &[&str],
    role: Role,
    parents: &[&str],
    kind: (Option<Vec<f64>>, Option<BTreeMap<String, Vec<f64>>>, Option<LogisticGen>),
) -> AttributeGen {
    AttributeGen {
        name: name.into(),
        levels: levels.iter().map(|s| s.to_string()).collect(),
        role,
        parents: parents.iter().map(|s| s.to_string()).collect(),
        dist: kind.0,
        table: kind.1,
        logistic: kind.2,
    }
}

fn table_of(entries: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
    entries.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
}

/// The shipped default population: a 16-attribute housing-survey world with
/// a binary moved/stayed outcome at roughly a 1-in-4 base rate, age, gender
/// and income as the sensitive attributes, and enough dependence between
/// them and the rest that a trained model can leak.
pub fn default_population() -> GeneratorSpec {
    let mut attrs = Vec::new();

    attrs.push(gen(
        "region",
        &["north", "east", "south", "west"],
        Role::NonSensitive,
        &[],
        (Some(vec![0.20, 0.30, 0.25, 0.25]), None, None),
    ));
    attrs.push(gen(
        "urbanicity",
        &["city", "town", "rural"],
        Role::NonSensitive,
        &["region"],
        (
            None,
            Some(table_of(&[
                ("north", &[0.30, 0.40, 0.30]),
                ("east", &[0.45, 0.35, 0.20]),
                ("south", &[0.40, 0.35, 0.25]),
                ("west", &[0.60, 0.30, 0.10]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "gender",
        &["male", "female"],
        Role::Sensitive,
        &[],
        (Some(vec![0.49, 0.51]), None, None),
    ));
    attrs.push(gen(
        "age_band",
        &["a18_29", "a30_44", "a45_59", "a60_74", "a75p"],
        Role::Sensitive,
        &[],
        (Some(vec![0.20, 0.25, 0.22, 0.20, 0.13]), None, None),
    ));
    attrs.push(gen(
        "education",
        &["primary", "secondary", "vocational", "university"],
        Role::NonSensitive,
        &["age_band", "gender"],
        (
            None,
            Some(table_of(&[
                ("a18_29,male", &[0.05, 0.25, 0.35, 0.35]),
                ("a18_29,female", &[0.04, 0.22, 0.32, 0.42]),
                ("a30_44,male", &[0.06, 0.28, 0.36, 0.30]),
                ("a30_44,female", &[0.05, 0.26, 0.34, 0.35]),
                ("a45_59,male", &[0.10, 0.35, 0.35, 0.20]),
                ("a45_59,female", &[0.10, 0.38, 0.32, 0.20]),
                ("a60_74,male", &[0.18, 0.40, 0.27, 0.15]),
                ("a60_74,female", &[0.22, 0.42, 0.24, 0.12]),
                ("a75p,male", &[0.30, 0.40, 0.18, 0.12]),
                ("a75p,female", &[0.38, 0.38, 0.16, 0.08]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "employment",
        &["employed", "self_employed", "unemployed", "retired"],
        Role::NonSensitive,
        &["age_band", "gender"],
        (
            None,
            Some(table_of(&[
                ("a18_29,male", &[0.80, 0.06, 0.13, 0.01]),
                ("a18_29,female", &[0.76, 0.04, 0.19, 0.01]),
                ("a30_44,male", &[0.82, 0.10, 0.07, 0.01]),
                ("a30_44,female", &[0.74, 0.07, 0.18, 0.01]),
                ("a45_59,male", &[0.76, 0.12, 0.09, 0.03]),
                ("a45_59,female", &[0.68, 0.08, 0.20, 0.04]),
                ("a60_74,male", &[0.25, 0.07, 0.08, 0.60]),
                ("a60_74,female", &[0.18, 0.04, 0.10, 0.68]),
                ("a75p,male", &[0.02, 0.02, 0.01, 0.95]),
                ("a75p,female", &[0.01, 0.01, 0.01, 0.97]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "income_band",
        &["q1", "q2", "q3", "q4", "q5"],
        Role::Sensitive,
        &["education", "employment"],
        (
            None,
            Some(table_of(&[
                ("primary,employed", &[0.30, 0.30, 0.22, 0.12, 0.06]),
                ("primary,self_employed", &[0.28, 0.26, 0.22, 0.14, 0.10]),
                ("primary,unemployed", &[0.55, 0.25, 0.12, 0.06, 0.02]),
                ("primary,retired", &[0.45, 0.28, 0.15, 0.08, 0.04]),
                ("secondary,employed", &[0.18, 0.26, 0.28, 0.18, 0.10]),
                ("secondary,self_employed", &[0.18, 0.22, 0.26, 0.20, 0.14]),
                ("secondary,unemployed", &[0.45, 0.28, 0.16, 0.08, 0.03]),
                ("secondary,retired", &[0.35, 0.30, 0.20, 0.10, 0.05]),
                ("vocational,employed", &[0.12, 0.22, 0.30, 0.22, 0.14]),
                ("vocational,self_employed", &[0.12, 0.20, 0.26, 0.24, 0.18]),
                ("vocational,unemployed", &[0.38, 0.30, 0.18, 0.10, 0.04]),
                ("vocational,retired", &[0.28, 0.30, 0.22, 0.13, 0.07]),
                ("university,employed", &[0.05, 0.12, 0.22, 0.30, 0.31]),
                ("university,self_employed", &[0.06, 0.10, 0.20, 0.28, 0.36]),
                ("university,unemployed", &[0.25, 0.28, 0.24, 0.15, 0.08]),
                ("university,retired", &[0.15, 0.22, 0.26, 0.20, 0.17]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "marital_status",
        &["single", "partnered", "widowed"],
        Role::NonSensitive,
        &["age_band"],
        (
            None,
            Some(table_of(&[
                ("a18_29", &[0.70, 0.29, 0.01]),
                ("a30_44", &[0.32, 0.66, 0.02]),
                ("a45_59", &[0.22, 0.72, 0.06]),
                ("a60_74", &[0.14, 0.70, 0.16]),
                ("a75p", &[0.10, 0.50, 0.40]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "household_size",
        &["h1", "h2", "h3", "h4plus"],
        Role::NonSensitive,
        &["marital_status", "age_band"],
        (
            None,
            Some(table_of(&[
                ("single,a18_29", &[0.52, 0.30, 0.12, 0.06]),
                ("single,a30_44", &[0.60, 0.22, 0.12, 0.06]),
                ("single,a45_59", &[0.70, 0.18, 0.08, 0.04]),
                ("single,a60_74", &[0.85, 0.10, 0.04, 0.01]),
                ("single,a75p", &[0.92, 0.06, 0.015, 0.005]),
                ("partnered,a18_29", &[0.02, 0.55, 0.25, 0.18]),
                ("partnered,a30_44", &[0.02, 0.30, 0.28, 0.40]),
                ("partnered,a45_59", &[0.03, 0.45, 0.28, 0.24]),
                ("partnered,a60_74", &[0.03, 0.82, 0.10, 0.05]),
                ("partnered,a75p", &[0.04, 0.90, 0.04, 0.02]),
                ("widowed,a18_29", &[0.60, 0.25, 0.10, 0.05]),
                ("widowed,a30_44", &[0.55, 0.25, 0.12, 0.08]),
                ("widowed,a45_59", &[0.70, 0.18, 0.08, 0.04]),
                ("widowed,a60_74", &[0.88, 0.08, 0.03, 0.01]),
                ("widowed,a75p", &[0.94, 0.04, 0.015, 0.005]),
            ])),
            None,
        ),
    ));
    // ownership rises with both income and age
    let ownership: BTreeMap<String, Vec<f64>> = {
        let incomes = ["q1", "q2", "q3", "q4", "q5"];
        let ages = ["a18_29", "a30_44", "a45_59", "a60_74", "a75p"];
        incomes
            .iter()
            .enumerate()
            .flat_map(|(iq, q)| {
                ages.iter().enumerate().map(move |(ia, a)| {
                    let own = (0.10 + 0.13 * iq as f64 + 0.09 * ia as f64).min(0.90);
                    (format!("{q},{a}"), vec![1.0 - own, own])
                })
            })
            .collect()
    };
    attrs.push(gen(
        "home_ownership",
        &["rent", "own"],
        Role::NonSensitive,
        &["income_band", "age_band"],
        (None, Some(ownership), None),
    ));
    attrs.push(gen(
        "dwelling_type",
        &["apartment", "terraced", "detached"],
        Role::NonSensitive,
        &["home_ownership", "urbanicity"],
        (
            None,
            Some(table_of(&[
                ("rent,city", &[0.75, 0.20, 0.05]),
                ("rent,town", &[0.55, 0.35, 0.10]),
                ("rent,rural", &[0.35, 0.40, 0.25]),
                ("own,city", &[0.45, 0.40, 0.15]),
                ("own,town", &[0.25, 0.45, 0.30]),
                ("own,rural", &[0.10, 0.35, 0.55]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "rooms",
        &["r1_2", "r3", "r4", "r5plus"],
        Role::NonSensitive,
        &["household_size", "dwelling_type"],
        (
            None,
            Some(table_of(&[
                ("h1,apartment", &[0.55, 0.30, 0.10, 0.05]),
                ("h1,terraced", &[0.25, 0.40, 0.25, 0.10]),
                ("h1,detached", &[0.10, 0.30, 0.35, 0.25]),
                ("h2,apartment", &[0.35, 0.40, 0.18, 0.07]),
                ("h2,terraced", &[0.12, 0.38, 0.33, 0.17]),
                ("h2,detached", &[0.05, 0.22, 0.38, 0.35]),
                ("h3,apartment", &[0.22, 0.40, 0.26, 0.12]),
                ("h3,terraced", &[0.07, 0.30, 0.38, 0.25]),
                ("h3,detached", &[0.03, 0.15, 0.40, 0.42]),
                ("h4plus,apartment", &[0.15, 0.35, 0.30, 0.20]),
                ("h4plus,terraced", &[0.04, 0.22, 0.40, 0.34]),
                ("h4plus,detached", &[0.02, 0.10, 0.36, 0.52]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "years_at_address",
        &["lt2", "y2_5", "y6_10", "gt10"],
        Role::NonSensitive,
        &["age_band", "home_ownership"],
        (
            None,
            Some(table_of(&[
                ("a18_29,rent", &[0.45, 0.35, 0.15, 0.05]),
                ("a18_29,own", &[0.30, 0.40, 0.22, 0.08]),
                ("a30_44,rent", &[0.30, 0.32, 0.22, 0.16]),
                ("a30_44,own", &[0.15, 0.28, 0.30, 0.27]),
                ("a45_59,rent", &[0.18, 0.22, 0.25, 0.35]),
                ("a45_59,own", &[0.07, 0.15, 0.24, 0.54]),
                ("a60_74,rent", &[0.10, 0.15, 0.20, 0.55]),
                ("a60_74,own", &[0.03, 0.08, 0.16, 0.73]),
                ("a75p,rent", &[0.06, 0.10, 0.16, 0.68]),
                ("a75p,own", &[0.02, 0.05, 0.11, 0.82]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "dwelling_satisfaction",
        &["low", "medium", "high"],
        Role::NonSensitive,
        &["dwelling_type", "income_band"],
        (
            None,
            Some(table_of(&[
                ("apartment,q1", &[0.35, 0.45, 0.20]),
                ("apartment,q2", &[0.30, 0.45, 0.25]),
                ("apartment,q3", &[0.24, 0.46, 0.30]),
                ("apartment,q4", &[0.18, 0.44, 0.38]),
                ("apartment,q5", &[0.12, 0.40, 0.48]),
                ("terraced,q1", &[0.25, 0.45, 0.30]),
                ("terraced,q2", &[0.20, 0.45, 0.35]),
                ("terraced,q3", &[0.15, 0.44, 0.41]),
                ("terraced,q4", &[0.11, 0.40, 0.49]),
                ("terraced,q5", &[0.08, 0.34, 0.58]),
                ("detached,q1", &[0.15, 0.40, 0.45]),
                ("detached,q2", &[0.11, 0.37, 0.52]),
                ("detached,q3", &[0.08, 0.32, 0.60]),
                ("detached,q4", &[0.05, 0.27, 0.68]),
                ("detached,q5", &[0.03, 0.21, 0.76]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "neighborhood_satisfaction",
        &["low", "medium", "high"],
        Role::NonSensitive,
        &["urbanicity", "dwelling_satisfaction"],
        (
            None,
            Some(table_of(&[
                ("city,low", &[0.45, 0.40, 0.15]),
                ("city,medium", &[0.25, 0.50, 0.25]),
                ("city,high", &[0.12, 0.40, 0.48]),
                ("town,low", &[0.38, 0.42, 0.20]),
                ("town,medium", &[0.18, 0.50, 0.32]),
                ("town,high", &[0.08, 0.36, 0.56]),
                ("rural,low", &[0.32, 0.42, 0.26]),
                ("rural,medium", &[0.14, 0.46, 0.40]),
                ("rural,high", &[0.05, 0.30, 0.65]),
            ])),
            None,
        ),
    ));
    attrs.push(gen(
        "moved",
        &["no", "yes"],
        Role::Target,
        &[
            "years_at_address",
            "dwelling_satisfaction",
            "home_ownership",
            "age_band",
            "gender",
            "income_band",
        ],
        (
            None,
            None,
            Some(LogisticGen {
                bias: -1.05,
                weights: [
                    ("years_at_address", vec![0.9, 0.3, -0.2, -0.7]),
                    ("dwelling_satisfaction", vec![0.8, 0.0, -0.8]),
                    ("home_ownership", vec![0.5, -0.5]),
                    ("age_band", vec![0.7, 0.25, -0.1, -0.4, -0.65]),
                    ("gender", vec![0.35, -0.35]),
                    ("income_band", vec![-0.3, -0.1, 0.0, 0.15, 0.3]),
                ]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            }),
        ),
    ));

    GeneratorSpec::new(attrs).expect("default population spec is valid")
}

/// Default two-year drift: gender immutable, demographic attributes mostly
/// stable, housing attributes more volatile, and the outcome re-drawn fresh
/// each wave from the drifted covariates.
pub fn default_drift() -> DriftSpec {
    let entries = [
        ("gender", 1.0),
        ("age_band", 0.9),
        ("education", 0.9),
        ("employment", 0.9),
        ("marital_status", 0.9),
        ("household_size", 0.9),
        ("income_band", 0.9),
        ("region", 0.7),
        ("urbanicity", 0.7),
        ("home_ownership", 0.7),
        ("dwelling_type", 0.7),
        ("rooms", 0.7),
        ("years_at_address", 0.7),
        ("dwelling_satisfaction", 0.7),
        ("neighborhood_satisfaction", 0.7),
        ("moved", 0.0),
    ];
    DriftSpec::new(entries.iter().map(|(k, v)| (k.to_string(), *v)).collect())
        .expect("default drift is valid")
}
