//! Per-attribute marginal distributions — the second released artifact.
//!
//! The threat model assumes the marginal distribution of every attribute of
//! the model's training data is public. Marginals are exact relative
//! frequencies (no rounding); levels unseen in the data appear with
//! probability zero.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::schema::LevelIdx;

const SUM_TOLERANCE: f64 = 1e-9;

/// Marginal distribution of a single attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMarginal {
    pub name: String,
    pub levels: Vec<String>,
    pub probabilities: Vec<f64>,
}

/// Marginals for every attribute of a dataset, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSet {
    attributes: Vec<AttributeMarginal>,
}

impl MarginalSet {
    /// Counts every attribute of `data`. Errors on an empty dataset.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = data.len() as f64;
        let mut attributes = Vec::with_capacity(data.schema().len());
        for (c, attr) in data.schema().attributes().iter().enumerate() {
            let mut counts = vec![0u64; attr.levels.len()];
            for row in data.rows() {
                counts[row[c] as usize] += 1;
            }
            attributes.push(AttributeMarginal {
                name: attr.name.clone(),
                levels: attr.levels.clone(),
                probabilities: counts.iter().map(|&k| k as f64 / n).collect(),
            });
        }
        Ok(MarginalSet { attributes })
    }

    fn validate(&self) -> Result<()> {
        for attr in &self.attributes {
            if attr.levels.len() != attr.probabilities.len() {
                return Err(Error::InvalidArgument(format!(
                    "marginal `{}`: {} levels but {} probabilities",
                    attr.name,
                    attr.levels.len(),
                    attr.probabilities.len()
                )));
            }
            if attr.probabilities.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "marginal `{}` has a negative or non-finite probability",
                    attr.name
                )));
            }
            let sum: f64 = attr.probabilities.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "marginal `{}` sums to {sum}, expected 1",
                    attr.name
                )));
            }
        }
        Ok(())
    }

    pub fn attributes(&self) -> &[AttributeMarginal] {
        &self.attributes
    }

    pub fn get(&self, name: &str) -> Result<&AttributeMarginal> {
        self.attributes
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("marginals serialization: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let set: MarginalSet =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("marginals file: {e}")))?;
        set.validate()?;
        Ok(set)
    }
}

impl AttributeMarginal {
    /// Most probable level; ties broken toward the lowest level index.
    pub fn argmax_level(&self) -> LevelIdx {
        let mut best = 0usize;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best as LevelIdx
    }

    /// One draw from the marginal. Errors on an all-zero distribution.
    pub fn sample_level(&self, rng: &mut ChaCha8Rng) -> Result<LevelIdx> {
        let total: f64 = self.probabilities.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "marginal `{}` is degenerate (all zero)",
                self.name
            )));
        }
        let u: f64 = rng.gen::<f64>() * total;
        let mut cum = 0.0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            cum += p;
            if u < cum {
                return Ok(i as LevelIdx);
            }
        }
        Ok((self.probabilities.len() - 1) as LevelIdx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{AttributeSpec, Role, Schema};
    use crate::seed;
    use std::collections::HashMap;
    use std::sync::Arc;

    fn one_column(values: &[&str], levels: &[&str]) -> Dataset {
        let schema = Arc::new(
            Schema::new(vec![AttributeSpec::new("x", levels, Role::NonSensitive)]).unwrap(),
        );
        let rows: Vec<Vec<u16>> = values
            .iter()
            .map(|v| vec![schema.attribute(0).level_index(v).unwrap()])
            .collect();
        let ids = (0..rows.len() as u64).collect();
        Dataset::new(schema, ids, rows).unwrap()
    }

    #[test]
    fn direct_frequencies() {
        let data = one_column(&["A", "A", "B", "C"], &["A", "B", "C"]);
        let m = MarginalSet::from_dataset(&data).unwrap();
        assert_eq!(m.get("x").unwrap().probabilities, vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn constant_column() {
        let data = one_column(&["X", "X", "X"], &["X", "Y"]);
        let m = MarginalSet::from_dataset(&data).unwrap();
        assert_eq!(m.get("x").unwrap().probabilities, vec![1.0, 0.0]);
    }

    #[test]
    fn empty_dataset_rejected() {
        let schema = Arc::new(
            Schema::new(vec![AttributeSpec::new("x", &["A", "B"], Role::NonSensitive)]).unwrap(),
        );
        let data = Dataset::new(schema, vec![], vec![]).unwrap();
        assert!(matches!(MarginalSet::from_dataset(&data), Err(Error::EmptyDataset)));
    }

    #[test]
    fn random_table_matches_counting_oracle() {
        // Independent oracle: recount with a HashMap over labels instead of
        // the index-vector path used by from_dataset.
        let mut rng = seed::rng(42);
        let levels = ["A", "B", "C", "D"];
        let values: Vec<&str> = (0..1000).map(|_| levels[rng.gen_range(0..4)]).collect();
        let data = one_column(&values, &levels);
        let m = MarginalSet::from_dataset(&data).unwrap();

        let mut oracle: HashMap<&str, u64> = HashMap::new();
        for v in &values {
            *oracle.entry(v).or_insert(0) += 1;
        }
        for (i, level) in levels.iter().enumerate() {
            let expected = *oracle.get(level).unwrap_or(&0) as f64 / 1000.0;
            assert_eq!(m.get("x").unwrap().probabilities[i], expected);
        }
    }

    #[test]
    fn sums_to_one() {
        let data = one_column(&["A", "B", "C", "C", "B", "A", "A"], &["A", "B", "C"]);
        let m = MarginalSet::from_dataset(&data).unwrap();
        let sum: f64 = m.get("x").unwrap().probabilities.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let m = AttributeMarginal {
            name: "x".into(),
            levels: vec!["A".into(), "B".into(), "C".into()],
            probabilities: vec![0.4, 0.4, 0.2],
        };
        assert_eq!(m.argmax_level(), 0);
    }

    #[test]
    fn degenerate_marginal_errors_on_sample() {
        let m = AttributeMarginal {
            name: "x".into(),
            levels: vec!["A".into(), "B".into()],
            probabilities: vec![0.0, 0.0],
        };
        assert!(m.sample_level(&mut seed::rng(1)).is_err());
    }
}
