//! Attribute and schema definitions for categorical tables.
//!
//! A [`Schema`] is an ordered list of categorical attributes. Each attribute
//! declares a finite level set and a role: the (binary) prediction target,
//! a sensitive attribute an attacker wants to infer, or an ordinary
//! non-sensitive attribute. Schemas are immutable after construction and are
//! shared freely between threads.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Index of a level within an attribute's level set.
pub type LevelIdx = u16;

/// Role of an attribute in the release/attack experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The released model's prediction target. Must be binary; the second
    /// level is the positive class.
    Target,
    /// Attribute the attacker tries to infer.
    Sensitive,
    /// Attribute assumed known to the attacker.
    NonSensitive,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Target => write!(f, "target"),
            Role::Sensitive => write!(f, "sensitive"),
            Role::NonSensitive => write!(f, "non_sensitive"),
        }
    }
}

/// One categorical attribute: name, ordered level labels, role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub levels: Vec<String>,
    pub role: Role,
}

impl AttributeSpec {
    pub fn new(name: &str, levels: &[&str], role: Role) -> Self {
        AttributeSpec {
            name: name.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
            role,
        }
    }

    pub fn n_levels(&self) -> u16 {
        self.levels.len() as u16
    }

    /// Index of a level label, if declared.
    pub fn level_index(&self, label: &str) -> Option<LevelIdx> {
        self.levels.iter().position(|l| l == label).map(|i| i as LevelIdx)
    }

    pub fn level(&self, idx: LevelIdx) -> &str {
        &self.levels[idx as usize]
    }

    fn validate(&self) -> Result<()> {
        if !is_identifier(&self.name) {
            return Err(Error::Schema(format!(
                "attribute name `{}` must be non-empty and match [A-Za-z0-9_-]+",
                self.name
            )));
        }
        if self.name == "id" {
            return Err(Error::Schema("`id` is reserved for the row identifier column".into()));
        }
        if self.levels.len() < 2 {
            return Err(Error::Schema(format!(
                "attribute `{}` must declare at least 2 levels",
                self.name
            )));
        }
        for (i, level) in self.levels.iter().enumerate() {
            if !is_identifier(level) {
                return Err(Error::Schema(format!(
                    "level `{}` of attribute `{}` must be non-empty and match [A-Za-z0-9_-]+",
                    level, self.name
                )));
            }
            if self.levels[..i].contains(level) {
                return Err(Error::Schema(format!(
                    "duplicate level `{}` in attribute `{}`",
                    level, self.name
                )));
            }
        }
        if self.role == Role::Target && self.levels.len() != 2 {
            return Err(Error::Schema(format!(
                "target attribute `{}` must be binary, got {} levels",
                self.name,
                self.levels.len()
            )));
        }
        Ok(())
    }
}

/// Level labels and attribute names are restricted to `[A-Za-z0-9_-]` so the
/// canonical CSV form never needs quoting.
fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Ordered, validated list of attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
}

/// On-disk form: a TOML document made of `[[attribute]]` blocks.
#[derive(Serialize, Deserialize)]
struct SchemaFile {
    attribute: Vec<AttributeSpec>,
}

impl TryFrom<SchemaFile> for Schema {
    type Error = Error;
    fn try_from(file: SchemaFile) -> Result<Self> {
        Schema::new(file.attribute)
    }
}

impl From<Schema> for SchemaFile {
    fn from(schema: Schema) -> Self {
        SchemaFile { attribute: schema.attributes }
    }
}

impl Schema {
    /// Validates names, level sets, and that any target attribute is binary
    /// and unique. Experiment-level requirements (exactly one target, at
    /// least one sensitive and one non-sensitive attribute) are checked
    /// separately by [`Schema::check_experiment_ready`], because derived
    /// views such as an attacker's record view drop columns and would
    /// otherwise be unrepresentable.
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        let mut target_seen = false;
        for (i, attr) in attributes.iter().enumerate() {
            attr.validate()?;
            if attributes[..i].iter().any(|a| a.name == attr.name) {
                return Err(Error::Schema(format!("duplicate attribute name `{}`", attr.name)));
            }
            if attr.role == Role::Target {
                if target_seen {
                    return Err(Error::Schema("schema declares more than one target attribute".into()));
                }
                target_seen = true;
            }
        }
        Ok(Schema { attributes })
    }

    /// Full invariants for a dataset that enters the experiment pipeline:
    /// exactly one binary target, at least one sensitive and one
    /// non-sensitive attribute.
    pub fn check_experiment_ready(&self) -> Result<()> {
        if self.target_index().is_none() {
            return Err(Error::Schema("schema has no target attribute".into()));
        }
        if self.sensitive_indices().is_empty() {
            return Err(Error::Schema("schema has no sensitive attribute".into()));
        }
        if self.non_sensitive_indices().is_empty() {
            return Err(Error::Schema("schema has no non-sensitive attribute".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute(&self, idx: usize) -> &AttributeSpec {
        &self.attributes[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Index lookup that reports the missing name.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn target_index(&self) -> Option<usize> {
        self.attributes.iter().position(|a| a.role == Role::Target)
    }

    pub fn sensitive_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.attributes[i].role == Role::Sensitive).collect()
    }

    pub fn non_sensitive_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.attributes[i].role == Role::NonSensitive).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }

    /// SHA-256 over a canonical text encoding; embedded in persisted model
    /// files so stale models are rejected at load time.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for attr in &self.attributes {
            hasher.update(attr.name.as_bytes());
            hasher.update([0u8]);
            hasher.update(attr.role.to_string().as_bytes());
            hasher.update([0u8]);
            for level in &attr.levels {
                hasher.update(level.as_bytes());
                hasher.update([1u8]);
            }
            hasher.update([2u8]);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("schema serialization cannot fail")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("schema config: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}
