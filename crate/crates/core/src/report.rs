//! Result tables and their byte-stable on-disk form.
//!
//! Experiments produce three tables: classifier utility per training-data ×
//! test-set, exactly-one-match counts per attack cell, and attack metrics
//! aggregated as mean ± population std over the configured repetitions. All
//! serialization here is deterministic — fixed row order, fixed four-decimal
//! formatting — so reruns with identical inputs produce byte-identical
//! files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One classifier evaluated on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRow {
    pub classifier: String,
    /// Which dataset the model was fitted on: `original` or `synthetic`.
    pub training_data: String,
    /// `combined_2015` (inclusive + exclusive) or `exclusive_2015`.
    pub test_set: String,
    pub auc: f64,
    pub mcc: f64,
    pub f1_macro: f64,
}

/// Exactly-one-match accounting for one attack cell, averaged over
/// repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case1Row {
    pub resource_set: String,
    pub training_data: String,
    pub sensitive: String,
    pub predicted_mean: f64,
    pub predicted_std: f64,
    pub correct_mean: f64,
    pub correct_std: f64,
}

/// Attack quality for one cell, averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackMetricRow {
    pub resource_set: String,
    pub training_data: String,
    pub sensitive: String,
    /// `lomia_marginals` or `marginals_only`.
    pub attack: String,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f1_macro_mean: f64,
    pub f1_macro_std: f64,
    pub precision_macro_mean: f64,
    pub precision_macro_std: f64,
    pub recall_macro_mean: f64,
    pub recall_macro_std: f64,
}

/// One attack execution before aggregation — kept so aggregated columns can
/// be recomputed and audited externally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAttackRecord {
    pub resource_set: String,
    pub training_data: String,
    pub sensitive: String,
    pub attack: String,
    pub repetition: usize,
    pub n_targets: usize,
    pub n_case1_predicted: usize,
    pub n_case1_correct: usize,
    pub queries_issued: u64,
    pub accuracy: f64,
    pub f1_macro: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
}

/// Provenance of a run: enough to reproduce it and to detect configuration
/// drift between a report and the config that claims to describe it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the canonical config TOML.
    pub config_hash: String,
    pub root_seed: u64,
    pub repetition_seeds: Vec<u64>,
    /// Hash of the post-selection schema every model and attack ran on.
    pub schema_hash: String,
    pub n_train: usize,
    pub n_exclusive: usize,
    pub target_set_size: usize,
}

/// Everything one full run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub utility: Vec<UtilityRow>,
    pub case1: Vec<Case1Row>,
    pub attack_metrics: Vec<AttackMetricRow>,
    pub raw_attacks: Vec<RawAttackRecord>,
    pub manifest: RunManifest,
}

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

impl ReportBundle {
    pub fn utility_csv(&self) -> String {
        let mut out = String::from("classifier,training_data,test_set,auc,mcc,f1_macro\n");
        for r in &self.utility {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.classifier,
                r.training_data,
                r.test_set,
                fmt4(r.auc),
                fmt4(r.mcc),
                fmt4(r.f1_macro)
            );
        }
        out
    }

    pub fn case1_csv(&self) -> String {
        let mut out = String::from(
            "resource_set,training_data,sensitive,predicted_mean,predicted_std,correct_mean,correct_std\n",
        );
        for r in &self.case1 {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.resource_set,
                r.training_data,
                r.sensitive,
                fmt4(r.predicted_mean),
                fmt4(r.predicted_std),
                fmt4(r.correct_mean),
                fmt4(r.correct_std)
            );
        }
        out
    }

    pub fn attack_metrics_csv(&self) -> String {
        let mut out = String::from(
            "resource_set,training_data,sensitive,attack,accuracy_mean,accuracy_std,\
             f1_macro_mean,f1_macro_std,precision_macro_mean,precision_macro_std,\
             recall_macro_mean,recall_macro_std\n",
        );
        for r in &self.attack_metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.resource_set,
                r.training_data,
                r.sensitive,
                r.attack,
                fmt4(r.accuracy_mean),
                fmt4(r.accuracy_std),
                fmt4(r.f1_macro_mean),
                fmt4(r.f1_macro_std),
                fmt4(r.precision_macro_mean),
                fmt4(r.precision_macro_std),
                fmt4(r.recall_macro_mean),
                fmt4(r.recall_macro_std)
            );
        }
        out
    }

    pub fn raw_attacks_csv(&self) -> String {
        let mut out = String::from(
            "resource_set,training_data,sensitive,attack,repetition,n_targets,\
             n_case1_predicted,n_case1_correct,queries_issued,accuracy,f1_macro,\
             precision_macro,recall_macro\n",
        );
        for r in &self.raw_attacks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.resource_set,
                r.training_data,
                r.sensitive,
                r.attack,
                r.repetition,
                r.n_targets,
                r.n_case1_predicted,
                r.n_case1_correct,
                r.queries_issued,
                fmt4(r.accuracy),
                fmt4(r.f1_macro),
                fmt4(r.precision_macro),
                fmt4(r.recall_macro)
            );
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run {}", self.manifest.config_hash);
        let _ = writeln!(
            out,
            "root seed {}, {} repetitions, {} train / {} exclusive rows, {} targets per set",
            self.manifest.root_seed,
            self.manifest.repetition_seeds.len(),
            self.manifest.n_train,
            self.manifest.n_exclusive,
            self.manifest.target_set_size
        );

        if !self.utility.is_empty() {
            let _ = writeln!(out, "\nmodel utility");
            let _ = writeln!(
                out,
                "{:<16}{:<12}{:<16}{:>8}{:>8}{:>10}",
                "classifier", "training", "test set", "auc", "mcc", "f1_macro"
            );
            for r in &self.utility {
                let _ = writeln!(
                    out,
                    "{:<16}{:<12}{:<16}{:>8}{:>8}{:>10}",
                    r.classifier,
                    r.training_data,
                    r.test_set,
                    fmt4(r.auc),
                    fmt4(r.mcc),
                    fmt4(r.f1_macro)
                );
            }
        }

        if !self.case1.is_empty() {
            let _ = writeln!(out, "\nexactly-one-match predictions (mean ± std over repetitions)");
            let _ = writeln!(
                out,
                "{:<16}{:<12}{:<14}{:>20}{:>20}",
                "resource set", "training", "sensitive", "predicted", "correct"
            );
            for r in &self.case1 {
                let _ = writeln!(
                    out,
                    "{:<16}{:<12}{:<14}{:>20}{:>20}",
                    r.resource_set,
                    r.training_data,
                    r.sensitive,
                    format!("{} ± {}", fmt4(r.predicted_mean), fmt4(r.predicted_std)),
                    format!("{} ± {}", fmt4(r.correct_mean), fmt4(r.correct_std))
                );
            }
        }

        if !self.attack_metrics.is_empty() {
            let _ = writeln!(out, "\nattack metrics (mean ± std over repetitions)");
            let _ = writeln!(
                out,
                "{:<16}{:<12}{:<14}{:<18}{:>20}{:>20}",
                "resource set", "training", "sensitive", "attack", "accuracy", "f1_macro"
            );
            for r in &self.attack_metrics {
                let _ = writeln!(
                    out,
                    "{:<16}{:<12}{:<14}{:<18}{:>20}{:>20}",
                    r.resource_set,
                    r.training_data,
                    r.sensitive,
                    r.attack,
                    format!("{} ± {}", fmt4(r.accuracy_mean), fmt4(r.accuracy_std)),
                    format!("{} ± {}", fmt4(r.f1_macro_mean), fmt4(r.f1_macro_std))
                );
            }
        }
        out
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.manifest).expect("manifest serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("report bundle serialization: {e}")))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ReportBundle> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("malformed report bundle: {e}")))
    }

    /// Writes every table under `dir` (created if missing) and returns the
    /// paths written.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files: [(&str, String); 6] = [
            ("utility.csv", self.utility_csv()),
            ("case1_counts.csv", self.case1_csv()),
            ("attack_metrics.csv", self.attack_metrics_csv()),
            ("attack_raw.csv", self.raw_attacks_csv()),
            ("summary.txt", self.summary_text()),
            ("manifest.json", self.manifest_json()),
        ];
        let mut written = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            fs::write(&path, contents)?;
            written.push(path);
        }
        Ok(written)
    }
}
