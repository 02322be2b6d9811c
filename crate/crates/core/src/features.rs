//! Chi-squared feature scoring and top-K selection.
//!
//! Scores each candidate attribute against the target with the Pearson
//! chi-squared statistic of their full contingency table, then keeps the K
//! highest-scoring attributes. Attributes named in `always_keep` (the
//! sensitive attributes, in the experiment pipeline) bypass scoring and are
//! appended after selection.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::schema::Schema;

/// Score and rank of one candidate attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub chi2: f64,
    /// 1-based rank; ranks over a candidate set are a permutation of 1..m.
    pub rank: usize,
}

/// Pearson chi-squared statistic of the `feature` x `target` contingency
/// table, expected counts from marginal products. Levels with zero marginal
/// count are dropped before computing the statistic; a table degenerate to a
/// single row or column scores 0.
pub fn chi2_score(data: &Dataset, feature: &str, target: &str) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let f = data.schema().require(feature)?;
    let t = data.schema().require(target)?;
    let nf = data.schema().attribute(f).n_levels() as usize;
    let nt = data.schema().attribute(t).n_levels() as usize;

    let mut observed = vec![0u64; nf * nt];
    for row in data.rows() {
        observed[row[f] as usize * nt + row[t] as usize] += 1;
    }
    let row_totals: Vec<u64> = (0..nf).map(|i| (0..nt).map(|j| observed[i * nt + j]).sum()).collect();
    let col_totals: Vec<u64> = (0..nt).map(|j| (0..nf).map(|i| observed[i * nt + j]).sum()).collect();
    let n = data.len() as f64;

    let live_rows: Vec<usize> = (0..nf).filter(|&i| row_totals[i] > 0).collect();
    let live_cols: Vec<usize> = (0..nt).filter(|&j| col_totals[j] > 0).collect();
    if live_rows.len() < 2 || live_cols.len() < 2 {
        return Ok(0.0);
    }

    let mut stat = 0.0;
    for &i in &live_rows {
        for &j in &live_cols {
            let expected = row_totals[i] as f64 * col_totals[j] as f64 / n;
            let diff = observed[i * nt + j] as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    Ok(stat)
}

/// Scores every candidate (all attributes except `target` and `exclude`)
/// and returns them sorted by descending chi-squared, ties broken by schema
/// order. Ranks are 1-based.
pub fn rank_features(data: &Dataset, target: &str, exclude: &[&str]) -> Result<Vec<FeatureScore>> {
    data.schema().require(target)?;
    for name in exclude {
        data.schema().require(name)?;
    }
    let mut scored: Vec<(usize, String, f64)> = Vec::new();
    for (i, attr) in data.schema().attributes().iter().enumerate() {
        if attr.name == target || exclude.contains(&attr.name.as_str()) {
            continue;
        }
        scored.push((i, attr.name.clone(), chi2_score(data, &attr.name, target)?));
    }
    // stable sort keeps schema order within equal scores
    scored.sort_by(|a, b| b.2.partial_cmp(&a.2).expect("chi2 is finite"));
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(rank, (_, name, chi2))| FeatureScore { name, chi2, rank: rank + 1 })
        .collect())
}

/// Reduced schema with the `k` highest-scoring candidates (in their original
/// schema order), the `always_keep` attributes, and the target last.
pub fn select_k_best(
    data: &Dataset,
    target: &str,
    k: usize,
    always_keep: &[&str],
) -> Result<Schema> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let schema = data.schema();
    let target_idx = schema.require(target)?;
    for (i, name) in always_keep.iter().enumerate() {
        schema.require(name)?;
        if *name == target {
            return Err(Error::InvalidArgument(format!(
                "always_keep contains the target `{name}`"
            )));
        }
        if always_keep[..i].contains(name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate always_keep attribute `{name}`"
            )));
        }
    }

    let ranked = rank_features(data, target, always_keep)?;
    if k > ranked.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} candidate features",
            ranked.len()
        )));
    }
    let chosen: Vec<&str> = ranked[..k].iter().map(|s| s.name.as_str()).collect();

    let mut attrs = Vec::with_capacity(k + always_keep.len() + 1);
    for attr in schema.attributes() {
        if chosen.contains(&attr.name.as_str()) {
            attrs.push(attr.clone());
        }
    }
    for name in always_keep {
        let idx = schema.require(name)?;
        attrs.push(schema.attribute(idx).clone());
    }
    attrs.push(schema.attribute(target_idx).clone());
    Schema::new(attrs)
}
