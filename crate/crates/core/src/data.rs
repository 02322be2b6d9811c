//! Row-major categorical dataset: CSV ingestion, sampling, column surgery.
//!
//! Cells are stored as level indices into the schema's level sets. Datasets
//! are immutable after construction; every transforming operation returns a
//! new dataset. Row identifiers are stable across sampling and drift so that
//! the inclusive-2013/2015 populations can be matched by id.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample as index_sample;

use crate::error::{Error, Result};
use crate::schema::{LevelIdx, Schema};
use crate::seed;

/// Immutable categorical table with per-row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    ids: Vec<u64>,
    rows: Vec<Vec<LevelIdx>>,
}

impl Dataset {
    /// Validates cell ranges, row widths, and id uniqueness.
    pub fn new(schema: Arc<Schema>, ids: Vec<u64>, rows: Vec<Vec<LevelIdx>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::InvalidArgument(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} cells, schema has {} attributes",
                    r,
                    row.len(),
                    schema.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v >= schema.attribute(c).n_levels() {
                    return Err(Error::InvalidArgument(format!(
                        "row {} column `{}`: level index {} out of range",
                        r,
                        schema.attribute(c).name,
                        v
                    )));
                }
            }
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate row ids".into()));
        }
        Ok(Dataset { schema, ids, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<LevelIdx>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[LevelIdx] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of one column in row order.
    pub fn column(&self, attr: usize) -> Vec<LevelIdx> {
        self.rows.iter().map(|r| r[attr]).collect()
    }

    // ------------------------------------------------------------------
    // CSV
    // ------------------------------------------------------------------

    /// Reads comma-separated data with a header row. Columns are matched to
    /// schema attributes by name, so column order is free and columns the
    /// schema does not mention are ignored — loading with a reduced schema
    /// projects the file onto it. A leading `id` column (when the schema has
    /// no attribute of that name) carries row ids; otherwise ids are
    /// assigned 0..n-1.
    pub fn from_csv_path(path: &Path, schema: &Schema) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, schema)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);

        let headers = csv.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Ingest {
                    row: 0,
                    column: (*name).to_string(),
                    message: "duplicate column".into(),
                });
            }
        }
        let id_col = (names.first() == Some(&"id") && schema.index_of("id").is_none())
            .then_some(0usize);
        let columns: Vec<usize> = schema
            .attributes()
            .iter()
            .map(|attr| {
                names.iter().position(|n| *n == attr.name).ok_or_else(|| Error::Ingest {
                    row: 0,
                    column: attr.name.clone(),
                    message: "column missing from header".into(),
                })
            })
            .collect::<Result<_>>()?;

        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (r, record) in csv.records().enumerate() {
            let record = record?;
            let row_no = r + 1;
            if record.len() != names.len() {
                return Err(Error::Ingest {
                    row: row_no,
                    column: String::new(),
                    message: format!("expected {} cells, found {}", names.len(), record.len()),
                });
            }
            let id = match id_col {
                Some(c) => {
                    let raw = record.get(c).unwrap_or("");
                    raw.parse::<u64>().map_err(|_| Error::Ingest {
                        row: row_no,
                        column: "id".into(),
                        message: format!("invalid id `{raw}`"),
                    })?
                }
                None => r as u64,
            };
            let mut row = Vec::with_capacity(schema.len());
            for (attr, &c) in schema.attributes().iter().zip(&columns) {
                let cell = record.get(c).unwrap_or("");
                if cell.is_empty() {
                    return Err(Error::Ingest {
                        row: row_no,
                        column: attr.name.clone(),
                        message: "missing cell".into(),
                    });
                }
                let level = attr.level_index(cell).ok_or_else(|| Error::Ingest {
                    row: row_no,
                    column: attr.name.clone(),
                    message: format!("unknown level `{cell}`"),
                })?;
                row.push(level);
            }
            ids.push(id);
            rows.push(row);
        }
        Dataset::new(Arc::new(schema.clone()), ids, rows)
    }

    /// Canonical CSV: `id` column first, LF line endings, no quoting
    /// (labels are restricted to `[A-Za-z0-9_-]`).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("id");
        for attr in self.schema.attributes() {
            out.push(',');
            out.push_str(&attr.name);
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.rows) {
            out.push_str(&id.to_string());
            for (c, &v) in row.iter().enumerate() {
                out.push(',');
                out.push_str(self.schema.attribute(c).level(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv_path(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    // ------------------------------------------------------------------
    // Sampling and column surgery
    // ------------------------------------------------------------------

    /// Uniform sample of `n` rows without replacement. Deterministic for a
    /// fixed seed; ids travel with their rows. `n` equal to the row count
    /// yields a permutation of the dataset.
    pub fn sample_rows(&self, n: usize, seed_value: u64) -> Result<Dataset> {
        if n > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot sample {n} rows from {}",
                self.len()
            )));
        }
        let mut rng = seed::rng(seed_value);
        let picked = index_sample(&mut rng, self.len(), n);
        let mut ids = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for i in picked {
            ids.push(self.ids[i]);
            rows.push(self.rows[i].clone());
        }
        Ok(Dataset { schema: Arc::clone(&self.schema), ids, rows })
    }

    /// Removes the named columns; ids are preserved.
    pub fn drop_columns(&self, names: &[&str]) -> Result<Dataset> {
        for name in names {
            self.schema.require(name)?;
        }
        let keep: Vec<usize> = (0..self.schema.len())
            .filter(|&i| !names.contains(&self.schema.attribute(i).name.as_str()))
            .collect();
        let attrs = keep.iter().map(|&i| self.schema.attribute(i).clone()).collect();
        let schema = Arc::new(Schema::new(attrs)?);
        let rows = self
            .rows
            .iter()
            .map(|row| keep.iter().map(|&i| row[i]).collect())
            .collect();
        Ok(Dataset { schema, ids: self.ids.clone(), rows })
    }

    /// Reorders/subsets columns to match `target` (matched by name; level
    /// sets must be identical). Used after feature selection to reduce every
    /// split to the selected schema.
    pub fn project(&self, target: &Schema) -> Result<Dataset> {
        let mut mapping = Vec::with_capacity(target.len());
        for attr in target.attributes() {
            let idx = self.schema.require(&attr.name)?;
            let own = self.schema.attribute(idx);
            if own.levels != attr.levels {
                return Err(Error::Schema(format!(
                    "level set mismatch for `{}` during projection",
                    attr.name
                )));
            }
            mapping.push(idx);
        }
        let rows = self
            .rows
            .iter()
            .map(|row| mapping.iter().map(|&i| row[i]).collect())
            .collect();
        Ok(Dataset {
            schema: Arc::new(target.clone()),
            ids: self.ids.clone(),
            rows,
        })
    }

    /// Concatenates two datasets over the same schema. Ids must stay unique.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if *self.schema != *other.schema {
            return Err(Error::Schema("concat requires identical schemas".into()));
        }
        let mut ids = self.ids.clone();
        ids.extend_from_slice(&other.ids);
        let mut rows = self.rows.clone();
        rows.extend_from_slice(&other.rows);
        Dataset::new(Arc::clone(&self.schema), ids, rows)
    }
}
