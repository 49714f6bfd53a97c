use std::collections::HashMap;
use std::path::Path;

use crate::data::schema::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

/// One raw feature value: a categorical level index or a real number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Level(usize),
    Number(f64),
}

/// Labeled crash records conforming to a [`FeatureSchema`]. Labels are
/// 1 for serious and 0 for non-serious injuries.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    rows: Vec<Vec<Value>>,
    labels: Vec<u8>,
}

/// Output of [`load_csv`]: the retained records and how many rows were
/// discarded for a missing or unparseable value.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Vec<Vec<Value>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, (row, &label)) in rows.iter().zip(&labels).enumerate() {
            if label > 1 {
                return Err(Error::BadRow { row: i, reason: format!("label {label} is not 0/1") });
            }
            conforms(&schema, row).map_err(|reason| Error::BadRow { row: i, reason })?;
        }
        Ok(Self { schema, rows, labels })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Writes the records as CSV with the schema's feature columns followed
    /// by the target column, using level names and the target vocabulary.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.schema.features.iter().map(|f| f.name.as_str()).collect();
        header.push(&self.schema.target.name);
        w.write_record(&header)?;
        for (row, &label) in self.rows.iter().zip(&self.labels) {
            let mut record: Vec<String> = row
                .iter()
                .zip(&self.schema.features)
                .map(|(v, f)| match (v, &f.kind) {
                    (Value::Level(i), FeatureKind::Categorical { levels, .. }) => levels[*i].clone(),
                    (Value::Number(x), _) => x.to_string(),
                    _ => unreachable!("row conforms to schema"),
                })
                .collect();
            record.push(if label == 1 {
                self.schema.target.positive.clone()
            } else {
                self.schema.target.negative.clone()
            });
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn conforms(schema: &FeatureSchema, row: &[Value]) -> std::result::Result<(), String> {
    if row.len() != schema.features.len() {
        return Err(format!("{} values for {} features", row.len(), schema.features.len()));
    }
    for (v, f) in row.iter().zip(&schema.features) {
        match (v, &f.kind) {
            (Value::Level(i), FeatureKind::Categorical { levels, .. }) => {
                if *i >= levels.len() {
                    return Err(format!("`{}` has no level #{i}", f.name));
                }
            }
            (Value::Number(x), FeatureKind::Continuous { min, max, .. }) => {
                if !(x.is_finite() && *x >= *min && *x <= *max) {
                    return Err(format!("`{}` value {x} outside [{min}, {max}]", f.name));
                }
            }
            _ => return Err(format!("`{}` value has the wrong kind", f.name)),
        }
    }
    Ok(())
}

fn is_missing(raw: &str) -> bool {
    matches!(raw.to_ascii_lowercase().as_str(), "" | "na" | "n/a" | "nan" | "null" | "none" | "?")
}

/// Reads crash records from a comma-delimited UTF-8 file with a header row.
///
/// Only schema columns are kept, in schema order; extra columns are ignored.
/// A row with a missing, unknown or out-of-range feature value, or an empty
/// target, is dropped and counted. A non-empty target outside the schema's
/// two-word vocabulary is an error naming the (1-based, header excluded) row.
pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<LoadReport> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: HashMap<String, usize> = reader
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect();
    let mut positions = Vec::with_capacity(schema.features.len());
    for f in &schema.features {
        positions.push(*header.get(&f.name).ok_or_else(|| Error::MissingColumn(f.name.clone()))?);
    }
    let target_pos = *header
        .get(&schema.target.name)
        .ok_or_else(|| Error::MissingColumn(schema.target.name.clone()))?;

    let positive = schema.target.positive.trim().to_lowercase();
    let negative = schema.target.negative.trim().to_lowercase();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_number = i + 1;
        let raw_target = record.get(target_pos).unwrap_or("");
        if is_missing(raw_target) {
            dropped += 1;
            continue;
        }
        let label = match raw_target.to_lowercase() {
            t if t == positive => 1,
            t if t == negative => 0,
            _ => {
                return Err(Error::BadRow {
                    row: row_number,
                    reason: format!(
                        "target `{raw_target}` is neither `{}` nor `{}`",
                        schema.target.positive, schema.target.negative
                    ),
                })
            }
        };
        let parsed: Option<Vec<Value>> = schema
            .features
            .iter()
            .zip(&positions)
            .map(|(f, &pos)| {
                let raw = record.get(pos).unwrap_or("");
                if is_missing(raw) {
                    return None;
                }
                match &f.kind {
                    FeatureKind::Categorical { .. } => f.level_index(raw).map(Value::Level),
                    FeatureKind::Continuous { min, max, .. } => raw
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite() && x >= min && x <= max)
                        .map(Value::Number),
                }
            })
            .collect();
        match parsed {
            Some(row) => {
                rows.push(row);
                labels.push(label);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing or unparseable values");
    }
    Ok(LoadReport { dataset: Dataset::new(schema.clone(), rows, labels)?, dropped_rows: dropped })
}
