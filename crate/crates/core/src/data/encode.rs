//! One-hot / bin-indicator / standardization encoding of [`Dataset`]s.
//!
//! An [`Encoder`] is fitted on training rows and then applied unchanged to
//! any other rows of the same schema, so test data never influences the
//! standardization statistics or the column set.

use serde::{Deserialize, Serialize};

use crate::data::dataset::{Dataset, Value};
use crate::data::matrix::DesignMatrix;
use crate::data::schema::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ColumnSource {
    /// 1 when categorical feature `feature` takes level `level`.
    Level { feature: usize, level: usize },
    /// 1 when binned continuous feature `feature` falls in bin `bin`.
    Bin { feature: usize, bin: usize },
    /// `(x - mean) / scale`
    Standardized { feature: usize, mean: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub name: String,
    pub source: ColumnSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    schema: FeatureSchema,
    columns: Vec<EncodedColumn>,
    /// Non-fatal notes from fitting, such as columns removed for being constant.
    pub warnings: Vec<String>,
}

fn column_label(s: &str) -> String {
    s.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect()
}

impl Encoder {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Data("cannot encode an empty dataset".into()));
        }
        let schema = dataset.schema().clone();
        let rows = dataset.rows();
        let mut columns = Vec::new();
        let mut warnings = Vec::new();
        for (f, spec) in schema.features.iter().enumerate() {
            match &spec.kind {
                FeatureKind::Categorical { levels, .. } => {
                    let mut seen = vec![false; levels.len()];
                    for r in rows {
                        match r[f] {
                            Value::Level(l) if l < levels.len() => seen[l] = true,
                            _ => {
                                return Err(Error::Data(format!(
                                    "`{}` holds a level absent from the schema",
                                    spec.name
                                )))
                            }
                        }
                    }
                    for (l, level) in levels.iter().enumerate().skip(1) {
                        let name = format!("{}_{}", spec.name, column_label(level));
                        if !seen[l] {
                            warnings.push(format!("dropped constant-zero column `{name}`"));
                            continue;
                        }
                        columns.push(EncodedColumn { name, source: ColumnSource::Level { feature: f, level: l } });
                    }
                }
                FeatureKind::Continuous { bins: Some(bins), .. } => {
                    let mut seen = vec![false; bins.labels.len()];
                    for r in rows {
                        seen[bins.bin_of(number(r[f], &spec.name)?)] = true;
                    }
                    for (b, label) in bins.labels.iter().enumerate().skip(1) {
                        let name = format!("{}_{}", spec.name, column_label(label));
                        if !seen[b] {
                            warnings.push(format!("dropped constant-zero column `{name}`"));
                            continue;
                        }
                        columns.push(EncodedColumn { name, source: ColumnSource::Bin { feature: f, bin: b } });
                    }
                }
                FeatureKind::Continuous { bins: None, .. } => {
                    let xs: Vec<f64> = rows.iter().map(|r| number(r[f], &spec.name)).collect::<Result<_>>()?;
                    let n = xs.len() as f64;
                    let mean = xs.iter().sum::<f64>() / n;
                    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    if sd <= 1e-12 * mean.abs().max(1.0) {
                        // scale clamps to 1, leaving an all-zero column, which is removed
                        warnings.push(format!("dropped constant column `{}`", spec.name));
                        continue;
                    }
                    columns.push(EncodedColumn {
                        name: spec.name.clone(),
                        source: ColumnSource::Standardized { feature: f, mean, scale: sd },
                    });
                }
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        if columns.is_empty() {
            return Err(Error::Data("encoding produced no informative columns".into()));
        }
        Ok(Self { schema, columns, warnings })
    }

    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<DesignMatrix> {
        if dataset.is_empty() {
            return Err(Error::Data("cannot encode an empty dataset".into()));
        }
        if dataset.schema() != &self.schema {
            return Err(Error::Data("dataset schema differs from the encoder's".into()));
        }
        let p = self.columns.len();
        let mut values = Vec::with_capacity(dataset.len() * p);
        for row in dataset.rows() {
            for col in &self.columns {
                let v = match col.source {
                    ColumnSource::Level { feature, level } => match row[feature] {
                        Value::Level(l) => f64::from(u8::from(l == level)),
                        _ => return Err(Error::Data(format!("`{}` is not categorical", col.name))),
                    },
                    ColumnSource::Bin { feature, bin } => {
                        let x = number(row[feature], &col.name)?;
                        let bins = match &self.schema.features[feature].kind {
                            FeatureKind::Continuous { bins: Some(b), .. } => b,
                            _ => unreachable!("bin column refers to a binned feature"),
                        };
                        f64::from(u8::from(bins.bin_of(x) == bin))
                    }
                    ColumnSource::Standardized { feature, mean, scale } => {
                        (number(row[feature], &col.name)? - mean) / scale
                    }
                };
                values.push(v);
            }
        }
        DesignMatrix::new(self.column_names(), values, dataset.labels().to_vec())
    }
}

fn number(v: Value, name: &str) -> Result<f64> {
    match v {
        Value::Number(x) => Ok(x),
        Value::Level(_) => Err(Error::Data(format!("`{name}` is not continuous"))),
    }
}

/// Fits an encoder on `dataset` and encodes it.
pub fn encode(dataset: &Dataset) -> Result<DesignMatrix> {
    Encoder::fit(dataset)?.transform(dataset)
}
