use std::path::Path;

use crate::error::{Error, Result};

/// Numeric n×p feature matrix (row-major) with named columns and 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    column_names: Vec<String>,
    values: Vec<f64>,
    labels: Vec<u8>,
}

impl DesignMatrix {
    pub fn new(column_names: Vec<String>, values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let p = column_names.len();
        if values.len() != p * labels.len() {
            return Err(Error::Data(format!(
                "{} values do not fill {} rows × {p} columns",
                values.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Data(format!("label {bad} is not 0/1")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("matrix holds a non-finite value".into()));
        }
        Ok(Self { column_names, values, labels })
    }

    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let p = column_names.len();
        if let Some(r) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::BadRow { row: r, reason: format!("expected {p} values") });
        }
        Self::new(column_names, rows.concat(), labels)
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// `(negatives, positives)`
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let p = self.n_cols();
        let mut values = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            column_names: self.column_names.clone(),
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Projects onto the named columns, in the order given.
    pub fn select_columns(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_names.iter().position(|c| c == n).ok_or_else(|| Error::ColumnMismatch {
                    expected: names.to_vec(),
                    found: self.column_names.clone(),
                })
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.n_rows() * idx.len());
        for r in self.rows() {
            values.extend(idx.iter().map(|&j| r[j]));
        }
        Ok(Self { column_names: names.to_vec(), values, labels: self.labels.clone() })
    }

    /// Appends rows (same columns).
    pub fn push_row(&mut self, row: &[f64], label: u8) {
        assert_eq!(row.len(), self.n_cols());
        self.values.extend_from_slice(row);
        self.labels.push(label);
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Self> {
        Self::new(self.column_names.clone(), self.values.clone(), labels)
    }

    /// Debug dump: header of column names plus a trailing `label` column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.column_names.clone();
        header.push("label".into());
        w.write_record(&header)?;
        for (r, &l) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            rec.push(l.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m() -> DesignMatrix {
        DesignMatrix::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec![0, 1, 0],
        )
        .unwrap()
    }

    #[test]
    fn selections() {
        let m = m();
        let r = m.select_rows(&[2, 0]);
        assert_eq!(r.row(0), &[5.0, 6.0]);
        assert_eq!(r.labels(), &[0, 0]);
        let c = m.select_columns(&["b".into()]).unwrap();
        assert_eq!(c.column(0), vec![2.0, 4.0, 6.0]);
        assert!(m.select_columns(&["z".into()]).is_err());
        assert_eq!(m.class_counts(), (2, 1));
    }

    #[test]
    fn validates_shape_and_labels() {
        assert!(DesignMatrix::new(vec!["a".into()], vec![1.0, 2.0], vec![0]).is_err());
        assert!(DesignMatrix::new(vec!["a".into()], vec![1.0], vec![2]).is_err());
        assert!(DesignMatrix::new(vec!["a".into()], vec![f64::NAN], vec![0]).is_err());
    }
}
