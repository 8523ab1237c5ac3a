//! Core data containers: selected feature sets and labeled datasets.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// A finite set of feature indices selected by a model.
///
/// Indices are kept sorted and deduplicated; the upper bound `p` is checked
/// at the operations that know the ambient dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(Vec<usize>);

impl FeatureSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        FeatureSet(v)
    }

    pub fn empty() -> Self {
        FeatureSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Largest index plus one, or 0 for the empty set.
    pub fn min_dimension(&self) -> usize {
        self.0.last().map_or(0, |&m| m + 1)
    }

    /// Check that every index lies in `[0, p)`.
    pub fn check_dimension(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&max) if max >= p => Err(Error::IndexOutOfRange { index: max, p }),
            _ => Ok(()),
        }
    }

    /// Number of common indices (both sets sorted, two-pointer scan).
    pub fn intersection_size(&self, other: &FeatureSet) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Indices in `self` but not in `other`.
    pub fn difference(&self, other: &FeatureSet) -> Vec<usize> {
        self.0
            .iter()
            .copied()
            .filter(|&x| !other.contains(x))
            .collect()
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        FeatureSet::new(iter)
    }
}

/// A numeric feature matrix (`n x p`) with binary class labels.
///
/// Rows are observations, columns are features; labels are 0/1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<u8>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Vec<u8>, feature_names: Option<Vec<String>>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidData(format!(
                "matrix must be non-empty, got {} x {}",
                x.nrows(),
                x.ncols()
            )));
        }
        if y.len() != x.nrows() {
            return Err(Error::InvalidData(format!(
                "label length {} does not match row count {}",
                y.len(),
                x.nrows()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite entry {v} in matrix")));
        }
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidData(format!("label {bad} is not in {{0, 1}}")));
        }
        if let Some(names) = &feature_names {
            if names.len() != x.ncols() {
                return Err(Error::InvalidData(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    x.ncols()
                )));
            }
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.x[(row, col)]
    }

    /// Copy out one observation as a dense row.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p()).map(|j| self.x[(i, j)]).collect()
    }

    /// New dataset containing only the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(rows.len(), self.p(), |i, j| self.x[(rows[i], j)]);
        let y = rows.iter().map(|&r| self.y[r]).collect();
        Dataset {
            x,
            y,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Fraction of labels equal to 1.
    pub fn positive_rate(&self) -> f64 {
        self.y.iter().map(|&l| l as f64).sum::<f64>() / self.n() as f64
    }

    /// Write as CSV: one header row, feature columns first, label column `y` last.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let names: Vec<String> = match &self.feature_names {
            Some(names) => names.clone(),
            None => (0..self.p()).map(|j| format!("x{j}")).collect(),
        };
        let mut header = names;
        header.push("y".to_string());
        w.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(self.p() + 1);
        for i in 0..self.n() {
            record.clear();
            for j in 0..self.p() {
                record.push(format!("{}", self.x[(i, j)]));
            }
            record.push(format!("{}", self.y[i]));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Read a CSV with a header row; `label` names the 0/1 class column, all
    /// other columns are parsed as numeric features in file order.
    pub fn read_csv<R: std::io::Read>(reader: R, label: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let label_idx = headers
            .iter()
            .position(|h| h == label)
            .ok_or_else(|| Error::InvalidData(format!("label column '{label}' not found")))?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_idx)
            .map(|(_, h)| h.to_string())
            .collect();
        let p = feature_names.len();
        if p == 0 {
            return Err(Error::InvalidData("no feature columns".to_string()));
        }

        let mut values: Vec<f64> = Vec::new();
        let mut y: Vec<u8> = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != p + 1 {
                return Err(Error::InvalidData(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    record.len(),
                    p + 1
                )));
            }
            for (i, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidData(format!("row {}: cannot parse '{field}'", line + 2))
                })?;
                if i == label_idx {
                    if v == 0.0 {
                        y.push(0);
                    } else if v == 1.0 {
                        y.push(1);
                    } else {
                        return Err(Error::InvalidData(format!(
                            "row {}: label {v} is not 0 or 1",
                            line + 2
                        )));
                    }
                } else {
                    values.push(v);
                }
            }
        }
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidData("no data rows".to_string()));
        }
        let x = DMatrix::from_row_slice(n, p, &values);
        Dataset::new(x, y, Some(feature_names))
    }

    pub fn read_csv_file(path: &Path, label: &str) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_set_sorts_and_dedups() {
        let s = FeatureSet::new([3, 1, 3, 2]);
        assert_eq!(s.as_slice(), &[1, 2, 3]);
        assert_eq!(s.len(), 3);
        assert!(s.contains(2));
        assert!(!s.contains(0));
    }

    #[test]
    fn intersection_and_difference() {
        let a = FeatureSet::new([1, 2, 5]);
        let b = FeatureSet::new([2, 3, 5]);
        assert_eq!(a.intersection_size(&b), 2);
        assert_eq!(a.difference(&b), vec![1]);
        assert_eq!(b.difference(&a), vec![3]);
        assert_eq!(a.intersection_size(&FeatureSet::empty()), 0);
    }

    #[test]
    fn dimension_check() {
        let s = FeatureSet::new([0, 9]);
        assert!(s.check_dimension(10).is_ok());
        assert!(matches!(
            s.check_dimension(9),
            Err(Error::IndexOutOfRange { index: 9, p: 9 })
        ));
    }

    #[test]
    fn dataset_rejects_bad_labels_and_nan() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(Dataset::new(x.clone(), vec![0, 2], None).is_err());
        assert!(Dataset::new(x.clone(), vec![0], None).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 3.0, 4.0]);
        assert!(Dataset::new(bad, vec![0, 1], None).is_err());
        assert!(Dataset::new(x, vec![0, 1], None).is_ok());
    }

    #[test]
    fn subset_rows_picks_rows_in_order() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let d = Dataset::new(x, vec![0, 1, 0], None).unwrap();
        let s = d.subset_rows(&[2, 0]);
        assert_eq!(s.n(), 2);
        assert_eq!(s.row(0), vec![5.0, 6.0]);
        assert_eq!(s.row(1), vec![1.0, 2.0]);
        assert_eq!(s.labels(), &[0, 0]);
    }

    #[test]
    fn csv_round_trip() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.5, -3.0, 0.125, 5.0, 6.0]);
        let d = Dataset::new(x, vec![1, 0], None).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,x2,y\n"));
        let back = Dataset::read_csv(buf.as_slice(), "y").unwrap();
        assert_eq!(back.n(), 2);
        assert_eq!(back.p(), 3);
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.value(1, 0), 0.125);
    }

    #[test]
    fn csv_rejects_non_binary_label() {
        let text = "a,y\n1.0,2\n";
        assert!(Dataset::read_csv(text.as_bytes(), "y").is_err());
    }

    #[test]
    fn csv_label_column_anywhere() {
        let text = "y,a,b\n1,2.0,3.0\n0,4.0,5.0\n";
        let d = Dataset::read_csv(text.as_bytes(), "y").unwrap();
        assert_eq!(d.p(), 2);
        assert_eq!(d.labels(), &[1, 0]);
        assert_eq!(d.value(0, 0), 2.0);
        assert_eq!(d.feature_names().unwrap(), &["a".to_string(), "b".to_string()]);
    }
}
