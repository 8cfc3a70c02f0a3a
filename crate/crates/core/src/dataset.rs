//! Labeled feature tables and their CSV interchange format.
//!
//! A feature matrix file has one header row (feature names, then `user_id`
//! and `label`) and one row per segment in segment order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Features of one segment plus its label and owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub segment_id: String,
    pub user_id: String,
    pub label: String,
    pub values: Vec<f64>,
    /// Segment path length in meters, when known. Not part of the CSV schema.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
}

/// Rows sharing one column schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    pub names: Vec<String>,
    pub vectors: Vec<FeatureVector>,
}

impl FeatureSet {
    pub fn new(names: Vec<String>, vectors: Vec<FeatureVector>) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.values.len() != names.len()) {
            return Err(Error::domain(format!(
                "row `{}` has {} values for {} columns",
                v.segment_id,
                v.values.len(),
                names.len()
            )));
        }
        Ok(Self { names, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.vectors.iter().map(|v| v.values[j]).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.vectors.iter().map(|v| v.label.as_str()).collect()
    }

    pub fn user_ids(&self) -> Vec<&str> {
        self.vectors.iter().map(|v| v.user_id.as_str()).collect()
    }

    /// Distinct labels in lexicographic order.
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.vectors.iter().map(|v| v.label.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> FeatureSet {
        FeatureSet {
            names: self.names.clone(),
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
        }
    }

    /// Same rows restricted to the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureSet> {
        let idx: Vec<usize> = names.iter().map(|n| self.index_of(n)).collect::<Result<_>>()?;
        Ok(FeatureSet {
            names: names.to_vec(),
            vectors: self
                .vectors
                .iter()
                .map(|v| FeatureVector {
                    values: idx.iter().map(|&j| v.values[j]).collect(),
                    ..v.clone()
                })
                .collect(),
        })
    }

    /// Row-major copy of the values.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|v| v.values.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_csv_inner(w, None)
    }

    /// Feature matrix plus a trailing `removal_reason` column.
    pub fn write_audit_csv<W: Write>(&self, w: W, reasons: &[String]) -> Result<()> {
        if reasons.len() != self.len() {
            return Err(Error::domain("one removal reason per row required"));
        }
        self.write_csv_inner(w, Some(reasons))
    }

    fn write_csv_inner<W: Write>(&self, w: W, reasons: Option<&[String]>) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.extend(["user_id", "label"]);
        if reasons.is_some() {
            header.push("removal_reason");
        }
        wr.write_record(&header)?;
        for (i, v) in self.vectors.iter().enumerate() {
            let mut rec: Vec<String> = v.values.iter().map(|x| x.to_string()).collect();
            rec.push(v.user_id.clone());
            rec.push(v.label.clone());
            if let Some(r) = reasons {
                rec.push(r[i].clone());
            }
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read a feature matrix. Every column other than `user_id`, `label` and
    /// `removal_reason` is a feature. Rows get ids `row<N>` (zero-based).
    pub fn read_csv<R: Read>(r: R) -> Result<FeatureSet> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        let pos = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let user_col = pos("user_id")?;
        let label_col = pos("label")?;
        let feature_cols: Vec<usize> = (0..header.len())
            .filter(|&j| !matches!(&header[j], "user_id" | "label" | "removal_reason"))
            .collect();
        let names = feature_cols.iter().map(|&j| header[j].to_string()).collect();
        let mut vectors = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let values = feature_cols
                .iter()
                .map(|&j| {
                    rec[j].trim().parse::<f64>().map_err(|_| {
                        Error::Format(format!("row {}: column `{}` is not a number: `{}`", i + 1, &header[j], &rec[j]))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            vectors.push(FeatureVector {
                segment_id: format!("row{i}"),
                user_id: rec[user_col].to_string(),
                label: rec[label_col].to_string(),
                values,
                distance_m: None,
            });
        }
        FeatureSet::new(names, vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureSet {
        let names = vec!["a".to_string(), "b".to_string()];
        let rows = vec![
            FeatureVector {
                segment_id: "s0".into(),
                user_id: "u1".into(),
                label: "walk".into(),
                values: vec![1.5, -2.0],
                distance_m: None,
            },
            FeatureVector {
                segment_id: "s1".into(),
                user_id: "u2".into(),
                label: "bus".into(),
                values: vec![0.1, 1e-300],
                distance_m: None,
            },
        ];
        FeatureSet::new(names, rows).unwrap()
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let set = small();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("a,b,user_id,label\n1.5,-2,u1,walk\n"));
        let back = FeatureSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back.names, set.names);
        assert_eq!(back.matrix(), set.matrix());
        assert_eq!(back.labels(), set.labels());
    }

    #[test]
    fn audit_file_reads_back_as_matrix() {
        let set = small();
        let mut buf = Vec::new();
        set.write_audit_csv(&mut buf, &["x".into(), "y".into()]).unwrap();
        let back = FeatureSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back.names, set.names);
    }

    #[test]
    fn missing_label_column_is_named() {
        let err = FeatureSet::read_csv("a,user_id\n1,u\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "label"));
    }

    #[test]
    fn select_and_subset() {
        let set = small();
        let sel = set.select(&["b".to_string()]).unwrap();
        assert_eq!(sel.matrix(), vec![vec![-2.0], vec![1e-300]]);
        assert!(matches!(set.select(&["zz".to_string()]), Err(Error::MissingColumn(_))));
        assert_eq!(set.subset(&[1]).labels(), vec!["bus"]);
        assert_eq!(set.classes(), vec!["bus", "walk"]);
    }
}
