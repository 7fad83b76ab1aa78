//! Descriptor tables (dense feature matrices or sparse ECFP bit lists) and
//! the assembled feature/target matrices used for modelling.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{format_value, normalize_name, open_file, parse_cell, DataError, FoldAssignment};
use crate::chem::{Fingerprint, FingerprintError};

pub const ECFP_WIDTH: u32 = 2000;

/// Feature count of each published representation.
pub fn expected_dimension(representation: &str) -> Option<usize> {
    match normalize_name(representation).as_str() {
        "percepta" => Some(38),
        "rdkit" => Some(96),
        "ecfp" => Some(ECFP_WIDTH as usize),
        "cddd" => Some(512),
        "molbert" => Some(768),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorTable {
    pub representation: String,
    pub compound_ids: Vec<String>,
    /// Fold label per row when the file carries one.
    pub folds: Vec<Option<u8>>,
    pub feature_names: Vec<String>,
    /// Rows are compounds; missing cells are NaN.
    pub x: DMatrix<f64>,
    /// Present for sparse bit-list tables.
    pub fingerprints: Option<Vec<Fingerprint>>,
}

impl DescriptorTable {
    pub fn dense(
        representation: &str,
        compound_ids: Vec<String>,
        feature_names: Vec<String>,
        x: DMatrix<f64>,
    ) -> Result<DescriptorTable, DataError> {
        if x.nrows() != compound_ids.len() {
            return Err(DataError::DimensionMismatch { expected: compound_ids.len(), got: x.nrows() });
        }
        if x.ncols() != feature_names.len() {
            return Err(DataError::DimensionMismatch { expected: feature_names.len(), got: x.ncols() });
        }
        check_unique(&compound_ids)?;
        let n = compound_ids.len();
        Ok(DescriptorTable {
            representation: representation.to_string(),
            compound_ids,
            folds: vec![None; n],
            feature_names,
            x,
            fingerprints: None,
        })
    }

    /// Dense 0/1 expansion of folded fingerprints.
    pub fn from_fingerprints(
        representation: &str,
        compound_ids: Vec<String>,
        fingerprints: Vec<Fingerprint>,
        width: u32,
    ) -> Result<DescriptorTable, DataError> {
        check_unique(&compound_ids)?;
        let n = compound_ids.len();
        let mut x = DMatrix::zeros(n, width as usize);
        for (i, fp) in fingerprints.iter().enumerate() {
            for &b in fp.bits() {
                if b >= width {
                    return Err(DataError::Invalid(FingerprintError::BitOutOfRange { bit: b, width }.to_string()));
                }
                x[(i, b as usize)] = 1.0;
            }
        }
        Ok(DescriptorTable {
            representation: representation.to_string(),
            compound_ids,
            folds: vec![None; n],
            feature_names: (0..width).map(|b| format!("bit_{b}")).collect(),
            x,
            fingerprints: Some(fingerprints),
        })
    }

    pub fn n_compounds(&self) -> usize {
        self.compound_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn check_dimension(&self) -> Result<(), DataError> {
        match expected_dimension(&self.representation) {
            Some(d) if d != self.n_features() => Err(DataError::DimensionMismatch { expected: d, got: self.n_features() }),
            _ => Ok(()),
        }
    }

    /// Fold labels from the file as an assignment; rows without a label are skipped.
    pub fn fold_assignment(&self) -> Result<FoldAssignment, DataError> {
        FoldAssignment::from_pairs(
            self.compound_ids.iter().zip(&self.folds).filter_map(|(id, f)| f.map(|f| (id.clone(), f as i64))),
        )
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.compound_ids.iter().position(|c| c == id)
    }

    /// Subset of columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DescriptorTable {
        let x = DMatrix::from_fn(self.x.nrows(), cols.len(), |i, j| self.x[(i, cols[j])]);
        DescriptorTable {
            representation: self.representation.clone(),
            compound_ids: self.compound_ids.clone(),
            folds: self.folds.clone(),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            x,
            fingerprints: None,
        }
    }
}

fn check_unique(ids: &[String]) -> Result<(), DataError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(DataError::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

fn parse_fold(raw: &str, row: usize, column: &str) -> Result<Option<u8>, DataError> {
    let perr = || DataError::Parse { row, column: column.to_string(), value: raw.to_string() };
    match parse_cell(raw).map_err(|_| perr())? {
        None => Ok(None),
        Some(f) if f.fract() == 0.0 && (0.0..5.0).contains(&f) => Ok(Some(f as u8)),
        Some(_) => Err(perr()),
    }
}

fn parse_bits(raw: &str, row: usize, column: &str) -> Result<Vec<u32>, DataError> {
    raw.split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| DataError::Parse { row, column: column.to_string(), value: raw.to_string() }))
        .collect()
}

const ID_NAMES: &[&str] = &["compoundid", "compound", "id", "molecule", "moleculeid", "name", "compoundname", "mculeid"];

/// Reads a descriptor CSV. The id column is found by name (first column as
/// fallback) and an optional fold column by a name containing `fold`. Tables
/// whose representation is `ecfp` carry active-bit lists in their third column.
pub fn read_descriptors<R: Read>(reader: R, representation: &str) -> Result<DescriptorTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let norm: Vec<String> = headers.iter().map(normalize_name).collect();
    let id_col = norm.iter().position(|n| ID_NAMES.contains(&n.as_str())).unwrap_or(0);
    let fold_col = norm.iter().position(|n| n.contains("fold"));
    let sparse = normalize_name(representation) == "ecfp";
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != id_col && Some(c) != fold_col && !norm[c].is_empty() && !norm[c].starts_with("unnamed"))
        .filter(|&c| !norm[c].contains("smiles"))
        .collect();
    if sparse && headers.len() < 3 {
        return Err(DataError::Schema { missing: vec!["bit list (column 3)".into()], extra: Vec::new() });
    }

    let mut ids = Vec::new();
    let mut folds = Vec::new();
    let mut dense_rows: Vec<Vec<f64>> = Vec::new();
    let mut fps = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        ids.push(rec.get(id_col).unwrap_or("").trim().to_string());
        folds.push(match fold_col {
            Some(c) => parse_fold(rec.get(c).unwrap_or(""), row, &headers[c])?,
            None => None,
        });
        if sparse {
            let bits = parse_bits(rec.get(2).unwrap_or(""), row, &headers[2])?;
            let fp = Fingerprint::with_width(bits, ECFP_WIDTH).map_err(|e| DataError::Invalid(format!("row {row}: {e}")))?;
            fps.push(fp);
        } else {
            let mut vals = Vec::with_capacity(feature_cols.len());
            for &c in &feature_cols {
                let raw = rec.get(c).unwrap_or("");
                let v = parse_cell(raw)
                    .map_err(|_| DataError::Parse { row, column: headers[c].to_string(), value: raw.to_string() })?;
                vals.push(v.unwrap_or(f64::NAN));
            }
            dense_rows.push(vals);
        }
    }
    let mut table = if sparse {
        DescriptorTable::from_fingerprints(representation, ids, fps, ECFP_WIDTH)?
    } else {
        let n = dense_rows.len();
        let d = feature_cols.len();
        let x = DMatrix::from_fn(n, d, |i, j| dense_rows[i][j]);
        let names = feature_cols.iter().map(|&c| headers[c].to_string()).collect();
        DescriptorTable::dense(representation, ids, names, x)?
    };
    table.folds = folds;
    Ok(table)
}

pub fn load_descriptors(path: impl AsRef<Path>, representation: &str) -> Result<DescriptorTable, DataError> {
    read_descriptors(open_file(path.as_ref())?, representation)
}

pub fn write_descriptors<W: Write>(table: &DescriptorTable, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let fold = |i: usize| table.folds[i].map(|f| f.to_string()).unwrap_or_default();
    if let Some(fps) = &table.fingerprints {
        w.write_record(["compound_id", "fold", "bits"])?;
        for (i, fp) in fps.iter().enumerate() {
            let bits: Vec<String> = fp.bits().iter().map(|b| b.to_string()).collect();
            w.write_record([table.compound_ids[i].clone(), fold(i), bits.join(" ")])?;
        }
    } else {
        let mut header = vec!["compound_id".to_string(), "fold".to_string()];
        header.extend(table.feature_names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..table.n_compounds() {
            let mut rec = vec![table.compound_ids[i].clone(), fold(i)];
            rec.extend((0..table.n_features()).map(|j| {
                let v = table.x[(i, j)];
                format_value((!v.is_nan()).then_some(v))
            }));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

/// Features, targets and folds aligned row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub representation: String,
    pub compound_ids: Vec<String>,
    pub feature_names: Vec<String>,
    /// n × d, NaN marks a missing descriptor cell.
    pub x: DMatrix<f64>,
    pub target_names: Vec<String>,
    /// n × T, NaN marks a missing measurement.
    pub y: DMatrix<f64>,
    pub folds: Vec<u8>,
}

impl ModelData {
    /// Joins a descriptor table with a target matrix on compound id. Compounds
    /// lacking a fold or a target row are dropped; descriptor order is kept.
    pub fn assemble(
        table: &DescriptorTable,
        target_ids: &[String],
        target_names: Vec<String>,
        targets: &DMatrix<f64>,
        folds: &FoldAssignment,
    ) -> Result<ModelData, DataError> {
        if targets.nrows() != target_ids.len() {
            return Err(DataError::DimensionMismatch { expected: target_ids.len(), got: targets.nrows() });
        }
        if targets.ncols() != target_names.len() {
            return Err(DataError::DimensionMismatch { expected: target_names.len(), got: targets.ncols() });
        }
        let target_row: HashMap<&str, usize> = target_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut rows = Vec::new();
        for (i, id) in table.compound_ids.iter().enumerate() {
            if let (Some(&t), Some(f)) = (target_row.get(id.as_str()), folds.fold_of(id)) {
                rows.push((i, t, f));
            }
        }
        let n = rows.len();
        let x = DMatrix::from_fn(n, table.n_features(), |r, j| table.x[(rows[r].0, j)]);
        let y = DMatrix::from_fn(n, target_names.len(), |r, k| targets[(rows[r].1, k)]);
        Ok(ModelData {
            representation: table.representation.clone(),
            compound_ids: rows.iter().map(|r| table.compound_ids[r.0].clone()).collect(),
            feature_names: table.feature_names.clone(),
            x,
            target_names,
            y,
            folds: rows.iter().map(|r| r.2).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.compound_ids.len()
    }

    pub fn rows_in_folds(&self, folds: &[u8]) -> Vec<usize> {
        (0..self.n()).filter(|&i| folds.contains(&self.folds[i])).collect()
    }

    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.target_names.iter().position(|t| t == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip() {
        let text = "ID,fold,a,b\nx,0,1.5,\ny,3,2,-1e-3\n";
        let t = read_descriptors(text.as_bytes(), "rdkit").unwrap();
        assert_eq!(t.feature_names, vec!["a", "b"]);
        assert_eq!(t.folds, vec![Some(0), Some(3)]);
        assert!(t.x[(0, 1)].is_nan());
        let mut buf = Vec::new();
        write_descriptors(&t, &mut buf).unwrap();
        let back = read_descriptors(buf.as_slice(), "rdkit").unwrap();
        assert_eq!(back.compound_ids, t.compound_ids);
        assert_eq!(back.x[(1, 1)], -1e-3);
        assert!(matches!(t.check_dimension(), Err(DataError::DimensionMismatch { expected: 96, .. })));
    }

    #[test]
    fn ecfp_bits() {
        let text = "compound_id,fold,bits\nx,1,3 17 1999\ny,2,\n";
        let t = read_descriptors(text.as_bytes(), "ecfp").unwrap();
        let fps = t.fingerprints.as_ref().unwrap();
        assert_eq!(fps[0].bits(), &[3, 17, 1999]);
        assert!(fps[1].is_empty());
        assert_eq!(t.x.ncols(), 2000);
        assert_eq!(t.x[(0, 17)], 1.0);
        assert!(read_descriptors("compound_id,fold,bits\nx,1,2000\n".as_bytes(), "ecfp").is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(matches!(
            read_descriptors("id,a\nx,1\nx,2\n".as_bytes(), "rdkit"),
            Err(DataError::DuplicateId(_))
        ));
    }

    #[test]
    fn assemble_joins_on_id() {
        let t = read_descriptors("id,fold,a\nx,0,1\ny,1,2\nz,2,3\n".as_bytes(), "custom").unwrap();
        let folds = t.fold_assignment().unwrap();
        let ids = vec!["z".to_string(), "x".to_string()];
        let y = DMatrix::from_row_slice(2, 1, &[30.0, 10.0]);
        let d = ModelData::assemble(&t, &ids, vec!["t".into()], &y, &folds).unwrap();
        assert_eq!(d.compound_ids, vec!["x", "z"]);
        assert_eq!(d.y[(0, 0)], 10.0);
        assert_eq!(d.x[(1, 0)], 3.0);
        assert_eq!(d.folds, vec![0, 2]);
    }
}
