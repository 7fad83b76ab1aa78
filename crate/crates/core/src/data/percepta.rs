//! Preprocessing of raw Percepta exports into the 38 retained descriptors.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use super::{normalize_name, open_file, parse_cell, DataError, DescriptorTable};

/// Retained Percepta descriptor names, in output order.
pub const PERCEPTA_DESCRIPTORS: [&str; 38] = [
    "LogPS",
    "LogBB",
    "Log(PS*fu, brain)",
    "Pe (Jejunum), 10^-4 cm/s",
    "Maximum passive absorption (%)",
    "Contribution of transcellular route to absorption (%)",
    "Contribution of paracellular route to absorption (%)",
    "Molecular Weight",
    "No. of Hydrogen Bond Donors",
    "No. of Hydrogen Bond Acceptors",
    "TPSA",
    "No. of Rotatable Bonds",
    "C Ratio",
    "N Ratio",
    "NO Ratio",
    "Hetero Ratio",
    "Halogen Ratio",
    "Number of Rings",
    "Number of Aromatic Rings",
    "Number of Rings (size 5)",
    "Number of Rings (size 6)",
    "LogS (pH = 7,40)",
    "LogSw|LogSw",
    "LogSw|pH",
    "Pe (Caco-2) with LogP, 10^-6 cm/s (pH = 7,40, rpm = 300,00)",
    "Pe (Caco-2) with LogD, 10^-6 cm/s (pH = 7,40, rpm = 300,00)",
    "Log(BCF)",
    "Log(Koc)",
    "LogP",
    "LogD (pH = 7,40)",
    "Vd (L/kg)",
    "Fraction of form +1-1 (pH = 7,40)",
    "Most common form (pH = 7,40)|+",
    "Most common form (pH = 7,40)|-",
    "Most common form (pH = 7,40)|Fraction",
    "Bioavailability (%) (Dose, mg = 10,00)",
    "1st strongest acid pKa",
    "1st strongest base pKa",
];

const ACID_DERIVED: &str = "1st strongest acid pKa";
const BASE_DERIVED: &str = "1st strongest base pKa";
const VARIANCE_TOL: f64 = 1e-10;

/// Header-matching key: alphanumerics plus the symbols that distinguish
/// otherwise identical Percepta names (`+`, `-`).
fn name_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-'))
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// A CSV held as strings, with id and optional fold columns split out.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub compound_ids: Vec<String>,
    pub folds: Vec<Option<u8>>,
    pub columns: Vec<String>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read<R: Read>(reader: R) -> Result<RawTable, DataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let norm: Vec<String> = headers.iter().map(normalize_name).collect();
        let id_col = norm
            .iter()
            .position(|n| matches!(n.as_str(), "compoundid" | "compound" | "id" | "molecule" | "name"))
            .unwrap_or(0);
        let fold_col = norm.iter().position(|n| n.contains("fold"));
        let keep: Vec<usize> = (0..headers.len())
            .filter(|&c| c != id_col && Some(c) != fold_col && !norm[c].is_empty() && !norm[c].starts_with("unnamed"))
            .filter(|&c| !norm[c].contains("smiles"))
            .collect();
        let mut out = RawTable {
            compound_ids: Vec::new(),
            folds: Vec::new(),
            columns: keep.iter().map(|&c| headers[c].to_string()).collect(),
            cells: Vec::new(),
        };
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            out.compound_ids.push(rec.get(id_col).unwrap_or("").trim().to_string());
            out.folds.push(match fold_col {
                Some(c) => {
                    let raw = rec.get(c).unwrap_or("");
                    match parse_cell(raw) {
                        Ok(None) => None,
                        Ok(Some(f)) if f.fract() == 0.0 && (0.0..5.0).contains(&f) => Some(f as u8),
                        _ => {
                            return Err(DataError::Parse {
                                row: r + 1,
                                column: headers[c].to_string(),
                                value: raw.to_string(),
                            })
                        }
                    }
                }
                None => None,
            });
            out.cells.push(keep.iter().map(|&c| rec.get(c).unwrap_or("").to_string()).collect());
        }
        Ok(out)
    }

    fn column(&self, key: &str) -> Option<usize> {
        self.columns.iter().position(|c| name_key(c) == name_key(key))
    }
}

pub fn load_raw_table(path: impl AsRef<Path>) -> Result<RawTable, DataError> {
    RawTable::read(open_file(path.as_ref())?)
}

/// What preprocessing did to each raw column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerceptaReport {
    pub dropped_missing: Vec<String>,
    pub dropped_low_variance: Vec<String>,
    pub dropped_pka_sources: Vec<String>,
    /// Columns that survived the filters but are not among the retained names.
    pub dropped_unlisted: Vec<String>,
    /// Retained names absent from the input after filtering.
    pub absent: Vec<String>,
}

/// Numbers in a pKa list cell such as `"4.2;9.1"` or `"[4.2, 9.1]"`.
fn pka_list(cell: &str) -> Vec<f64> {
    cell.split(|c: char| matches!(c, ';' | ',' | '|' | '[' | ']' | ' '))
        .filter_map(|t| t.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .collect()
}

fn is_pka_source(name: &str) -> bool {
    let k = name_key(name);
    k.starts_with("pkaacid") || k.starts_with("pkabase")
}

/// Derives the two pKa scalars (minimal acid, maximal base), drops pKa source
/// columns, then drops columns that are entirely missing or have variance
/// below 1e-10. When every retained name is present the result is exactly
/// the retained list in its canonical order; otherwise the filtered columns
/// are kept as they are.
pub fn preprocess_percepta(raw: &RawTable) -> Result<(DescriptorTable, PerceptaReport), DataError> {
    let n = raw.compound_ids.len();
    let mut report = PerceptaReport::default();
    let mut names: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();

    let have_derived = raw.column(ACID_DERIVED).is_some() && raw.column(BASE_DERIVED).is_some();
    if !have_derived {
        let acid = raw.columns.iter().position(|c| name_key(c) == name_key("pKa(Acid)|pKa"));
        let base = raw.columns.iter().position(|c| name_key(c) == name_key("pKa(Base)|pKa"));
        let (Some(acid), Some(base)) = (acid, base) else {
            let mut missing = Vec::new();
            if acid.is_none() {
                missing.push("pKa(Acid)|pKa".to_string());
            }
            if base.is_none() {
                missing.push("pKa(Base)|pKa".to_string());
            }
            return Err(DataError::Schema { missing, extra: Vec::new() });
        };
        let reduce = |c: usize, pick: fn(f64, f64) -> f64| -> Vec<f64> {
            raw.cells.iter().map(|row| pka_list(&row[c]).into_iter().reduce(pick).unwrap_or(f64::NAN)).collect()
        };
        names.push(ACID_DERIVED.to_string());
        cols.push(reduce(acid, f64::min));
        names.push(BASE_DERIVED.to_string());
        cols.push(reduce(base, f64::max));
    }

    for (c, name) in raw.columns.iter().enumerate() {
        if !have_derived && is_pka_source(name) {
            report.dropped_pka_sources.push(name.clone());
            continue;
        }
        let vals: Vec<f64> = raw.cells.iter().map(|row| parse_cell(&row[c]).ok().flatten().unwrap_or(f64::NAN)).collect();
        let present: Vec<f64> = vals.iter().copied().filter(|v| !v.is_nan()).collect();
        if present.is_empty() {
            report.dropped_missing.push(name.clone());
            continue;
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        let var = present.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / present.len() as f64;
        if var < VARIANCE_TOL {
            report.dropped_low_variance.push(name.clone());
            continue;
        }
        names.push(name.clone());
        cols.push(vals);
    }

    let listed: Vec<Option<usize>> = PERCEPTA_DESCRIPTORS
        .iter()
        .map(|ref_name| names.iter().position(|n| name_key(n) == name_key(ref_name)))
        .collect();
    let order: Vec<usize> = if listed.iter().all(|p| p.is_some()) {
        let chosen: Vec<usize> = listed.iter().map(|p| p.unwrap()).collect();
        report.dropped_unlisted =
            (0..names.len()).filter(|i| !chosen.contains(i)).map(|i| names[i].clone()).collect();
        chosen
    } else {
        report.absent = PERCEPTA_DESCRIPTORS
            .iter()
            .zip(&listed)
            .filter(|(_, p)| p.is_none())
            .map(|(n, _)| n.to_string())
            .collect();
        (0..names.len()).collect()
    };
    let x = DMatrix::from_fn(n, order.len(), |i, j| cols[order[j]][i]);
    let mut table = DescriptorTable::dense(
        "percepta",
        raw.compound_ids.clone(),
        order.iter().map(|&j| names[j].clone()).collect(),
        x,
    )?;
    table.folds = raw.folds.clone();
    Ok((table, report))
}
