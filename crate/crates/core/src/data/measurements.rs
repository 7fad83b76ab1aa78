//! Plate measurement tables: 18 value columns ({MR, Pe, logPe} × 6 membranes).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{format_value, normalize_name, open_file, parse_cell, DataError};
use crate::assay::{self, AssayGeometry, WellConcentrations};

/// The six artificial membranes, in the column order used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Membrane {
    #[serde(rename = "BBB")]
    Bbb,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "H")]
    H,
    #[serde(rename = "DOD")]
    Dod,
    #[serde(rename = "PS")]
    Ps,
    #[serde(rename = "PC")]
    Pc,
}

impl Membrane {
    pub const ALL: [Membrane; 6] = [Membrane::Bbb, Membrane::L, Membrane::H, Membrane::Dod, Membrane::Ps, Membrane::Pc];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Membrane::Bbb => "BBB",
            Membrane::L => "L",
            Membrane::H => "H",
            Membrane::Dod => "DOD",
            Membrane::Ps => "PS",
            Membrane::Pc => "PC",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            Membrane::Bbb => &["bbb", "brain"],
            Membrane::L => &["l", "liver"],
            Membrane::H => &["h", "heart"],
            Membrane::Dod => &["dod", "dodecane"],
            Membrane::Ps => &["ps", "phosphatidylserine"],
            Membrane::Pc => &["pc", "phosphatidylcholine"],
        }
    }

    /// Accepts the short codes and the full membrane names, case-insensitively.
    pub fn from_code(s: &str) -> Option<Membrane> {
        let n = normalize_name(s);
        Membrane::ALL.into_iter().find(|m| m.aliases().contains(&n.as_str()))
    }
}

impl std::fmt::Display for Membrane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// Measured quantity kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    Mr,
    Pe,
    LogPe,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Mr, Measure::Pe, Measure::LogPe];

    pub fn label(self) -> &'static str {
        match self {
            Measure::Mr => "MR",
            Measure::Pe => "Pe",
            Measure::LogPe => "logPe",
        }
    }

    fn key(self) -> &'static str {
        match self {
            Measure::Mr => "mr",
            Measure::Pe => "pe",
            Measure::LogPe => "logpe",
        }
    }
}

pub fn column_name(measure: Measure, membrane: Membrane) -> String {
    format!("{}_{}", measure.label(), membrane.code())
}

/// Matches headers such as `logPe_BBB`, `BBB logPe` or `MR (Liver)`.
fn classify_header(h: &str) -> Option<(Measure, Membrane)> {
    let n = normalize_name(h);
    // longest kind key first so "logpe" is not read as "pe"
    for measure in [Measure::LogPe, Measure::Mr, Measure::Pe] {
        for m in Membrane::ALL {
            for alias in m.aliases() {
                let k = measure.key();
                if n == format!("{k}{alias}") || n == format!("{alias}{k}") {
                    return Some((measure, m));
                }
            }
        }
    }
    None
}

const ID_NAMES: &[&str] = &["compoundid", "compound", "id", "molecule", "moleculeid", "name", "compoundname", "mculeid"];
const PLATE_NAMES: &[&str] = &["plate", "platenumber", "plateno", "plateid", "platenum"];

fn ignorable(h: &str) -> bool {
    let n = normalize_name(h);
    n.is_empty() || n.starts_with("unnamed") || n == "index" || n.contains("smiles") || n == "fold"
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MembraneValues {
    pub mr: Option<f64>,
    pub pe: Option<f64>,
    pub log_pe: Option<f64>,
}

impl MembraneValues {
    pub fn get(&self, measure: Measure) -> Option<f64> {
        match measure {
            Measure::Mr => self.mr,
            Measure::Pe => self.pe,
            Measure::LogPe => self.log_pe,
        }
    }

    fn set(&mut self, measure: Measure, v: Option<f64>) {
        match measure {
            Measure::Mr => self.mr = v,
            Measure::Pe => self.pe = v,
            Measure::LogPe => self.log_pe = v,
        }
    }
}

/// One compound on one plate in one repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateRecord {
    pub compound_id: String,
    pub plate_number: u32,
    pub values: [MembraneValues; 6],
}

impl PlateRecord {
    pub fn value(&self, m: Membrane) -> &MembraneValues {
        &self.values[m.index()]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementTable {
    pub rows: Vec<PlateRecord>,
}

/// Per-compound mean logPe, one row per compound in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanLogPe {
    pub compound_ids: Vec<String>,
    pub values: Vec<[Option<f64>; 6]>,
}

impl MeanLogPe {
    pub fn len(&self) -> usize {
        self.compound_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.compound_ids.is_empty()
    }

    pub fn column(&self, m: Membrane) -> Vec<Option<f64>> {
        self.values.iter().map(|r| r[m.index()]).collect()
    }

    /// Rows with all six values present, with their ids; rows with gaps are
    /// returned separately.
    pub fn complete_rows(&self) -> (Vec<String>, Vec<[f64; 6]>, Vec<String>) {
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut dropped = Vec::new();
        for (id, r) in self.compound_ids.iter().zip(&self.values) {
            if r.iter().all(|v| v.is_some()) {
                ids.push(id.clone());
                rows.push(r.map(|v| v.unwrap()));
            } else {
                dropped.push(id.clone());
            }
        }
        (ids, rows, dropped)
    }
}

impl MeasurementTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct compound ids in first-appearance order.
    pub fn compound_ids(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.rows.iter().filter(|r| seen.insert(r.compound_id.clone())).map(|r| r.compound_id.clone()).collect()
    }

    fn grouped(&self) -> Vec<(String, Vec<PlateRecord>)> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<PlateRecord>> = HashMap::new();
        for r in &self.rows {
            groups
                .entry(r.compound_id.clone())
                .or_insert_with(|| {
                    order.push(r.compound_id.clone());
                    Vec::new()
                })
                .push(r.clone());
        }
        order.into_iter().map(|id| {
            let g = groups.remove(&id).unwrap();
            (id, g)
        }).collect()
    }

    pub fn mean_logpe(&self) -> MeanLogPe {
        let mut out = MeanLogPe::default();
        for (id, rows) in self.grouped() {
            let means = assay::aggregate_repeats(&rows).expect("groups are non-empty");
            out.compound_ids.push(id);
            out.values.push(means);
        }
        out
    }

    /// One row per compound with every cell averaged over available repeats.
    /// logPe uses the repeat-mean of logPe, not the log of mean Pe.
    pub fn averaged(&self) -> MeasurementTable {
        let mut rows = Vec::new();
        for (id, group) in self.grouped() {
            let mut values = [MembraneValues::default(); 6];
            for m in Membrane::ALL {
                for measure in Measure::ALL {
                    let vals: Vec<f64> = group.iter().filter_map(|r| r.value(m).get(measure)).collect();
                    let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                    values[m.index()].set(measure, mean);
                }
            }
            rows.push(PlateRecord { compound_id: id, plate_number: group[0].plate_number, values });
        }
        MeasurementTable { rows }
    }

    /// Cells where logPe and log10(Pe) disagree by more than `tol`.
    pub fn log_inconsistencies(&self, tol: f64) -> Vec<(usize, Membrane)> {
        let mut out = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            for m in Membrane::ALL {
                let v = r.value(m);
                if let (Some(pe), Some(lp)) = (v.pe, v.log_pe) {
                    if pe <= 0.0 || (pe.log10() - lp).abs() > tol {
                        out.push((i, m));
                    }
                }
            }
        }
        out
    }
}

pub fn read_measurements<R: Read>(reader: R) -> Result<MeasurementTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut id_col = None;
    let mut plate_col = None;
    let mut value_cols: HashMap<(Measure, Membrane), usize> = HashMap::new();
    let mut extra = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        let n = normalize_name(h);
        if id_col.is_none() && ID_NAMES.contains(&n.as_str()) {
            id_col = Some(i);
        } else if plate_col.is_none() && PLATE_NAMES.contains(&n.as_str()) {
            plate_col = Some(i);
        } else if let Some(key) = classify_header(h) {
            if value_cols.insert(key, i).is_some() {
                extra.push(h.to_string());
            }
        } else if !ignorable(h) {
            extra.push(h.to_string());
        }
    }
    let mut missing = Vec::new();
    if id_col.is_none() {
        missing.push("compound_id".to_string());
    }
    if plate_col.is_none() {
        missing.push("plate".to_string());
    }
    for m in Membrane::ALL {
        for measure in Measure::ALL {
            if !value_cols.contains_key(&(measure, m)) {
                missing.push(column_name(measure, m));
            }
        }
    }
    if !missing.is_empty() || !extra.is_empty() {
        return Err(DataError::Schema { missing, extra });
    }
    let (id_col, plate_col) = (id_col.unwrap(), plate_col.unwrap());

    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let plate_raw = rec.get(plate_col).unwrap_or("").trim();
        let plate_number = plate_raw
            .parse::<u32>()
            .or_else(|_| plate_raw.parse::<f64>().map_err(|_| ()).and_then(|f| {
                if f.fract() == 0.0 && f >= 0.0 { Ok(f as u32) } else { Err(()) }
            }))
            .map_err(|_| DataError::Parse { row, column: headers[plate_col].to_string(), value: plate_raw.to_string() })?;
        let mut values = [MembraneValues::default(); 6];
        for (&(measure, m), &c) in &value_cols {
            let raw = rec.get(c).unwrap_or("");
            let v = parse_cell(raw)
                .map_err(|_| DataError::Parse { row, column: headers[c].to_string(), value: raw.to_string() })?;
            values[m.index()].set(measure, v);
        }
        rows.push(PlateRecord { compound_id: rec.get(id_col).unwrap_or("").trim().to_string(), plate_number, values });
    }
    Ok(MeasurementTable { rows })
}

pub fn load_measurements(path: impl AsRef<Path>) -> Result<MeasurementTable, DataError> {
    read_measurements(open_file(path.as_ref())?)
}

/// Writes `compound_id,plate,MR_BBB,Pe_BBB,logPe_BBB,...`.
pub fn write_measurements<W: Write>(table: &MeasurementTable, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["compound_id".to_string(), "plate".to_string()];
    for m in Membrane::ALL {
        for measure in Measure::ALL {
            header.push(column_name(measure, m));
        }
    }
    w.write_record(&header)?;
    for r in &table.rows {
        let mut rec = vec![r.compound_id.clone(), r.plate_number.to_string()];
        for m in Membrane::ALL {
            for measure in Measure::ALL {
                rec.push(format_value(r.value(m).get(measure)));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

pub fn write_mean_logpe<W: Write>(table: &MeanLogPe, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["compound_id".to_string()];
    header.extend(Membrane::ALL.iter().map(|m| m.code().to_string()));
    w.write_record(&header)?;
    for (id, vals) in table.compound_ids.iter().zip(&table.values) {
        let mut rec = vec![id.clone()];
        rec.extend(vals.iter().map(|v| format_value(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

/// Raw well concentrations for one compound, plate, repeat and membrane.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub compound_id: String,
    pub plate_number: u32,
    pub repeat: u32,
    pub membrane: Membrane,
    pub concentrations: WellConcentrations,
}

/// Reads `compound_id,plate,repeat,membrane,donor_initial,donor_final,acceptor_final`
/// (`repeat` optional, default 1).
pub fn read_concentrations<R: Read>(reader: R) -> Result<Vec<ConcentrationRow>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&normalize_name(h).as_str()));
    let cols = [
        ("compound_id", find(ID_NAMES)),
        ("plate", find(PLATE_NAMES)),
        ("membrane", find(&["membrane"])),
        ("donor_initial", find(&["donorinitial", "cd0"])),
        ("donor_final", find(&["donorfinal", "cdt"])),
        ("acceptor_final", find(&["acceptorfinal", "cat"])),
    ];
    let repeat_col = find(&["repeat", "rep", "replicate"]);
    let missing: Vec<String> = cols.iter().filter(|(_, c)| c.is_none()).map(|(n, _)| n.to_string()).collect();
    if !missing.is_empty() {
        return Err(DataError::Schema { missing, extra: Vec::new() });
    }
    let c: Vec<usize> = cols.iter().map(|(_, c)| c.unwrap()).collect();
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let cell = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let perr = |i: usize| DataError::Parse { row, column: headers[i].to_string(), value: cell(i) };
        let plate_number = cell(c[1]).parse::<u32>().map_err(|_| perr(c[1]))?;
        let repeat = match repeat_col {
            Some(i) => cell(i).parse::<u32>().map_err(|_| perr(i))?,
            None => 1,
        };
        let membrane = Membrane::from_code(&cell(c[2])).ok_or_else(|| perr(c[2]))?;
        let num = |i: usize| cell(i).parse::<f64>().map_err(|_| perr(i));
        out.push(ConcentrationRow {
            compound_id: cell(c[0]),
            plate_number,
            repeat,
            membrane,
            concentrations: WellConcentrations::new(num(c[3])?, num(c[4])?, num(c[5])?),
        });
    }
    Ok(out)
}

pub fn load_concentrations(path: impl AsRef<Path>) -> Result<Vec<ConcentrationRow>, DataError> {
    read_concentrations(open_file(path.as_ref())?)
}

impl MeasurementTable {
    /// Evaluates MR, Pe and logPe for every well and groups the wells into
    /// plate records keyed by (compound, plate, repeat).
    pub fn from_concentrations(
        rows: &[ConcentrationRow],
        geometry: &AssayGeometry,
    ) -> Result<MeasurementTable, (usize, assay::AssayError)> {
        let mut order: Vec<(String, u32, u32)> = Vec::new();
        let mut records: HashMap<(String, u32, u32), [MembraneValues; 6]> = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            let res = assay::evaluate_well(&r.concentrations, geometry).map_err(|e| (i + 1, e))?;
            let key = (r.compound_id.clone(), r.plate_number, r.repeat);
            let entry = records.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                [MembraneValues::default(); 6]
            });
            entry[r.membrane.index()] = MembraneValues {
                mr: Some(res.membrane_retention),
                pe: res.effective_permeability,
                log_pe: res.log_pe,
            };
        }
        let rows = order
            .into_iter()
            .map(|key| {
                let values = records.remove(&key).unwrap();
                PlateRecord { compound_id: key.0, plate_number: key.1, values }
            })
            .collect();
        Ok(MeasurementTable { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut h = vec!["compound_id".to_string(), "plate".to_string()];
        for m in Membrane::ALL {
            for measure in Measure::ALL {
                h.push(column_name(measure, m));
            }
        }
        h.join(",")
    }

    #[test]
    fn header_spellings() {
        assert_eq!(classify_header("logPe_BBB"), Some((Measure::LogPe, Membrane::Bbb)));
        assert_eq!(classify_header("Pe (Liver)"), Some((Measure::Pe, Membrane::L)));
        assert_eq!(classify_header("DOD MR"), Some((Measure::Mr, Membrane::Dod)));
        assert_eq!(classify_header("PC_logPe"), Some((Measure::LogPe, Membrane::Pc)));
        assert_eq!(classify_header("weight"), None);
    }

    #[test]
    fn empty_file_with_header() {
        let t = read_measurements(header().as_bytes()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn missing_logpe_column() {
        let h = header().replace(",logPe_H", "");
        match read_measurements(h.as_bytes()) {
            Err(DataError::Schema { missing, .. }) => assert_eq!(missing, vec!["logPe_H".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_and_round_trip() {
        let mut text = header();
        text.push('\n');
        let mut cells = vec!["A".to_string(), "3".to_string()];
        for i in 0..18 {
            cells.push(if i == 5 { String::new() } else { format!("{}", 0.1 * i as f64 - 0.3) });
        }
        text.push_str(&cells.join(","));
        text.push('\n');
        let t = read_measurements(text.as_bytes()).unwrap();
        assert_eq!(t.rows[0].plate_number, 3);
        assert_eq!(t.rows[0].value(Membrane::L).log_pe, None);
        let mut buf = Vec::new();
        write_measurements(&t, &mut buf).unwrap();
        let back = read_measurements(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bad_cell_reports_location() {
        let mut text = header();
        text.push_str("\nA,1");
        for i in 0..18 {
            text.push_str(if i == 2 { ",abc" } else { ",1" });
        }
        match read_measurements(text.as_bytes()) {
            Err(DataError::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "logPe_BBB");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mean_over_repeats() {
        let mut rows = Vec::new();
        for (k, lp) in [Some(-5.0), None, Some(-5.2)].into_iter().enumerate() {
            let mut values = [MembraneValues::default(); 6];
            values[0].log_pe = lp;
            values[1].pe = Some(k as f64);
            rows.push(PlateRecord { compound_id: "A".into(), plate_number: 1, values });
        }
        let t = MeasurementTable { rows };
        let mean = t.mean_logpe();
        assert_eq!(mean.len(), 1);
        assert!((mean.values[0][0].unwrap() + 5.1).abs() < 1e-12);
        assert_eq!(mean.values[0][1], None);
        let avg = t.averaged();
        assert_eq!(avg.rows[0].values[1].pe, Some(1.0));
    }
}
