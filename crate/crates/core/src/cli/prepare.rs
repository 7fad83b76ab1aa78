//! Loads and aligns the inputs named in a run configuration.

use std::path::Path;

use nalgebra::DMatrix;

use super::config::{target_names, RunConfig};
use super::CliError;
use crate::chem::SaltList;
use crate::data::{
    load_concentrations, load_descriptors, load_measurements, load_raw_table, preprocess_percepta, split_folds,
    synth_dataset, DataError, DescriptorTable, FoldAssignment, MeanLogPe, MeasurementTable, Membrane, ModelData,
};
use crate::pca::{fit_logpe_pca, LogPePca};

/// Schema-type data errors exit with the configuration code.
pub fn data_err(path: &Path, e: DataError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        DataError::Io { .. }
        | DataError::Csv(_)
        | DataError::Schema { .. }
        | DataError::Parse { .. }
        | DataError::DuplicateId(_)
        | DataError::BadFold { .. } => CliError::Schema(msg),
        _ => CliError::Runtime(msg),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn key(h: &str) -> String {
    h.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

/// Two-column lookups (`id,value`) where the value column is found by
/// `value_match` on its normalized header.
fn read_pairs(path: &Path, value_match: impl Fn(&str) -> bool, what: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut rdr = csv_reader(path)?;
    let schema = |m: String| CliError::Schema(format!("{}: {m}", path.display()));
    let headers = rdr.headers().map_err(|e| schema(e.to_string()))?.clone();
    let keys: Vec<String> = headers.iter().map(key).collect();
    let value = keys.iter().position(|k| value_match(k)).ok_or_else(|| schema(format!("no {what} column")))?;
    let id = keys
        .iter()
        .position(|k| matches!(k.as_str(), "compoundid" | "compound" | "id" | "molecule" | "name"))
        .unwrap_or(if value == 0 { 1 } else { 0 });
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| schema(format!("row {}: {e}", r + 1)))?;
        let get = |c: usize| rec.get(c).map(|s| s.trim().to_string()).ok_or_else(|| schema(format!("row {}: missing cells", r + 1)));
        out.push((get(id)?, get(value)?));
    }
    Ok(out)
}

pub fn read_smiles_table(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    read_pairs(path, |k| k.contains("smiles"), "SMILES")
}

pub fn read_class_table(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    read_pairs(path, |k| k.contains("class") || k.contains("charge"), "class")
}

pub fn read_fold_table(path: &Path) -> Result<FoldAssignment, CliError> {
    let pairs = read_pairs(path, |k| k.contains("fold"), "fold")?;
    let mut parsed = Vec::new();
    for (r, (id, f)) in pairs.into_iter().enumerate() {
        let fold = f.parse::<i64>().map_err(|_| CliError::Schema(format!("{}: row {}: bad fold {f:?}", path.display(), r + 1)))?;
        parsed.push((id, fold));
    }
    FoldAssignment::from_pairs(parsed).map_err(|e| data_err(path, e))
}

pub fn salts(cfg: &RunConfig) -> Result<SaltList, CliError> {
    match &cfg.inputs.salts {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))?;
            SaltList::parse(&text).map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))
        }
        None => Ok(SaltList::builtin()),
    }
}

/// Measurements from the configured source.
pub enum Measurements {
    Synthetic,
    Table(MeasurementTable),
}

/// Per-compound mean logPe from synthetic data, a measurement table or raw
/// concentrations, in that order of preference.
pub fn load_mean_logpe(cfg: &RunConfig) -> Result<(MeanLogPe, Measurements), CliError> {
    if let Some(s) = &cfg.synthetic {
        let synth = synth_dataset(s.seed, s.n, s.d, 6, s.noise).map_err(|e| CliError::Config(format!("synthetic: {e}")))?;
        let mean = MeanLogPe {
            compound_ids: synth.table.compound_ids.clone(),
            values: (0..s.n).map(|i| std::array::from_fn(|k| Some(synth.targets[(i, k)]))).collect(),
        };
        return Ok((mean, Measurements::Synthetic));
    }
    if let Some(p) = &cfg.inputs.measurements {
        let table = load_measurements(p).map_err(|e| data_err(p, e))?;
        return Ok((table.mean_logpe(), Measurements::Table(table)));
    }
    if let Some(p) = &cfg.inputs.concentrations {
        let rows = load_concentrations(p).map_err(|e| data_err(p, e))?;
        let table = MeasurementTable::from_concentrations(&rows, &cfg.assay)
            .map_err(|(row, e)| CliError::Schema(format!("{}: row {row}: {e}", p.display())))?;
        return Ok((table.mean_logpe(), Measurements::Table(table)));
    }
    Err(CliError::Config("no measurements: set inputs.measurements, inputs.concentrations or [synthetic]".into()))
}

/// Everything the modelling commands need, aligned on compound id.
pub struct Prepared {
    pub mean: MeanLogPe,
    pub pca: LogPePca,
    pub target_names: Vec<String>,
    pub folds: FoldAssignment,
    pub datasets: Vec<ModelData>,
    pub notes: Vec<String>,
}

pub fn load_tables(cfg: &RunConfig) -> Result<Vec<DescriptorTable>, CliError> {
    let mut tables = Vec::new();
    if let Some(s) = &cfg.synthetic {
        let synth = synth_dataset(s.seed, s.n, s.d, 6, s.noise).map_err(|e| CliError::Config(format!("synthetic: {e}")))?;
        tables.push(synth.table);
    }
    if let Some(p) = &cfg.inputs.percepta_raw {
        let raw = load_raw_table(p).map_err(|e| data_err(p, e))?;
        let (table, _) = preprocess_percepta(&raw).map_err(|e| data_err(p, e))?;
        tables.push(table);
    }
    for (name, p) in &cfg.inputs.representations {
        if tables.iter().any(|t| &t.representation == name) {
            return Err(CliError::Config(format!("representation {name:?} given twice")));
        }
        tables.push(load_descriptors(p, name).map_err(|e| data_err(p, e))?);
    }
    if !cfg.sweep.representations.is_empty() {
        for r in &cfg.sweep.representations {
            if !tables.iter().any(|t| &t.representation == r) {
                return Err(CliError::Config(format!("sweep.representations: {r:?} is not loaded")));
            }
        }
        tables.retain(|t| cfg.sweep.representations.contains(&t.representation));
    }
    if tables.is_empty() {
        return Err(CliError::Config("no descriptor representations configured".into()));
    }
    Ok(tables)
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let (mean, _) = load_mean_logpe(cfg)?;
    let pca = fit_logpe_pca(&mean, cfg.pca.components).map_err(|e| CliError::Runtime(format!("PCA: {e}")))?;
    let mut notes = Vec::new();
    if !pca.dropped.is_empty() {
        notes.push(format!("{} compounds without all six logPe values have no PCA scores", pca.dropped.len()));
    }
    let names = target_names(cfg.pca.components);
    let k = cfg.pca.components;
    let mut targets = DMatrix::from_element(mean.len(), 6 + k, f64::NAN);
    for (i, row) in mean.values.iter().enumerate() {
        for m in Membrane::ALL {
            targets[(i, m.index())] = row[m.index()].unwrap_or(f64::NAN);
        }
    }
    let score_row: std::collections::HashMap<&str, usize> =
        pca.compound_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    for (i, id) in mean.compound_ids.iter().enumerate() {
        if let Some(&r) = score_row.get(id.as_str()) {
            for c in 0..k {
                targets[(i, 6 + c)] = pca.scores[(r, c)];
            }
        }
    }
    let tables = load_tables(cfg)?;
    let folds = match &cfg.inputs.folds {
        Some(p) => read_fold_table(p)?,
        None => match tables.iter().find(|t| t.folds.iter().any(|f| f.is_some())) {
            Some(t) => t.fold_assignment().map_err(|e| CliError::Schema(format!("{} folds: {e}", t.representation)))?,
            None => {
                notes.push(format!("folds drawn with seed {}", cfg.seed));
                split_folds(&mean.compound_ids, cfg.seed).map_err(|e| CliError::Runtime(e.to_string()))?
            }
        },
    };
    let mut datasets = Vec::new();
    for t in &tables {
        let data = ModelData::assemble(t, &mean.compound_ids, names.clone(), &targets, &folds)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", t.representation)))?;
        if data.n() < t.n_compounds() {
            notes.push(format!(
                "{}: {} of {} compounds lack a fold or measurement and are left out",
                t.representation,
                t.n_compounds() - data.n(),
                t.n_compounds()
            ));
        }
        datasets.push(data);
    }
    Ok(Prepared { mean, pca, target_names: names, folds, datasets, notes })
}
