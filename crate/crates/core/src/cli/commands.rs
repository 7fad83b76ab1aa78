//! Subcommand bodies. Each step writes into an [`OutDir`] so `pipeline`
//! can chain them.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output::OutDir;
use super::prepare::{self, data_err, read_class_table, read_smiles_table, Measurements, Prepared};
use super::CliError;
use crate::analyze::svg::Svg;
use crate::analyze::{importance_from_selection, scaffold_report, top_bottom_profiles, PropertyTable};
use crate::chem::{desalt, parse_smiles, write_smiles, SaltList};
use crate::data::{
    format_value, load_descriptors, load_raw_table, write_mean_logpe, write_measurements, MeanLogPe, Membrane,
    NormalizationStats,
};
use crate::design::{d_optimal_select, forward_feature_select, LinearFamily, SelectionCv};
use crate::pca::LogPePca;
use crate::tuning::{
    compare_single_vs_multi, evaluate_test, run_grid, select_tuned, write_pairs_csv, write_runs_csv,
    write_selection_csv, write_test_runs_csv, write_trials_csv, CvPlan, LeakageAudit, SelectionReport, SweepSpec,
    TaskMode, TrialResult,
};

/// Sweep results as stored between the `sweep` and `select` commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArtifact {
    pub n_features: BTreeMap<String, usize>,
    pub audit: LeakageAudit,
    pub failed: Vec<String>,
    pub trials: Vec<TrialResult>,
}

pub fn plan(cfg: &RunConfig) -> Result<CvPlan, CliError> {
    let mut plan = CvPlan::new(cfg.seed);
    plan.repeats = cfg.repeats()?;
    Ok(plan)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

pub fn step_assay(cfg: &RunConfig, out: &mut OutDir) -> Result<MeanLogPe, CliError> {
    let (mean, source) = prepare::load_mean_logpe(cfg)?;
    if let Measurements::Table(table) = source {
        out.write_with("measurements.csv", |b| write_measurements(&table, b))?;
        out.write_with("measurements_averaged.csv", |b| write_measurements(&table.averaged(), b))?;
    }
    out.write_with("mean_logpe.csv", |b| write_mean_logpe(&mean, b))?;
    Ok(mean)
}

/// True when the file holds nothing but whitespace.
pub fn is_blank(path: &Path) -> bool {
    std::fs::read(path).map(|b| b.iter().all(u8::is_ascii_whitespace)).unwrap_or(false)
}

pub fn cmd_assay(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let blank = [&cfg.inputs.measurements, &cfg.inputs.concentrations].into_iter().flatten().any(|p| is_blank(p));
    if blank && cfg.synthetic.is_none() {
        out.write_with("measurements.csv", |b| write_measurements(&Default::default(), b))?;
        out.write_with("mean_logpe.csv", |b| write_mean_logpe(&MeanLogPe::default(), b))?;
        return Ok(());
    }
    step_assay(cfg, out).map(|_| ())
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

fn pca_scatter(pca: &LogPePca, classes: &HashMap<String, String>) -> String {
    let (size, pad) = (420.0, 40.0);
    let mut svg = Svg::new(size + 2.0 * pad + 120.0, size + 2.0 * pad);
    let k = pca.scores.ncols();
    let col = |c: usize| -> Vec<f64> {
        if c < k {
            pca.scores.column(c).iter().copied().collect()
        } else {
            vec![0.0; pca.scores.nrows()]
        }
    };
    let (xs, ys) = (col(0), col(1));
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi - lo)
        } else {
            (lo - 1.0, 2.0)
        }
    };
    let ((x0, xs_span), (y0, ys_span)) = (range(&xs), range(&ys));
    let mut labels: Vec<&String> = classes.values().collect();
    labels.sort();
    labels.dedup();
    svg.line(pad, pad + size, pad + size, pad + size, "axis");
    svg.line(pad, pad, pad, pad + size, "axis");
    let ratio = &pca.model.explained_variance_ratio;
    svg.text(pad + size / 2.0, pad + size + 28.0, &format!("PCA_0 ({:.1}%)", 100.0 * ratio[0]), "middle", None);
    if ratio.len() > 1 {
        svg.text(pad - 24.0, pad + size / 2.0, &format!("PCA_1 ({:.1}%)", 100.0 * ratio[1]), "middle", Some(-90.0));
    }
    for (i, id) in pca.compound_ids.iter().enumerate() {
        let colour = match classes.get(id) {
            Some(c) => PALETTE[labels.iter().position(|l| *l == c).unwrap() % PALETTE.len()],
            None => "#444444",
        };
        let px = pad + (xs[i] - x0) / xs_span * size;
        let py = pad + size - (ys[i] - y0) / ys_span * size;
        svg.rect(px - 2.5, py - 2.5, 5.0, 5.0, colour, None);
    }
    for (j, l) in labels.iter().enumerate() {
        let y = pad + 14.0 * j as f64;
        svg.rect(pad + size + 20.0, y, 8.0, 8.0, PALETTE[j % PALETTE.len()], None);
        svg.text(pad + size + 32.0, y + 8.0, l, "start", None);
    }
    svg.finish("PCA scores of the logPe profiles")
}

pub fn step_pca(cfg: &RunConfig, pca: &LogPePca, out: &mut OutDir) -> Result<(), CliError> {
    let k = pca.scores.ncols();
    out.write_with("pca_scores.csv", |b| -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(b);
        let mut h = vec!["compound_id".to_string()];
        h.extend((0..k).map(|c| format!("PCA_{c}")));
        w.write_record(&h)?;
        for (i, id) in pca.compound_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend((0..k).map(|c| format_value(Some(pca.scores[(i, c)]))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.write_with("pca_loadings.csv", |b| -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(b);
        let mut h = vec!["component".to_string()];
        h.extend(Membrane::ALL.iter().map(|m| m.code().to_string()));
        w.write_record(&h)?;
        for c in 0..k {
            let mut rec = vec![format!("PCA_{c}")];
            rec.extend((0..6).map(|j| format_value(Some(pca.model.components[(c, j)]))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.write_with("pca_explained.csv", |b| -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["component", "explained_variance_ratio", "singular_value"])?;
        for c in 0..k {
            w.write_record([
                format!("PCA_{c}"),
                format_value(Some(pca.model.explained_variance_ratio[c])),
                format_value(Some(pca.model.singular_values[c])),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let classes: HashMap<String, String> = match &cfg.inputs.charge_classes {
        Some(p) => read_class_table(p)?.into_iter().collect(),
        None => HashMap::new(),
    };
    out.write("pca.svg", pca_scatter(pca, &classes).as_bytes())
}

pub fn cmd_pca(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let (mean, _) = prepare::load_mean_logpe(cfg)?;
    let pca = crate::pca::fit_logpe_pca(&mean, cfg.pca.components).map_err(|e| CliError::Runtime(format!("PCA: {e}")))?;
    step_pca(cfg, &pca, out)
}

/// Desalted SMILES per compound; failures keep an empty SMILES.
pub fn step_desalt(smiles: &[(String, String)], salts: &SaltList, out: &mut OutDir) -> Result<Vec<(String, String)>, CliError> {
    let mut rows = Vec::new();
    let mut ok = Vec::new();
    for (id, s) in smiles {
        let res = parse_smiles(s).map_err(|e| e.to_string()).and_then(|m| desalt(&m, salts).map_err(|e| e.to_string()));
        match res {
            Ok(m) => {
                let text = write_smiles(&m);
                ok.push((id.clone(), text.clone()));
                rows.push([id.clone(), s.clone(), text, String::new()]);
            }
            Err(e) => rows.push([id.clone(), s.clone(), String::new(), e]),
        }
    }
    out.write_with("desalted.csv", |b| -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["compound_id", "input_smiles", "smiles", "error"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(ok)
}

fn smiles_input(cfg: &RunConfig) -> Result<Vec<(String, String)>, CliError> {
    let p = cfg.inputs.smiles.as_ref().ok_or_else(|| CliError::Config("inputs.smiles is not set".into()))?;
    read_smiles_table(p)
}

pub fn cmd_desalt(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let salts = prepare::salts(cfg)?;
    step_desalt(&smiles_input(cfg)?, &salts, out).map(|_| ())
}

pub fn step_scaffolds(molecules: &[(String, String)], out: &mut OutDir) -> Result<usize, CliError> {
    let report = scaffold_report(molecules, None);
    out.write_with("scaffolds.csv", |b| report.write_csv(b))?;
    out.write_with("scaffold_repeats.csv", |b| report.write_repeats_csv(b))?;
    Ok(report.unique_count())
}

pub fn cmd_scaffolds(cfg: &RunConfig, out: &mut OutDir, desalt_first: bool) -> Result<(), CliError> {
    let smiles = smiles_input(cfg)?;
    let report = if desalt_first { scaffold_report(&smiles, Some(&prepare::salts(cfg)?)) } else { scaffold_report(&smiles, None) };
    out.write_with("scaffolds.csv", |b| report.write_csv(b))?;
    out.write_with("scaffold_repeats.csv", |b| report.write_repeats_csv(b))?;
    log::info!("{} unique scaffolds", report.unique_count());
    Ok(())
}

/// Runs every configured (representation, class, mode) sweep. Cells that
/// fail are reported and skipped.
pub fn step_sweep(cfg: &RunConfig, prep: &Prepared, plan: &CvPlan) -> Result<SweepArtifact, CliError> {
    let classes = cfg.classes()?;
    let modes = cfg.modes()?;
    let targets = cfg.targets()?;
    let grids = cfg.grids()?;
    let membranes: Vec<String> = Membrane::ALL.iter().map(|m| m.code().to_string()).collect();
    let mut art = SweepArtifact { n_features: BTreeMap::new(), audit: LeakageAudit::default(), failed: Vec::new(), trials: Vec::new() };
    for data in &prep.datasets {
        let d = data.x.ncols();
        art.n_features.insert(data.representation.clone(), d);
        let bound = plan.min_training_rows(data).saturating_sub(1).min(d).max(1);
        for &class in &classes {
            for &mode in &modes {
                let supported = match mode {
                    TaskMode::Single => class.supports_single_task(),
                    TaskMode::Multi => class.supports_multitask(),
                };
                if !supported {
                    continue;
                }
                let cell_targets: Vec<String> = match mode {
                    TaskMode::Single => targets.clone(),
                    TaskMode::Multi => targets.iter().filter(|t| membranes.contains(t)).cloned().collect(),
                };
                if mode == TaskMode::Multi && cell_targets.len() < 2 {
                    continue;
                }
                let label = format!("{}/{}/{}", data.representation, class, mode.label());
                let grid = grids.expand(class, bound).map_err(|e| CliError::Config(format!("{class} grid: {e}")))?;
                let spec = SweepSpec { class, mode, targets: cell_targets, grid };
                match run_grid(plan, data, &spec) {
                    Ok(o) => {
                        if o.failed_trials > 0 {
                            art.failed.push(format!("{label}: {} of {} trials failed", o.failed_trials, o.trials.len()));
                        }
                        art.audit.merge(o.audit);
                        art.trials.extend(o.trials);
                    }
                    Err(e) => art.failed.push(format!("{label}: {e}")),
                }
            }
        }
    }
    if art.audit.violations > 0 {
        return Err(CliError::Runtime(format!("{} leakage checks failed", art.audit.violations)));
    }
    if !art.trials.iter().any(|t| t.succeeded()) {
        return Err(CliError::Runtime(format!("every sweep cell failed: {}", art.failed.join("; "))));
    }
    Ok(art)
}

pub fn write_sweep(art: &SweepArtifact, out: &mut OutDir) -> Result<(), CliError> {
    out.write_with("trials.csv", |b| write_trials_csv(&art.trials, b))?;
    out.write_with("runs.csv", |b| write_runs_csv(&art.trials, b))?;
    out.write_json("trials.json", art)
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut OutDir) -> Result<Vec<String>, CliError> {
    let prep = prepare::prepare(cfg)?;
    let art = step_sweep(cfg, &prep, &plan(cfg)?)?;
    write_sweep(&art, out)?;
    Ok(art.failed)
}

pub fn step_select(art: &SweepArtifact, out: &mut OutDir) -> Result<SelectionReport, CliError> {
    let report = select_tuned(&art.trials, &art.n_features).map_err(|e| CliError::Runtime(e.to_string()))?;
    let pairs = compare_single_vs_multi(&art.trials);
    out.write_with("pairs.csv", |b| write_pairs_csv(&pairs, b))?;
    Ok(report)
}

pub fn write_selection(report: &SelectionReport, out: &mut OutDir) -> Result<(), CliError> {
    out.write_with("selection.csv", |b| write_selection_csv(report, b))?;
    out.write_json("selection.json", report)
}

pub fn cmd_select(trials: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let art: SweepArtifact = read_json(trials)?;
    let report = step_select(&art, out)?;
    write_selection(&report, out)
}

pub fn step_test(cfg: &RunConfig, prep: &Prepared, plan: &CvPlan, report: &mut SelectionReport, out: &mut OutDir) -> Result<(), CliError> {
    let refs: Vec<&crate::data::ModelData> = prep.datasets.iter().collect();
    evaluate_test(plan, &refs, report, cfg.sweep.threshold).map_err(|e| CliError::Runtime(e.to_string()))?;
    if report.test_audit.violations > 0 {
        return Err(CliError::Runtime(format!("{} leakage checks failed during testing", report.test_audit.violations)));
    }
    out.write_with("test.csv", |b| write_test_runs_csv(report, b))
}

pub fn cmd_test(cfg: &RunConfig, selection: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let mut report: SelectionReport = read_json(selection)?;
    let prep = prepare::prepare(cfg)?;
    step_test(cfg, &prep, &plan(cfg)?, &mut report, out)?;
    write_selection(&report, out)
}

pub fn step_importance(prep: &Prepared, plan: &CvPlan, report: &SelectionReport, out: &mut OutDir) -> Result<Vec<String>, CliError> {
    let mut notes = Vec::new();
    for data in &prep.datasets {
        let m = importance_from_selection(plan, data, report).map_err(|e| CliError::Runtime(e.to_string()))?;
        if m.rows.is_empty() {
            notes.push(format!("{}: no tuned single-task EN models, importance skipped", data.representation));
            continue;
        }
        out.write_with(&format!("importance_{}.csv", data.representation), |b| m.write_csv(b))?;
        out.write(&format!("importance_{}.svg", data.representation), m.heatmap_svg().as_bytes())?;
    }
    Ok(notes)
}

pub fn cmd_importance(cfg: &RunConfig, selection: &Path, out: &mut OutDir) -> Result<Vec<String>, CliError> {
    let report: SelectionReport = read_json(selection)?;
    let prep = prepare::prepare(cfg)?;
    step_importance(&prep, &plan(cfg)?, &report, out)
}

pub fn step_profiles(cfg: &RunConfig, mean: &MeanLogPe, out: &mut OutDir) -> Result<Vec<String>, CliError> {
    let props = match &cfg.inputs.properties {
        Some(p) => Some(PropertyTable::from_raw(&load_raw_table(p).map_err(|e| data_err(p, e))?)),
        None => None,
    };
    let report = top_bottom_profiles(mean, &cfg.profile_membranes()?, cfg.profiles.k, props.as_ref(), &cfg.profiles.properties);
    out.write_with("profiles.csv", |b| report.write_sets_csv(mean, b))?;
    out.write_with("profile_overlaps.csv", |b| report.write_overlaps_csv(b))?;
    out.write_with("profile_properties.csv", |b| report.write_properties_csv(b))?;
    out.write("profiles.svg", report.boxes_svg().as_bytes())?;
    out.write_json("profiles.json", &report)?;
    let mut notes: Vec<String> = report.membranes.iter().filter_map(|m| m.warning.clone()).collect();
    if !report.missing_properties.is_empty() {
        notes.push(format!("property columns not found: {}", report.missing_properties.join(", ")));
    }
    for t in &report.trend_checks {
        notes.push(format!("{} = {:.3} (> {}: {})", t.description, t.value, t.threshold, t.passed));
    }
    Ok(notes)
}

pub fn cmd_profiles(cfg: &RunConfig, out: &mut OutDir) -> Result<Vec<String>, CliError> {
    let (mean, _) = prepare::load_mean_logpe(cfg)?;
    step_profiles(cfg, &mean, out)
}

pub fn cmd_design(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let d = &cfg.design;
    let path = d.pool.as_ref().ok_or_else(|| CliError::Config("design.pool is not set".into()))?;
    let pool = load_descriptors(path, "pool").map_err(|e| data_err(path, e))?;
    let all: Vec<usize> = (0..pool.n_compounds()).collect();
    let x = NormalizationStats::fit_lenient(&pool.x, &pool.feature_names, &all)
        .apply(&pool.x)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut owned = Vec::new();
    for id in &d.owned {
        owned.push(pool.row_of(id).ok_or_else(|| CliError::Config(format!("design.owned: {id:?} is not in the pool")))?);
    }
    let mut cols: Vec<usize> = (0..x.ncols()).collect();
    if let Some(k) = d.features {
        let family: LinearFamily = d.family.parse().map_err(CliError::Config)?;
        let membrane = Membrane::from_code(&d.target).ok_or_else(|| CliError::Config(format!("design.target: unknown membrane {:?}", d.target)))?;
        let (mean, _) = prepare::load_mean_logpe(cfg)?;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (id, v) in mean.compound_ids.iter().zip(mean.column(membrane)) {
            if let (Some(r), Some(v)) = (pool.row_of(id), v) {
                rows.push(r);
                y.push(v);
            }
        }
        let xm = DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)]);
        cols = forward_feature_select(&xm, &y, family, k, SelectionCv { seed: cfg.seed })
            .map_err(|e| CliError::Runtime(format!("feature selection: {e}")))?;
        out.write_with("design_features.csv", |b| -> Result<(), csv::Error> {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["order", "feature"])?;
            for (i, &c) in cols.iter().enumerate() {
                w.write_record([(i + 1).to_string(), pool.feature_names[c].clone()])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    let xs = DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])]);
    let sel = d_optimal_select(&xs, d.k, &owned, cfg.seed).map_err(|e| CliError::Runtime(format!("D-optimal: {e}")))?;
    out.write_with("design.csv", |b| -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["order", "compound_id", "log_det"])?;
        for (i, &r) in sel.chosen.iter().enumerate() {
            w.write_record([(i + 1).to_string(), pool.compound_ids[r].clone(), format_value(Some(sel.log_det[i + 1]))])?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Full workflow. Returns failed sweep cells and notes for the manifest.
pub fn cmd_pipeline(cfg: &RunConfig, out: &mut OutDir) -> Result<(Vec<String>, Vec<String>), CliError> {
    let mean = step_assay(cfg, out)?;
    let mut notes = Vec::new();
    let mut scaffold_input = None;
    if cfg.inputs.smiles.is_some() {
        let salts = prepare::salts(cfg)?;
        scaffold_input = Some(step_desalt(&smiles_input(cfg)?, &salts, out)?);
    }
    let prep = prepare::prepare(cfg)?;
    notes.extend(prep.notes.iter().cloned());
    step_pca(cfg, &prep.pca, out)?;
    let plan = plan(cfg)?;
    let art = step_sweep(cfg, &prep, &plan)?;
    write_sweep(&art, out)?;
    let mut report = step_select(&art, out)?;
    step_test(cfg, &prep, &plan, &mut report, out)?;
    write_selection(&report, out)?;
    notes.extend(step_importance(&prep, &plan, &report, out)?);
    notes.extend(step_profiles(cfg, &mean, out)?);
    match scaffold_input {
        Some(m) => {
            let n = step_scaffolds(&m, out)?;
            notes.push(format!("{n} unique generic scaffolds"));
        }
        None => notes.push("no SMILES input, scaffold report skipped".into()),
    }
    Ok((art.failed, notes))
}
