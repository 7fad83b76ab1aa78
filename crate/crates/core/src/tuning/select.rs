//! Tuned-model selection, external-test evaluation and single- versus
//! multi-task pairing.

use std::cmp::Ordering as CmpOrdering;
use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::AtomicUsize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use super::sweep::{column_metrics, fit_and_predict, make_split, target_columns, CvPlan, LeakageAudit, MetricSummary, TaskMode, TrialResult};
use super::TuningError;
use crate::data::ModelData;
use crate::models::ModelClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRun {
    pub fold: u8,
    pub repeat: usize,
    pub seed: u64,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub trial: TrialResult,
    /// Highest validation R² among all entries for this target.
    pub overall_best: bool,
    pub test_runs: Vec<TestRun>,
}

impl SelectionEntry {
    pub fn score(&self) -> f64 {
        self.trial.score().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn test_summary(&self) -> Option<MetricSummary> {
        (!self.test_runs.is_empty()).then(|| MetricSummary::from_metrics(self.test_runs.iter().map(|r| &r.test)))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionReport {
    pub entries: Vec<SelectionEntry>,
    /// Groups in which every trial failed.
    pub failed_groups: Vec<String>,
    pub test_threshold: Option<f64>,
    pub test_audit: LeakageAudit,
}

impl SelectionReport {
    pub fn overall_best(&self) -> impl Iterator<Item = &SelectionEntry> {
        self.entries.iter().filter(|e| e.overall_best)
    }

    /// Entries whose mean validation R² exceeds `threshold`.
    pub fn above_threshold(&self, threshold: f64) -> Vec<&SelectionEntry> {
        self.entries.iter().filter(|e| e.score() > threshold).collect()
    }

    pub fn best_for(&self, target: &str) -> Option<&SelectionEntry> {
        self.entries.iter().find(|e| e.overall_best && e.trial.target == target)
    }
}

type GroupKey = (String, ModelClass, TaskMode, String);

fn group_key(t: &TrialResult) -> GroupKey {
    (t.representation.clone(), t.class, t.mode, t.target.clone())
}

fn group_label(k: &GroupKey) -> String {
    format!("{}/{}/{}/{}", k.0, k.1, k.2.label(), k.3)
}

/// True when `a` beats `b`: higher mean validation R², then lower
/// complexity, then earlier grid position.
fn better(a: &TrialResult, b: &TrialResult, d: usize) -> bool {
    let (sa, sb) = (a.score().unwrap(), b.score().unwrap());
    if sa != sb {
        return sa > sb;
    }
    let t = a.group.len();
    match cmp_lex(&a.params.complexity(d, t), &b.params.complexity(d, t)) {
        CmpOrdering::Less => true,
        CmpOrdering::Greater => false,
        CmpOrdering::Equal => a.grid_index < b.grid_index,
    }
}

fn cmp_lex(a: &[f64], b: &[f64]) -> CmpOrdering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            CmpOrdering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Best trial per (representation, class, mode, target). `n_features` feeds
/// the complexity tie-break.
pub fn select_tuned(trials: &[TrialResult], n_features: &BTreeMap<String, usize>) -> Result<SelectionReport, TuningError> {
    let mut groups: BTreeMap<GroupKey, Vec<&TrialResult>> = BTreeMap::new();
    for t in trials {
        groups.entry(group_key(t)).or_default().push(t);
    }
    let mut entries = Vec::new();
    let mut failed_groups = Vec::new();
    for (key, members) in &groups {
        let d = n_features.get(&key.0).copied().unwrap_or(0);
        let mut best: Option<&TrialResult> = None;
        for t in members.iter().filter(|t| t.score().is_some()) {
            if best.is_none_or(|b| better(t, b, d)) {
                best = Some(t);
            }
        }
        match best {
            Some(t) => entries.push(SelectionEntry { trial: t.clone(), overall_best: false, test_runs: Vec::new() }),
            None => failed_groups.push(group_label(key)),
        }
    }
    if entries.is_empty() {
        return Err(TuningError::AllTrialsFailed(failed_groups.join(", ")));
    }
    let mut best_by_target: HashMap<String, usize> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        match best_by_target.get(&e.trial.target) {
            Some(&j) if entries[j].score() >= e.score() => {}
            _ => {
                best_by_target.insert(e.trial.target.clone(), i);
            }
        }
    }
    for &i in best_by_target.values() {
        entries[i].overall_best = true;
    }
    Ok(SelectionReport { entries, failed_groups, test_threshold: None, test_audit: LeakageAudit::default() })
}

/// Retrains each selected model whose mean validation R² exceeds
/// `threshold` on every CV training split × repeat (same seeds as the
/// sweep) and scores it on the held-out test fold. Entries whose
/// representation has no dataset in `datasets` are skipped.
pub fn evaluate_test(
    plan: &CvPlan,
    datasets: &[&ModelData],
    report: &mut SelectionReport,
    threshold: f64,
) -> Result<(), TuningError> {
    report.test_threshold = Some(threshold);
    let checks = AtomicUsize::new(0);
    let violations = AtomicUsize::new(0);
    // one job per distinct fitted model; multitask entries share fits
    type ModelKey = (String, ModelClass, TaskMode, Vec<String>, usize);
    let mut wanted: BTreeMap<ModelKey, Vec<usize>> = BTreeMap::new();
    for (i, e) in report.entries.iter().enumerate() {
        let t = &e.trial;
        if e.score() > threshold && datasets.iter().any(|d| d.representation == t.representation) {
            wanted.entry((t.representation.clone(), t.class, t.mode, t.group.clone(), t.grid_index)).or_default().push(i);
        }
    }
    let mut jobs = Vec::new();
    for (key, idx) in &wanted {
        let repeats = plan.repeats_for(key.1);
        for &f in &plan.cv_folds {
            for r in 0..repeats {
                jobs.push((key.clone(), idx[0], f, r));
            }
        }
    }
    let entries = &report.entries;
    let mut results: Vec<_> = jobs
        .par_iter()
        .map(|(key, entry, f, r)| -> Result<_, TuningError> {
            let data = datasets.iter().find(|d| d.representation == key.0).unwrap();
            let trial = &entries[*entry].trial;
            let cols = target_columns(data, &trial.group)?;
            let split = make_split(plan, data, *f, &checks, &violations);
            let test_rows = data.rows_in_folds(&[plan.test_fold]);
            let seed = plan.trial_seed(trial.grid_index, *f, *r);
            let res = if split.leaked {
                Err("leakage check failed".to_string())
            } else {
                fit_and_predict(&trial.params, seed, data, &cols, &split, &test_rows)
                    .map(|(_, pt)| (0..cols.len()).map(|k| column_metrics(data, &test_rows, cols[k], &pt, k)).collect::<Vec<_>>())
            };
            Ok((key.clone(), *f, *r, seed, res))
        })
        .collect::<Result<Vec<_>, _>>()?;
    results.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
    for (key, f, r, seed, res) in results {
        let metrics = match res {
            Ok(m) => m,
            Err(e) => {
                log::warn!("test evaluation of {}/{} failed: {e}", key.1, key.0);
                continue;
            }
        };
        for &i in &wanted[&key] {
            let k = key.3.iter().position(|t| *t == report.entries[i].trial.target).unwrap();
            report.entries[i].test_runs.push(TestRun { fold: f, repeat: r, seed, test: metrics[k] });
        }
    }
    report.test_audit.merge(LeakageAudit { checks: checks.into_inner(), violations: violations.into_inner() });
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    /// e.g. "EN/MTEN", "PLS", "GBT", "MLP".
    pub family: String,
    pub representation: String,
    pub target: String,
    pub single_r2: Option<f64>,
    pub multi_r2: Option<f64>,
}

impl PairRow {
    /// `None` when a counterpart is missing; ties are not multi wins.
    pub fn multi_wins(&self) -> Option<bool> {
        Some(self.multi_r2? > self.single_r2?)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairingTable {
    pub rows: Vec<PairRow>,
}

impl PairingTable {
    pub fn comparable(&self) -> usize {
        self.rows.iter().filter(|r| r.multi_wins().is_some()).count()
    }

    pub fn multi_wins(&self) -> usize {
        self.rows.iter().filter(|r| r.multi_wins() == Some(true)).count()
    }

    pub fn missing(&self) -> impl Iterator<Item = &PairRow> {
        self.rows.iter().filter(|r| r.multi_wins().is_none())
    }

    pub fn win_fraction(&self) -> f64 {
        self.multi_wins() as f64 / self.comparable().max(1) as f64
    }
}

fn family(class: ModelClass) -> Option<&'static str> {
    match class {
        ModelClass::En | ModelClass::Mten => Some("EN/MTEN"),
        ModelClass::Pls => Some("PLS"),
        ModelClass::Gbt => Some("GBT"),
        ModelClass::Mlp => Some("MLP"),
        _ => None,
    }
}

/// Best single-task versus best multi-task validation R² for every
/// (family, representation, target) that appears in either mode.
pub fn compare_single_vs_multi(trials: &[TrialResult]) -> PairingTable {
    let mut best: BTreeMap<(&'static str, String, String), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for t in trials {
        let (Some(fam), Some(score)) = (family(t.class), t.score()) else {
            if let Some(fam) = family(t.class) {
                best.entry((fam, t.representation.clone(), t.target.clone())).or_default();
            }
            continue;
        };
        let slot = best.entry((fam, t.representation.clone(), t.target.clone())).or_default();
        let cell = if t.mode == TaskMode::Single { &mut slot.0 } else { &mut slot.1 };
        if cell.is_none_or(|c| score > c) {
            *cell = Some(score);
        }
    }
    PairingTable {
        rows: best
            .into_iter()
            .map(|((fam, rep, target), (s, m))| PairRow {
                family: fam.to_string(),
                representation: rep,
                target,
                single_r2: s,
                multi_r2: m,
            })
            .collect(),
    }
}
