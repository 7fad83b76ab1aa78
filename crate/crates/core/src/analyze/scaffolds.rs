//! Generic Murcko scaffold landscape of a compound set.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalyzeError;
use crate::chem::{desalt, generic_murcko_scaffold, parse_smiles, write_smiles, SaltList, ScaffoldError};

/// Scaffold label shared by every molecule without a ring.
pub const ACYCLIC: &str = "Acyclic";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaffoldAssignment {
    pub compound_id: String,
    pub scaffold: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScaffoldReport {
    pub assignments: Vec<ScaffoldAssignment>,
    /// (compound id, message) for inputs that could not be processed.
    pub failures: Vec<(String, String)>,
}

impl ScaffoldReport {
    /// Compound ids per scaffold, scaffolds in lexical order.
    pub fn groups(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut g: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for a in &self.assignments {
            g.entry(a.scaffold.as_str()).or_default().push(a.compound_id.as_str());
        }
        g
    }

    /// Number of distinct scaffolds, the acyclic class counting as one.
    pub fn unique_count(&self) -> usize {
        self.groups().len()
    }

    /// Rows of scaffolds shared by more than one compound, most frequent
    /// first: (scaffold, count, compound id).
    pub fn repeats(&self) -> Vec<(String, usize, String)> {
        let mut groups: Vec<(&str, Vec<&str>)> = self.groups().into_iter().filter(|(_, ids)| ids.len() > 1).collect();
        groups.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));
        groups
            .into_iter()
            .flat_map(|(s, ids)| {
                let n = ids.len();
                ids.into_iter().map(move |id| (s.to_string(), n, id.to_string()))
            })
            .collect()
    }

    /// One row per compound; failures get an empty scaffold and the error
    /// text.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalyzeError> {
        let groups = self.groups();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["compound_id", "scaffold", "scaffold_count", "error"])?;
        for a in &self.assignments {
            let n = groups[a.scaffold.as_str()].len();
            w.write_record([a.compound_id.as_str(), &a.scaffold, &n.to_string(), ""])?;
        }
        for (id, msg) in &self.failures {
            w.write_record([id.as_str(), "", "", msg])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_repeats_csv<W: Write>(&self, writer: W) -> Result<(), AnalyzeError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["scaffold", "count", "compound_id"])?;
        for (s, n, id) in self.repeats() {
            w.write_record([s, n.to_string(), id])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses each SMILES, optionally desalts it, and assigns its generic
/// Murcko scaffold. Failures are recorded per compound.
pub fn scaffold_report(molecules: &[(String, String)], salts: Option<&SaltList>) -> ScaffoldReport {
    let mut report = ScaffoldReport::default();
    for (id, smiles) in molecules {
        let mol = match parse_smiles(smiles) {
            Ok(m) => m,
            Err(e) => {
                report.failures.push((id.clone(), e.to_string()));
                continue;
            }
        };
        let mol = match salts.map(|s| desalt(&mol, s)) {
            Some(Ok(m)) => m,
            Some(Err(e)) => {
                report.failures.push((id.clone(), e.to_string()));
                continue;
            }
            None => mol,
        };
        let scaffold = match generic_murcko_scaffold(&mol) {
            Ok(s) => write_smiles(&s),
            Err(ScaffoldError::Acyclic) => ACYCLIC.to_string(),
        };
        report.assignments.push(ScaffoldAssignment { compound_id: id.clone(), scaffold });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(smiles: &[&str]) -> Vec<(String, String)> {
        smiles.iter().enumerate().map(|(i, s)| (format!("m{i}"), s.to_string())).collect()
    }

    #[test]
    fn shared_skeleton_is_one_scaffold() {
        let r = scaffold_report(&set(&["c1ccccc1C", "c1ccccc1O", "C1CCCCC1CC"]), None);
        assert_eq!(r.unique_count(), 1);
        assert_eq!(r.repeats().len(), 3);
    }

    #[test]
    fn acyclic_class_and_failures() {
        let r = scaffold_report(&set(&["CCO", "CCCN", "C(("]), None);
        assert_eq!(r.unique_count(), 1);
        assert!(r.assignments.iter().all(|a| a.scaffold == ACYCLIC));
        assert_eq!(r.failures.len(), 1);
    }
}
