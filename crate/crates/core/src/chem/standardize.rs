//! Salt stripping and molecule standardization.
//!
//! The pipeline is: cleanup, strip listed counter-ion components, keep the
//! most significant remaining fragment, drop stereo markers, neutralize
//! charges, cleanup again.

use std::collections::BTreeSet;
use thiserror::Error;

use super::canon::write_smiles;
use super::element::Element;
use super::molecule::{BondOrder, Molecule};
use super::smiles::{parse_smiles, SmilesError};

/// Counter-ion list shipped with the crate, one SMILES per line.
pub const BUILTIN_SALTS: &str = include_str!("../../resources/salts.smi");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesaltError {
    #[error("molecule has no atoms")]
    EmptyMolecule,
    #[error("every component matched the salt list")]
    EmptyAfterDesalt,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaltListError {
    #[error("salt list is empty")]
    Empty,
    #[error("salt entry {line} ({text:?}) is not valid SMILES: {source}")]
    Parse { line: usize, text: String, source: SmilesError },
}

/// Charge- and hydrogen-insensitive key of a fragment: the canonical
/// serialization of its heavy-atom skeleton.
pub fn skeleton_key(m: &Molecule) -> String {
    let mut s = m.clone();
    for a in &mut s.atoms {
        a.charge = 0;
        a.isotope = None;
        a.chirality = None;
        a.h_count = 0;
        a.implicit_h = false;
    }
    s.remove_stereo();
    write_smiles(&s)
}

/// Set of counter-ion fragments matched by heavy-atom skeleton.
#[derive(Debug, Clone)]
pub struct SaltList {
    entries: Vec<String>,
    keys: BTreeSet<String>,
}

impl SaltList {
    /// Parses one SMILES per line; blank lines and `#` comments are skipped.
    /// Bare element symbols such as `Na` are read as single atoms.
    pub fn parse(text: &str) -> Result<SaltList, SaltListError> {
        let mut entries = Vec::new();
        let mut keys = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mol = match parse_smiles(line) {
                Ok(m) => m,
                Err(e) => match Element::from_symbol(line) {
                    Some(_) => parse_smiles(&format!("[{line}]")).map_err(|_| SaltListError::Parse {
                        line: i + 1,
                        text: line.to_string(),
                        source: e.clone(),
                    })?,
                    None => {
                        return Err(SaltListError::Parse { line: i + 1, text: line.to_string(), source: e })
                    }
                },
            };
            entries.push(write_smiles(&mol));
            keys.insert(skeleton_key(&mol));
        }
        if entries.is_empty() {
            return Err(SaltListError::Empty);
        }
        Ok(SaltList { entries, keys })
    }

    pub fn builtin() -> SaltList {
        SaltList::parse(BUILTIN_SALTS).expect("bundled salt list is valid")
    }

    /// Canonical form of each entry, in file order.
    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn matches(&self, fragment: &Molecule) -> bool {
        self.keys.contains(&skeleton_key(fragment))
    }
}

/// Aromaticity sanitation plus hypervalent N=O normalization.
pub fn cleanup(m: &Molecule) -> Molecule {
    let mut m = m.clone();
    let ring_bonds = m.ring_bonds();
    for (b, &in_ring) in m.bonds.iter_mut().zip(&ring_bonds) {
        if b.order == BondOrder::Aromatic && !in_ring {
            b.order = BondOrder::Single;
        }
    }
    let ring_atoms = m.ring_atoms();
    for (a, &in_ring) in m.atoms.iter_mut().zip(&ring_atoms) {
        if a.aromatic && !in_ring {
            a.aromatic = false;
        }
    }
    // aromatic bonds must join aromatic atoms
    for bi in 0..m.bonds.len() {
        let (a, b) = (m.bonds[bi].a, m.bonds[bi].b);
        if m.bonds[bi].order == BondOrder::Aromatic && !(m.atoms[a].aromatic && m.atoms[b].aromatic) {
            m.bonds[bi].order = BondOrder::Single;
        }
    }

    // N(=O) with five bonds -> [N+][O-]
    let adj = m.adjacency();
    for n in 0..m.atoms.len() {
        let atom = &m.atoms[n];
        if atom.element != Element::N || atom.charge != 0 || atom.aromatic {
            continue;
        }
        let valence: u32 = adj[n].iter().map(|&(_, bi)| m.bonds[bi].order.valence() as u32).sum::<u32>()
            + atom.h_count as u32 * u32::from(!atom.implicit_h);
        if valence != 5 {
            continue;
        }
        let oxo = adj[n].iter().copied().find(|&(o, bi)| {
            m.bonds[bi].order == BondOrder::Double
                && m.atoms[o].element == Element::O
                && m.atoms[o].charge == 0
                && adj[o].len() == 1
        });
        if let Some((o, bi)) = oxo {
            m.bonds[bi].order = BondOrder::Single;
            m.atoms[n].charge = 1;
            m.atoms[o].charge = -1;
            m.atoms[o].h_count = 0;
            m.atoms[o].implicit_h = false;
            if m.atoms[n].implicit_h {
                m.atoms[n].h_count = 0;
                m.atoms[n].implicit_h = false;
            }
        }
    }
    m.refresh_implicit_hydrogens();
    m
}

/// Neutralizes charges by proton transfer.
///
/// Positive atoms carrying hydrogens lose protons. Negative O/N/S atoms
/// gain protons, except that as many negative charges are kept as there are
/// positive charges that cannot be removed (quaternary or charge-separated
/// nitrogen), preferring negatives adjacent to those positives.
pub fn uncharge(m: &Molecule) -> Molecule {
    let mut m = m.clone();
    for a in &mut m.atoms {
        while a.charge > 0 && a.h_count > 0 {
            a.charge -= 1;
            a.h_count -= 1;
            a.implicit_h = false;
        }
    }
    let fixed_positive: i32 = m.atoms.iter().map(|a| (a.charge.max(0)) as i32).sum();
    let adj = m.adjacency();
    let mut negatives: Vec<(bool, usize)> = m
        .atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.charge < 0 && matches!(a.element, Element::O | Element::N | Element::S))
        .map(|(i, _)| (adj[i].iter().any(|&(j, _)| m.atoms[j].charge > 0), i))
        .collect();
    // neutralize non-adjacent ones first; keep adjacent ones for last
    negatives.sort();
    let total_negative: i32 = negatives.iter().map(|&(_, i)| -(m.atoms[i].charge as i32)).sum();
    let mut to_neutralize = (total_negative - fixed_positive).max(0);
    for &(_, i) in &negatives {
        while to_neutralize > 0 && m.atoms[i].charge < 0 {
            let a = &mut m.atoms[i];
            a.charge += 1;
            a.h_count += 1;
            a.implicit_h = false;
            to_neutralize -= 1;
        }
    }
    m
}

fn significance_key(m: &Molecule) -> (std::cmp::Reverse<usize>, std::cmp::Reverse<u64>, String) {
    (
        std::cmp::Reverse(m.heavy_atom_count()),
        std::cmp::Reverse((m.molecular_weight() * 1e6).round() as u64),
        write_smiles(m),
    )
}

/// Most heavy atoms, then larger molecular weight, then smallest canonical string.
pub fn most_significant_fragment(frags: &[Molecule]) -> Option<&Molecule> {
    frags.iter().min_by_key(|f| significance_key(f))
}

pub fn desalt(m: &Molecule, salts: &SaltList) -> Result<Molecule, DesaltError> {
    if m.atoms.is_empty() {
        return Err(DesaltError::EmptyMolecule);
    }
    let cleaned = cleanup(m);
    let frags = cleaned.fragments();
    let kept: Vec<Molecule> = frags.iter().filter(|f| !salts.matches(f)).cloned().collect();
    let kept = if kept.is_empty() {
        // a multi-component record made only of listed ions keeps its largest part
        if frags.len() > 1 {
            frags
        } else {
            return Err(DesaltError::EmptyAfterDesalt);
        }
    } else {
        kept
    };
    let mut chosen = most_significant_fragment(&kept).expect("non-empty").clone();
    chosen.remove_stereo();
    let neutral = uncharge(&chosen);
    Ok(cleanup(&neutral))
}
