//! Generic ring-system scaffolds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::element::Element;
use super::molecule::{BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScaffoldError {
    #[error("molecule has no ring; scaffold undefined")]
    Acyclic,
}

/// How much of the molecule a scaffold keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaffoldMode {
    /// Rings plus linkers, side chains pruned, then made generic.
    #[default]
    Murcko,
    /// Whole heavy-atom graph made generic, nothing pruned.
    GenericGraph,
}

/// Every atom carbon, every bond single, no charges or isotopes.
pub fn make_generic(m: &Molecule) -> Molecule {
    let mut g = m.clone();
    for a in &mut g.atoms {
        a.element = Element::C;
        a.charge = 0;
        a.isotope = None;
        a.aromatic = false;
        a.chirality = None;
        a.implicit_h = true;
    }
    for b in &mut g.bonds {
        b.order = BondOrder::Single;
        b.stereo = None;
    }
    g.refresh_implicit_hydrogens();
    g
}

/// Ring systems and the linkers between them, all other atoms removed.
pub fn murcko_framework(m: &Molecule) -> Result<Molecule, ScaffoldError> {
    let ring = m.ring_atoms();
    if !ring.iter().any(|&r| r) {
        return Err(ScaffoldError::Acyclic);
    }
    let adj = m.adjacency();
    let mut alive = vec![true; m.atoms.len()];
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    // components without rings vanish entirely
    let mut stack: Vec<usize> = (0..m.atoms.len()).filter(|&i| !ring[i] && degree[i] <= 1).collect();
    while let Some(u) = stack.pop() {
        if !alive[u] {
            continue;
        }
        alive[u] = false;
        for &(v, _) in &adj[u] {
            if alive[v] {
                degree[v] -= 1;
                if !ring[v] && degree[v] <= 1 {
                    stack.push(v);
                }
            }
        }
    }
    let keep: Vec<usize> = (0..m.atoms.len()).filter(|&i| alive[i]).collect();
    let mut out = m.subgraph(&keep);
    for a in &mut out.atoms {
        a.implicit_h = true;
    }
    out.refresh_implicit_hydrogens();
    Ok(out)
}

/// Generic Murcko scaffold: framework with all atoms carbon and all bonds single.
pub fn generic_murcko_scaffold(m: &Molecule) -> Result<Molecule, ScaffoldError> {
    murcko_framework(m).map(|f| make_generic(&f))
}

pub fn scaffold(m: &Molecule, mode: ScaffoldMode) -> Result<Molecule, ScaffoldError> {
    match mode {
        ScaffoldMode::Murcko => generic_murcko_scaffold(m),
        ScaffoldMode::GenericGraph => Ok(make_generic(m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_smiles, write_smiles};

    fn gm(s: &str) -> Result<String, ScaffoldError> {
        generic_murcko_scaffold(&parse_smiles(s).unwrap()).map(|m| write_smiles(&m))
    }

    #[test]
    fn toluene_to_cyclohexane() {
        assert_eq!(gm("Cc1ccccc1").unwrap(), write_smiles(&parse_smiles("C1CCCCC1").unwrap()));
    }

    #[test]
    fn biphenyl() {
        let s = gm("c1ccccc1-c1ccccc1").unwrap();
        let m = parse_smiles(&s).unwrap();
        assert_eq!(m.atoms.len(), 12);
        assert_eq!(m.bonds.len(), 13);
        assert!(m.is_isomorphic_to(&parse_smiles("C1CCCCC1C1CCCCC1").unwrap(), false));
    }

    #[test]
    fn linker_kept_side_chain_dropped() {
        let s = gm("CCOc1ccc(CCc2ccncc2)cc1").unwrap();
        assert_eq!(s, write_smiles(&parse_smiles("C1CCC(CCC2CCCCC2)CC1").unwrap()));
    }

    #[test]
    fn acyclic() {
        assert_eq!(gm("CCCC"), Err(ScaffoldError::Acyclic));
        let g = scaffold(&parse_smiles("CCCO").unwrap(), ScaffoldMode::GenericGraph).unwrap();
        assert_eq!(write_smiles(&g), "CCCC");
    }

    #[test]
    fn generic_graph_merges_heteroatom_variants() {
        let a = scaffold(&parse_smiles("CCN1CCN(CC1)c1ccccc1").unwrap(), ScaffoldMode::GenericGraph).unwrap();
        let b = scaffold(&parse_smiles("CCC1CCC(CC1)c1ccccc1").unwrap(), ScaffoldMode::GenericGraph).unwrap();
        assert_eq!(write_smiles(&a), write_smiles(&b));
    }
}
