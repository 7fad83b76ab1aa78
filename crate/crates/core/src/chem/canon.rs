//! Canonical atom ranking and deterministic SMILES output.
//!
//! Ranks come from iterative neighborhood refinement of atom invariants,
//! with ties between symmetry-equivalent atoms broken one at a time. The
//! writer walks each component depth-first from its lowest-ranked atom,
//! always visiting neighbors in rank order, so two atom orderings of the
//! same graph serialize identically. Stereo markers are not written.

use super::molecule::{BondOrder, Molecule};

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect()
}

fn class_count(ranks: &[usize]) -> usize {
    let mut r = ranks.to_vec();
    r.sort_unstable();
    r.dedup();
    r.len()
}

fn refine(ranks: &mut Vec<usize>, adj: &[Vec<(usize, u8)>]) {
    let mut classes = class_count(ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..ranks.len())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = adj[i].iter().map(|&(j, o)| (ranks[j], o)).collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_rank(&keys);
        let c = class_count(&next);
        *ranks = next;
        if c == classes {
            break;
        }
        classes = c;
    }
}

/// Canonical rank for every atom (a permutation of `0..n`).
pub fn canonical_ranks(m: &Molecule) -> Vec<usize> {
    let n = m.atoms.len();
    if n == 0 {
        return Vec::new();
    }
    let ring = m.ring_atoms();
    let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
    for b in &m.bonds {
        adj[b.a].push((b.b, b.order.code()));
        adj[b.b].push((b.a, b.order.code()));
    }
    let inv: Vec<_> = (0..n)
        .map(|i| {
            let a = &m.atoms[i];
            (
                adj[i].len(),
                a.element.atomic_number(),
                a.aromatic,
                a.charge,
                a.isotope.unwrap_or(0),
                a.h_count,
                ring[i],
            )
        })
        .collect();
    let mut ranks = dense_rank(&inv);
    refine(&mut ranks, &adj);
    while class_count(&ranks) < n {
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).unwrap();
        let chosen = (0..n).find(|&i| ranks[i] == tied).unwrap();
        let keys: Vec<(usize, u8)> =
            (0..n).map(|i| (ranks[i], if i == chosen || ranks[i] != tied { 0 } else { 1 })).collect();
        ranks = dense_rank(&keys);
        refine(&mut ranks, &adj);
    }
    ranks
}

fn atom_token(m: &Molecule, i: usize) -> String {
    let a = &m.atoms[i];
    let bare = a.element.is_organic_subset()
        && a.charge == 0
        && a.isotope.is_none()
        && (!a.aromatic || a.element.is_aromatic_organic())
        && m.implied_hydrogens(i) == a.h_count;
    let symbol = if a.aromatic { a.element.symbol().to_ascii_lowercase() } else { a.element.symbol().to_string() };
    if bare {
        return symbol;
    }
    let mut s = String::from("[");
    if let Some(iso) = a.isotope {
        s.push_str(&iso.to_string());
    }
    s.push_str(&symbol);
    match a.h_count {
        0 => {}
        1 => s.push('H'),
        h => {
            s.push('H');
            s.push_str(&h.to_string());
        }
    }
    match a.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

fn bond_token(m: &Molecule, bi: usize) -> &'static str {
    let b = &m.bonds[bi];
    match b.order {
        BondOrder::Single => {
            if m.atoms[b.a].aromatic && m.atoms[b.b].aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => "",
    }
}

struct Writer<'a> {
    m: &'a Molecule,
    ranks: Vec<usize>,
    nbrs: Vec<Vec<(usize, usize)>>,
    visited: Vec<bool>,
    is_closure: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    closures: Vec<Vec<(usize, usize)>>,
    open_digit: Vec<Option<usize>>,
    digits_in_use: Vec<bool>,
}

impl Writer<'_> {
    fn plan(&mut self, u: usize, parent_bond: Option<usize>) {
        self.visited[u] = true;
        for k in 0..self.nbrs[u].len() {
            let (v, bi) = self.nbrs[u][k];
            if Some(bi) == parent_bond || self.is_closure[bi] {
                continue;
            }
            if self.visited[v] {
                self.is_closure[bi] = true;
                self.closures[u].push((v, bi));
                self.closures[v].push((u, bi));
            } else {
                self.children[u].push((v, bi));
                self.plan(v, Some(bi));
            }
        }
    }

    fn emit(&mut self, u: usize, out: &mut String) {
        out.push_str(&atom_token(self.m, u));
        let mut rc = self.closures[u].clone();
        rc.sort_by_key(|&(v, _)| self.ranks[v]);
        for (_, bi) in rc {
            match self.open_digit[bi] {
                Some(d) => {
                    push_digit(out, d);
                    self.digits_in_use[d] = false;
                }
                None => {
                    let d = (1..self.digits_in_use.len()).find(|&d| !self.digits_in_use[d]).unwrap();
                    self.digits_in_use[d] = true;
                    self.open_digit[bi] = Some(d);
                    out.push_str(bond_token(self.m, bi));
                    push_digit(out, d);
                }
            }
        }
        let kids = self.children[u].clone();
        for (k, &(v, bi)) in kids.iter().enumerate() {
            let last = k + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(bond_token(self.m, bi));
            self.emit(v, out);
            if !last {
                out.push(')');
            }
        }
    }
}

fn push_digit(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}

/// Deterministic SMILES: identical graphs (up to atom order) give identical strings.
pub fn write_smiles(m: &Molecule) -> String {
    let n = m.atoms.len();
    let ranks = canonical_ranks(m);
    let mut nbrs = m.adjacency();
    for list in &mut nbrs {
        list.sort_by_key(|&(v, _)| ranks[v]);
    }
    let mut w = Writer {
        m,
        ranks,
        nbrs,
        visited: vec![false; n],
        is_closure: vec![false; m.bonds.len()],
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
        open_digit: vec![None; m.bonds.len()],
        digits_in_use: vec![false; 100],
    };
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&i| w.ranks[i]);
    let mut parts = Vec::new();
    for s in starts {
        if w.visited[s] {
            continue;
        }
        w.plan(s, None);
        let mut out = String::new();
        w.emit(s, &mut out);
        parts.push(out);
    }
    parts.sort();
    parts.join(".")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn canon(s: &str) -> String {
        write_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn same_graph_same_string() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("c1ccccc1C"), canon("Cc1ccccc1"));
        assert_eq!(canon("OC(=O)c1ccccc1"), canon("O=C(O)c1ccccc1"));
        assert_ne!(canon("CCO"), canon("COC"));
    }

    #[test]
    fn round_trips() {
        for s in ["c1ccccc1", "[NH4+]", "C[C@H](N)C(=O)[O-]", "c1ccc2[nH]ccc2c1", "c1ccccc1-c1ccccc1", "[13CH4]", "C1CC2CCC1CC2"] {
            let m = parse_smiles(s).unwrap();
            let w = write_smiles(&m);
            let back = parse_smiles(&w).unwrap();
            assert!(back.is_isomorphic_to(&m, false), "{s} -> {w}");
            assert_eq!(write_smiles(&back), w);
        }
        let back = parse_smiles(&canon("[NH4+]")).unwrap();
        assert_eq!(back.atoms[0].charge, 1);
        assert_eq!(back.atoms[0].h_count, 4);
    }

    #[test]
    fn many_ring_closures() {
        let cubane = "C12C3C4C1C5C2C3C45";
        let w = canon(cubane);
        assert!(parse_smiles(&w).unwrap().is_isomorphic_to(&parse_smiles(cubane).unwrap(), false));
    }
}
