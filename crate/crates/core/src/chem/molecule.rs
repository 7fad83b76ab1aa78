//! Molecular graph with hydrogen-suppressed heavy atoms.

use serde::{Deserialize, Serialize};

use super::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    /// `@`
    Anticlockwise,
    /// `@@`
    Clockwise,
    /// Any other tetrahedral/allene/square-planar tag; kept only as a flag.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer valence contribution; aromatic bonds handled by the caller.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondStereo {
    /// `/`
    Up,
    /// `\`
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub isotope: Option<u16>,
    pub aromatic: bool,
    /// Total attached hydrogens.
    pub h_count: u8,
    pub chirality: Option<Chirality>,
    /// Hydrogen count is derived from valence rules (organic-subset atom)
    /// rather than fixed by a bracket expression.
    pub implicit_h: bool,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            charge: 0,
            isotope: None,
            aromatic: false,
            h_count: 0,
            chirality: None,
            implicit_h: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

impl Molecule {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    /// Adjacency list of `(neighbor, bond index)` pairs.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (bi, b) in self.bonds.iter().enumerate() {
            adj[b.a].push((b.b, bi));
            adj[b.b].push((b.a, bi));
        }
        adj
    }

    pub fn molecular_weight(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.element.atomic_weight() + a.h_count as f64 * Element::H.atomic_weight())
            .sum()
    }

    pub fn total_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.charge as i32).sum()
    }

    pub fn has_stereo(&self) -> bool {
        self.atoms.iter().any(|a| a.chirality.is_some()) || self.bonds.iter().any(|b| b.stereo.is_some())
    }

    /// Connected components as sorted atom index lists, ordered by lowest atom index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &(v, _) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `atoms` (indices are renumbered in the given order).
    pub fn subgraph(&self, atoms: &[usize]) -> Molecule {
        let mut map = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in atoms.iter().enumerate() {
            map[old] = new;
        }
        let new_atoms = atoms.iter().map(|&i| self.atoms[i].clone()).collect();
        let new_bonds = self
            .bonds
            .iter()
            .filter(|b| map[b.a] != usize::MAX && map[b.b] != usize::MAX)
            .map(|b| Bond { a: map[b.a], b: map[b.b], order: b.order, stereo: b.stereo })
            .collect();
        Molecule { atoms: new_atoms, bonds: new_bonds }
    }

    pub fn fragments(&self) -> Vec<Molecule> {
        self.components().iter().map(|c| self.subgraph(c)).collect()
    }

    /// Disjoint union of several molecules.
    pub fn combine(parts: &[Molecule]) -> Molecule {
        let mut out = Molecule::default();
        for p in parts {
            let off = out.atoms.len();
            out.atoms.extend(p.atoms.iter().cloned());
            out.bonds.extend(p.bonds.iter().map(|b| Bond { a: b.a + off, b: b.b + off, ..b.clone() }));
        }
        out
    }

    /// Flags each bond that lies on a cycle (i.e. is not a bridge).
    pub fn ring_bonds(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let adj = self.adjacency();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_bridge = vec![false; self.bonds.len()];
        let mut timer = 0usize;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // iterative DFS: (node, parent bond, next neighbor cursor)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(top) = stack.last_mut() {
                let (u, pbond) = (top.0, top.1);
                if top.2 < adj[u].len() {
                    let (v, bi) = adj[u][top.2];
                    top.2 += 1;
                    if bi == pbond {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, bi, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            is_bridge[pbond] = true;
                        }
                    }
                }
            }
        }
        is_bridge.iter().map(|b| !b).collect()
    }

    pub fn ring_atoms(&self) -> Vec<bool> {
        let rb = self.ring_bonds();
        let mut out = vec![false; self.atoms.len()];
        for (b, &r) in self.bonds.iter().zip(&rb) {
            if r {
                out[b.a] = true;
                out[b.b] = true;
            }
        }
        out
    }

    /// Hydrogen count implied by the organic-subset valence rules for atom `i`.
    pub fn implied_hydrogens(&self, i: usize) -> u8 {
        let atom = &self.atoms[i];
        let valences = atom.element.default_valences();
        if valences.is_empty() || atom.charge != 0 {
            return 0;
        }
        let mut aromatic_bonds = 0u32;
        let mut other = 0u32;
        for b in self.bonds.iter().filter(|b| b.a == i || b.b == i) {
            match b.order {
                BondOrder::Aromatic => aromatic_bonds += 1,
                o => other += o.valence() as u32,
            }
        }
        if atom.aromatic {
            let used = (3 * aromatic_bonds) / 2 + other;
            (valences[0] as u32).saturating_sub(used) as u8
        } else {
            let used = other + aromatic_bonds;
            valences
                .iter()
                .map(|&v| v as u32)
                .find(|&v| v >= used)
                .map(|v| (v - used) as u8)
                .unwrap_or(0)
        }
    }

    /// Recomputes hydrogen counts of all valence-derived atoms.
    pub fn refresh_implicit_hydrogens(&mut self) {
        for i in 0..self.atoms.len() {
            if self.atoms[i].implicit_h {
                self.atoms[i].h_count = self.implied_hydrogens(i);
            }
        }
    }

    pub fn remove_stereo(&mut self) {
        for a in &mut self.atoms {
            a.chirality = None;
        }
        for b in &mut self.bonds {
            b.stereo = None;
        }
    }

    /// Graph isomorphism by backtracking over atom labels
    /// (element, charge, isotope, aromaticity, hydrogen count) and bond orders.
    pub fn is_isomorphic_to(&self, other: &Molecule, compare_stereo: bool) -> bool {
        if self.atoms.len() != other.atoms.len() || self.bonds.len() != other.bonds.len() {
            return false;
        }
        let label = |m: &Molecule, i: usize, deg: usize| {
            let a = &m.atoms[i];
            (
                a.element,
                a.charge,
                a.isotope,
                a.aromatic,
                a.h_count,
                deg,
                if compare_stereo { a.chirality.is_some() } else { false },
            )
        };
        let adj_a = self.adjacency();
        let adj_b = other.adjacency();
        let la: Vec<_> = (0..self.atoms.len()).map(|i| label(self, i, adj_a[i].len())).collect();
        let lb: Vec<_> = (0..other.atoms.len()).map(|i| label(other, i, adj_b[i].len())).collect();
        let mut sa = la.clone();
        let mut sb = lb.clone();
        sa.sort();
        sb.sort();
        if sa != sb {
            return false;
        }
        let bond_key = |m: &Molecule, bi: usize| {
            let b = &m.bonds[bi];
            (b.order, if compare_stereo { b.stereo.is_some() } else { false })
        };
        let find_bond = |adj: &Vec<Vec<(usize, usize)>>, u: usize, v: usize| {
            adj[u].iter().find(|&&(w, _)| w == v).map(|&(_, bi)| bi)
        };
        // order atoms of `self` by BFS so each new atom has a mapped neighbor when possible
        let mut order = Vec::with_capacity(self.atoms.len());
        let mut seen = vec![false; self.atoms.len()];
        for s in 0..self.atoms.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut q = std::collections::VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                order.push(u);
                for &(v, _) in &adj_a[u] {
                    if !seen[v] {
                        seen[v] = true;
                        q.push_back(v);
                    }
                }
            }
        }
        let n = self.atoms.len();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];

        fn search(
            depth: usize,
            order: &[usize],
            map: &mut [usize],
            used: &mut [bool],
            ok: &dyn Fn(usize, usize, &[usize]) -> bool,
        ) -> bool {
            if depth == order.len() {
                return true;
            }
            let u = order[depth];
            for cand in 0..used.len() {
                if used[cand] || !ok(u, cand, map) {
                    continue;
                }
                map[u] = cand;
                used[cand] = true;
                if search(depth + 1, order, map, used, ok) {
                    return true;
                }
                map[u] = usize::MAX;
                used[cand] = false;
            }
            false
        }

        let ok = |u: usize, cand: usize, map: &[usize]| -> bool {
            if la[u] != lb[cand] {
                return false;
            }
            for &(v, bi) in &adj_a[u] {
                let mv = map[v];
                if mv == usize::MAX {
                    continue;
                }
                match find_bond(&adj_b, cand, mv) {
                    Some(bj) if bond_key(self, bi) == bond_key(other, bj) => {}
                    _ => return false,
                }
            }
            true
        };
        search(0, &order, &mut map, &mut used, &ok)
    }
}
