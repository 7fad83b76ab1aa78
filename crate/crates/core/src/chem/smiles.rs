//! SMILES reader.
//!
//! Supports the organic subset, bracket atoms (isotope, chirality, hydrogen
//! count, charge, atom class), aromatic lowercase atoms, ring closures
//! including `%nn`, branches, dot-separated components and `/` `\` bond
//! markers. Reaction SMILES and wildcard atoms are rejected.

use std::collections::HashMap;
use thiserror::Error;

use super::element::Element;
use super::molecule::{Atom, Bond, BondOrder, BondStereo, Chirality, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("empty SMILES string")]
    Empty,
    #[error("unknown element symbol '{0}'")]
    UnknownElement(String),
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unclosed ring bond {0}")]
    UnclosedRing(u32),
    #[error("unmatched ')'")]
    UnmatchedCloseParen,
    #[error("unclosed branch '('")]
    UnclosedBranch,
    #[error("unclosed bracket atom")]
    UnclosedBracket,
    #[error("bond symbol without a following atom")]
    DanglingBond,
    #[error("branch or ring bond without a preceding atom")]
    MissingAtom,
    #[error("conflicting bond symbols on ring closure {0}")]
    RingBondConflict(u32),
    #[error("ring closure {0} bonds an atom to itself")]
    SelfLoop(u32),
    #[error("duplicate bond between the same atoms")]
    DuplicateBond,
    #[error("aromatic bond between non-aromatic atoms")]
    AromaticBondMismatch,
    #[error("wildcard atoms are not supported")]
    Wildcard,
    #[error("reaction SMILES are not supported")]
    Reaction,
    #[error("quadruple bonds are not supported")]
    QuadrupleBond,
    #[error("malformed bracket atom: {0}")]
    BadBracket(&'static str),
}

/// Syntax error annotated with the byte position in the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES syntax error at position {position}: {kind}")]
pub struct SmilesError {
    pub position: usize,
    pub kind: SmilesErrorKind,
}

impl SmilesError {
    fn new(position: usize, kind: SmilesErrorKind) -> Self {
        SmilesError { position, kind }
    }
}

#[derive(Clone, Copy)]
struct PendingBond {
    order: Option<BondOrder>,
    stereo: Option<BondStereo>,
    position: usize,
}

struct RingOpen {
    atom: usize,
    bond: Option<PendingBond>,
    position: usize,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    mol: Molecule,
    prev: Option<usize>,
    pending: Option<PendingBond>,
    branches: Vec<(usize, usize)>,
    rings: HashMap<u32, RingOpen>,
}

pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SmilesError::new(0, SmilesErrorKind::Empty));
    }
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
        mol: Molecule::default(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: HashMap::new(),
    };
    p.run()?;
    let mut mol = p.mol;
    mol.refresh_implicit_hydrogens();
    Ok(mol)
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn err<T>(&self, kind: SmilesErrorKind) -> Result<T, SmilesError> {
        Err(SmilesError::new(self.pos, kind))
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            match c {
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => self.bond_symbol(c)?,
                b'(' => {
                    let Some(prev) = self.prev else { return self.err(SmilesErrorKind::MissingAtom) };
                    if self.pending.is_some() {
                        return self.err(SmilesErrorKind::DanglingBond);
                    }
                    self.branches.push((prev, self.pos));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return self.err(SmilesErrorKind::DanglingBond);
                    }
                    let Some((atom, _)) = self.branches.pop() else {
                        return self.err(SmilesErrorKind::UnmatchedCloseParen);
                    };
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return self.err(SmilesErrorKind::DanglingBond);
                    }
                    if !self.branches.is_empty() {
                        return self.err(SmilesErrorKind::UnclosedBranch);
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    let n = (c - b'0') as u32;
                    self.pos += 1;
                    self.ring_closure(n, self.pos - 1)?;
                }
                b'%' => {
                    let start = self.pos;
                    let d = &self.s[self.pos + 1..];
                    if d.len() < 2 || !d[0].is_ascii_digit() || !d[1].is_ascii_digit() {
                        return self.err(SmilesErrorKind::UnexpectedChar('%'));
                    }
                    let n = ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32;
                    self.pos += 3;
                    self.ring_closure(n, start)?;
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom)?;
                }
                b'*' => return self.err(SmilesErrorKind::Wildcard),
                b'>' => return self.err(SmilesErrorKind::Reaction),
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom)?;
                }
            }
        }
        if let Some(p) = self.pending {
            return Err(SmilesError::new(p.position, SmilesErrorKind::DanglingBond));
        }
        if let Some(&(_, pos)) = self.branches.last() {
            return Err(SmilesError::new(pos, SmilesErrorKind::UnclosedBranch));
        }
        if let Some((&n, open)) = self.rings.iter().min_by_key(|(_, r)| r.position) {
            return Err(SmilesError::new(open.position, SmilesErrorKind::UnclosedRing(n)));
        }
        Ok(())
    }

    fn bond_symbol(&mut self, c: u8) -> Result<(), SmilesError> {
        if self.prev.is_none() {
            return self.err(SmilesErrorKind::MissingAtom);
        }
        if self.pending.is_some() {
            return self.err(SmilesErrorKind::UnexpectedChar(c as char));
        }
        let (order, stereo) = match c {
            b'-' => (BondOrder::Single, None),
            b'=' => (BondOrder::Double, None),
            b'#' => (BondOrder::Triple, None),
            b':' => (BondOrder::Aromatic, None),
            b'/' => (BondOrder::Single, Some(BondStereo::Up)),
            b'\\' => (BondOrder::Single, Some(BondStereo::Down)),
            _ => return self.err(SmilesErrorKind::QuadrupleBond),
        };
        self.pending = Some(PendingBond { order: Some(order), stereo, position: self.pos });
        self.pos += 1;
        Ok(())
    }

    fn ring_closure(&mut self, n: u32, position: usize) -> Result<(), SmilesError> {
        let Some(cur) = self.prev else {
            return Err(SmilesError::new(position, SmilesErrorKind::MissingAtom));
        };
        let here = self.pending.take();
        match self.rings.remove(&n) {
            None => {
                self.rings.insert(n, RingOpen { atom: cur, bond: here, position });
            }
            Some(open) => {
                if open.atom == cur {
                    return Err(SmilesError::new(position, SmilesErrorKind::SelfLoop(n)));
                }
                let spec = match (open.bond, here) {
                    (Some(a), Some(b)) => {
                        if a.order != b.order {
                            return Err(SmilesError::new(position, SmilesErrorKind::RingBondConflict(n)));
                        }
                        Some(a)
                    }
                    (a, b) => a.or(b),
                };
                self.connect(open.atom, cur, spec, position)?;
            }
        }
        Ok(())
    }

    fn connect(
        &mut self,
        a: usize,
        b: usize,
        spec: Option<PendingBond>,
        position: usize,
    ) -> Result<(), SmilesError> {
        if self.mol.bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
            return Err(SmilesError::new(position, SmilesErrorKind::DuplicateBond));
        }
        let both_aromatic = self.mol.atoms[a].aromatic && self.mol.atoms[b].aromatic;
        let (order, stereo) = match spec {
            Some(PendingBond { order: Some(o), stereo, .. }) => (o, stereo),
            _ => (if both_aromatic { BondOrder::Aromatic } else { BondOrder::Single }, None),
        };
        if order == BondOrder::Aromatic && !both_aromatic {
            return Err(SmilesError::new(position, SmilesErrorKind::AromaticBondMismatch));
        }
        self.mol.bonds.push(Bond { a, b, order, stereo });
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom) -> Result<(), SmilesError> {
        let idx = self.mol.atoms.len();
        self.mol.atoms.push(atom);
        if let Some(prev) = self.prev {
            let spec = self.pending.take();
            let pos = spec.map(|p| p.position).unwrap_or(self.pos);
            self.connect(prev, idx, spec, pos)?;
        } else if let Some(p) = self.pending {
            return Err(SmilesError::new(p.position, SmilesErrorKind::DanglingBond));
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let rest = &self.s[self.pos..];
        let two = |a: u8, b: u8| rest.len() >= 2 && rest[0] == a && rest[1] == b;
        let (sym, aromatic, len): (&str, bool, usize) = if two(b'C', b'l') {
            ("Cl", false, 2)
        } else if two(b'B', b'r') {
            ("Br", false, 2)
        } else {
            match rest[0] {
                b'B' => ("B", false, 1),
                b'C' => ("C", false, 1),
                b'N' => ("N", false, 1),
                b'O' => ("O", false, 1),
                b'P' => ("P", false, 1),
                b'S' => ("S", false, 1),
                b'F' => ("F", false, 1),
                b'I' => ("I", false, 1),
                b'b' => ("B", true, 1),
                b'c' => ("C", true, 1),
                b'n' => ("N", true, 1),
                b'o' => ("O", true, 1),
                b'p' => ("P", true, 1),
                b's' => ("S", true, 1),
                c if c.is_ascii_alphabetic() => {
                    let end = rest
                        .iter()
                        .skip(1)
                        .position(|c| !c.is_ascii_lowercase())
                        .map(|p| p + 1)
                        .unwrap_or(rest.len())
                        .min(2);
                    let s = String::from_utf8_lossy(&rest[..end]).into_owned();
                    return self.err(SmilesErrorKind::UnknownElement(s));
                }
                c => return self.err(SmilesErrorKind::UnexpectedChar(c as char)),
            }
        };
        self.pos += len;
        let mut atom = Atom::new(Element::from_symbol(sym).expect("organic subset"));
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let Some(rel_end) = self.s[start..].iter().position(|&c| c == b']') else {
            return Err(SmilesError::new(start, SmilesErrorKind::UnclosedBracket));
        };
        let body = &self.s[start + 1..start + rel_end];
        let bad = |what| Err(SmilesError::new(start, SmilesErrorKind::BadBracket(what)));
        let mut i = 0;

        let mut isotope = None;
        let digits = body.iter().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            let v: u32 = std::str::from_utf8(&body[..digits]).unwrap().parse().unwrap_or(u32::MAX);
            if v > u16::MAX as u32 {
                return bad("isotope out of range");
            }
            isotope = Some(v as u16);
            i = digits;
        }

        if i >= body.len() {
            return bad("missing element symbol");
        }
        if body[i] == b'*' {
            return Err(SmilesError::new(start + 1 + i, SmilesErrorKind::Wildcard));
        }
        let (element, aromatic) = {
            let c0 = body[i];
            if c0.is_ascii_uppercase() {
                let two = body.get(i + 1).filter(|c| c.is_ascii_lowercase()).map(|&c1| {
                    let s = [c0, c1];
                    String::from_utf8_lossy(&s).into_owned()
                });
                match two.as_deref().and_then(Element::from_symbol) {
                    Some(e) => {
                        i += 2;
                        (e, false)
                    }
                    None => {
                        let s = (c0 as char).to_string();
                        match Element::from_symbol(&s) {
                            Some(e) => {
                                i += 1;
                                (e, false)
                            }
                            None => {
                                let shown = two.unwrap_or(s);
                                return Err(SmilesError::new(
                                    start + 1 + i,
                                    SmilesErrorKind::UnknownElement(shown),
                                ));
                            }
                        }
                    }
                }
            } else if c0.is_ascii_lowercase() {
                let two: Option<&str> = match body.get(i..i + 2) {
                    Some(b"se") => Some("Se"),
                    Some(b"as") => Some("As"),
                    Some(b"te") => Some("Te"),
                    _ => None,
                };
                if let Some(sym) = two {
                    i += 2;
                    (Element::from_symbol(sym).unwrap(), true)
                } else {
                    let sym = match c0 {
                        b'b' => "B",
                        b'c' => "C",
                        b'n' => "N",
                        b'o' => "O",
                        b'p' => "P",
                        b's' => "S",
                        _ => {
                            return Err(SmilesError::new(
                                start + 1 + i,
                                SmilesErrorKind::UnknownElement((c0 as char).to_string()),
                            ))
                        }
                    };
                    i += 1;
                    (Element::from_symbol(sym).unwrap(), true)
                }
            } else {
                return bad("missing element symbol");
            }
        };

        let mut chirality = None;
        if body.get(i) == Some(&b'@') {
            i += 1;
            if body.get(i) == Some(&b'@') {
                i += 1;
                chirality = Some(Chirality::Clockwise);
            } else if body.get(i).is_some_and(|c| c.is_ascii_uppercase() && *c != b'H') {
                // @TH1, @AL2, @SP3, @TB12, @OH25 ...
                i += 2;
                while body.get(i).is_some_and(|c| c.is_ascii_digit()) {
                    i += 1;
                }
                chirality = Some(Chirality::Other);
            } else {
                chirality = Some(Chirality::Anticlockwise);
            }
        }

        let mut h_count = 0u8;
        if body.get(i) == Some(&b'H') {
            i += 1;
            h_count = 1;
            if let Some(&d) = body.get(i).filter(|c| c.is_ascii_digit()) {
                h_count = d - b'0';
                i += 1;
            }
        }

        let mut charge: i32 = 0;
        if let Some(&sign) = body.get(i).filter(|&&c| c == b'+' || c == b'-') {
            let unit = if sign == b'+' { 1 } else { -1 };
            i += 1;
            let digits = body[i..].iter().take_while(|c| c.is_ascii_digit()).count();
            if digits > 0 {
                let v: i32 = std::str::from_utf8(&body[i..i + digits]).unwrap().parse().unwrap_or(99);
                charge = unit * v;
                i += digits;
            } else {
                charge = unit;
                while body.get(i) == Some(&sign) {
                    charge += unit;
                    i += 1;
                }
            }
            if charge.abs() > 15 {
                return bad("charge out of range");
            }
        }

        if body.get(i) == Some(&b':') {
            i += 1;
            let digits = body[i..].iter().take_while(|c| c.is_ascii_digit()).count();
            if digits == 0 {
                return bad("atom class without digits");
            }
            i += digits;
        }
        if i != body.len() {
            return bad("unexpected trailing characters");
        }
        self.pos = start + rel_end + 1;
        Ok(Atom {
            element,
            charge: charge as i8,
            isotope,
            aromatic,
            h_count,
            chirality,
            implicit_h: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atoms.len(), 3);
        assert_eq!(m.bonds.len(), 2);
        assert!(m.bonds.iter().all(|b| b.order == BondOrder::Single));
        assert_eq!(m.atoms.iter().map(|a| a.h_count).collect::<Vec<_>>(), vec![3, 2, 1]);
    }

    #[test]
    fn sodium_benzoate_components() {
        let m = parse_smiles("O=C(O)c1ccccc1.[Na+]").unwrap();
        let comps = m.components();
        assert_eq!(comps.len(), 2);
        let na = m.subgraph(&comps[1]);
        assert_eq!(na.atoms.len(), 1);
        assert_eq!(na.atoms[0].element.symbol(), "Na");
        assert_eq!(na.atoms[0].charge, 1);
    }

    #[test]
    fn unclosed_ring() {
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::UnclosedRing(1));
        assert_eq!(e.position, 1);
    }

    #[test]
    fn benzene_aromatic() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.bonds.len(), 6);
        assert!(m.bonds.iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(m.atoms.iter().all(|a| a.h_count == 1));
    }

    #[test]
    fn bracket_fields() {
        let m = parse_smiles("[13CH3][C@@H](N)C(=O)[O-]").unwrap();
        assert_eq!(m.atoms[0].isotope, Some(13));
        assert_eq!(m.atoms[0].h_count, 3);
        assert_eq!(m.atoms[1].chirality, Some(Chirality::Clockwise));
        assert_eq!(m.atoms[5].charge, -1);
        let m = parse_smiles("[Fe++]").unwrap();
        assert_eq!(m.atoms[0].charge, 2);
        let m = parse_smiles("[Co+3]").unwrap();
        assert_eq!(m.atoms[0].charge, 3);
    }

    #[test]
    fn percent_ring_closure_and_stereo_bond() {
        let m = parse_smiles("C%12CCCCC%12").unwrap();
        assert_eq!(m.bonds.len(), 6);
        let m = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(m.bonds.iter().filter(|b| b.stereo.is_some()).count(), 2);
    }

    #[test]
    fn errors_are_positioned() {
        assert_eq!(parse_smiles("CC)C").unwrap_err().kind, SmilesErrorKind::UnmatchedCloseParen);
        assert_eq!(parse_smiles("CC(C").unwrap_err().kind, SmilesErrorKind::UnclosedBranch);
        let e = parse_smiles("CCXx").unwrap_err();
        assert!(matches!(e.kind, SmilesErrorKind::UnknownElement(_)));
        assert_eq!(e.position, 2);
        assert!(matches!(parse_smiles("[Xy]").unwrap_err().kind, SmilesErrorKind::UnknownElement(_)));
        assert_eq!(parse_smiles("C*C").unwrap_err().kind, SmilesErrorKind::Wildcard);
        assert_eq!(parse_smiles("CC>>CC").unwrap_err().kind, SmilesErrorKind::Reaction);
        assert_eq!(parse_smiles("C=").unwrap_err().kind, SmilesErrorKind::DanglingBond);
        assert_eq!(parse_smiles("[CH3").unwrap_err().kind, SmilesErrorKind::UnclosedBracket);
        assert_eq!(parse_smiles("").unwrap_err().kind, SmilesErrorKind::Empty);
        assert_eq!(parse_smiles("C11").unwrap_err().kind, SmilesErrorKind::SelfLoop(1));
    }

    #[test]
    fn implicit_hydrogens() {
        let m = parse_smiles("c1ccc2ccccc2c1").unwrap();
        let junctions = m.atoms.iter().filter(|a| a.h_count == 0).count();
        assert_eq!(junctions, 2);
        let m = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(m.atoms[3].h_count, 0);
        let m = parse_smiles("c1ccsc1").unwrap();
        assert_eq!(m.atoms[3].h_count, 0);
        let m = parse_smiles("CN(C)(C)C").unwrap();
        assert_eq!(m.atoms[1].h_count, 1);
        let m = parse_smiles("CS(=O)(=O)O").unwrap();
        assert_eq!(m.atoms[1].h_count, 0);
        assert_eq!(m.atoms[4].h_count, 1);
    }
}
