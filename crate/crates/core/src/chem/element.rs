use serde::{Deserialize, Serialize};
use std::fmt;

/// Chemical element identified by atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Element(pub u8);

struct ElementData {
    number: u8,
    symbol: &'static str,
    weight: f64,
    valences: &'static [u8],
}

// Standard atomic weights (abridged IUPAC values).
static TABLE: &[ElementData] = &[
    ElementData { number: 1, symbol: "H", weight: 1.008, valences: &[1] },
    ElementData { number: 2, symbol: "He", weight: 4.0026, valences: &[] },
    ElementData { number: 3, symbol: "Li", weight: 6.94, valences: &[1] },
    ElementData { number: 4, symbol: "Be", weight: 9.0122, valences: &[2] },
    ElementData { number: 5, symbol: "B", weight: 10.81, valences: &[3] },
    ElementData { number: 6, symbol: "C", weight: 12.011, valences: &[4] },
    ElementData { number: 7, symbol: "N", weight: 14.007, valences: &[3, 5] },
    ElementData { number: 8, symbol: "O", weight: 15.999, valences: &[2] },
    ElementData { number: 9, symbol: "F", weight: 18.998, valences: &[1] },
    ElementData { number: 10, symbol: "Ne", weight: 20.180, valences: &[] },
    ElementData { number: 11, symbol: "Na", weight: 22.990, valences: &[1] },
    ElementData { number: 12, symbol: "Mg", weight: 24.305, valences: &[2] },
    ElementData { number: 13, symbol: "Al", weight: 26.982, valences: &[3] },
    ElementData { number: 14, symbol: "Si", weight: 28.085, valences: &[4] },
    ElementData { number: 15, symbol: "P", weight: 30.974, valences: &[3, 5] },
    ElementData { number: 16, symbol: "S", weight: 32.06, valences: &[2, 4, 6] },
    ElementData { number: 17, symbol: "Cl", weight: 35.45, valences: &[1] },
    ElementData { number: 18, symbol: "Ar", weight: 39.948, valences: &[] },
    ElementData { number: 19, symbol: "K", weight: 39.098, valences: &[1] },
    ElementData { number: 20, symbol: "Ca", weight: 40.078, valences: &[2] },
    ElementData { number: 21, symbol: "Sc", weight: 44.956, valences: &[] },
    ElementData { number: 22, symbol: "Ti", weight: 47.867, valences: &[] },
    ElementData { number: 23, symbol: "V", weight: 50.942, valences: &[] },
    ElementData { number: 24, symbol: "Cr", weight: 51.996, valences: &[] },
    ElementData { number: 25, symbol: "Mn", weight: 54.938, valences: &[] },
    ElementData { number: 26, symbol: "Fe", weight: 55.845, valences: &[] },
    ElementData { number: 27, symbol: "Co", weight: 58.933, valences: &[] },
    ElementData { number: 28, symbol: "Ni", weight: 58.693, valences: &[] },
    ElementData { number: 29, symbol: "Cu", weight: 63.546, valences: &[] },
    ElementData { number: 30, symbol: "Zn", weight: 65.38, valences: &[2] },
    ElementData { number: 31, symbol: "Ga", weight: 69.723, valences: &[3] },
    ElementData { number: 32, symbol: "Ge", weight: 72.630, valences: &[4] },
    ElementData { number: 33, symbol: "As", weight: 74.922, valences: &[3, 5] },
    ElementData { number: 34, symbol: "Se", weight: 78.971, valences: &[2, 4, 6] },
    ElementData { number: 35, symbol: "Br", weight: 79.904, valences: &[1] },
    ElementData { number: 36, symbol: "Kr", weight: 83.798, valences: &[] },
    ElementData { number: 37, symbol: "Rb", weight: 85.468, valences: &[1] },
    ElementData { number: 38, symbol: "Sr", weight: 87.62, valences: &[2] },
    ElementData { number: 40, symbol: "Zr", weight: 91.224, valences: &[] },
    ElementData { number: 42, symbol: "Mo", weight: 95.95, valences: &[] },
    ElementData { number: 44, symbol: "Ru", weight: 101.07, valences: &[] },
    ElementData { number: 45, symbol: "Rh", weight: 102.91, valences: &[] },
    ElementData { number: 46, symbol: "Pd", weight: 106.42, valences: &[] },
    ElementData { number: 47, symbol: "Ag", weight: 107.87, valences: &[] },
    ElementData { number: 48, symbol: "Cd", weight: 112.41, valences: &[] },
    ElementData { number: 50, symbol: "Sn", weight: 118.71, valences: &[] },
    ElementData { number: 51, symbol: "Sb", weight: 121.76, valences: &[] },
    ElementData { number: 52, symbol: "Te", weight: 127.60, valences: &[2, 4, 6] },
    ElementData { number: 53, symbol: "I", weight: 126.90, valences: &[1] },
    ElementData { number: 54, symbol: "Xe", weight: 131.29, valences: &[] },
    ElementData { number: 55, symbol: "Cs", weight: 132.91, valences: &[1] },
    ElementData { number: 56, symbol: "Ba", weight: 137.33, valences: &[2] },
    ElementData { number: 64, symbol: "Gd", weight: 157.25, valences: &[] },
    ElementData { number: 78, symbol: "Pt", weight: 195.08, valences: &[] },
    ElementData { number: 79, symbol: "Au", weight: 196.97, valences: &[] },
    ElementData { number: 80, symbol: "Hg", weight: 200.59, valences: &[] },
    ElementData { number: 81, symbol: "Tl", weight: 204.38, valences: &[] },
    ElementData { number: 82, symbol: "Pb", weight: 207.2, valences: &[] },
    ElementData { number: 83, symbol: "Bi", weight: 208.98, valences: &[] },
];

impl Element {
    pub const H: Element = Element(1);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const S: Element = Element(16);

    fn data(self) -> &'static ElementData {
        TABLE
            .iter()
            .find(|e| e.number == self.0)
            .expect("element constructed from table")
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE.iter().find(|e| e.symbol == symbol).map(|e| Element(e.number))
    }

    pub fn symbol(self) -> &'static str {
        self.data().symbol
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn atomic_weight(self) -> f64 {
        self.data().weight
    }

    /// Allowed neutral valences used to derive implicit hydrogens.
    pub fn default_valences(self) -> &'static [u8] {
        self.data().valences
    }

    /// Member of the SMILES organic subset (writable without brackets).
    pub fn is_organic_subset(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// May be written as a bare lowercase aromatic atom.
    pub fn is_aromatic_organic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
