//! Molecular graphs: SMILES input/output, salt stripping, scaffolds and
//! fingerprint utilities.

mod canon;
mod element;
mod fingerprint;
mod molecule;
mod scaffold;
mod smiles;
mod standardize;

pub use canon::{canonical_ranks, write_smiles};
pub use element::Element;
pub use fingerprint::{
    fold_fingerprint, maxmin_diversity_pick, maxmin_diversity_pick_from, tanimoto, Fingerprint, FingerprintError,
};
pub use molecule::{Atom, Bond, BondOrder, BondStereo, Chirality, Molecule};
pub use scaffold::{generic_murcko_scaffold, make_generic, murcko_framework, scaffold, ScaffoldError, ScaffoldMode};
pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};
pub use standardize::{
    cleanup, desalt, most_significant_fragment, skeleton_key, uncharge, DesaltError, SaltList, SaltListError,
    BUILTIN_SALTS,
};
