use std::collections::BTreeSet;

use pampa_qspr::chem::*;
use proptest::prelude::*;

fn canon(smiles: &str) -> String {
    write_smiles(&parse_smiles(smiles).unwrap())
}

fn corpus() -> Vec<&'static str> {
    include_str!("data/corpus.smi").lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

#[test]
fn corpus_round_trips_through_canonical_smiles() {
    for s in corpus() {
        let once = canon(s);
        assert_eq!(canon(&once), once, "{s}");
    }
}

#[test]
fn canonical_form_ignores_atom_order() {
    assert_eq!(canon("OCC"), canon("CCO"));
    assert_eq!(canon("c1ccccc1O"), canon("Oc1ccccc1"));
    assert_eq!(canon("C(=O)(O)c1ccccc1"), canon("OC(=O)c1ccccc1"));
}

#[test]
fn counter_ions_are_stripped() {
    let salts = SaltList::builtin();
    let cases = [
        ("O=C([O-])c1ccccc1.[Na+]", "OC(=O)c1ccccc1"),
        ("CN(C)CCCN1c2ccccc2CCc2ccccc21.Cl", "CN(C)CCCN1c2ccccc2CCc2ccccc21"),
        ("[K+].CC(=O)[O-].Cc1ccccc1", "Cc1ccccc1"),
    ];
    for (input, expected) in cases {
        let out = desalt(&parse_smiles(input).unwrap(), &salts).map(|m| write_smiles(&m));
        assert_eq!(out.as_deref(), Ok(canon(expected).as_str()), "{input}");
    }
}

#[test]
fn custom_salt_list_parses_and_matches() {
    let salts = SaltList::parse("Cl\n[Na+]\n").unwrap();
    assert_eq!(salts.len(), 2);
    assert!(salts.matches(&parse_smiles("[Cl-]").unwrap()));
    assert!(!salts.matches(&parse_smiles("Br").unwrap()));
}

#[test]
fn scaffolds_group_by_ring_skeleton() {
    let generic = |s: &str| write_smiles(&generic_murcko_scaffold(&parse_smiles(s).unwrap()).unwrap());
    assert_eq!(generic("Cc1ccccc1"), generic("Oc1ccncc1"));
    assert_eq!(generic("c1ccccc1Cc1ccccc1"), generic("C1CCCCC1OC1CCCCC1"));
    assert_ne!(generic("c1ccccc1"), generic("c1ccccc1-c1ccccc1"));
    let distinct: BTreeSet<String> = corpus().iter().filter_map(|s| {
        generic_murcko_scaffold(&parse_smiles(s).ok()?).ok().map(|m| write_smiles(&m))
    }).collect();
    assert!(distinct.len() > 1 && distinct.len() <= corpus().len());
}

fn bits() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..4096, 0..60)
}

proptest! {
    #[test]
    fn tanimoto_is_a_bounded_symmetric_similarity(a in bits(), b in bits()) {
        let (fa, fb) = (Fingerprint::new(a), Fingerprint::new(b));
        let ab = tanimoto(&fa, &fb).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, tanimoto(&fb, &fa).unwrap());
        prop_assert_eq!(tanimoto(&fa, &fa).unwrap(), 1.0);
    }

    #[test]
    fn folding_maps_every_bit_into_range(a in bits(), width in 1u32..2048) {
        let folded = fold_fingerprint(&Fingerprint::new(a.clone()), width).unwrap();
        prop_assert!(folded.bits().iter().all(|&b| b < width));
        prop_assert!(folded.count() <= a.iter().collect::<BTreeSet<_>>().len());
        for b in a {
            prop_assert!(folded.contains(b % width));
        }
    }

    #[test]
    fn maxmin_picks_distinct_indices(sets in prop::collection::vec(bits(), 2..12), seed in 0u64..100) {
        let fps: Vec<Fingerprint> = sets.into_iter().map(Fingerprint::new).collect();
        let k = fps.len() / 2 + 1;
        let picks = maxmin_diversity_pick(&fps, k, seed).unwrap();
        prop_assert_eq!(picks.len(), k);
        prop_assert_eq!(picks.iter().collect::<BTreeSet<_>>().len(), k);
    }

    #[test]
    fn desalting_is_idempotent_on_corpus_mixtures(i in 0usize..91, j in 0usize..38, swap in any::<bool>()) {
        let salts = SaltList::builtin();
        let corpus = corpus();
        let parent = corpus[i % corpus.len()];
        let salt = &salts.entries()[j % salts.len()];
        let smiles = if swap { format!("{salt}.{parent}") } else { format!("{parent}.{salt}") };
        let once = write_smiles(&desalt(&parse_smiles(&smiles).unwrap(), &salts).unwrap());
        let twice = write_smiles(&desalt(&parse_smiles(&once).unwrap(), &salts).unwrap());
        prop_assert_eq!(once, twice);
    }
}
