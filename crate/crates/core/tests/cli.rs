use std::path::Path;
use std::process::{Command, Output};

use pampa_qspr::cli::Manifest;
use sha2::{Digest, Sha256};

fn run(dir: &Path, args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pampa-qspr"));
    cmd.current_dir(dir).args(args).env_remove("PAMPA_OUT").env("RUST_LOG", "error");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

const CONC_HEADER: &str = "compound_id,plate,repeat,membrane,donor_initial,donor_final,acceptor_final\n";

#[test]
fn unknown_model_class_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sweep", "--classes", "XYZ", "--out", "o"], &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_subcommand_and_missing_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["frobnicate"], &[])), 2);
    assert_eq!(code(&run(dir.path(), &["assay", "--config", "missing.toml"], &[])), 2);
}

#[test]
fn malformed_assay_row_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = format!("{CONC_HEADER}A,1,1,BBB,1e-6,abc,1e-7\n");
    std::fs::write(dir.path().join("c.csv"), csv).unwrap();
    let o = run(dir.path(), &["assay", "--concentrations", "c.csv", "--out", "o"], &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn empty_assay_input_succeeds_with_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.csv"), CONC_HEADER).unwrap();
    let o = run(dir.path(), &["assay", "--concentrations", "c.csv", "--out", "o"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mean = std::fs::read_to_string(dir.path().join("o/mean_logpe.csv")).unwrap();
    assert_eq!(mean.lines().count(), 1);
}

#[test]
fn assay_from_concentrations_and_manifest_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = CONC_HEADER.to_string();
    for m in ["BBB", "L", "H", "DOD", "PS", "PC"] {
        csv.push_str(&format!("A,1,1,{m},1e-7,6e-8,1e-8\nA,1,2,{m},1e-7,5e-8,1.2e-8\n"));
    }
    std::fs::write(dir.path().join("c.csv"), csv).unwrap();
    let o = run(dir.path(), &["assay", "--concentrations", "c.csv", "--out", "o"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "assay");
    assert!(manifest.files.contains_key("mean_logpe.csv"));
    for (name, entry) in &manifest.files {
        let bytes = std::fs::read(dir.path().join("o").join(name)).unwrap();
        assert_eq!(entry.sha256, hex::encode(Sha256::digest(&bytes)), "{name}");
        assert_eq!(entry.bytes, bytes.len());
    }
}

#[test]
fn output_env_var_applies_unless_out_is_given() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.csv"), CONC_HEADER).unwrap();
    let env_out = dir.path().join("from_env");
    let o = run(dir.path(), &["assay", "--concentrations", "c.csv"], &[("PAMPA_OUT", &env_out)]);
    assert_eq!(code(&o), 0);
    assert!(env_out.join("manifest.json").exists());
    let o = run(dir.path(), &["assay", "--concentrations", "c.csv", "--out", "flag"], &[("PAMPA_OUT", &env_out)]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("flag/manifest.json").exists());
}

#[test]
fn desalt_and_scaffolds_commands() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.csv"), "compound_id,smiles\nA,O=C([O-])c1ccccc1.[Na+]\nB,Cc1ccccc1.Cl\nC,CCO\n").unwrap();
    let o = run(dir.path(), &["desalt", "--smiles", "s.csv", "--out", "o"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/desalted.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][2], "O=C(O)c1ccccc1");
    assert_eq!(rows[1][2], "Cc1ccccc1");
    assert_eq!((rows[2][2], rows[2][3]), ("", "every component matched the salt list"));
    let o = run(dir.path(), &["scaffolds", "--smiles", "s.csv", "--desalt", "--out", "o"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("o/scaffold_repeats.csv").exists());
}

#[test]
fn design_picks_k_compounds() {
    let dir = tempfile::tempdir().unwrap();
    let mut pool = String::from("compound_id,a,b,c\n");
    for i in 0..12 {
        pool.push_str(&format!("P{i},{},{},{}\n", (i * 7 % 5) as f64, (i * 3 % 4) as f64 * 0.5, (i as f64).sin()));
    }
    std::fs::write(dir.path().join("pool.csv"), pool).unwrap();
    let o = run(dir.path(), &["design", "--pool", "pool.csv", "--k", "4", "--owned", "P0", "--out", "o"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/design.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(!text.contains(",P0,"));
    let o = run(dir.path(), &["design", "--pool", "pool.csv", "--k", "4", "--owned", "ZZ", "--out", "o"], &[]);
    assert_eq!(code(&o), 2);
}
