//! TOML run configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::assay::AssayGeometry;
use crate::data::Membrane;
use crate::models::ModelClass;
use crate::tuning::{GridConfig, TaskMode};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Per-repeat measurement table in the published 18-column schema.
    pub measurements: Option<PathBuf>,
    /// Raw well concentrations, converted with the assay geometry.
    pub concentrations: Option<PathBuf>,
    /// `id,smiles` table.
    pub smiles: Option<PathBuf>,
    /// Extra per-compound numeric columns for profile summaries.
    pub properties: Option<PathBuf>,
    /// `id,fold` table; overrides fold columns in descriptor files.
    pub folds: Option<PathBuf>,
    /// Salt list replacing the built-in one.
    pub salts: Option<PathBuf>,
    /// Unprocessed Percepta export, reduced to the retained descriptors.
    pub percepta_raw: Option<PathBuf>,
    /// `id,class` table used to colour the PCA scatter.
    pub charge_classes: Option<PathBuf>,
    /// Representation name to descriptor CSV.
    pub representations: BTreeMap<String, PathBuf>,
}

/// Planted-linear data standing in for measurements and descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n: 100, d: 20, noise: 0.5, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub components: usize,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig { components: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// "full" (published grids) or "smoke" (reduced grids).
    pub profile: String,
    pub classes: Vec<String>,
    pub modes: Vec<String>,
    /// Membrane codes and `PCA_i` names; empty means all.
    pub targets: Vec<String>,
    /// Representation names; empty means all loaded.
    pub representations: Vec<String>,
    /// Selected models above this mean validation R² get a test evaluation.
    pub threshold: f64,
    /// Repeats per class label, overriding the defaults.
    pub repeats: BTreeMap<String, usize>,
    /// Partial grid overrides merged over the profile's grids.
    pub grids: toml::Table,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            profile: "full".into(),
            classes: ModelClass::ALL.iter().map(|c| c.label().to_string()).collect(),
            modes: vec!["single".into(), "multi".into()],
            targets: Vec::new(),
            representations: Vec::new(),
            threshold: 0.5,
            repeats: BTreeMap::new(),
            grids: toml::Table::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilesConfig {
    pub membranes: Vec<String>,
    pub k: usize,
    pub properties: Vec<String>,
}

impl Default for ProfilesConfig {
    fn default() -> Self {
        ProfilesConfig {
            membranes: vec!["H".into(), "BBB".into(), "DOD".into()],
            k: 10,
            properties: vec!["LogP".into(), "LogD (pH = 7,40)".into(), "TPSA".into(), "SASA".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    /// Candidate descriptor CSV.
    pub pool: Option<PathBuf>,
    pub k: usize,
    /// Ids of compounds already in the library.
    pub owned: Vec<String>,
    /// When set, first reduce the pool to this many forward-selected columns.
    pub features: Option<usize>,
    pub family: String,
    pub target: String,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig { pool: None, k: 10, owned: Vec::new(), features: None, family: "lasso".into(), target: "BBB".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub inputs: Inputs,
    pub synthetic: Option<SynthConfig>,
    pub assay: AssayGeometry,
    pub pca: PcaConfig,
    pub sweep: SweepConfig,
    pub profiles: ProfilesConfig,
    pub design: DesignConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: None,
            workers: None,
            inputs: Inputs::default(),
            synthetic: None,
            assay: AssayGeometry::default(),
            pca: PcaConfig::default(),
            sweep: SweepConfig::default(),
            profiles: ProfilesConfig::default(),
            design: DesignConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    /// Reads a config file; relative paths are taken from its directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::parse(&text, path)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let i = &mut self.inputs;
        for p in [
            &mut i.measurements,
            &mut i.concentrations,
            &mut i.smiles,
            &mut i.properties,
            &mut i.folds,
            &mut i.salts,
            &mut i.percepta_raw,
            &mut i.charge_classes,
            &mut self.design.pool,
            &mut self.out,
        ] {
            resolve(base, p);
        }
        for p in i.representations.values_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn classes(&self) -> Result<Vec<ModelClass>, CliError> {
        self.sweep
            .classes
            .iter()
            .map(|c| c.parse::<ModelClass>().map_err(|e| CliError::Config(format!("sweep.classes: {e}"))))
            .collect()
    }

    pub fn modes(&self) -> Result<Vec<TaskMode>, CliError> {
        self.sweep
            .modes
            .iter()
            .map(|m| match m.to_ascii_lowercase().as_str() {
                "single" => Ok(TaskMode::Single),
                "multi" => Ok(TaskMode::Multi),
                other => Err(CliError::Config(format!("sweep.modes: unknown mode {other:?}"))),
            })
            .collect()
    }

    /// Profile grids with the configured overrides merged in.
    pub fn grids(&self) -> Result<GridConfig, CliError> {
        let base = match self.sweep.profile.as_str() {
            "full" => GridConfig::default(),
            "smoke" => GridConfig::smoke(),
            other => return Err(CliError::Config(format!("sweep.profile: unknown profile {other:?}"))),
        };
        if self.sweep.grids.is_empty() {
            return Ok(base);
        }
        let mut table = toml::Table::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
        for (class, overrides) in &self.sweep.grids {
            let (Some(slot), Some(over)) = (table.get_mut(class), overrides.as_table()) else {
                return Err(CliError::Config(format!("sweep.grids: unknown grid {class:?}")));
            };
            let slot = slot.as_table_mut().expect("grids serialize as tables");
            for (k, v) in over {
                slot.insert(k.clone(), v.clone());
            }
        }
        GridConfig::deserialize(toml::Value::Table(table)).map_err(|e| CliError::Config(format!("sweep.grids: {e}")))
    }

    pub fn repeats(&self) -> Result<BTreeMap<ModelClass, usize>, CliError> {
        self.sweep
            .repeats
            .iter()
            .map(|(k, &v)| {
                let class = k.parse::<ModelClass>().map_err(|e| CliError::Config(format!("sweep.repeats: {e}")))?;
                if v == 0 {
                    return Err(CliError::Config(format!("sweep.repeats: {k} must be at least 1")));
                }
                Ok((class, v))
            })
            .collect()
    }

    /// Requested targets, defaulting to every membrane and PCA component.
    pub fn targets(&self) -> Result<Vec<String>, CliError> {
        let known = target_names(self.pca.components);
        if self.sweep.targets.is_empty() {
            return Ok(known);
        }
        self.sweep
            .targets
            .iter()
            .map(|t| {
                let name = Membrane::from_code(t).map(|m| m.code().to_string()).unwrap_or_else(|| t.clone());
                if known.contains(&name) {
                    Ok(name)
                } else {
                    Err(CliError::Config(format!("sweep.targets: unknown target {t:?}")))
                }
            })
            .collect()
    }

    pub fn profile_membranes(&self) -> Result<Vec<Membrane>, CliError> {
        self.profiles
            .membranes
            .iter()
            .map(|m| Membrane::from_code(m).ok_or_else(|| CliError::Config(format!("profiles.membranes: unknown membrane {m:?}"))))
            .collect()
    }

    /// Checks names, grids and that every referenced input exists.
    pub fn validate(&self) -> Result<(), CliError> {
        let classes = self.classes()?;
        self.modes()?;
        self.targets()?;
        self.repeats()?;
        self.profile_membranes()?;
        let grids = self.grids()?;
        for class in classes {
            let grid = grids.expand(class, usize::MAX).map_err(|e| CliError::Config(format!("{class} grid: {e}")))?;
            if grid.is_empty() {
                return Err(CliError::Config(format!("{class} grid is empty")));
            }
        }
        if !self.sweep.threshold.is_finite() {
            return Err(CliError::Config("sweep.threshold must be finite".into()));
        }
        if self.pca.components == 0 || self.pca.components > 6 {
            return Err(CliError::Config("pca.components must be between 1 and 6".into()));
        }
        self.design.family.parse::<crate::design::LinearFamily>().map_err(CliError::Config)?;
        self.assay.validate().map_err(|e| CliError::Config(format!("assay: {e}")))?;
        let i = &self.inputs;
        let paths = [
            &i.measurements,
            &i.concentrations,
            &i.smiles,
            &i.properties,
            &i.folds,
            &i.salts,
            &i.percepta_raw,
            &i.charge_classes,
            &self.design.pool,
        ];
        for p in paths.into_iter().flatten().chain(i.representations.values()) {
            if !p.exists() {
                return Err(CliError::Config(format!("input {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Digest of the effective configuration, ignoring the output location
    /// and worker count.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.out = None;
        c.workers = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Membrane codes followed by `PCA_0..k`.
pub fn target_names(components: usize) -> Vec<String> {
    Membrane::ALL.iter().map(|m| m.code().to_string()).chain((0..components).map(|i| format!("PCA_{i}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_grid_overrides_merge() {
        let cfg = RunConfig::parse("[sweep]\nprofile = \"smoke\"\n[sweep.grids.en]\nalpha = [0.5]\n", Path::new("x")).unwrap();
        cfg.validate().unwrap();
        let g = cfg.grids().unwrap();
        assert_eq!(g.en.alpha, vec![0.5]);
        assert_eq!(g.en.l1_ratio, GridConfig::smoke().en.l1_ratio);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let bad = RunConfig::parse("[sweep]\nclasses = [\"LightGBM\"]\n", Path::new("x")).unwrap();
        assert!(matches!(bad.validate(), Err(CliError::Config(_))));
        assert!(RunConfig::parse("colour = 1\n", Path::new("x")).is_err());
        let bad = RunConfig::parse("[sweep.grids.en]\nbeta = [1.0]\n", Path::new("x")).unwrap();
        assert!(bad.grids().is_err());
    }

    #[test]
    fn digest_ignores_out_and_workers() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        b.workers = Some(8);
        assert_eq!(a.digest(), b.digest());
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
    }
}
