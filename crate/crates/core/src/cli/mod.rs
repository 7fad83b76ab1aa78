//! Command-line entry point. One TOML file configures every subcommand;
//! flags override it and `PAMPA_OUT` may override the output directory.

pub mod commands;
pub mod config;
pub mod output;
pub mod prepare;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;
pub use output::{Manifest, OutDir};

/// Environment variable that replaces the configured output directory.
pub const OUT_ENV: &str = "PAMPA_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Schema(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pampa-qspr", version, about = "QSPR workbench for PAMPA membrane permeability")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Upper bound on concurrent fits; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Global seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Membrane retention and permeability from concentrations, repeat averaging.
    Assay {
        #[arg(long)]
        measurements: Option<PathBuf>,
        #[arg(long)]
        concentrations: Option<PathBuf>,
    },
    /// Strip counter-ions and neutralize SMILES.
    Desalt {
        #[arg(long)]
        smiles: Option<PathBuf>,
        #[arg(long)]
        salts: Option<PathBuf>,
    },
    /// PCA of the six-membrane logPe profiles.
    Pca {
        #[arg(long)]
        measurements: Option<PathBuf>,
        #[arg(long)]
        components: Option<usize>,
        /// `id,class` table for colouring the scatter plot.
        #[arg(long)]
        classes: Option<PathBuf>,
    },
    /// Cross-validated hyperparameter sweeps.
    Sweep {
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
    },
    /// Tuned-model selection and single- versus multi-task pairing.
    Select {
        /// `trials.json` from a sweep (default: in the output directory).
        #[arg(long)]
        trials: Option<PathBuf>,
    },
    /// Test-fold evaluation of selected models.
    Test {
        #[arg(long)]
        selection: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Elastic-net coefficient matrices of the tuned single-task models.
    Importance {
        #[arg(long)]
        selection: Option<PathBuf>,
    },
    /// Best and worst permeating compounds per membrane.
    Profiles {
        #[arg(long)]
        measurements: Option<PathBuf>,
        #[arg(long)]
        properties: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        membranes: Option<Vec<String>>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Generic Murcko scaffold counts.
    Scaffolds {
        #[arg(long)]
        smiles: Option<PathBuf>,
        /// Desalt before computing scaffolds.
        #[arg(long)]
        desalt: bool,
    },
    /// Greedy D-optimal selection from a candidate pool.
    Design {
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        owned: Option<Vec<String>>,
        /// Forward-select this many pool columns first.
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Assay, PCA, sweeps, selection, test evaluation and reports.
    Pipeline {
        #[arg(long)]
        profile: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Assay { .. } => "assay",
            Command::Desalt { .. } => "desalt",
            Command::Pca { .. } => "pca",
            Command::Sweep { .. } => "sweep",
            Command::Select { .. } => "select",
            Command::Test { .. } => "test",
            Command::Importance { .. } => "importance",
            Command::Profiles { .. } => "profiles",
            Command::Scaffolds { .. } => "scaffolds",
            Command::Design { .. } => "design",
            Command::Pipeline { .. } => "pipeline",
        }
    }
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
    if v.is_some() {
        *slot = v.clone();
    }
}

/// Folds command-line flags into the configuration.
fn apply_flags(cli: &Cli, cfg: &mut RunConfig) {
    set_opt(&mut cfg.out, &cli.out);
    set_opt(&mut cfg.workers, &cli.workers);
    set(&mut cfg.seed, &cli.seed);
    let i = &mut cfg.inputs;
    match &cli.command {
        Command::Assay { measurements, concentrations } => {
            if concentrations.is_some() {
                i.measurements = None;
            }
            set_opt(&mut i.measurements, measurements);
            set_opt(&mut i.concentrations, concentrations);
        }
        Command::Desalt { smiles, salts } => {
            set_opt(&mut i.smiles, smiles);
            set_opt(&mut i.salts, salts);
        }
        Command::Pca { measurements, components, classes } => {
            set_opt(&mut i.measurements, measurements);
            set_opt(&mut i.charge_classes, classes);
            set(&mut cfg.pca.components, components);
        }
        Command::Sweep { profile, classes, targets } => {
            set(&mut cfg.sweep.profile, profile);
            set(&mut cfg.sweep.classes, classes);
            set(&mut cfg.sweep.targets, targets);
        }
        Command::Test { threshold, .. } => set(&mut cfg.sweep.threshold, threshold),
        Command::Profiles { measurements, properties, membranes, k } => {
            set_opt(&mut i.measurements, measurements);
            set_opt(&mut i.properties, properties);
            set(&mut cfg.profiles.membranes, membranes);
            set(&mut cfg.profiles.k, k);
        }
        Command::Scaffolds { smiles, .. } => set_opt(&mut i.smiles, smiles),
        Command::Design { pool, k, owned, features, family, target } => {
            set_opt(&mut cfg.design.pool, pool);
            set(&mut cfg.design.k, k);
            set(&mut cfg.design.owned, owned);
            set_opt(&mut cfg.design.features, features);
            set(&mut cfg.design.family, family);
            set(&mut cfg.design.target, target);
        }
        Command::Pipeline { profile } => set(&mut cfg.sweep.profile, profile),
        Command::Select { .. } | Command::Importance { .. } => {}
    }
}

fn execute(cli: &Cli) -> Result<Manifest, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    apply_flags(cli, &mut cfg);
    cfg.validate()?;
    let out_dir = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .filter(|_| cli.out.is_none())
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let workers = cfg.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).max(1);
    let mut out = OutDir::create(&out_dir)?;
    let default_in = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| out_dir.join(name));
    let cfg_ref = &cfg;
    let (failed, notes) = crate::tuning::with_workers(workers, || -> Result<(Vec<String>, Vec<String>), CliError> {
        let none = || (Vec::new(), Vec::new());
        match &cli.command {
            Command::Assay { .. } => commands::cmd_assay(cfg_ref, &mut out).map(|_| none()),
            Command::Desalt { .. } => commands::cmd_desalt(cfg_ref, &mut out).map(|_| none()),
            Command::Pca { .. } => commands::cmd_pca(cfg_ref, &mut out).map(|_| none()),
            Command::Sweep { .. } => commands::cmd_sweep(cfg_ref, &mut out).map(|f| (f, Vec::new())),
            Command::Select { trials } => commands::cmd_select(&default_in(trials, "trials.json"), &mut out).map(|_| none()),
            Command::Test { selection, .. } => {
                commands::cmd_test(cfg_ref, &default_in(selection, "selection.json"), &mut out).map(|_| none())
            }
            Command::Importance { selection } => {
                commands::cmd_importance(cfg_ref, &default_in(selection, "selection.json"), &mut out).map(|n| (Vec::new(), n))
            }
            Command::Profiles { .. } => commands::cmd_profiles(cfg_ref, &mut out).map(|n| (Vec::new(), n)),
            Command::Scaffolds { desalt, .. } => commands::cmd_scaffolds(cfg_ref, &mut out, *desalt).map(|_| none()),
            Command::Design { .. } => commands::cmd_design(cfg_ref, &mut out).map(|_| none()),
            Command::Pipeline { .. } => commands::cmd_pipeline(cfg_ref, &mut out),
        }
    })
    .map_err(|e| CliError::Runtime(e.to_string()))??;
    for f in &failed {
        log::warn!("failed: {f}");
    }
    out.finish(cli.command.name(), cfg.digest(), cfg.seed, failed, notes)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
