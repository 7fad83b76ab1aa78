//! Hyperparameter grids per model class. Defaults are the full published
//! grids; every axis can be overridden from the sweep configuration.

use serde::{Deserialize, Serialize};

use crate::models::{
    BayesRidgeSettings, ElasticNetParams, ForestParams, Gamma, GbtParams, Kernel, MlpParams, ModelClass, ModelParams,
    PlsParams, SvrParams, TreeParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeGrid {
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: Vec<usize>,
}

impl Default for TreeGrid {
    fn default() -> Self {
        TreeGrid { min_samples_leaf: vec![1, 2, 4, 8, 16, 32, 64], min_samples_split: vec![2, 4, 8, 16, 32, 64] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestGrid {
    pub n_estimators: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub max_features: Vec<f64>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        let t = TreeGrid::default();
        ForestGrid {
            n_estimators: vec![1000],
            min_samples_leaf: t.min_samples_leaf,
            min_samples_split: t.min_samples_split,
            max_features: vec![0.1, 0.2, 0.4, 0.8, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticNetGrid {
    pub alpha: Vec<f64>,
    pub l1_ratio: Vec<f64>,
}

impl Default for ElasticNetGrid {
    fn default() -> Self {
        ElasticNetGrid {
            alpha: vec![0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1000.0],
            l1_ratio: (0..=10).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlsGrid {
    pub n_components: Vec<usize>,
}

impl Default for PlsGrid {
    fn default() -> Self {
        PlsGrid { n_components: vec![1, 2, 5, 10, 20, 50, 100] }
    }
}

/// Kernel names: `linear`, `rbf`, `sigmoid`, `poly1`, `poly2`, `poly3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrGrid {
    pub kernel: Vec<String>,
    pub gamma: Vec<String>,
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl Default for SvrGrid {
    fn default() -> Self {
        SvrGrid {
            kernel: ["linear", "rbf", "sigmoid", "poly1", "poly2", "poly3"].map(String::from).to_vec(),
            gamma: vec!["scale".into(), "auto".into()],
            c: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            epsilon: vec![1e-4, 1e-3, 0.01, 0.1, 1.0, 10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtGrid {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub subsample: Vec<f64>,
}

impl Default for GbtGrid {
    fn default() -> Self {
        let reg = vec![0.001, 0.01, 0.1, 1.0, 10.0];
        GbtGrid {
            n_estimators: vec![100, 1000],
            max_depth: vec![4, 5, 6],
            lambda: reg.clone(),
            alpha: reg,
            subsample: vec![0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpGrid {
    pub hidden_sizes: Vec<Vec<usize>>,
    pub dropout: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
}

impl Default for MlpGrid {
    fn default() -> Self {
        MlpGrid {
            hidden_sizes: vec![vec![20], vec![50], vec![100], vec![20, 20], vec![50, 50], vec![100, 100]],
            dropout: vec![0.5, 0.6, 0.8],
            weight_decay: vec![0.01, 0.1],
            learning_rate: vec![0.1, 0.3],
            max_epochs: 200,
            patience: 20,
            batch_size: 32,
        }
    }
}

/// All grids, keyed by lowercase class label in configuration files.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dtr: TreeGrid,
    pub rfr: ForestGrid,
    pub en: ElasticNetGrid,
    pub mten: ElasticNetGrid,
    pub pls: PlsGrid,
    pub svr: SvrGrid,
    pub gbt: GbtGrid,
    pub mlp: MlpGrid,
}

pub fn parse_kernel(name: &str) -> Option<Kernel> {
    match name.trim().to_ascii_lowercase().as_str() {
        "linear" => Some(Kernel::Linear),
        "rbf" => Some(Kernel::Rbf),
        "sigmoid" => Some(Kernel::Sigmoid),
        "poly1" => Some(Kernel::Poly { degree: 1 }),
        "poly" | "poly2" => Some(Kernel::Poly { degree: 2 }),
        "poly3" => Some(Kernel::Poly { degree: 3 }),
        _ => None,
    }
}

pub fn parse_gamma(name: &str) -> Option<Gamma> {
    match name.trim().to_ascii_lowercase().as_str() {
        "scale" => Some(Gamma::Scale),
        "auto" => Some(Gamma::Auto),
        other => other.parse::<f64>().ok().filter(|g| *g > 0.0).map(Gamma::Value),
    }
}

impl GridConfig {
    /// A small grid per class for quick end-to-end runs.
    pub fn smoke() -> GridConfig {
        GridConfig {
            dtr: TreeGrid { min_samples_leaf: vec![1, 4], min_samples_split: vec![2, 8] },
            rfr: ForestGrid {
                n_estimators: vec![50],
                min_samples_leaf: vec![1, 4],
                min_samples_split: vec![2],
                max_features: vec![0.4, 1.0],
            },
            en: ElasticNetGrid { alpha: vec![0.01, 0.1, 1.0], l1_ratio: vec![0.1, 0.5, 1.0] },
            mten: ElasticNetGrid { alpha: vec![0.01, 0.1, 1.0], l1_ratio: vec![0.1, 0.5, 1.0] },
            pls: PlsGrid { n_components: vec![1, 2, 5] },
            svr: SvrGrid {
                kernel: vec!["linear".into(), "rbf".into()],
                gamma: vec!["scale".into()],
                c: vec![0.1, 1.0],
                epsilon: vec![0.01, 0.1],
            },
            gbt: GbtGrid {
                n_estimators: vec![50],
                max_depth: vec![3],
                lambda: vec![1.0],
                alpha: vec![0.01],
                subsample: vec![1.0],
            },
            mlp: MlpGrid {
                hidden_sizes: vec![vec![20]],
                dropout: vec![0.5],
                weight_decay: vec![0.01],
                learning_rate: vec![0.1],
                max_epochs: 60,
                patience: 10,
                batch_size: 32,
            },
        }
    }

    /// Expands the grid for `class` in nested declaration order. PLS
    /// component counts are clipped to `pls_bound` = min(n_train − 1, d) and
    /// deduplicated.
    pub fn expand(&self, class: ModelClass, pls_bound: usize) -> Result<Vec<ModelParams>, String> {
        let mut out = Vec::new();
        match class {
            ModelClass::Dtr => {
                for &leaf in &self.dtr.min_samples_leaf {
                    for &split in &self.dtr.min_samples_split {
                        out.push(ModelParams::Dtr(TreeParams {
                            min_samples_leaf: leaf,
                            min_samples_split: split,
                            max_depth: None,
                        }));
                    }
                }
            }
            ModelClass::Rfr => {
                let g = &self.rfr;
                for &n_estimators in &g.n_estimators {
                    for &leaf in &g.min_samples_leaf {
                        for &split in &g.min_samples_split {
                            for &mf in &g.max_features {
                                out.push(ModelParams::Rfr(ForestParams {
                                    n_estimators,
                                    min_samples_leaf: leaf,
                                    min_samples_split: split,
                                    max_features: mf,
                                    bootstrap: true,
                                }));
                            }
                        }
                    }
                }
            }
            ModelClass::En | ModelClass::Mten => {
                let g = if class == ModelClass::En { &self.en } else { &self.mten };
                for &alpha in &g.alpha {
                    for &rho in &g.l1_ratio {
                        let p = ElasticNetParams::new(alpha, rho);
                        out.push(if class == ModelClass::En { ModelParams::En(p) } else { ModelParams::Mten(p) });
                    }
                }
            }
            ModelClass::BayesRidge => out.push(ModelParams::BayesRidge(BayesRidgeSettings::default())),
            ModelClass::Pls => {
                let mut seen = Vec::new();
                for &k in &self.pls.n_components {
                    let k = k.min(pls_bound);
                    if k >= 1 && !seen.contains(&k) {
                        seen.push(k);
                        out.push(ModelParams::Pls(PlsParams { n_components: k }));
                    }
                }
            }
            ModelClass::Svr => {
                let g = &self.svr;
                for k in &g.kernel {
                    let kernel = parse_kernel(k).ok_or_else(|| format!("unknown SVR kernel {k:?}"))?;
                    for gm in &g.gamma {
                        let gamma = parse_gamma(gm).ok_or_else(|| format!("unknown SVR gamma {gm:?}"))?;
                        for &c in &g.c {
                            for &eps in &g.epsilon {
                                out.push(ModelParams::Svr(SvrParams::new(kernel, gamma, c, eps)));
                            }
                        }
                    }
                }
            }
            ModelClass::Gbt => {
                let g = &self.gbt;
                for &n in &g.n_estimators {
                    for &depth in &g.max_depth {
                        for &lambda in &g.lambda {
                            for &alpha in &g.alpha {
                                for &sub in &g.subsample {
                                    out.push(ModelParams::Gbt(GbtParams::new(n, depth, lambda, alpha, sub)));
                                }
                            }
                        }
                    }
                }
            }
            ModelClass::Mlp => {
                let g = &self.mlp;
                for hidden in &g.hidden_sizes {
                    for &dropout in &g.dropout {
                        for &wd in &g.weight_decay {
                            for &lr in &g.learning_rate {
                                let mut p = MlpParams::new(hidden.clone(), dropout, wd, lr);
                                p.max_epochs = g.max_epochs;
                                p.patience = g.patience;
                                p.batch_size = g.batch_size;
                                out.push(ModelParams::Mlp(p));
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
