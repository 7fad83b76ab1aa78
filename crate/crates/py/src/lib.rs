//! Python bindings: assay formulas, SMILES standardization, PCA, the model
//! zoo, metrics, design helpers and the command-line entry point.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pampa_qspr::assay::{self, AssayGeometry, WellConcentrations};
use pampa_qspr::chem::{self, Fingerprint, SaltList};
use pampa_qspr::design::{self, LinearFamily, SelectionCv};
use pampa_qspr::models::{ModelParams, RegressorSpec, TrainedModel};
use pampa_qspr::pca::{self, PcaModel};
use pampa_qspr::tuning::Metrics;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn geometry(filter_area: f64, donor_volume: f64, acceptor_volume: f64, incubation_time: f64, steady_state_lag: f64) -> AssayGeometry {
    AssayGeometry { filter_area, donor_volume, acceptor_volume, incubation_time, steady_state_lag }
}

/// Membrane retention of one well.
#[pyfunction]
#[pyo3(signature = (donor_initial, donor_final, acceptor_final, filter_area=0.3, donor_volume=0.15, acceptor_volume=0.3, incubation_time=14400.0, steady_state_lag=0.0))]
#[allow(clippy::too_many_arguments)]
fn membrane_retention(
    donor_initial: f64,
    donor_final: f64,
    acceptor_final: f64,
    filter_area: f64,
    donor_volume: f64,
    acceptor_volume: f64,
    incubation_time: f64,
    steady_state_lag: f64,
) -> PyResult<f64> {
    let g = geometry(filter_area, donor_volume, acceptor_volume, incubation_time, steady_state_lag);
    assay::membrane_retention(&WellConcentrations::new(donor_initial, donor_final, acceptor_final), &g).map_err(value_err)
}

/// `(retention, Pe or None, logPe or None)` for one well.
#[pyfunction]
#[pyo3(signature = (donor_initial, donor_final, acceptor_final, filter_area=0.3, donor_volume=0.15, acceptor_volume=0.3, incubation_time=14400.0, steady_state_lag=0.0))]
#[allow(clippy::too_many_arguments)]
fn evaluate_well(
    donor_initial: f64,
    donor_final: f64,
    acceptor_final: f64,
    filter_area: f64,
    donor_volume: f64,
    acceptor_volume: f64,
    incubation_time: f64,
    steady_state_lag: f64,
) -> PyResult<(f64, Option<f64>, Option<f64>)> {
    let g = geometry(filter_area, donor_volume, acceptor_volume, incubation_time, steady_state_lag);
    let r = assay::evaluate_well(&WellConcentrations::new(donor_initial, donor_final, acceptor_final), &g).map_err(value_err)?;
    Ok((r.membrane_retention, r.effective_permeability, r.log_pe))
}

fn salts(entries: Option<Vec<String>>) -> PyResult<SaltList> {
    match entries {
        Some(list) => SaltList::parse(&list.join("\n")).map_err(value_err),
        None => Ok(SaltList::builtin()),
    }
}

#[pyfunction]
fn canonical_smiles(smiles: &str) -> PyResult<String> {
    Ok(chem::write_smiles(&chem::parse_smiles(smiles).map_err(value_err)?))
}

/// Strips counter-ions and neutralizes; `salts` defaults to the bundled list.
#[pyfunction]
#[pyo3(signature = (smiles, salts=None))]
fn desalt(smiles: &str, salts: Option<Vec<String>>) -> PyResult<String> {
    let list = self::salts(salts)?;
    let mol = chem::parse_smiles(smiles).map_err(value_err)?;
    Ok(chem::write_smiles(&chem::desalt(&mol, &list).map_err(value_err)?))
}

#[pyfunction]
fn builtin_salts() -> Vec<String> {
    SaltList::builtin().entries().to_vec()
}

#[pyfunction]
fn generic_scaffold(smiles: &str) -> PyResult<String> {
    let mol = chem::parse_smiles(smiles).map_err(value_err)?;
    Ok(chem::write_smiles(&chem::generic_murcko_scaffold(&mol).map_err(value_err)?))
}

#[pyfunction]
fn tanimoto(a: Vec<u32>, b: Vec<u32>) -> PyResult<f64> {
    chem::tanimoto(&Fingerprint::new(a), &Fingerprint::new(b)).map_err(value_err)
}

#[pyclass(name = "Pca", frozen)]
struct PyPca {
    inner: PcaModel,
}

#[pymethods]
impl PyPca {
    #[new]
    fn new(x: Vec<Vec<f64>>, n_components: usize) -> PyResult<Self> {
        Ok(PyPca { inner: pca::pca_fit(&matrix(&x)?, n_components).map_err(value_err)? })
    }

    #[getter]
    fn explained_variance_ratio(&self) -> Vec<f64> {
        self.inner.explained_variance_ratio.iter().copied().collect()
    }

    #[getter]
    fn components(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.components)
    }

    fn transform(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.transform(&matrix(&x)?).map_err(value_err)?))
    }
}

/// A fitted regressor. `params` is a JSON object such as
/// `{"class": "EN", "alpha": 0.1, "l1_ratio": 0.5}`; `y` has one column per
/// target with NaN for missing values.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (params, x, y, seed=0))]
    fn fit(params: &str, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, seed: u64) -> PyResult<Self> {
        let params: ModelParams = serde_json::from_str(params).map_err(value_err)?;
        let spec = RegressorSpec::new(params, seed);
        let inner = TrainedModel::fit(&spec, &matrix(&x)?, &matrix(&y)?, None).map_err(value_err)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel { inner: TrainedModel::from_json(text).map_err(value_err)? })
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.predict(&matrix(&x)?).map_err(value_err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_err)
    }

    #[getter]
    fn model_class(&self) -> String {
        self.inner.spec.class().to_string()
    }
}

/// `{"r2", "corr", "rmse"}` over the observed (non-NaN) targets.
#[pyfunction]
fn metrics(y: Vec<f64>, yhat: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if y.len() != yhat.len() {
        return Err(PyValueError::new_err("length mismatch"));
    }
    let m = Metrics::compute(&y, &yhat);
    Ok((m.r2, m.corr, m.rmse))
}

/// Greedy D-optimal picks and the log-determinant trace.
#[pyfunction]
#[pyo3(signature = (pool, k, owned=Vec::new(), seed=0))]
fn d_optimal_select(pool: Vec<Vec<f64>>, k: usize, owned: Vec<usize>, seed: u64) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let sel = design::d_optimal_select(&matrix(&pool)?, k, &owned, seed).map_err(value_err)?;
    Ok((sel.chosen, sel.log_det))
}

/// Forward feature selection with family `linear`, `lasso`, `ridge` or `pls`.
#[pyfunction]
#[pyo3(signature = (x, y, family, k, seed=0))]
fn forward_feature_select(x: Vec<Vec<f64>>, y: Vec<f64>, family: &str, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    let family: LinearFamily = family.parse().map_err(PyValueError::new_err)?;
    design::forward_feature_select(&matrix(&x)?, &y, family, k, SelectionCv { seed }).map_err(value_err)
}

/// Planted-linear synthetic data as `(x, y)`.
#[pyfunction]
#[pyo3(signature = (seed, n, d, targets, noise=0.5))]
fn synthetic(seed: u64, n: usize, d: usize, targets: usize, noise: f64) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let ds = pampa_qspr::data::synth_dataset(seed, n, d, targets, noise).map_err(value_err)?;
    Ok((rows(&ds.table.x), rows(&ds.targets)))
}

/// Runs the command-line tool with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("pampa-qspr".to_string()).chain(args).collect();
    py.detach(|| pampa_qspr::cli::run(argv))
}

#[pymodule]
fn pampa_qspr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(membrane_retention, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_well, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_smiles, m)?)?;
    m.add_function(wrap_pyfunction!(desalt, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_salts, m)?)?;
    m.add_function(wrap_pyfunction!(generic_scaffold, m)?)?;
    m.add_function(wrap_pyfunction!(tanimoto, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(d_optimal_select, m)?)?;
    m.add_function(wrap_pyfunction!(forward_feature_select, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_class::<PyPca>()?;
    m.add_class::<PyModel>()?;
    Ok(())
}
