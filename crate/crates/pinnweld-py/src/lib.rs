//! Python bindings exposing the main types and operations: material lookups,
//! the welding schedule and contact models, PID identification, the jet
//! network, the analytic benchmark, and a small training entry point.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pinnweld::adnet::{init_network, Activation, InitScheme, NetworkParams, NetworkSpec, Workspace};
use pinnweld::material::{HardnessModel, MaterialTable, Property};
use pinnweld::process;
use pinnweld::residuals::WeldConfig;
use pinnweld::sampler::{build_datasets, DatasetConfig, Domain, ModelMode};
use pinnweld::trainer::{train, Objective, TrainConfig};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Temperature-dependent material table with solid/liquid blending.
#[pyclass]
struct PyMaterialTable {
    inner: MaterialTable,
    hardness: HardnessModel,
}

#[pymethods]
impl PyMaterialTable {
    /// Built-in AlMgSi default table.
    #[new]
    fn new() -> Self {
        Self { inner: MaterialTable::default_almgsi(), hardness: HardnessModel::default() }
    }

    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: MaterialTable::from_csv(std::path::Path::new(path)).map_err(err)?,
            hardness: HardnessModel::default(),
        })
    }

    /// (value, dvalue/dT) of `alpha`, `kappa`, `beta`, or `lambda_th` at T °C.
    fn lookup(&self, property: &str, temp_c: f64) -> PyResult<(f64, f64)> {
        let prop = match property {
            "alpha" => Property::Alpha,
            "kappa" => Property::Kappa,
            "beta" => Property::Beta,
            "lambda_th" => Property::LambdaTh,
            other => return Err(PyValueError::new_err(format!("unknown property {other:?}"))),
        };
        Ok(self.inner.lookup(prop, temp_c))
    }

    fn hardness(&self, temp_c: f64) -> f64 {
        self.hardness.hardness(temp_c)
    }

    fn rho_el(&self, temp_c: f64) -> f64 {
        self.inner.rho_el(temp_c)
    }
}

/// Solid/liquid phase blend of two property values at temperature T °C.
#[pyfunction]
fn blend(f_sol: f64, f_liq: f64, temp_c: f64) -> f64 {
    pinnweld::material::blend(f_sol, f_liq, temp_c, &Default::default())
}

/// Current density in A/mm² of the welding schedule at time t ms.
#[pyfunction]
fn current_density(i_max_ka: f64, t_ms: f64) -> PyResult<f64> {
    process::WeldSchedule::new(i_max_ka).current_density(t_ms).map_err(err)
}

/// Per-spot contact resistance of the inverse model, in Ω.
#[pyfunction]
fn contact_resistance_a(rho_el: f64, rho_f: f64, l_f: f64, n: f64, hardness: f64, force_n: f64) -> f64 {
    process::contact_resistance_a(rho_el, rho_f, l_f, n, hardness, force_n)
}

/// Contact resistance of the forward model, in Ω.
#[pyfunction]
fn contact_resistance_b(rho_el: f64, rho_f: f64, l_f: f64, hardness: f64, force_n: f64) -> f64 {
    process::contact_resistance_b(rho_el, rho_f, l_f, hardness, force_n)
}

/// Discrete PID response to an error series.
#[pyfunction]
#[pyo3(signature = (errors, k_p, k_i, k_d, dt_ms=1.0, window=50))]
fn pid_response(errors: Vec<f64>, k_p: f64, k_i: f64, k_d: f64, dt_ms: f64, window: usize) -> Vec<f64> {
    let k = process::PIDParams { k_p, k_i, k_d, dt_ms, window };
    process::pid_response(&errors, &k)
}

/// Least-squares PID identification; returns (K_p, K_i, K_d).
#[pyfunction]
fn fit_pid(torque: Vec<f64>, displacement: Vec<f64>, f0: f64, k_spring: f64) -> PyResult<(f64, f64, f64)> {
    let fit = process::fit_pid(&torque, &displacement, f0, k_spring, &process::PIDParams::default())
        .map_err(err)?;
    Ok((fit.k_p, fit.k_i, fit.k_d))
}

/// Corrected analytic solution of the Dirichlet benchmark.
#[pyfunction]
fn analytic_benchmark(z: f64, t: f64, alpha: f64) -> f64 {
    pinnweld::oracle::analytic_benchmark(z, t, alpha)
}

/// Dense network with exact jets, constructed from a spec.
#[pyclass]
struct PyNetwork {
    params: NetworkParams,
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (input_dim, output_dim, hidden_layers, hidden_width, activation="tanh", init="xavier_normal", seed=0))]
    fn new(
        input_dim: usize,
        output_dim: usize,
        hidden_layers: usize,
        hidden_width: usize,
        activation: &str,
        init: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let activation = match activation {
            "tanh" => Activation::Tanh,
            "gelu" => Activation::Gelu,
            "elu" => Activation::Elu,
            other => return Err(PyValueError::new_err(format!("unknown activation {other:?}"))),
        };
        let init = match init {
            "xavier_normal" => InitScheme::XavierNormal,
            "xavier_uniform" => InitScheme::XavierUniform,
            "kaiming_normal" => InitScheme::KaimingNormal,
            "kaiming_uniform" => InitScheme::KaimingUniform,
            other => return Err(PyValueError::new_err(format!("unknown init {other:?}"))),
        };
        let spec = NetworkSpec { input_dim, output_dim, hidden_layers, hidden_width, activation, init, seed };
        Ok(Self { params: init_network(&spec).map_err(err)? })
    }

    #[staticmethod]
    fn from_checkpoint(path: &str) -> PyResult<Self> {
        let ck = pinnweld::checkpoint::load(std::path::Path::new(path)).map_err(err)?;
        Ok(Self { params: ck.params })
    }

    fn param_count(&self) -> usize {
        self.params.spec().param_count()
    }

    fn parameters(&self) -> Vec<f64> {
        self.params.data().to_vec()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let mut ws = Workspace::new(self.params.spec());
        self.params.forward(&x, &mut ws).map_err(err)
    }

    /// Per output: (value, [∂/∂x_k], [∂²/∂x_k²]).
    fn jet_forward(&self, x: Vec<f64>) -> PyResult<Vec<(f64, Vec<f64>, Vec<f64>)>> {
        let mut ws = Workspace::new(self.params.spec());
        let jets = self.params.jet_forward(&x, &mut ws).map_err(err)?;
        Ok(jets.into_iter().map(|j| (j.value, j.d1, j.d2)).collect())
    }
}

/// Train the Dirichlet benchmark for a fixed number of epochs; returns the
/// loss curve (one total per epoch).
#[pyfunction]
#[pyo3(signature = (epochs=500, n_pde=200, hidden_width=16, seed=0))]
fn train_benchmark(epochs: usize, n_pde: usize, hidden_width: usize, seed: u64) -> PyResult<Vec<f64>> {
    let weld = WeldConfig::default();
    let mat = MaterialTable::default_almgsi();
    let hard = HardnessModel::default();
    let mode = ModelMode::Benchmark1d;
    let domain = Domain {
        r_nd: None,
        z_nd: (0.0, 1.0),
        t_nd: (0.0, 1.0),
        i_ka: (26.0, 47.0),
        f_kn: (5.0, 8.0),
    };
    let dcfg = DatasetConfig {
        n_pde,
        n_pde_band: 0,
        n_ic: 50,
        n_bc: 25,
        n_sym: 0,
        disp_stride_ms: 1,
        seed,
    };
    let data = build_datasets(mode, &domain, &[], &dcfg, &weld, &process::PIDParams::default())
        .map_err(err)?;
    let spec = NetworkSpec {
        input_dim: 2,
        output_dim: 1,
        hidden_layers: 2,
        hidden_width,
        activation: Activation::Tanh,
        init: InitScheme::XavierNormal,
        seed,
    };
    let objective = Objective::new(mode, spec.clone(), &data, &weld, &mat, &hard, Default::default(), 0, seed);
    let tcfg = TrainConfig { max_epochs: epochs, reference_loss: 0.0, ..TrainConfig::default() };
    let art = train(&objective, &spec, &tcfg, None).map_err(err)?;
    Ok(art.bundles.iter().map(|b| b.total).collect())
}

#[pymodule]
fn pinnweld_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMaterialTable>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(blend, m)?)?;
    m.add_function(wrap_pyfunction!(current_density, m)?)?;
    m.add_function(wrap_pyfunction!(contact_resistance_a, m)?)?;
    m.add_function(wrap_pyfunction!(contact_resistance_b, m)?)?;
    m.add_function(wrap_pyfunction!(pid_response, m)?)?;
    m.add_function(wrap_pyfunction!(fit_pid, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(train_benchmark, m)?)?;
    Ok(())
}
