//! Python bindings for the `qlbm` crate.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qlbm::carleman::{self, CarlemanSystem, Embedded, Variant};
use qlbm::instances::{self, LatticeInstance};
use qlbm::lattice::{self, GeometryOracle, GridSpec, SolidMask};
use qlbm::lbm_sim::{self, PopulationField, SimConfig};
use qlbm::qre::{self, ConstantCalls, CostModelConfig, Encoding, LinearKappaLog, QlsaCallModel};

create_exception!(qlbm_py, CapacityError, PyException);
create_exception!(qlbm_py, NumericalError, PyException);

fn py_err(e: qlbm::Error) -> PyErr {
    match e {
        qlbm::Error::Capacity(m) => CapacityError::new_err(m),
        qlbm::Error::Numerical(m) => NumericalError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_variant(s: &str) -> PyResult<Variant> {
    match s {
        "dense" => Ok(Variant::Dense),
        "sparse" => Ok(Variant::Sparse),
        _ => Err(PyValueError::new_err(format!("unknown variant '{s}' (dense|sparse)"))),
    }
}

/// Velocity vector of direction `i`.
#[pyfunction]
fn velocity(i: usize) -> PyResult<[i32; 3]> {
    lattice::velocity_component(i).map_err(py_err)
}

#[pyfunction]
fn opposite(i: usize) -> PyResult<usize> {
    lattice::opposite(i).map_err(py_err)
}

#[pyfunction]
fn weights() -> Vec<f64> {
    lattice::W.to_vec()
}

#[pyfunction]
fn catalog_ids() -> Vec<String> {
    instances::catalog().into_iter().map(|p| p.id).collect()
}

/// Lattice-unit view of a catalog instance.
#[pyclass(name = "Instance", frozen)]
struct PyInstance {
    inner: LatticeInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (id, tau = 0.6))]
    fn new(id: &str, tau: f64) -> PyResult<Self> {
        let p = instances::find(id).map_err(py_err)?;
        Ok(Self { inner: instances::derive_lattice(&p, tau).map_err(py_err)? })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }
    #[getter]
    fn reynolds(&self) -> f64 {
        self.inner.reynolds
    }
    #[getter]
    fn velocity(&self) -> f64 {
        self.inner.velocity
    }
    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx
    }
    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }
    #[getter]
    fn t_steps(&self) -> f64 {
        self.inner.t_steps
    }
    #[getter]
    fn n(&self) -> f64 {
        self.inner.n
    }
    #[getter]
    fn nq(&self) -> f64 {
        self.inner.nq
    }
    #[getter]
    fn n_f(&self) -> f64 {
        self.inner.n_f
    }
    #[getter]
    fn lattice_velocity(&self) -> f64 {
        self.inner.lattice_velocity
    }
    #[getter]
    fn lattice_mach(&self) -> f64 {
        self.inner.lattice_mach
    }
    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Instance(id='{}', tau={}, n={:e})", self.inner.id, self.inner.tau, self.inner.n)
    }
}

/// Block norms and the spectral bound at one `tau`.
#[pyclass(name = "NormReport", frozen)]
struct PyNormReport {
    inner: carleman::NormReport,
}

#[pymethods]
impl PyNormReport {
    #[getter]
    fn f1_inf(&self) -> f64 {
        self.inner.f1_inf
    }
    #[getter]
    fn f2_inf(&self) -> f64 {
        self.inner.f2_inf
    }
    #[getter]
    fn f3_inf(&self) -> f64 {
        self.inner.f3_inf
    }
    #[getter]
    fn coefficients(&self) -> [f64; 6] {
        self.inner.coefficients
    }
    #[getter]
    fn spectral_bound(&self) -> f64 {
        self.inner.spectral_bound
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (tau = 0.6))]
fn norm_report(tau: f64) -> PyResult<PyNormReport> {
    Ok(PyNormReport { inner: carleman::norm_report(tau).map_err(py_err)? })
}

#[pyclass(name = "ConvergenceWindow", frozen)]
struct PyConvergenceWindow {
    inner: carleman::ConvergenceWindow,
}

#[pymethods]
impl PyConvergenceWindow {
    #[getter]
    fn t_c_lower(&self) -> f64 {
        self.inner.t_c_lower
    }
    #[getter]
    fn t_c_upper(&self) -> f64 {
        self.inner.t_c_upper
    }
    #[getter]
    fn t_c(&self) -> f64 {
        self.inner.t_c
    }

    #[pyo3(signature = (t, k = 3))]
    fn error_envelope(&self, t: f64, k: u32) -> f64 {
        self.inner.error_envelope(t, k)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (phi0_inf, tau = 0.6))]
fn convergence_window(phi0_inf: f64, tau: f64) -> PyResult<PyConvergenceWindow> {
    Ok(PyConvergenceWindow { inner: carleman::convergence_window(phi0_inf, tau).map_err(py_err)? })
}

/// Per-node nonzero counts as a dict.
#[pyfunction]
#[pyo3(signature = (variant = "dense"))]
fn census<'py>(py: Python<'py>, variant: &str) -> PyResult<Bound<'py, PyDict>> {
    let c = carleman::census(parse_variant(variant)?);
    let d = PyDict::new(py);
    d.set_item("f1_nonzeros", c.f1_nonzeros)?;
    d.set_item("f1_unique", c.f1_unique)?;
    d.set_item("f2_nonzeros", c.f2_nonzeros)?;
    d.set_item("f2_unique", c.f2_unique)?;
    d.set_item("f3_nonzeros", c.f3_nonzeros)?;
    d.set_item("f3_unique", c.f3_unique)?;
    Ok(d)
}

fn make_mask(grid: (usize, usize, usize), sphere: Option<([f64; 3], f64)>) -> PyResult<SolidMask> {
    let g = GridSpec::new(grid.0, grid.1, grid.2).map_err(py_err)?;
    let oracle = match sphere {
        Some((center, radius)) => GeometryOracle::Sphere { center, radius },
        None => GeometryOracle::Empty,
    };
    Ok(SolidMask::from_oracle(g, &oracle))
}

/// Classical BGK simulator on a periodic grid with an optional sphere.
#[pyclass(name = "Simulator")]
struct PySimulator {
    field: PopulationField,
    mask: SolidMask,
    config: SimConfig,
    steps: u64,
    last_exchange: [f64; 3],
}

#[pymethods]
impl PySimulator {
    #[new]
    #[pyo3(signature = (grid, tau = 0.6, velocity = [0.0, 0.0, 0.0], sphere = None))]
    fn new(grid: (usize, usize, usize), tau: f64, velocity: [f64; 3], sphere: Option<([f64; 3], f64)>) -> PyResult<Self> {
        let mask = make_mask(grid, sphere)?;
        let config = SimConfig { tau, initial_velocity: velocity, ..SimConfig::default() };
        config.validate().map_err(py_err)?;
        let field = lbm_sim::init_field(&mask, 1.0, velocity);
        Ok(Self { field, mask, config, steps: 0, last_exchange: [0.0; 3] })
    }

    /// Advances `n` steps and returns the last momentum exchange.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, n: u64) -> PyResult<[f64; 3]> {
        for _ in 0..n {
            let (next, j) = lbm_sim::step_with_exchange(&self.field, &self.config, &self.mask);
            if !next.total_mass().is_finite() {
                return Err(NumericalError::new_err(format!("non-finite mass at step {}", self.steps + 1)));
            }
            self.field = next;
            self.last_exchange = j;
            self.steps += 1;
        }
        Ok(self.last_exchange)
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.steps
    }
    #[getter]
    fn solid_nodes(&self) -> usize {
        self.mask.solid_count()
    }

    fn total_mass(&self) -> f64 {
        self.field.total_mass()
    }

    fn total_momentum(&self) -> [f64; 3] {
        self.field.total_momentum()
    }

    fn populations(&self) -> Vec<f64> {
        self.field.values.clone()
    }
}

/// Carleman system on a small grid.
#[pyclass(name = "CarlemanSystem", frozen)]
struct PyCarlemanSystem {
    inner: CarlemanSystem,
}

#[pymethods]
impl PyCarlemanSystem {
    #[new]
    #[pyo3(signature = (grid, tau = 0.6, variant = "dense", sphere = None))]
    fn new(grid: (usize, usize, usize), tau: f64, variant: &str, sphere: Option<([f64; 3], f64)>) -> PyResult<Self> {
        let mask = make_mask(grid, sphere)?;
        Ok(Self { inner: CarlemanSystem::new(mask, tau, parse_variant(variant)?).map_err(py_err)? })
    }

    /// Dimension of the truncated state vector.
    #[getter]
    fn dimension(&self) -> u128 {
        self.inner.dimension()
    }

    /// Right-hand side of the nonlinear system.
    fn nonlinear_rhs(&self, f: Vec<f64>) -> PyResult<Vec<f64>> {
        carleman::nonlinear_rhs(&f, &self.inner).map_err(py_err)
    }

    /// First sector of the linearized operator applied to the lifted state.
    fn linear_rhs(&self, f: Vec<f64>) -> PyResult<Vec<f64>> {
        if f.len() != self.inner.len_f() {
            return Err(PyValueError::new_err(format!("expected {} values, got {}", self.inner.len_f(), f.len())));
        }
        Ok(carleman::carleman_apply_sector1(&Embedded(&f), &self.inner))
    }
}

/// End-to-end resource estimate.
#[pyclass(name = "Estimate", frozen)]
struct PyEstimate {
    inner: qre::ResourceEstimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn instance(&self) -> String {
        self.inner.instance.clone()
    }
    #[getter]
    fn logical_qubits(&self) -> f64 {
        self.inner.logical_qubits
    }
    #[getter]
    fn t_gate_total(&self) -> f64 {
        self.inner.t_gate_total
    }
    #[getter]
    fn layers(&self) -> Vec<(String, f64)> {
        self.inner.layers.iter().map(|l| (l.name.clone(), l.calls)).collect()
    }
    #[getter]
    fn t_gates_per_encoding(&self) -> f64 {
        self.inner.per_encoding.a_encoding_t_gates
    }
    #[getter]
    fn diagnostics(&self) -> Vec<String> {
        self.inner.diagnostics.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

/// `calls = None` uses the default call model, otherwise a fixed count.
#[pyfunction]
#[pyo3(signature = (id, tau = 0.6, encoding = "bespoke", calls = None))]
fn estimate(id: &str, tau: f64, encoding: &str, calls: Option<f64>) -> PyResult<PyEstimate> {
    let p = instances::find(id).map_err(py_err)?;
    let l = instances::derive_lattice(&p, tau).map_err(py_err)?;
    let config = CostModelConfig { tau, encoding: encoding.parse::<Encoding>().map_err(py_err)?, ..Default::default() };
    let model: Box<dyn QlsaCallModel> = match calls {
        Some(c) => Box::new(ConstantCalls(c)),
        None => Box::new(LinearKappaLog::default()),
    };
    Ok(PyEstimate { inner: qre::estimate_instance(&l, &config, model.as_ref()).map_err(py_err)? })
}

/// `(repetitions, grover_iterates)` for accuracy `eps` and failure `delta`.
#[pyfunction]
fn qae_counts(eps: f64, delta: f64) -> PyResult<(f64, f64)> {
    let q = qre::qae_counts(eps, delta).map_err(py_err)?;
    Ok((q.repetitions, q.grover_iterates))
}

/// Least-squares `log10 y = slope log10 x + intercept`.
#[pyfunction]
fn fit_power_law(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let f = qre::fit_power_law(&points).map_err(py_err)?;
    Ok((f.slope, f.intercept, f.residual))
}

#[pymodule]
fn qlbm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CapacityError", m.py().get_type::<CapacityError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyNormReport>()?;
    m.add_class::<PyConvergenceWindow>()?;
    m.add_class::<PySimulator>()?;
    m.add_class::<PyCarlemanSystem>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(velocity, m)?)?;
    m.add_function(wrap_pyfunction!(opposite, m)?)?;
    m.add_function(wrap_pyfunction!(weights, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_ids, m)?)?;
    m.add_function(wrap_pyfunction!(norm_report, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_window, m)?)?;
    m.add_function(wrap_pyfunction!(census, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(qae_counts, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    Ok(())
}
