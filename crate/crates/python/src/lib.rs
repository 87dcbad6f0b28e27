//! Python bindings: paths, test functions, level grids and the estimators.

// emitted by the pyo3 0.22 macros for `PyResult` returns
#![allow(clippy::useless_conversion)]

use ::cadlag_localtime as lt;
use lt::crossing;
use lt::follmer;
use lt::lab;
use lt::skorokhod;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: lt::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Path", module = "cadlag_localtime", frozen)]
#[derive(Clone)]
pub struct PyPath(pub lt::SampledCadlagPath);

#[pymethods]
impl PyPath {
    #[new]
    #[pyo3(signature = (times, values, jumps = Vec::new()))]
    fn new(times: Vec<f64>, values: Vec<f64>, jumps: Vec<usize>) -> PyResult<Self> {
        lt::SampledCadlagPath::new(times, values, &jumps).map(Self).map_err(err)
    }

    /// Equally spaced samples on `[0, horizon]`.
    #[staticmethod]
    #[pyo3(signature = (horizon, values, jumps = Vec::new()))]
    fn uniform(horizon: f64, values: Vec<f64>, jumps: Vec<usize>) -> PyResult<Self> {
        lt::SampledCadlagPath::uniform(horizon, values, &jumps).map(Self).map_err(err)
    }

    #[staticmethod]
    fn read_csv(file: std::path::PathBuf) -> PyResult<Self> {
        let f = std::fs::File::open(&file)?;
        lt::SampledCadlagPath::read_csv(f).map(Self).map_err(err)
    }

    fn write_csv(&self, file: std::path::PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&file)?;
        self.0.write_csv(f).map_err(err)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn jumps(&self) -> Vec<usize> {
        self.0.jumps().iter().map(|j| j.index).collect()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Path(samples={}, horizon={}, jumps={})", self.0.len(), self.0.horizon(), self.0.jumps().len())
    }

    fn value_at(&self, t: f64) -> f64 {
        self.0.value_at(t)
    }

    fn restrict(&self, t: f64) -> PyResult<Self> {
        self.0.restrict(t).map(Self).map_err(err)
    }

    fn total_variation(&self) -> f64 {
        self.0.total_variation()
    }

    fn jump_quadratic_variation(&self) -> f64 {
        self.0.jump_quadratic_variation()
    }

    fn continuous_quadratic_variation(&self) -> f64 {
        self.0.continuous_quadratic_variation()
    }
}

#[pyclass(name = "DcFunction", module = "cadlag_localtime", frozen)]
#[derive(Clone)]
pub struct PyDcFunction(pub lt::DcFunction);

#[pymethods]
impl PyDcFunction {
    /// From a JSON descriptor such as `{"kind": "abs", "center": 0.1}`.
    #[staticmethod]
    fn from_json(descriptor: &str) -> PyResult<Self> {
        let d: lt::FunctionDescriptor = serde_json::from_str(descriptor).map_err(json_err)?;
        d.build().map(Self).map_err(err)
    }

    /// The built-in test suite.
    #[staticmethod]
    fn suite() -> Vec<Self> {
        lt::dc::builtin_suite().into_iter().map(Self).collect()
    }

    #[staticmethod]
    #[pyo3(signature = (center = 0.0))]
    fn half_abs(center: f64) -> Self {
        Self(lt::DcFunction::half_abs(center))
    }

    #[staticmethod]
    #[pyo3(signature = (center = 0.0))]
    fn relu(center: f64) -> Self {
        Self(lt::DcFunction::relu(center))
    }

    #[staticmethod]
    fn half_square() -> Self {
        Self(lt::DcFunction::half_square())
    }

    /// `ρ_n * f` with the symmetric bump, or the one-sided kernel on `[0, 1]`.
    #[pyo3(signature = (n, one_sided = false))]
    fn mollify(&self, n: u32, one_sided: bool) -> PyResult<Self> {
        let rho = if one_sided { lt::Mollifier::one_sided() } else { lt::Mollifier::symmetric() };
        lt::dc::mollify(&self.0, n, &rho).map(Self).map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    fn __repr__(&self) -> String {
        format!("DcFunction({})", self.0.name())
    }

    fn __call__(&self, u: f64) -> f64 {
        self.0.eval(u)
    }

    fn deriv(&self, u: f64) -> f64 {
        self.0.deriv(u)
    }

    fn jf_increment(&self, a: f64, b: f64) -> f64 {
        self.0.jf_increment(a, b)
    }
}

#[pyclass(name = "LevelGrid", module = "cadlag_localtime", frozen)]
#[derive(Clone, Copy)]
pub struct PyLevelGrid(pub lt::LevelGrid);

#[pymethods]
impl PyLevelGrid {
    /// Nodes at multiples of `spacing` covering `[lo - margin, hi + margin]`.
    #[new]
    #[pyo3(signature = (lo, hi, spacing, margin = 0.0))]
    fn new(lo: f64, hi: f64, spacing: f64, margin: f64) -> PyResult<Self> {
        lt::LevelGrid::covering(lo, hi, spacing, margin).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, spacing, margin = None))]
    fn for_path(path: &PyPath, spacing: f64, margin: Option<f64>) -> PyResult<Self> {
        lt::LevelGrid::for_path(&path.0, spacing, margin).map(Self).map_err(err)
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().collect()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn scheme(path: &lt::SampledCadlagPath, levels: Option<Vec<u32>>) -> PyResult<lt::PartitionScheme> {
    match levels {
        None => Ok(lt::PartitionScheme::full_grid(path)),
        Some(l) => lt::PartitionScheme::dyadic(path, &l, false).map_err(err),
    }
}

/// Path number `index` of the generator described by `spec` (JSON).
#[pyfunction]
#[pyo3(signature = (spec, index = 0))]
fn generate(spec: &str, index: u64) -> PyResult<PyPath> {
    let s: lab::GeneratorSpec = serde_json::from_str(spec).map_err(json_err)?;
    s.generate_indexed(index).map(PyPath).map_err(err)
}

/// `{level: (times, total, continuous, jump)}` along dyadic levels, or the
/// full grid (level 0) when `levels` is omitted.
#[pyfunction]
#[pyo3(signature = (path, levels = None))]
fn quadratic_variation<'py>(py: Python<'py>, path: &PyPath, levels: Option<Vec<u32>>) -> PyResult<Bound<'py, PyDict>> {
    let s = scheme(&path.0, levels)?;
    let out = PyDict::new_bound(py);
    for n in 0..s.num_levels() {
        let qv = follmer::quadratic_variation(&path.0, &s, n).map_err(err)?;
        out.set_item(qv.level, (qv.times, qv.total, qv.continuous, qv.jump))?;
    }
    Ok(out)
}

/// Residual of the discrete Tanaka-Meyer identity, one per dyadic level.
#[pyfunction]
#[pyo3(signature = (path, f, t, levels = None))]
fn tanaka_residual(path: &PyPath, f: &PyDcFunction, t: f64, levels: Option<Vec<u32>>) -> PyResult<Vec<f64>> {
    let s = scheme(&path.0, levels)?;
    (0..s.num_levels())
        .map(|n| crossing::discrete_tanaka_residual(&path.0, &f.0, &s, n, t).map_err(err))
        .collect()
}

/// `K^π_t` cell averages along one dyadic level (full grid if omitted).
#[pyfunction]
#[pyo3(signature = (path, grid, t, level = None))]
fn crossing_time(path: &PyPath, grid: &PyLevelGrid, t: f64, level: Option<u32>) -> PyResult<Vec<f64>> {
    let s = scheme(&path.0, level.map(|l| vec![l]))?;
    Ok(crossing::k_pi_level(&path.0, s.level(0).map_err(err)?, t, &grid.0).values)
}

#[pyfunction]
fn jump_field(path: &PyPath, grid: &PyLevelGrid, t: f64) -> Vec<f64> {
    crossing::j_pi(&path.0, t, &grid.0).values
}

#[pyfunction]
fn occupation_local_time(path: &PyPath, grid: &PyLevelGrid, t: f64, bandwidth: f64) -> PyResult<Vec<f64>> {
    crossing::occupation_local_time(&path.0, t, bandwidth, &grid.0).map(|f| f.values).map_err(err)
}

/// Node values of the Tanaka-formula local time and the mass floored at 0.
#[pyfunction]
fn classical_local_time(path: &PyPath, grid: &PyLevelGrid, t: f64) -> (Vec<f64>, f64) {
    let c = lab::classical_local_time(&path.0, t, &grid.0);
    (c.field.values, c.floored_mass)
}

/// `(x^ε, φ)` of the double Skorokhod problem on `[-ε/2, ε/2]`.
#[pyfunction]
fn skorokhod_map(path: &PyPath, width: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = skorokhod::skorokhod_map(&path.0, width).map_err(err)?;
    Ok((s.regularized.values().to_vec(), s.deviation))
}

#[pyfunction]
fn count_crossings<'py>(py: Python<'py>, path: &PyPath, z: f64, width: f64, t: f64) -> PyResult<Bound<'py, PyDict>> {
    let c = skorokhod::count_crossings(&path.0, z, width, t).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("up", c.up)?;
    d.set_item("down", c.down)?;
    d.set_item("strict_up", c.strict_up)?;
    d.set_item("strict_down", c.strict_down)?;
    Ok(d)
}

/// `c n^{z,c}` at the grid nodes, one list per (decreasing) width.
#[pyfunction]
fn interval_crossing_local_time(path: &PyPath, grid: &PyLevelGrid, t: f64, widths: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let fs = skorokhod::interval_crossing_local_time(&path.0, t, &widths, &grid.0).map_err(err)?;
    Ok(fs.into_iter().map(|f| f.values).collect())
}

#[pyfunction]
fn q_statistic(path: &PyPath, grid: &PyLevelGrid, t: f64, width: f64) -> PyResult<f64> {
    lab::q_statistic(&path.0, t, &grid.0, width).map_err(err)
}

/// Runs an experiment from its JSON config; one dict per ladder level.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg: lab::ExperimentConfig = serde_json::from_str(config).map_err(json_err)?;
    let report = py.allow_threads(|| lab::run_convergence_experiment(&cfg)).map_err(err)?;
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new_bound(py);
            d.set_item("level", r.level)?;
            d.set_item("paths", r.paths)?;
            d.set_item("mean", r.mean)?;
            d.set_item("std_error", r.std_error)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "cadlag_localtime")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPath>()?;
    m.add_class::<PyDcFunction>()?;
    m.add_class::<PyLevelGrid>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(quadratic_variation, m)?)?;
    m.add_function(wrap_pyfunction!(tanaka_residual, m)?)?;
    m.add_function(wrap_pyfunction!(crossing_time, m)?)?;
    m.add_function(wrap_pyfunction!(jump_field, m)?)?;
    m.add_function(wrap_pyfunction!(occupation_local_time, m)?)?;
    m.add_function(wrap_pyfunction!(classical_local_time, m)?)?;
    m.add_function(wrap_pyfunction!(skorokhod_map, m)?)?;
    m.add_function(wrap_pyfunction!(count_crossings, m)?)?;
    m.add_function(wrap_pyfunction!(interval_crossing_local_time, m)?)?;
    m.add_function(wrap_pyfunction!(q_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
