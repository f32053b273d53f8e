use std::collections::HashMap;

use curvelab::curve::{self, CurveField, Parity, TruncationScheme};
use curvelab::experiments::{self, ExperimentConfig, Value};
use curvelab::{decoupling, oscillatory, shifted_max, Dims};
use num_complex::Complex64;
use pyo3::exceptions::{PyMemoryError, PyValueError};
use pyo3::prelude::*;

fn err(e: curvelab::Error) -> PyErr {
    match e {
        curvelab::Error::Infeasible { .. } => PyMemoryError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parity(name: &str) -> PyResult<Parity> {
    match name {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        _ => Err(PyValueError::new_err("parity must be 'even' or 'odd'")),
    }
}

/// Periodic grid of `n` points per side on a torus of side `side`.
#[pyclass(name = "TorusGrid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyTorusGrid(curvelab::TorusGrid);

#[pymethods]
impl PyTorusGrid {
    #[new]
    #[pyo3(signature = (n, side, dims = 2))]
    fn new(n: usize, side: f64, dims: usize) -> PyResult<Self> {
        curvelab::make_grid(n, side, dims).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn side(&self) -> f64 {
        self.0.side()
    }

    #[getter]
    fn dims(&self) -> usize {
        self.0.dims().count()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    #[getter]
    fn nyquist(&self) -> f64 {
        self.0.nyquist()
    }

    fn coords(&self) -> Vec<f64> {
        (0..self.0.n()).map(|i| self.0.coord(i)).collect()
    }

    fn __repr__(&self) -> String {
        format!("TorusGrid(n={}, side={}, dims={})", self.0.n(), self.0.side(), self.0.dims().count())
    }
}

/// Complex samples on a grid, x-major.
#[pyclass(name = "GridFunction", frozen)]
struct PyGridFunction(curvelab::GridFunction);

#[pymethods]
impl PyGridFunction {
    #[new]
    fn new(grid: PyTorusGrid, samples: Vec<Complex64>) -> PyResult<Self> {
        curvelab::GridFunction::new(grid.0, samples).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_real(grid: PyTorusGrid, values: Vec<f64>) -> PyResult<Self> {
        curvelab::GridFunction::from_real(grid.0, &values).map(Self).map_err(err)
    }

    /// Band-limited Gaussian field; `band` is `("centered", xi_max, eta_max)` or `("annulus", k)`.
    #[staticmethod]
    fn random(grid: PyTorusGrid, seed: u64, band: (String, f64, Option<f64>)) -> PyResult<Self> {
        let b = match (band.0.as_str(), band.2) {
            ("centered", Some(eta)) => curvelab::Band::Centered { xi_max: band.1, eta_max: eta },
            ("centered", None) => curvelab::Band::Centered { xi_max: band.1, eta_max: band.1 },
            ("annulus", _) => curvelab::Band::Annulus { k: band.1 },
            _ => return Err(PyValueError::new_err("band kind must be 'centered' or 'annulus'")),
        };
        curvelab::random_field(grid.0, seed, b).map(Self).map_err(err)
    }

    #[getter]
    fn grid(&self) -> PyTorusGrid {
        PyTorusGrid(*self.0.grid())
    }

    fn samples(&self) -> Vec<Complex64> {
        self.0.samples().to_vec()
    }

    fn spectrum(&self) -> Vec<Complex64> {
        self.0.spectrum()
    }

    fn norm_lp(&self, p: f64) -> PyResult<f64> {
        self.0.norm_lp(p).map_err(err)
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    fn __len__(&self) -> usize {
        self.0.samples().len()
    }
}

/// Coefficient field of the curve `t -> (t, u(x, y) [t]^alpha)`.
#[pyclass(name = "CurveField", frozen)]
struct PyCurveField(CurveField);

#[pymethods]
impl PyCurveField {
    #[staticmethod]
    #[pyo3(signature = (alpha, u, parity = "even"))]
    fn constant(alpha: f64, u: f64, parity: &str) -> PyResult<Self> {
        CurveField::constant(alpha, self::parity(parity)?, u).map(Self).map_err(err)
    }

    /// Field that sends every curve through `center`, clipped to `[-clip, clip]`.
    #[staticmethod]
    #[pyo3(signature = (alpha, center, clip, parity = "even"))]
    fn adversarial_ball(alpha: f64, center: (f64, f64), clip: f64, parity: &str) -> PyResult<Self> {
        CurveField::adversarial_ball(alpha, self::parity(parity)?, center, clip)
            .map(Self)
            .map_err(err)
    }

    /// Measurable field, constant on the cells of `grid` with the given x-major values.
    #[staticmethod]
    #[pyo3(signature = (alpha, grid, values, parity = "even"))]
    fn sampled(alpha: f64, grid: PyTorusGrid, values: Vec<f64>, parity: &str) -> PyResult<Self> {
        let g = grid.0;
        if g.dims() != Dims::Two || values.len() != g.len() {
            return Err(PyValueError::new_err("values must cover a two-dimensional grid"));
        }
        let (n, h, side) = (g.n(), g.spacing(), g.side());
        let cell = move |x: f64| (((x + 0.5 * side) / h).round() as i64).rem_euclid(n as i64) as usize;
        let u = move |x: f64, y: f64| values[cell(x) * n + cell(y)];
        CurveField::measurable(alpha, self::parity(parity)?, u).map(Self).map_err(err)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    fn u_at(&self, x: f64, y: f64) -> f64 {
        self.0.u_at(x, y)
    }
}

/// Truncation `0 < |t| <= eps0` discretized with `nodes` per side.
#[pyclass(name = "TruncationScheme", frozen, from_py_object)]
#[derive(Clone)]
struct PyTruncation(TruncationScheme);

#[pymethods]
impl PyTruncation {
    #[new]
    #[pyo3(signature = (eps0, nodes, ladder_len = 1))]
    fn new(eps0: f64, nodes: usize, ladder_len: usize) -> PyResult<Self> {
        TruncationScheme::new(eps0, nodes, ladder_len).map(Self).map_err(err)
    }

    fn ladder(&self) -> Vec<f64> {
        self.0.ladder()
    }
}

#[pyfunction]
fn maximal_along_curve(
    py: Python<'_>,
    f: &PyGridFunction,
    field: &PyCurveField,
    trunc: PyTruncation,
) -> PyResult<PyGridFunction> {
    py.detach(|| curve::maximal_along_curve(&f.0, &field.0, &trunc.0))
        .map(PyGridFunction)
        .map_err(err)
}

#[pyfunction]
fn hilbert_along_curve(
    py: Python<'_>,
    f: &PyGridFunction,
    field: &PyCurveField,
    trunc: PyTruncation,
) -> PyResult<PyGridFunction> {
    py.detach(|| curve::hilbert_along_curve(&f.0, &field.0, &trunc.0))
        .map(PyGridFunction)
        .map_err(err)
}

#[pyfunction]
fn shifted_max_1d(f: Vec<f64>, n: i64) -> PyResult<Vec<f64>> {
    shifted_max::shifted_max_1d(&f, n).map_err(err)
}

#[pyfunction]
fn vv_norm_ratio(family: Vec<Vec<f64>>, n: i64, p: f64, q: f64) -> PyResult<f64> {
    shifted_max::vv_norm_ratio(&family, n, p, q).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (alpha, l, h, w, xi, quad_depth = 1024))]
fn kernel_i_xi(alpha: f64, l: u32, h: f64, w: f64, xi: f64, quad_depth: usize) -> PyResult<f64> {
    let params = oscillatory::OscillatoryKernelParams::new(alpha, l, h, w, xi).map_err(err)?;
    Ok(oscillatory::kernel_i_xi(&params, quad_depth))
}

#[pyfunction]
#[pyo3(signature = (alpha, l, h, w, samples = 12, quad_depth = 1024))]
fn kernel_sup(py: Python<'_>, alpha: f64, l: u32, h: f64, w: f64, samples: usize, quad_depth: usize) -> PyResult<f64> {
    let params = oscillatory::OscillatoryKernelParams::new(alpha, l, h, w, 0.0).map_err(err)?;
    py.detach(|| oscillatory::kernel_sup(&params, samples, quad_depth)).map_err(err)
}

#[pyfunction]
fn multiplier_diff_sum(xi: f64, eta: f64, jk_range: u32) -> f64 {
    oscillatory::multiplier_diff_sum(xi, eta, jk_range)
}

/// Worst decoupling ratio over `trials` Gaussian coefficient draws.
#[pyfunction]
#[pyo3(signature = (delta, p, trials = 8, seed = 0, quad_depth = 64))]
fn decoupling_ratio(py: Python<'_>, delta: f64, p: f64, trials: usize, seed: u64, quad_depth: usize) -> PyResult<f64> {
    let model = decoupling::CoefficientModel::Gaussian { trials, seed };
    py.detach(|| decoupling::decoupling_ratio(&model, delta, p, quad_depth))
        .map_err(err)
}

/// Least-squares slope, intercept and R² of `log2 y` against `log2 x`.
#[pyfunction]
fn fit_exponent(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    curvelab::fit_exponent(&points)
        .map(|f| (f.slope, f.intercept, f.r_squared))
        .map_err(err)
}

/// Least-squares slope, intercept and R² of `log2 y` against `x`.
#[pyfunction]
fn fit_semilog(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    curvelab::fit_semilog(&points)
        .map(|f| (f.slope, f.intercept, f.r_squared))
        .map_err(err)
}

#[pyfunction]
fn list_experiments() -> Vec<&'static str> {
    experiments::EXPERIMENTS.to_vec()
}

/// Runs an experiment and returns `(columns, rows, fit)`, where `fit` is
/// `(slope, intercept, r_squared)` or `None`.
#[pyfunction]
#[pyo3(signature = (name, params = None, seed = 0))]
#[allow(clippy::type_complexity)]
fn run_experiment(
    py: Python<'_>,
    name: &str,
    params: Option<HashMap<String, String>>,
    seed: u64,
) -> PyResult<(Vec<String>, Vec<Vec<f64>>, Option<(f64, f64, f64)>)> {
    let mut cfg = ExperimentConfig::new(name);
    cfg.seed = seed;
    for (k, v) in params.unwrap_or_default() {
        cfg.set(&k, &v).map_err(err)?;
    }
    let res = py.detach(|| experiments::run_experiment(&cfg)).map_err(err)?;
    let rows = res.rows.iter().map(|r| r.iter().copied().map(Value::as_f64).collect()).collect();
    let fit = res.fit.map(|f| (f.slope, f.intercept, f.r_squared));
    Ok((res.columns, rows, fit))
}

#[pymodule]
#[pyo3(name = "curvelab")]
fn curvelab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTorusGrid>()?;
    m.add_class::<PyGridFunction>()?;
    m.add_class::<PyCurveField>()?;
    m.add_class::<PyTruncation>()?;
    m.add_function(wrap_pyfunction!(maximal_along_curve, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_along_curve, m)?)?;
    m.add_function(wrap_pyfunction!(shifted_max_1d, m)?)?;
    m.add_function(wrap_pyfunction!(vv_norm_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_i_xi, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_sup, m)?)?;
    m.add_function(wrap_pyfunction!(multiplier_diff_sum, m)?)?;
    m.add_function(wrap_pyfunction!(decoupling_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(fit_semilog, m)?)?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
