//! Python module `semidiscrete_py`: models, one-step maps, path simulation, Brownian
//! lattices and the Monte Carlo experiments of the `semidiscrete` crate.

use pyo3::exceptions::{PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use semidiscrete::analysis;
use semidiscrete::models::{self, validate_parameters};
use semidiscrete::montecarlo::{self, ExperimentConfig, ReferencePath};
use semidiscrete::schemes::{self, Saturation};
use semidiscrete::{
    CoefficientFn, CoefficientMode, Error, GridSpec, ModelSpec, PhiFn, Scheme, SchemeKind,
    StepInput,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Usage(m) | Error::Domain(m) => PyValueError::new_err(m),
        Error::Overflow { .. } => PyOverflowError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A constant, or a `(times, values)` piecewise-constant table.
#[derive(FromPyObject)]
enum Coef {
    Constant(f64),
    Table(Vec<f64>, Vec<f64>),
}

impl Coef {
    fn build(self) -> PyResult<CoefficientFn> {
        match self {
            Coef::Constant(v) => Ok(CoefficientFn::constant(v)),
            Coef::Table(t, v) => CoefficientFn::tabulated(t, v).map_err(to_py),
        }
    }
}

fn phi(name: &str) -> PyResult<PhiFn> {
    match name {
        "one" => Ok(PhiFn::one()),
        "sin" => Ok(PhiFn::sin()),
        other => Err(PyValueError::new_err(format!(
            "phi must be 'one' or 'sin', got {other:?}"
        ))),
    }
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse::<SchemeKind>().map(Scheme::from).map_err(to_py)
}

#[pyclass(name = "Model", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: ModelSpec,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn heston32(k1: f64, k2: f64, k3: f64, x0: f64, horizon: f64) -> PyResult<Self> {
        let inner = ModelSpec::heston32(k1, k2, k3, x0, horizon).map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (k1, k2, k3, x0, horizon, phi="one"))]
    fn example1(k1: Coef, k2: Coef, k3: Coef, x0: f64, horizon: f64, phi: &str) -> PyResult<Self> {
        let inner = ModelSpec::example1(
            k1.build()?,
            k2.build()?,
            k3.build()?,
            self::phi(phi)?,
            x0,
            horizon,
        )
        .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn example2(k1: Coef, k2: Coef, k3: Coef, r: f64, x0: f64, horizon: f64) -> PyResult<Self> {
        let inner = ModelSpec::example2(k1.build()?, k2.build()?, k3.build()?, r, x0, horizon)
            .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (k1, k2, k3, r, q, x0, horizon, phi="one"))]
    #[allow(clippy::too_many_arguments)]
    fn example3(
        k1: Coef,
        k2: Coef,
        k3: Coef,
        r: f64,
        q: i32,
        x0: f64,
        horizon: f64,
        phi: &str,
    ) -> PyResult<Self> {
        let inner = ModelSpec::example3(
            k1.build()?,
            k2.build()?,
            k3.build()?,
            self::phi(phi)?,
            r,
            q,
            x0,
            horizon,
        )
        .map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    fn drift(&self, t: f64, x: f64) -> PyResult<f64> {
        self.inner.eval_drift(t, x).map_err(to_py)
    }

    fn diffusion(&self, t: f64, x: f64) -> PyResult<f64> {
        self.inner.eval_diffusion(t, x).map_err(to_py)
    }

    /// `(status, [(condition, severity, message), ...])`.
    fn validate(&self) -> (String, Vec<(String, String, String)>) {
        let report = validate_parameters(&self.inner);
        let findings = report
            .findings
            .iter()
            .map(|f| {
                (
                    f.condition.to_string(),
                    format!("{:?}", f.severity),
                    f.message.clone(),
                )
            })
            .collect();
        (format!("{:?}", report.status), findings)
    }

    /// Example II only: the model of `z = x^(2r-2)`.
    fn transformed(&self) -> PyResult<PyModel> {
        let inner = models::transform_example2(&self.inner).map_err(to_py)?;
        Ok(PyModel { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(family={}, x0={}, horizon={})",
            self.family(),
            self.inner.x0,
            self.inner.horizon
        )
    }
}

#[pyfunction]
fn inverse_transform(z: f64, r: f64) -> PyResult<f64> {
    models::inverse_transform(z, r).map_err(to_py)
}

/// `(value, saturation)` where saturation is `"none"`, `"overflow"` or `"underflow"`.
#[pyfunction]
#[pyo3(signature = (model, t, y, dt, dw, midpoint=false))]
fn sd_step(
    model: &PyModel,
    t: f64,
    y: f64,
    dt: f64,
    dw: f64,
    midpoint: bool,
) -> PyResult<(f64, &'static str)> {
    let mode = if midpoint {
        CoefficientMode::Midpoint
    } else {
        CoefficientMode::LeftPoint
    };
    let s = schemes::sd_step(&model.inner, StepInput::new(t, y, dt, dw), mode).map_err(to_py)?;
    let flag = match s.saturation {
        Saturation::None => "none",
        Saturation::Overflow => "overflow",
        Saturation::Underflow => "underflow",
    };
    Ok((s.value, flag))
}

#[pyfunction]
fn tamed_step(model: &PyModel, t: f64, y: f64, dt: f64, dw: f64) -> PyResult<f64> {
    schemes::tamed_step(&model.inner, StepInput::new(t, y, dt, dw)).map_err(to_py)
}

#[pyfunction]
fn hms_step(model: &PyModel, t: f64, y: f64, dt: f64, dw: f64) -> PyResult<f64> {
    schemes::hms_step(&model.inner, StepInput::new(t, y, dt, dw)).map_err(to_py)
}

#[pyfunction]
fn em_step(model: &PyModel, t: f64, y: f64, dt: f64, dw: f64) -> PyResult<f64> {
    schemes::em_step(&model.inner, StepInput::new(t, y, dt, dw)).map_err(to_py)
}

#[pyclass(name = "PathResult", frozen, get_all)]
struct PyPathResult {
    terminal: f64,
    first_negative_step: Option<usize>,
    first_negative_value: Option<f64>,
    overflowed: bool,
    underflowed_to_zero: bool,
    min_iterate: f64,
    steps: usize,
    /// Every iterate including `x0`, when requested.
    trajectory: Option<Vec<f64>>,
}

#[pyfunction]
#[pyo3(signature = (scheme, model, increments, dt, trajectory=false))]
fn simulate_path(
    scheme: &str,
    model: &PyModel,
    increments: Vec<f64>,
    dt: f64,
    trajectory: bool,
) -> PyResult<PyPathResult> {
    let mut path = trajectory.then(Vec::new);
    let r = schemes::simulate_path_with(
        self::scheme(scheme)?,
        &model.inner,
        &increments,
        dt,
        path.as_mut(),
    )
    .map_err(to_py)?;
    Ok(PyPathResult {
        terminal: r.terminal,
        first_negative_step: r.first_negative_step,
        first_negative_value: r.first_negative_value,
        overflowed: r.overflowed,
        underflowed_to_zero: r.underflowed_to_zero,
        min_iterate: r.min_iterate,
        steps: r.steps,
        trajectory: path,
    })
}

#[pyclass(name = "BrownianLattice", frozen)]
struct PyLattice {
    inner: semidiscrete::BrownianLattice,
}

#[pymethods]
impl PyLattice {
    #[getter]
    fn fine_increments(&self) -> Vec<f64> {
        self.inner.fine_increments.clone()
    }

    #[getter]
    fn reference_exponent(&self) -> u32 {
        self.inner.reference_exponent
    }

    fn coarsen(&self, level_exponent: u32) -> PyResult<Vec<f64>> {
        semidiscrete::coarsen(&self.inner, level_exponent).map_err(to_py)
    }

    fn terminal(&self) -> f64 {
        self.inner.terminal()
    }
}

#[pyfunction]
fn generate_lattice(
    seed: u64,
    path_index: u64,
    horizon: f64,
    reference_exponent: u32,
) -> PyResult<PyLattice> {
    let grid = GridSpec::new(horizon, vec![], reference_exponent).map_err(to_py)?;
    Ok(PyLattice {
        inner: semidiscrete::generate_lattice(seed, path_index, &grid),
    })
}

#[pyclass(name = "ErrorRow", frozen, get_all)]
struct PyErrorRow {
    scheme: &'static str,
    level_exponent: u32,
    dt: f64,
    error: f64,
    ci_half_width: f64,
    batch_means: Vec<f64>,
    excluded_paths: usize,
    negative_paths: usize,
}

#[pyfunction]
#[pyo3(signature = (
    model, schemes, levels, reference_exponent, batches, paths_per_batch, seed,
    reference="HMS", reference_path="shared", alpha=0.10, quantile=None, workers=None
))]
#[allow(clippy::too_many_arguments)]
fn run_endpoint_errors(
    py: Python<'_>,
    model: &PyModel,
    schemes: Vec<String>,
    levels: Vec<u32>,
    reference_exponent: u32,
    batches: usize,
    paths_per_batch: usize,
    seed: u64,
    reference: &str,
    reference_path: &str,
    alpha: f64,
    quantile: Option<f64>,
    workers: Option<usize>,
) -> PyResult<Vec<PyErrorRow>> {
    let config = ExperimentConfig {
        model: model.inner.clone(),
        schemes: schemes.iter().map(|s| scheme(s)).collect::<PyResult<_>>()?,
        grid: GridSpec::new(model.inner.horizon, levels, reference_exponent).map_err(to_py)?,
        batches,
        paths_per_batch,
        alpha,
        seed,
        reference: scheme(reference)?,
        reference_path: reference_path.parse::<ReferencePath>().map_err(to_py)?,
        quantile,
    };
    let reports = py
        .detach(|| montecarlo::run_endpoint_errors(&config, workers))
        .map_err(to_py)?;
    Ok(reports
        .into_iter()
        .map(|r| PyErrorRow {
            scheme: r.scheme.name(),
            level_exponent: r.level_exponent,
            dt: r.dt,
            error: r.grand_mean,
            ci_half_width: r.ci_half_width,
            batch_means: r.batch_means,
            excluded_paths: r.excluded_paths,
            negative_paths: r.negative_paths,
        })
        .collect())
}

#[pyclass(name = "NegativityCensus", frozen, get_all)]
struct PyCensus {
    scheme: &'static str,
    n_paths: usize,
    steps: usize,
    dt: f64,
    fraction_negative: f64,
    /// `(first negative step, number of paths)`, ascending by step.
    step_histogram: Vec<(usize, usize)>,
    example_first_values: Vec<(u64, usize, f64)>,
    overflowed_paths: usize,
}

#[pyfunction]
#[pyo3(signature = (scheme, model, n_paths, steps, seed, workers=None))]
fn negativity_census(
    py: Python<'_>,
    scheme: &str,
    model: &PyModel,
    n_paths: usize,
    steps: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<PyCensus> {
    let s = self::scheme(scheme)?;
    let c = py
        .detach(|| montecarlo::negativity_census(s, &model.inner, n_paths, steps, seed, workers))
        .map_err(to_py)?;
    Ok(PyCensus {
        scheme: c.scheme.name(),
        n_paths: c.n_paths,
        steps: c.steps,
        dt: c.dt,
        fraction_negative: c.fraction_negative,
        step_histogram: c.step_histogram.into_iter().collect(),
        example_first_values: c.example_first_values,
        overflowed_paths: c.overflowed_paths,
    })
}

/// Least-squares `(slope, intercept)` of `log2 error` on `log2 dt`.
#[pyfunction]
fn fit_order(points: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    analysis::fit_order(&points).map_err(to_py)
}

#[pyfunction]
fn t_quantile(alpha: f64, batches: usize) -> PyResult<f64> {
    montecarlo::t_quantile(alpha, batches).map_err(to_py)
}

#[pymodule]
fn semidiscrete_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyPathResult>()?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyErrorRow>()?;
    m.add_class::<PyCensus>()?;
    m.add_function(wrap_pyfunction!(inverse_transform, m)?)?;
    m.add_function(wrap_pyfunction!(sd_step, m)?)?;
    m.add_function(wrap_pyfunction!(tamed_step, m)?)?;
    m.add_function(wrap_pyfunction!(hms_step, m)?)?;
    m.add_function(wrap_pyfunction!(em_step, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(generate_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(run_endpoint_errors, m)?)?;
    m.add_function(wrap_pyfunction!(negativity_census, m)?)?;
    m.add_function(wrap_pyfunction!(fit_order, m)?)?;
    m.add_function(wrap_pyfunction!(t_quantile, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_conversion() {
        assert_eq!(
            Coef::Constant(2.0).build().unwrap().as_constant(),
            Some(2.0)
        );
        let table = Coef::Table(vec![0.0, 0.5], vec![1.0, 3.0]).build().unwrap();
        assert_eq!(table.eval(0.75), 3.0);
        assert!(Coef::Table(vec![0.5, 0.0], vec![1.0, 3.0]).build().is_err());
    }

    #[test]
    fn names() {
        assert!(phi("sin").is_ok());
        assert!(phi("tan").is_err());
        assert_eq!(scheme("tamed").unwrap().kind, SchemeKind::Tamed);
        assert!(scheme("milstein").is_err());
    }
}
