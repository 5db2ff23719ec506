//! Python bindings for the `secbid` crate.
//!
//! Reports cross the boundary as plain dicts and lists built from their JSON
//! form.

use std::path::Path;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use secbid::information::{check_dependence, default_dependence_grids, make_model};
use secbid::revenue::{expected_revenue, monte_carlo_revenue, rank_families, RankOptions};
use secbid::securities::steepness_value_grid;
use secbid::{
    best_response_gain, bid_curve, max_bid, AuctionInstance, DependenceProperty, Grid, InformationModel, ModelSpec,
    SecurityKind, SteepnessMode, Tolerances, UtilityFunction,
};
use serde::Serialize;

create_exception!(pysecbid, SecbidError, PyException, "Invalid input or failed check.");
create_exception!(
    pysecbid,
    NumericalError,
    SecbidError,
    "Quadrature or root finding did not converge."
);

fn err(e: secbid::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        SecbidError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn signal_grid(model: &dyn InformationModel, n: usize) -> Grid {
    let (lo, hi) = model.signal_support();
    Grid::uniform(lo, hi, n)
}

/// One-parameter family of securities `φ(x, b)`.
#[pyclass(name = "SecurityFamily", module = "pysecbid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFamily {
    inner: secbid::SecurityFamily,
}

#[pymethods]
impl PyFamily {
    /// Standard family by kind: `cash`, `debt`, `equity` or `call_option`.
    #[new]
    #[pyo3(signature = (kind, value_cap = 1.0))]
    fn new(kind: &str, value_cap: f64) -> PyResult<Self> {
        let kind = SecurityKind::STANDARD
            .into_iter()
            .find(|k| k.as_str() == kind)
            .ok_or_else(|| PyValueError::new_err(format!("unknown family kind {kind}")))?;
        Ok(Self {
            inner: secbid::SecurityFamily::standard(kind, value_cap).map_err(err)?,
        })
    }

    #[staticmethod]
    fn standard_set(value_cap: f64) -> Vec<Self> {
        secbid::SecurityFamily::standard_set(value_cap)
            .into_iter()
            .map(|inner| Self { inner })
            .collect()
    }

    fn with_bid_interval(&self, lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.clone().with_bid_interval(lo, hi).map_err(err)?,
        })
    }

    fn with_name(&self, name: &str) -> Self {
        Self {
            inner: self.inner.clone().with_name(name),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    #[getter]
    fn bid_interval(&self) -> (f64, f64) {
        self.inner.bid_interval()
    }

    fn payoff(&self, x: f64, b: f64) -> PyResult<f64> {
        self.inner.payoff(x, b).map_err(err)
    }

    fn bid_grid(&self, n: usize) -> Vec<f64> {
        self.inner.bid_grid(n).to_vec()
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.bid_interval();
        format!("SecurityFamily({}, bids=[{lo}, {hi}])", self.inner.name())
    }
}

/// Buyer utility: risk neutral or CARA.
#[pyclass(name = "Utility", module = "pysecbid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyUtility {
    inner: UtilityFunction,
}

#[pymethods]
impl PyUtility {
    #[staticmethod]
    fn linear() -> Self {
        Self {
            inner: UtilityFunction::Linear,
        }
    }

    #[staticmethod]
    fn cara(risk_aversion: f64) -> PyResult<Self> {
        Ok(Self {
            inner: UtilityFunction::cara(risk_aversion).map_err(err)?,
        })
    }

    fn evaluate(&self, w: f64) -> f64 {
        self.inner.evaluate(w)
    }

    fn __repr__(&self) -> String {
        match self.inner {
            UtilityFunction::Linear => "Utility.linear()".into(),
            UtilityFunction::Cara { risk_aversion } => format!("Utility.cara({risk_aversion})"),
        }
    }
}

/// Joint law of the value and the two highest signals.
#[pyclass(name = "Model", module = "pysecbid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: Arc<dyn InformationModel>,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn example1() -> Self {
        Self {
            inner: Arc::new(secbid::Example1),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (n_buyers = 2, kappa = 1.0))]
    fn linear_tilt(n_buyers: usize, kappa: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(secbid::LinearTilt::new(n_buyers, kappa).map_err(err)?),
        })
    }

    /// Tabulated density from a CSV with columns `y,z,x,pdf`.
    #[staticmethod]
    #[pyo3(signature = (path, n_buyers = 2))]
    fn from_csv(path: &str, n_buyers: usize) -> PyResult<Self> {
        let spec = ModelSpec::Grid {
            path: path.into(),
            n_buyers,
        };
        Ok(Self {
            inner: make_model(&spec, Path::new(".")).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn value_pdf(&self, x: f64, y: f64, z: f64) -> f64 {
        self.inner.value_pdf(x, y, z)
    }

    /// `E[X | Y₁ = y, Z₁ = z]`.
    fn conditional_mean(&self, y: f64, z: f64) -> PyResult<f64> {
        let e = secbid::conditional_expectation(self.inner.as_ref(), |x| x, &[], y, z).map_err(err)?;
        Ok(e.value)
    }

    /// Dependence check on an `n`-point grid per axis; `affiliation`,
    /// `mlr` or `fosd`.
    #[pyo3(signature = (property, n = 101))]
    fn check_dependence<'py>(&self, py: Python<'py>, property: &str, n: usize) -> PyResult<Bound<'py, PyAny>> {
        let p = match property {
            "affiliation" => DependenceProperty::Affiliation,
            "mlr" | "pd_mlr" => DependenceProperty::PdMlr,
            "fosd" | "pd_fosd" => DependenceProperty::PdFosd,
            other => return Err(PyValueError::new_err(format!("unknown property {other}"))),
        };
        let (xg, yg, zg) = default_dependence_grids(self.inner.as_ref(), n);
        let report = py
            .detach(|| check_dependence(self.inner.as_ref(), p, &xg, &yg, &zg))
            .map_err(err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.name())
    }
}

/// Tabulated equilibrium bid function.
#[pyclass(name = "BidCurve", module = "pysecbid", frozen)]
struct PyBidCurve {
    inner: secbid::BidCurve,
}

#[pymethods]
impl PyBidCurve {
    #[getter]
    fn signals(&self) -> Vec<f64> {
        self.inner.signals.clone()
    }

    #[getter]
    fn bids(&self) -> Vec<f64> {
        self.inner.bids.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn max_residual(&self) -> f64 {
        self.inner.max_residual
    }

    #[getter]
    fn warning(&self) -> Option<String> {
        self.inner.warning.clone()
    }

    fn bid_at(&self, y: f64) -> f64 {
        self.inner.bid_at(y)
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_monotone(&self, tol: f64) -> bool {
        self.inner.is_monotone(tol)
    }

    fn __len__(&self) -> usize {
        self.inner.signals.len()
    }
}

/// Second-price auction with a given model, family, utility and investment.
#[pyclass(name = "Auction", module = "pysecbid", frozen)]
struct PyAuction {
    inner: AuctionInstance,
}

#[pymethods]
impl PyAuction {
    #[new]
    #[pyo3(signature = (model, family, utility, investment = 0.2))]
    fn new(model: &PyModel, family: &PyFamily, utility: &PyUtility, investment: f64) -> PyResult<Self> {
        let inner =
            AuctionInstance::new(model.inner.clone(), family.inner.clone(), utility.inner, investment).map_err(err)?;
        Ok(Self { inner })
    }

    /// Indifference bid `s(y, z)` and its residual.
    fn max_bid(&self, y: f64, z: f64) -> PyResult<(f64, f64)> {
        let r = max_bid(&self.inner, y, z).map_err(err)?;
        Ok((r.bid, r.residual))
    }

    #[pyo3(signature = (n = 201))]
    fn bid_curve(&self, py: Python<'_>, n: usize) -> PyResult<PyBidCurve> {
        let grid = signal_grid(self.inner.model.as_ref(), n);
        let inner = py.detach(|| bid_curve(&self.inner, &grid)).map_err(err)?;
        Ok(PyBidCurve { inner })
    }

    /// Expected seller revenue and its error estimate.
    fn expected_revenue(&self, py: Python<'_>, curve: &PyBidCurve) -> PyResult<(f64, f64)> {
        let e = py.detach(|| expected_revenue(&self.inner, &curve.inner)).map_err(err)?;
        Ok((e.value, e.error))
    }

    #[pyo3(signature = (curve, draws = 1_000_000, seed = 0))]
    fn monte_carlo_revenue<'py>(
        &self,
        py: Python<'py>,
        curve: &PyBidCurve,
        draws: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let e = py
            .detach(|| monte_carlo_revenue(&self.inner, &curve.inner, draws, seed))
            .map_err(err)?;
        to_py(py, &e)
    }

    /// Largest gain from deviating to one of `deviations` evenly spaced bids.
    #[pyo3(signature = (y, curve, deviations = 101))]
    fn best_response_gain<'py>(
        &self,
        py: Python<'py>,
        y: f64,
        curve: &PyBidCurve,
        deviations: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let grid = self.inner.family.bid_grid(deviations);
        let r = py
            .detach(|| best_response_gain(&self.inner, y, &curve.inner, &grid))
            .map_err(err)?;
        to_py(py, &r)
    }
}

/// Revenues, Monte Carlo checks, ranking and ex-post dominance matrix.
#[pyfunction]
#[pyo3(signature = (model, utility, families, investment = 0.2, signal_grid = 201, dominance_grid = 21, mc_draws = 0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn rank<'py>(
    py: Python<'py>,
    model: &PyModel,
    utility: &PyUtility,
    families: Vec<PyRef<'py, PyFamily>>,
    investment: f64,
    signal_grid: usize,
    dominance_grid: usize,
    mc_draws: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let fams: Vec<_> = families.iter().map(|f| f.inner.clone()).collect();
    let m = model.inner.clone();
    let opts = RankOptions {
        signal_grid: self::signal_grid(m.as_ref(), signal_grid),
        dominance_grid: self::signal_grid(m.as_ref(), dominance_grid),
        mc_draws,
        seed,
        tolerances: Tolerances::default(),
    };
    let u = utility.inner;
    let report = py
        .detach(move || rank_families(m, u, investment, &fams, &opts))
        .map_err(err)?;
    to_py(py, &report)
}

/// Steepness of `a` relative to `b`; `mode` is `steep` or `strong`.
#[pyfunction]
#[pyo3(signature = (a, b, mode = "steep", bid_points = 101, value_points = 2001))]
fn check_steepness<'py>(
    py: Python<'py>,
    a: &PyFamily,
    b: &PyFamily,
    mode: &str,
    bid_points: usize,
    value_points: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "steep" => SteepnessMode::Steep,
        "strong" => SteepnessMode::Strong,
        other => return Err(PyValueError::new_err(format!("unknown mode {other}"))),
    };
    let (ga, gb) = (a.inner.bid_grid(bid_points), b.inner.bid_grid(bid_points));
    let xg = steepness_value_grid(&a.inner, &b.inner, &ga, &gb, value_points);
    let report = secbid::check_steepness(&a.inner, &b.inner, mode, &xg, &ga, &gb).map_err(err)?;
    to_py(py, &report)
}

/// Example 1 conditional revenue gap, equity minus debt.
#[pyfunction]
#[pyo3(signature = (y1, y2, investment = 0.2))]
fn example1_gap(y1: f64, y2: f64, investment: f64) -> PyResult<f64> {
    secbid::example1_gap(y1, y2, investment).map_err(err)
}

#[pymodule]
fn pysecbid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyUtility>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyBidCurve>()?;
    m.add_class::<PyAuction>()?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(check_steepness, m)?)?;
    m.add_function(wrap_pyfunction!(example1_gap, m)?)?;
    m.add("SecbidError", m.py().get_type::<SecbidError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
