//! Python bindings. Rationals come back as `fractions.Fraction`, integers as
//! Python ints.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use specialcycles::density::{self, DensityError};
use specialcycles::exactpoly::{rat_to_report, Rational};
use specialcycles::intersect::{self, CaseFormula, DivisorPattern, IntersectError, ValuationTriple};
use specialcycles::localgeom::{self, CycleDescriptor, GeomError, Placement, DEFAULT_NODE_BUDGET};
use specialcycles::oracle::{self, OracleError};
use specialcycles::padic::{HermMatrix, PadicError};
use specialcycles::{ExponentVector, RingParams};

create_exception!(specialcycles, ResourceError, PyRuntimeError);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn density_err(e: DensityError) -> PyErr {
    value_err(e)
}

fn intersect_err(e: IntersectError) -> PyErr {
    value_err(e)
}

fn padic_err(e: PadicError) -> PyErr {
    value_err(e)
}

fn oracle_err(e: OracleError) -> PyErr {
    match e {
        OracleError::TooLarge { .. } => ResourceError::new_err(e.to_string()),
        e => value_err(e),
    }
}

fn geom_err(e: GeomError) -> PyErr {
    match e {
        GeomError::BudgetExceeded { .. } | GeomError::WindowTooSmall { .. } | GeomError::UnboundedShell => {
            ResourceError::new_err(e.to_string())
        }
        e => value_err(e),
    }
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((rat_to_report(r),))
}

fn triple(t: [u32; 3]) -> ValuationTriple {
    ValuationTriple::sorted(t)
}

/// Coefficients of the density polynomial as {exponent: Fraction}.
#[pyfunction]
#[pyo3(signature = (p, exponents, shifted = false))]
fn density_poly<'py>(
    py: Python<'py>,
    p: u64,
    exponents: Vec<u32>,
    shifted: bool,
) -> PyResult<BTreeMap<i64, Bound<'py, PyAny>>> {
    let f = density::f_poly(p, &ExponentVector::new(exponents)).map_err(density_err)?;
    let poly = if shifted {
        density::shifted_poly(&f).map_err(density_err)?.poly
    } else {
        f.poly
    };
    poly.terms().map(|(e, c)| Ok((e, fraction(py, c)?))).collect()
}

/// F evaluated at X = (-p)^(-s).
#[pyfunction]
fn alpha<'py>(py: Python<'py>, p: u64, s: u32, exponents: Vec<u32>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &density::alpha(p, s, &ExponentVector::new(exponents)).map_err(density_err)?)
}

/// Derivative value at X = 1 for rank 3 with odd exponent sum.
#[pyfunction]
fn alpha_prime<'py>(py: Python<'py>, p: u64, exponents: Vec<u32>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &density::alpha_prime(p, &ExponentVector::new(exponents)).map_err(density_err)?)
}

/// Closed-form intersection number of three cycles.
#[pyfunction]
fn intersection_number(p: u64, valuations: [u32; 3]) -> PyResult<BigInt> {
    intersect::intersection_number(p, &triple(valuations)).map_err(intersect_err)
}

/// Difference-divisor triple, by inclusion-exclusion or from a named case formula.
#[pyfunction]
#[pyo3(signature = (p, valuations, case = None))]
fn divisor_triple(p: u64, valuations: [u32; 3], case: Option<&str>) -> PyResult<BigInt> {
    let t = triple(valuations);
    match case {
        None => {
            let a = t.as_array().map(i64::from);
            intersect::dtriple_raw(p, a, DivisorPattern::FULL).map_err(intersect_err)
        }
        Some(name) => {
            let c = CaseFormula::parse(name).ok_or_else(|| value_err(format!("unknown case {name:?}")))?;
            intersect::dtriple_closed(p, &t, c).map_err(intersect_err)
        }
    }
}

/// Names of the case formulas whose hypotheses hold for the triple.
#[pyfunction]
fn applicable_cases(valuations: [u32; 3]) -> Vec<String> {
    intersect::applicable_cases(&triple(valuations))
        .into_iter()
        .map(|c| c.name())
        .collect()
}

/// Both sides of the density/intersection identity.
#[pyfunction]
fn kr_sides<'py>(
    py: Python<'py>,
    p: u64,
    valuations: [u32; 3],
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let (l, r) = intersect::kr_sides(p, &triple(valuations)).map_err(intersect_err)?;
    Ok((fraction(py, &l)?, fraction(py, &r)?))
}

/// Brute-force count for S = diag(p^e), T = diag(p^f) over O/p^k.
/// Returns (raw count, normalized Fraction).
#[pyfunction]
fn count_representations<'py>(
    py: Python<'py>,
    p: u64,
    k: u32,
    s_diag: Vec<u32>,
    t_diag: Vec<u32>,
) -> PyResult<(BigInt, Bound<'py, PyAny>)> {
    let params = RingParams::new(p, k).map_err(padic_err)?;
    let s = HermMatrix::diag_powers(params, &s_diag);
    let t = HermMatrix::diag_powers(params, &t_diag);
    let c = py
        .detach(|| oracle::count_representations(&s, &t))
        .map_err(oracle_err)?;
    Ok((BigInt::from(c.raw_count), fraction(py, &c.normalized)?))
}

/// Finite window of the Bruhat-Tits tree.
#[pyclass(frozen, module = "specialcycles")]
struct TreeWindow {
    inner: localgeom::TreeWindow,
}

#[pymethods]
impl TreeWindow {
    #[new]
    #[pyo3(signature = (p, radius, budget = None))]
    fn new(py: Python<'_>, p: u64, radius: u32, budget: Option<u64>) -> PyResult<Self> {
        let budget = budget.unwrap_or(DEFAULT_NODE_BUDGET);
        let inner = py
            .detach(|| localgeom::TreeWindow::build(p, radius, budget))
            .map_err(geom_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn p(&self) -> u64 {
        self.inner.p()
    }

    #[getter]
    fn radius(&self) -> u32 {
        self.inner.radius()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn curve_count(&self) -> usize {
        self.inner.curve_count()
    }

    fn point_count(&self) -> usize {
        self.inner.point_count()
    }

    /// Degree-zero check for an odd cycle on the root curve; returns
    /// (curves checked, failure messages).
    fn degree_zero(&self, valuation: u32) -> PyResult<(usize, Vec<String>)> {
        if valuation % 2 == 0 {
            return Err(value_err("degree-zero check needs an odd valuation"));
        }
        let n = self.inner.p() as u32 + 1;
        let c = CycleDescriptor::odd(valuation, (0..n).collect());
        let r = localgeom::degree_zero_report(&self.inner, &c).map_err(geom_err)?;
        Ok((r.checked, r.failures))
    }

    /// Reduced locus as {node id: b-value}.
    fn reduced_locus(&self, valuation: u32) -> PyResult<BTreeMap<String, u32>> {
        let c = if valuation % 2 == 1 {
            CycleDescriptor::odd(valuation, (0..self.inner.p() as u32 + 1).collect())
        } else {
            CycleDescriptor::even(valuation, self.inner.root_point(0))
        };
        let pl = Placement::new(&self.inner, vec![c]).map_err(geom_err)?;
        let locus = localgeom::reduced_locus(&self.inner, &pl.cycles[0]).map_err(geom_err)?;
        Ok(locus.into_iter().map(|(i, b)| (self.inner.node_id(i), b)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "TreeWindow(p={}, radius={}, nodes={})",
            self.inner.p(),
            self.inner.radius(),
            self.inner.len()
        )
    }
}

/// Difference-divisor triple computed on the tree.
#[pyfunction]
#[pyo3(signature = (p, valuations, budget = None))]
fn divisor_triple_on_tree(py: Python<'_>, p: u64, valuations: [u32; 3], budget: Option<u64>) -> PyResult<BigInt> {
    let budget = budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let d = py
        .detach(|| localgeom::dtriple_via_divisors(p, triple(valuations).as_array(), budget))
        .map_err(geom_err)?;
    Ok(d.value().clone())
}

#[pymodule]
#[pyo3(name = "specialcycles")]
fn specialcycles_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ResourceError", m.py().get_type::<ResourceError>())?;
    m.add_class::<TreeWindow>()?;
    m.add_function(wrap_pyfunction!(density_poly, m)?)?;
    m.add_function(wrap_pyfunction!(alpha, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_prime, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_number, m)?)?;
    m.add_function(wrap_pyfunction!(divisor_triple, m)?)?;
    m.add_function(wrap_pyfunction!(applicable_cases, m)?)?;
    m.add_function(wrap_pyfunction!(kr_sides, m)?)?;
    m.add_function(wrap_pyfunction!(count_representations, m)?)?;
    m.add_function(wrap_pyfunction!(divisor_triple_on_tree, m)?)?;
    Ok(())
}
