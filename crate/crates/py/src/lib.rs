//! Python bindings. Structured results (estimates, reports, censuses) are
//! returned as plain dicts built from their JSON form, so field names match
//! the CLI output exactly.

use std::path::PathBuf;

use affine_perc::analytic;
use affine_perc::estimator::{self, CrossingSetup};
use affine_perc::render::{render_svg, ImageFormat, RenderSpec};
use affine_perc::{io, Adjacency, Cell, Direction, Generator, GridParams, Layout, RectAddr};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_pyerr(e: affine_perc::Error) -> PyErr {
    match e {
        affine_perc::Error::Io(io) => PyOSError::new_err(io.to_string()),
        e if e.is_validation() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for affine_perc::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_pyerr)
    }
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// `(col, row)` as seen from Python.
type CellPair = (u64, u64);

fn grid(n: u32, m: u32) -> PyResult<GridParams> {
    GridParams::new(n, m).py()
}

fn adjacency(s: &str) -> PyResult<Adjacency> {
    match s.to_ascii_lowercase().as_str() {
        "edge" => Ok(Adjacency::Edge),
        "corner" => Ok(Adjacency::Corner),
        _ => Err(PyValueError::new_err(format!(
            "adjacency must be 'edge' or 'corner', got '{s}'"
        ))),
    }
}

fn direction(s: &str) -> PyResult<Direction> {
    match s.to_ascii_lowercase().as_str() {
        "h" => Ok(Direction::H),
        "v" => Ok(Direction::V),
        _ => Err(PyValueError::new_err(format!(
            "direction must be 'h' or 'v', got '{s}'"
        ))),
    }
}

fn layout(s: &str) -> PyResult<Layout> {
    match s.to_ascii_lowercase().as_str() {
        "unit" => Ok(Layout::Unit),
        "two-tall" => Ok(Layout::TwoTall),
        "two-wide" => Ok(Layout::TwoWide),
        _ => Err(PyValueError::new_err(format!(
            "domain must be 'unit', 'two-tall' or 'two-wide', got '{s}'"
        ))),
    }
}

/// One sampled carpet: the selected cells of every level `1..=depth`.
#[pyclass(name = "Realization", module = "affine_perc", frozen)]
struct PyRealization {
    inner: affine_perc::Realization,
}

#[pymethods]
impl PyRealization {
    #[staticmethod]
    #[pyo3(signature = (n, m, p, depth, seed, copy = 0))]
    fn generate(
        py: Python<'_>,
        n: u32,
        m: u32,
        p: f64,
        depth: u32,
        seed: u64,
        copy: u32,
    ) -> PyResult<Self> {
        let gen = Generator::new(grid(n, m)?);
        let inner = py.detach(|| gen.generate(p, depth, seed, copy)).py()?;
        Ok(PyRealization { inner })
    }

    /// Like `generate`, but every level below `k0` is fully selected.
    #[staticmethod]
    #[pyo3(signature = (n, m, p, depth, seed, k0, copy = 0))]
    #[allow(clippy::too_many_arguments)]
    fn force_prefix(
        py: Python<'_>,
        n: u32,
        m: u32,
        p: f64,
        depth: u32,
        seed: u64,
        k0: u32,
        copy: u32,
    ) -> PyResult<Self> {
        let gen = Generator::new(grid(n, m)?);
        let inner = py
            .detach(|| gen.force_prefix(p, depth, seed, copy, k0))
            .py()?;
        Ok(PyRealization { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRealization {
            inner: io::realization_from_json(text).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyRealization {
            inner: io::load_realization(&path).py()?,
        })
    }

    fn to_json(&self) -> String {
        io::realization_to_json(&self.inner)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_realization(&path, &self.inner).py()
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.params().n()
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.params().m()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.inner.depth()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn copy(&self) -> u32 {
        self.inner.copy()
    }

    /// Selected `(col, row)` cells of level `k`, sorted.
    fn level(&self, k: u32) -> PyResult<Vec<(u64, u64)>> {
        if !(1..=self.inner.depth()).contains(&k) {
            return Err(PyValueError::new_err(format!(
                "level {k} outside 1..={}",
                self.inner.depth()
            )));
        }
        Ok(self.inner.level(k).iter().map(|c| (c.col, c.row)).collect())
    }

    /// Selected-cell counts per level, starting with 1 for level 0.
    fn counts(&self) -> Vec<u64> {
        self.inner.branching_count().counts
    }

    fn survives(&self) -> bool {
        self.inner.survives()
    }

    #[pyo3(signature = (k, direction = "h", adjacency = "corner"))]
    fn crossing(&self, k: u32, direction: &str, adjacency: &str) -> PyResult<bool> {
        affine_perc::crossing(
            &self.inner,
            k,
            self::direction(direction)?,
            self::adjacency(adjacency)?,
        )
        .py()
    }

    #[pyo3(signature = (k, adjacency = "corner"))]
    fn census(&self, py: Python<'_>, k: u32, adjacency: &str) -> PyResult<Py<PyAny>> {
        let c = affine_perc::census(&self.inner, k, self::adjacency(adjacency)?).py()?;
        to_dict(py, &c)
    }

    #[pyo3(signature = (level, width_px = 800, gridlines = false))]
    fn render_svg(&self, level: u32, width_px: u32, gridlines: bool) -> PyResult<String> {
        let spec = RenderSpec {
            width_px,
            draw_gridlines: gridlines,
            ..RenderSpec::new(level, ImageFormat::Svg)
        };
        render_svg(&self.inner, &spec).py()
    }

    fn __repr__(&self) -> String {
        let r = &self.inner;
        format!(
            "Realization(n={}, m={}, p={}, depth={}, seed={}, copy={})",
            r.params().n(),
            r.params().m(),
            r.p(),
            r.depth(),
            r.seed(),
            r.copy()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (seed, level, col, row, copy = 0))]
fn rect_uniform(seed: u64, level: u32, col: u64, row: u64, copy: u32) -> f64 {
    affine_perc::rng::rect_uniform(seed, RectAddr::new(level, col, row, copy))
}

/// Component label (smallest member cell) of each distinct input cell, as
/// `(cell, label)` pairs sorted by cell.
#[pyfunction]
#[pyo3(signature = (cells, width, height, adjacency = "corner"))]
fn label_components(
    cells: Vec<(u64, u64)>,
    width: u64,
    height: u64,
    adjacency: &str,
) -> PyResult<Vec<(CellPair, CellPair)>> {
    let cells: Vec<Cell> = cells.into_iter().map(|(c, r)| Cell::new(c, r)).collect();
    let lab =
        affine_perc::label_components(&cells, (width, height), self::adjacency(adjacency)?).py()?;
    Ok(lab
        .iter()
        .map(|(c, l)| ((c.col, c.row), (l.col, l.row)))
        .collect())
}

#[pyfunction]
fn extinction_prob(py: Python<'_>, n: u32, m: u32, p: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &analytic::extinction_prob(grid(n, m)?, p).py()?)
}

#[pyfunction]
fn survival_at_depth(n: u32, m: u32, p: f64, depth: u32) -> PyResult<f64> {
    analytic::survival_at_depth(grid(n, m)?, p, depth).py()
}

#[pyfunction]
fn dimensions(py: Python<'_>, n: u32, m: u32, p: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &analytic::dimensions(grid(n, m)?, p).py()?)
}

#[pyfunction]
fn jfull_sequence(n: u32, m: u32, p: f64, length: u32) -> PyResult<Vec<f64>> {
    analytic::jfull_sequence(grid(n, m)?, p, length).py()
}

#[pyfunction]
fn jfull_limit(py: Python<'_>, n: u32, m: u32, p: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &analytic::jfull_limit(grid(n, m)?, p).py()?)
}

#[pyfunction]
#[pyo3(signature = (n, m, tol = 1e-8))]
fn crossing_upper_bound(n: u32, m: u32, tol: f64) -> PyResult<f64> {
    analytic::crossing_upper_bound(grid(n, m)?, tol).py()
}

#[pyfunction]
fn full_row_prob(n: u32, m: u32, p: f64, q: u32, j: u32) -> PyResult<f64> {
    analytic::full_row_prob(grid(n, m)?, p, q, j).py()
}

#[pyfunction]
fn tau_lower_bound(n: u32, m: u32) -> PyResult<(f64, f64)> {
    Ok(analytic::tau_lower_bound(grid(n, m)?))
}

#[pyfunction]
#[pyo3(signature = (cols, rows, p, direction = "h"))]
fn exact_level1_crossing(cols: u32, rows: u32, p: f64, direction: &str) -> PyResult<f64> {
    analytic::exact_level1_crossing(cols, rows, p, self::direction(direction)?).py()
}

#[pyfunction]
#[pyo3(signature = (n, m, p, tol = 1e-8))]
fn analytic_report(py: Python<'_>, n: u32, m: u32, p: f64, tol: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &analytic::analytic_report(grid(n, m)?, p, tol).py()?)
}

fn setup(
    n: u32,
    m: u32,
    level: u32,
    dir: &str,
    domain: &str,
    adj: &str,
) -> PyResult<CrossingSetup> {
    Ok(CrossingSetup::new(grid(n, m)?, level, direction(dir)?)
        .with_domain(layout(domain)?)
        .with_adjacency(adjacency(adj)?))
}

#[pyfunction]
#[pyo3(signature = (n, m, p, level, trials, seed, direction = "h", domain = "unit", adjacency = "corner"))]
#[allow(clippy::too_many_arguments)]
fn estimate_crossing(
    py: Python<'_>,
    n: u32,
    m: u32,
    p: f64,
    level: u32,
    trials: u64,
    seed: u64,
    direction: &str,
    domain: &str,
    adjacency: &str,
) -> PyResult<Py<PyAny>> {
    let s = setup(n, m, level, direction, domain, adjacency)?;
    let est = py
        .detach(|| estimator::estimate_crossing(&s, p, trials, seed))
        .py()?;
    to_dict(py, &est)
}

#[pyfunction]
#[pyo3(signature = (n, m, p_grid, level, trials, seed, coupled = true, direction = "h", domain = "unit", adjacency = "corner"))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    n: u32,
    m: u32,
    p_grid: Vec<f64>,
    level: u32,
    trials: u64,
    seed: u64,
    coupled: bool,
    direction: &str,
    domain: &str,
    adjacency: &str,
) -> PyResult<Py<PyAny>> {
    let s = setup(n, m, level, direction, domain, adjacency)?;
    let result = py
        .detach(|| estimator::sweep(&s, &p_grid, trials, coupled, seed))
        .py()?;
    to_dict(py, &result)
}

#[pyfunction]
#[pyo3(signature = (n, m, level, trials, seed, threshold = 0.5, tol = 0.01, direction = "h", domain = "unit", adjacency = "corner"))]
#[allow(clippy::too_many_arguments)]
fn find_critical(
    py: Python<'_>,
    n: u32,
    m: u32,
    level: u32,
    trials: u64,
    seed: u64,
    threshold: f64,
    tol: f64,
    direction: &str,
    domain: &str,
    adjacency: &str,
) -> PyResult<Py<PyAny>> {
    let s = setup(n, m, level, direction, domain, adjacency)?;
    let bracket = py
        .detach(|| estimator::find_critical(&s, trials, threshold, tol, seed))
        .py()?;
    to_dict(py, &bracket)
}

#[pyfunction]
#[pyo3(signature = (n, m, p, level, trials, seed, adjacency = "corner"))]
#[allow(clippy::too_many_arguments)]
fn compare_hv(
    py: Python<'_>,
    n: u32,
    m: u32,
    p: f64,
    level: u32,
    trials: u64,
    seed: u64,
    adjacency: &str,
) -> PyResult<Py<PyAny>> {
    let (params, adj) = (grid(n, m)?, self::adjacency(adjacency)?);
    let c = py
        .detach(|| estimator::compare_hv(params, p, level, trials, adj, seed))
        .py()?;
    to_dict(py, &c)
}

#[pyfunction]
fn estimate_survival(
    py: Python<'_>,
    n: u32,
    m: u32,
    p: f64,
    level: u32,
    trials: u64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let params = grid(n, m)?;
    let est = py
        .detach(|| estimator::estimate_survival(params, p, level, trials, seed))
        .py()?;
    to_dict(py, &est)
}

#[pymodule(name = "affine_perc")]
fn affine_perc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRealization>()?;
    m.add_function(wrap_pyfunction!(rect_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(label_components, m)?)?;
    m.add_function(wrap_pyfunction!(extinction_prob, m)?)?;
    m.add_function(wrap_pyfunction!(survival_at_depth, m)?)?;
    m.add_function(wrap_pyfunction!(dimensions, m)?)?;
    m.add_function(wrap_pyfunction!(jfull_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(jfull_limit, m)?)?;
    m.add_function(wrap_pyfunction!(crossing_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(full_row_prob, m)?)?;
    m.add_function(wrap_pyfunction!(tau_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(exact_level1_crossing, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_report, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_crossing, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(find_critical, m)?)?;
    m.add_function(wrap_pyfunction!(compare_hv, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_survival, m)?)?;
    Ok(())
}
