//! Python bindings: `import qsteiner_py`.

use std::path::PathBuf;
use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qsteiner::counting;
use qsteiner::designs::{self, ColumnOp, DesignParams, ParallelismSource, DEFAULT_NODE_BUDGET};
use qsteiner::equations::{self, Rational, UniformFamily};
use qsteiner::io;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Gaussian binomial coefficient `[n choose k]_q`.
#[pyfunction]
fn gaussian(n: u32, k: u32, q: u32) -> num_bigint::BigUint {
    counting::gaussian(n, k, q)
}

#[pyfunction]
fn count_n(s: u32, m: u32, t: u32, n: u32, q: u32) -> PyResult<num_bigint::BigUint> {
    counting::count_n(s, m, t, n, q).map_err(err)
}

#[pyfunction]
fn count_c(s: u32, t: u32, r: u32, k: u32, q: u32) -> PyResult<num_bigint::BigUint> {
    counting::count_c(s, t, r, k, q).map_err(err)
}

#[pyfunction]
fn count_d(s: u32, r: u32, m: u32, q: u32) -> PyResult<num_bigint::BigUint> {
    counting::count_d(s, r, m, q).map_err(err)
}

/// Returns `(passed, quotients)`; a quotient is `None` where the division fails.
#[pyfunction]
fn necessary_conditions(t: u32, k: u32, n: u32, q: u32) -> PyResult<(bool, Vec<Option<num_bigint::BigUint>>)> {
    let report = counting::necessary_conditions(t, k, n, q).map_err(err)?;
    Ok((report.pass, report.entries.iter().map(|e| e.quotient()).collect()))
}

/// Solves the uniform system, or the full system when `full` is set.
///
/// Returns a dict with `status`, `values` (name to `Fraction`), `free` and
/// `nonneg_integer`.
#[pyfunction]
#[pyo3(signature = (q, t, k, n, m, pins = None, full = false))]
fn solve<'py>(
    py: Python<'py>,
    q: u32,
    t: u32,
    k: u32,
    n: u32,
    m: u32,
    pins: Option<Vec<(String, Rational)>>,
    full: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let params = DesignParams::new(q, t, k, n, m);
    let pins = pins.unwrap_or_default();
    let out = if full {
        equations::solve(&equations::build_full(params).map_err(err)?, &pins)
    } else {
        equations::solve(&equations::build_uniform(params).map_err(err)?, &pins)
    }
    .map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("status", out.status.to_string())?;
    let values: Vec<(String, Rational)> = out.variables.iter().cloned().zip(out.values.iter().cloned()).collect();
    dict.set_item("values", values)?;
    let free: Vec<String> = out.free.iter().map(|&i| out.variables[i].clone()).collect();
    dict.set_item("free", free)?;
    dict.set_item("nonneg_integer", out.nonneg_integer)?;
    Ok(dict)
}

/// Outcome of verifying a design.
#[pyclass(frozen, get_all)]
struct Report {
    passed: bool,
    equations_checked: u64,
    violations: usize,
    /// `(rows, covered, expected)` for the first failed equation.
    first_violation: Option<(String, String, String)>,
    summary: String,
}

impl From<designs::VerificationReport> for Report {
    fn from(r: designs::VerificationReport) -> Self {
        Report {
            passed: r.passed,
            equations_checked: r.equations_checked,
            violations: r.violations.len(),
            first_violation: r
                .first_violation()
                .map(|v| (v.subspace.to_string(), v.actual.to_string(), v.expected.to_string())),
            summary: r.to_string(),
        }
    }
}

#[pymethods]
impl Report {
    fn __repr__(&self) -> String {
        self.summary.clone()
    }
}

/// A design: a multiset of subspaces of `F_q^m`.
#[pyclass(frozen)]
struct Design(designs::DesignMultiset);

#[pymethods]
impl Design {
    /// Parses the `qsteiner-design v1` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        io::parse_design(text).map(Design).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::read_design_file(path).map(Design).map_err(err)
    }

    fn to_text(&self) -> String {
        io::write_design(&self.0)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_design_file(path, &self.0).map_err(err)
    }

    /// `(q, t, k, n, m)`.
    #[getter]
    fn params(&self) -> (u32, u32, u32, u32, u32) {
        let DesignParams { q, t, k, n, m } = self.0.params();
        (q, t, k, n, m)
    }

    /// `(rows, multiplicity)` per distinct block, rows as in the file format.
    fn blocks(&self) -> Vec<(String, u64)> {
        self.0.blocks().iter().map(|(b, &mult)| (b.to_string(), mult)).collect()
    }

    fn total_multiplicity(&self) -> num_bigint::BigUint {
        self.0.total_multiplicity()
    }

    /// Multiplicity totals keyed by block dimension.
    fn dimension_totals(&self) -> Vec<(usize, num_bigint::BigUint)> {
        self.0.dimension_totals().into_iter().collect()
    }

    #[pyo3(signature = (jobs = None))]
    fn verify(&self, py: Python<'_>, jobs: Option<usize>) -> PyResult<Report> {
        let design = &self.0;
        py.detach(|| designs::verify_with_jobs(design, jobs)).map(Report::from).map_err(err)
    }

    /// Deletes the last coordinate of every block.
    fn puncture(&self) -> PyResult<Design> {
        designs::puncture_design(&self.0).map(Design).map_err(err)
    }

    /// Applies column operations `(j, coeffs)`: column `j` becomes `sum coeffs[i] * v_i`.
    fn transform(&self, ops: Vec<(usize, Vec<u8>)>) -> PyResult<Design> {
        let ops: Vec<ColumnOp> = ops.into_iter().map(|(j, c)| ColumnOp::new(j, c)).collect();
        designs::apply_transform(&self.0, &ops).map(Design).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.distinct()
    }

    fn __eq__(&self, other: &Design) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Design({}, {} distinct blocks)", self.0.params(), self.0.distinct())
    }
}

/// A partition of the lines of `F_q^n` into spreads.
#[pyclass(frozen)]
struct Parallelism(designs::Parallelism);

#[pymethods]
impl Parallelism {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        io::parse_parallelism(text).map(Parallelism).map_err(err)
    }

    fn to_text(&self) -> String {
        io::write_parallelism(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.spreads().len()
    }

    /// The spreads, each as a list of lines in the file row syntax.
    fn spreads(&self) -> Vec<Vec<String>> {
        self.0
            .spreads()
            .iter()
            .map(|s| s.lines().iter().map(ToString::to_string).collect())
            .collect()
    }
}

fn source(spec: Option<&str>, budget: u64) -> ParallelismSource {
    match spec {
        None | Some("auto") => ParallelismSource::Auto,
        Some("search") => ParallelismSource::Search { node_budget: budget },
        Some(path) => ParallelismSource::File(PathBuf::from(path)),
    }
}

/// `"auto"`, `"search"` or a parallelism file path.
#[pyfunction]
#[pyo3(signature = (q, n, source = None, budget = DEFAULT_NODE_BUDGET))]
fn parallelism(py: Python<'_>, q: u32, n: u32, source: Option<&str>, budget: u64) -> PyResult<Parallelism> {
    let src = self::source(source, budget);
    py.detach(|| designs::build_parallelism(q, n, &src)).map(Parallelism).map_err(err)
}

/// The Desarguesian line spread of `F_q^n` as an `S_q(1,2,n;n)` design.
#[pyfunction]
fn spread(q: u32, n: u32) -> PyResult<Design> {
    let s = designs::build_spread(q, n).map_err(err)?;
    s.as_steiner().and_then(|s| s.as_design()).map(Design).map_err(err)
}

/// Builds and verifies a named construction: `fano-m4`, `fano-m5`, `s3485`,
/// `recursive`, or a uniform family (`fano`, `3-4-8-4`, `4-5-11-6`,
/// `5-6-12-6`, `3-4-2k-k`).
#[pyfunction]
#[pyo3(signature = (name, q, k = None, parallelism = None, base = None))]
fn build(
    py: Python<'_>,
    name: &str,
    q: u32,
    k: Option<u32>,
    parallelism: Option<&str>,
    base: Option<&Design>,
) -> PyResult<Design> {
    let src = source(parallelism, DEFAULT_NODE_BUDGET);
    py.detach(|| -> PyResult<Design> {
        let design = match name {
            "fano-m4" => designs::construct_fano_m4(q),
            "fano-m5" => designs::build_parallelism(q, 4, &src).and_then(|p| designs::construct_fano_m5(q, &p)),
            "s3485" => designs::construct_s3485(q),
            "recursive" => {
                let k = k.ok_or_else(|| err("recursive needs k"))?;
                let base = match base {
                    Some(b) => b.0.clone(),
                    None => designs::trivial_base(q).map_err(err)?,
                };
                designs::build_parallelism(q, k + 1, &src).and_then(|p| designs::construct_recursive(q, k, &p, &base))
            }
            other => {
                let family = UniformFamily::from_str(other).map_err(err)?;
                let sol = equations::uniform_family_solution(family, q, k.unwrap_or(0)).map_err(err)?;
                designs::construct_uniform_design(sol.params, &sol.as_rationals())
            }
        };
        design.map(Design).map_err(err)
    })
}

#[pymodule]
fn qsteiner_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(count_n, m)?)?;
    m.add_function(wrap_pyfunction!(count_c, m)?)?;
    m.add_function(wrap_pyfunction!(count_d, m)?)?;
    m.add_function(wrap_pyfunction!(necessary_conditions, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(parallelism, m)?)?;
    m.add_function(wrap_pyfunction!(spread, m)?)?;
    m.add_function(wrap_pyfunction!(build, m)?)?;
    m.add_class::<Design>()?;
    m.add_class::<Parallelism>()?;
    m.add_class::<Report>()?;
    Ok(())
}
