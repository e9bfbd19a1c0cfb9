//! Python bindings: sequences, the construction, and the measurement helpers.
//! Rationals cross the boundary as `"p/q"` strings, which `fractions.Fraction` accepts.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;

use toeplitz_core::complexity::entropy_estimate;
use toeplitz_core::construct::{build, verify_stage_properties, ConstructionTrace, ScheduleOverride};
use toeplitz_core::metrics;
use toeplitz_core::mobius::{correlate, mobius_sieve, SequenceObservable};
use toeplitz_core::rational::{format_rational, parse_rational};
use toeplitz_core::report::canonical_json;
use toeplitz_core::seq::parse_source_spec;
use toeplitz_core::{Alphabet, BiSequence, Symbol};

/// `(stage, index, offset, source)`.
type Step = (usize, i64, usize, i64);

fn value_err(e: toeplitz_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn alphabet(k: u16) -> PyResult<Alphabet> {
    Alphabet::new(k).map_err(value_err)
}

/// A bi-infinite sequence over `1..=k`, evaluated lazily.
#[pyclass(name = "Sequence", module = "toeplitz_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySequence {
    inner: BiSequence,
}

#[pymethods]
impl PySequence {
    #[staticmethod]
    fn periodic(k: u16, word: Vec<Symbol>) -> PyResult<Self> {
        Ok(PySequence { inner: BiSequence::periodic(alphabet(k)?, &word).map_err(value_err)? })
    }

    #[staticmethod]
    fn constant(k: u16, symbol: Symbol) -> PyResult<Self> {
        Ok(PySequence { inner: BiSequence::constant(alphabet(k)?, symbol).map_err(value_err)? })
    }

    #[staticmethod]
    fn bernoulli(k: u16, seed: u64) -> PyResult<Self> {
        Ok(PySequence { inner: BiSequence::bernoulli(alphabet(k)?, seed) })
    }

    /// Same syntax as the CLI `--source` flag.
    #[staticmethod]
    #[pyo3(signature = (spec, k = 2))]
    fn from_spec(spec: &str, k: u16) -> PyResult<Self> {
        Ok(PySequence { inner: parse_source_spec(spec, alphabet(k)?).map_err(value_err)? })
    }

    #[getter]
    fn k(&self) -> u16 {
        self.inner.alphabet().k()
    }

    #[getter]
    fn description(&self) -> String {
        self.inner.description().to_string()
    }

    fn __getitem__(&self, n: i64) -> PyResult<Symbol> {
        self.inner.eval_at(n).map_err(|e| PyIndexError::new_err(e.to_string()))
    }

    /// Symbols at `a..=b`.
    fn window(&self, a: i64, b: i64) -> PyResult<Vec<Symbol>> {
        self.inner.values(a, b).map_err(value_err)
    }

    /// The sequence `n -> x[n + t]`.
    fn shift(&self, t: i64) -> Self {
        PySequence { inner: self.inner.shift(t) }
    }

    fn with_symbol(&self, n: i64, symbol: Symbol) -> PyResult<Self> {
        Ok(PySequence { inner: self.inner.with_symbol(n, symbol).map_err(value_err)? })
    }

    fn __repr__(&self) -> String {
        format!("Sequence(k={}, {})", self.inner.alphabet().k(), self.inner.description())
    }
}

/// The staged construction of `b` from `a`.
#[pyclass(name = "Construction", module = "toeplitz_py", frozen)]
pub struct PyConstruction {
    b: BiSequence,
    trace: ConstructionTrace,
}

#[pymethods]
impl PyConstruction {
    #[new]
    #[pyo3(signature = (a, epsilon, stages = 2, override_l = None, provenance = None))]
    fn new(
        a: &PySequence,
        epsilon: &str,
        stages: usize,
        override_l: Option<BTreeMap<usize, i64>>,
        provenance: Option<(i64, i64)>,
    ) -> PyResult<Self> {
        let eps = parse_rational(epsilon).map_err(value_err)?;
        let overrides: Vec<ScheduleOverride> =
            override_l.unwrap_or_default().into_iter().map(|(m, l)| ScheduleOverride::l(m, l)).collect();
        let (b, trace) = build(&a.inner, &eps, stages, &overrides, provenance).map_err(value_err)?;
        Ok(PyConstruction { b, trace })
    }

    #[getter]
    fn a(&self) -> PySequence {
        PySequence { inner: self.trace.input.clone() }
    }

    #[getter]
    fn b(&self) -> PySequence {
        PySequence { inner: self.b.clone() }
    }

    /// `a^(m)`; `stage(0)` is the input.
    fn stage(&self, m: usize) -> PyResult<PySequence> {
        if m > self.trace.max_stage() {
            return Err(PyIndexError::new_err(format!("stage {m} > {}", self.trace.max_stage())));
        }
        Ok(PySequence { inner: self.trace.stage_sequence(m).clone() })
    }

    /// `(M, eps_M, l_M)` per stage.
    #[getter]
    fn schedule(&self) -> Vec<(usize, String, i64)> {
        self.trace.stages.iter().map(|p| (p.stage, format_rational(&p.epsilon), p.l)).collect()
    }

    fn trace_json(&self) -> String {
        canonical_json(&self.trace.to_json())
    }

    /// `(name, status)` for every stage check on `[-n, n]`.
    fn verify(&self, n: i64) -> PyResult<Vec<(String, String)>> {
        let report = verify_stage_properties(&self.trace, &self.b, n).map_err(value_err)?;
        Ok(report
            .checks
            .iter()
            .map(|c| (c.name.clone(), serde_json::to_value(c.status).unwrap().as_str().unwrap().to_string()))
            .collect())
    }

    /// Difference density between `a` and `b` on `[-n, n]`.
    fn density(&self, n: i64) -> PyResult<String> {
        let d = metrics::difference_density(&self.trace.input, &self.b, n).map_err(value_err)?;
        Ok(format_rational(&d))
    }

    /// Fraction of the stabilized region that is periodic in `b`.
    fn coverage(&self, n: i64) -> PyResult<String> {
        let c = metrics::toeplitz_coverage(&self.b, &self.trace, n).map_err(value_err)?;
        Ok(format_rational(&c.fraction))
    }

    /// `(steps, origin)` with steps as `(stage, index, offset, source)`, newest first.
    fn provenance(&self, n: i64) -> PyResult<(Vec<Step>, i64)> {
        let chain = self.trace.provenance_at(n).map_err(value_err)?;
        let steps = chain.steps.iter().map(|s| (s.stage, s.index, s.offset, s.source)).collect();
        Ok((steps, chain.origin))
    }
}

#[pyfunction]
fn difference_density(x: &PySequence, y: &PySequence, n: i64) -> PyResult<String> {
    metrics::difference_density(&x.inner, &y.inner, n).map(|d| format_rational(&d)).map_err(value_err)
}

/// `(n, #B_n, ln(#B_n)/n)` for `n = 1..=n_max`.
#[pyfunction]
fn entropy_profile(seq: &PySequence, n_max: usize, window: i64) -> PyResult<Vec<(usize, usize, f64)>> {
    let p = entropy_estimate(&seq.inner, n_max, window).map_err(value_err)?;
    Ok(p.points.iter().map(|q| (q.n, q.count, q.log_count_over_n)).collect())
}

/// `[mu(1), ..., mu(n)]`.
#[pyfunction]
fn mobius(n: usize) -> PyResult<Vec<i8>> {
    Ok(mobius_sieve(n).map_err(value_err)?.values().to_vec())
}

#[pyfunction]
fn mertens(n: usize) -> PyResult<i64> {
    mobius_sieve(n).and_then(|t| t.mertens(n)).map_err(value_err)
}

/// `(N', S(N'))` checkpoints of `(1/N') sum mu(i) xi(i)`, `xi` the (recoded) sequence.
#[pyfunction]
#[pyo3(signature = (seq, n, recode = None))]
fn correlate_mobius(seq: &PySequence, n: u64, recode: Option<Vec<f64>>) -> PyResult<Vec<(u64, f64)>> {
    let table = mobius_sieve(n as usize).map_err(value_err)?;
    let xi = match recode {
        Some(r) => SequenceObservable::recoded(seq.inner.clone(), r).map_err(value_err)?,
        None => SequenceObservable::identity(seq.inner.clone()),
    };
    Ok(correlate(&table, &xi, n).map_err(value_err)?.checkpoints)
}

#[pymodule]
fn toeplitz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequence>()?;
    m.add_class::<PyConstruction>()?;
    m.add_function(wrap_pyfunction!(difference_density, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_profile, m)?)?;
    m.add_function(wrap_pyfunction!(mobius, m)?)?;
    m.add_function(wrap_pyfunction!(mertens, m)?)?;
    m.add_function(wrap_pyfunction!(correlate_mobius, m)?)?;
    Ok(())
}
