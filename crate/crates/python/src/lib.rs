//! Python bindings. Graphs are a native class; structured results cross the
//! boundary as JSON strings, which `json.loads` turns into plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rigidity_core::harness::{
    cross_check_reduction, sphere_colour_indifference, verify_theorem, CampaignOptions, TheoremId,
};
use rigidity_core::numeric::{generic_placement, DEFAULT_TOL, DEFAULT_TRIALS};
use rigidity_core::{
    assemble, class_check, decide_rigidity, is_sparse, numerical_rank, random_construct, reduce_fully,
    BiColouredGraph, Colour, ColouredEdge, ConstructionTrace, ContextSpec, Error, Placement, SparsityClass,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::SamplingFailed(_) | Error::NonFinite => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// A bi-coloured multigraph on vertices `0..n`.
#[pyclass(name = "Graph", module = "rigidity_lab", eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyGraph {
    inner: BiColouredGraph,
}

#[pymethods]
impl PyGraph {
    /// `edges` is a list of `(u, v, colour)` with colour `"b"` or `"r"`.
    #[new]
    #[pyo3(signature = (n, edges = Vec::new()))]
    fn new(n: usize, edges: Vec<(usize, usize, String)>) -> PyResult<Self> {
        let edges = edges
            .into_iter()
            .map(|(u, v, c)| Ok(ColouredEdge::new(u, v, parse::<Colour>(&c)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = BiColouredGraph::from_edges(n, edges).map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: BiColouredGraph::parse(text).map_err(py_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn edges(&self) -> Vec<(usize, usize, String)> {
        self.inner.edges().map(|e| (e.u, e.v, e.colour.symbol().to_string())).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.edge_count()
    }

    fn __repr__(&self) -> String {
        format!("Graph({})", self.inner)
    }

    fn add_edge(&mut self, u: usize, v: usize, colour: &str) -> PyResult<()> {
        self.inner.add_edge(ColouredEdge::new(u, v, parse(colour)?)).map_err(py_err)
    }

    fn remove_edge(&mut self, u: usize, v: usize, colour: &str) -> PyResult<bool> {
        Ok(self.inner.remove_edge(&ColouredEdge::new(u, v, parse(colour)?)))
    }

    /// `(verdict, witness_json_or_None)` for (2,l)-sparsity.
    fn is_sparse(&self, l: u8) -> PyResult<(bool, Option<String>)> {
        let r = is_sparse(&self.inner, l).map_err(py_err)?;
        Ok((r.verdict, r.witness.as_ref().map(|w| serde_json::to_string(w).expect("witnesses serialize"))))
    }

    /// Membership in a named class such as `"tight22"`, `"mixed"` or `"separable:1,2"`.
    fn in_class(&self, class: &str) -> PyResult<bool> {
        Ok(class_check(&self.inner, &parse::<SparsityClass>(class)?).map_err(py_err)?.verdict)
    }
}

/// Random class member; returns `(graph, trace_json)`.
#[pyfunction]
#[pyo3(signature = (class_name, n, seed = 0))]
fn construct(class_name: &str, n: usize, seed: u64) -> PyResult<(PyGraph, String)> {
    let (g, trace) = random_construct(&parse(class_name)?, n, seed).map_err(py_err)?;
    Ok((PyGraph { inner: g }, trace.to_json()))
}

/// Reduction trace of a class member to its base, as JSON.
#[pyfunction]
fn reduce(graph: &PyGraph, class_name: &str) -> PyResult<String> {
    Ok(reduce_fully(&graph.inner, &parse(class_name)?).map_err(py_err)?.to_json())
}

/// Rebuilds the graph described by a trace.
#[pyfunction]
fn replay(trace_json: &str) -> PyResult<PyGraph> {
    let trace = ConstructionTrace::parse(trace_json).map_err(py_err)?;
    Ok(PyGraph { inner: trace.replay().map_err(py_err)? })
}

/// Rank report at one placement: the given placement file contents, or a
/// seeded generic placement.
#[pyfunction]
#[pyo3(signature = (graph, context, placement_json = None, seed = 0, tol = DEFAULT_TOL))]
fn rank(graph: &PyGraph, context: &str, placement_json: Option<&str>, seed: u64, tol: f64) -> PyResult<String> {
    let ctx: ContextSpec = parse(context)?;
    let p = match placement_json {
        Some(text) => {
            let (file_ctx, p) = Placement::parse(text).map_err(py_err)?;
            if file_ctx != ctx {
                return Err(PyValueError::new_err(format!("placement is for {file_ctx}, not {ctx}")));
            }
            p
        }
        None => generic_placement(&ctx, &graph.inner, seed).map_err(py_err)?,
    };
    let m = assemble(&ctx, &graph.inner, &p).map_err(py_err)?;
    let r = numerical_rank(&m.matrix, tol).map_err(py_err)?;
    Ok(serde_json::to_string(&r).expect("rank reports serialize"))
}

/// Rigidity verdict as JSON, with `status` one of `MINIMALLY_RIGID`,
/// `RIGID_OVERBRACED`, `FLEXIBLE`.
#[pyfunction]
#[pyo3(signature = (graph, context, trials = DEFAULT_TRIALS, seed = 0, tol = DEFAULT_TOL))]
fn decide(graph: &PyGraph, context: &str, trials: usize, seed: u64, tol: f64) -> PyResult<String> {
    let v = decide_rigidity(&parse(context)?, &graph.inner, trials, seed, tol).map_err(py_err)?;
    Ok(serde_json::to_string(&v).expect("verdicts serialize"))
}

/// Verification campaign report as JSON. `mode` is `"rigidity"`,
/// `"reduction"` or `"colour_indifference"`.
#[pyfunction]
#[pyo3(signature = (theorem, samples = 200, n_min = 2, n_max = 10, seed = 0, mode = "rigidity"))]
fn verify(theorem: &str, samples: usize, n_min: usize, n_max: usize, seed: u64, mode: &str) -> PyResult<String> {
    let id: TheoremId = parse(theorem)?;
    let opts = CampaignOptions::default();
    let range = n_min..=n_max;
    match mode {
        "rigidity" => Ok(verify_theorem(&id, samples, range, seed, opts).map_err(py_err)?.to_json()),
        "reduction" => Ok(cross_check_reduction(&id, samples, range, seed, opts).map_err(py_err)?.to_json()),
        "colour_indifference" => {
            let r = sphere_colour_indifference(samples, range, seed, opts).map_err(py_err)?;
            Ok(serde_json::to_string(&r).expect("reports serialize"))
        }
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

#[pymodule]
fn rigidity_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(construct, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
