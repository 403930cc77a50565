//! Python bindings for the hypergraph LDG-H solver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hyperhdg::analysis::{convergence_study as run_study, flux_l2_error, l2_error, StudyPlan};
use hyperhdg::limit::{epsilon_sweep as run_sweep, LimitWeighting, MeshRule, ThinDomainSpec};
use hyperhdg::mesh::{cube_filling as build_filling, single_edge, star_graph, FillingSpec};
use hyperhdg::problem::{ExactSolution, NodalData, ProblemData};
use hyperhdg::solve::{solve_problem, SolutionFields, SolveOptions};
use hyperhdg::{Error, HyperGraph, SolverMethod};

fn to_py(err: Error) -> PyErr {
    match hyperhdg::cli::exit_code(&err) {
        1 => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// A validated geometric hypergraph.
#[pyclass(name = "HyperGraph", frozen)]
pub struct PyHyperGraph {
    inner: HyperGraph,
}

#[pymethods]
impl PyHyperGraph {
    /// d-dimensional skeleton of the unit cube with filling `i` and refinement `r`.
    #[staticmethod]
    #[pyo3(signature = (d, i, r = 0))]
    fn cube_filling(d: usize, i: u32, r: u32) -> PyResult<Self> {
        Ok(Self {
            inner: build_filling(FillingSpec::new(d, i, r)).map_err(to_py)?,
        })
    }

    /// Star graph of unit-diffusion intervals meeting at node 0.
    #[staticmethod]
    fn star(lengths: Vec<f64>, dirichlet: Vec<bool>) -> PyResult<Self> {
        Ok(Self {
            inner: star_graph(&lengths, &dirichlet).map_err(to_py)?,
        })
    }

    /// Interval `[0, length]` with Dirichlet nodes at both ends.
    #[staticmethod]
    #[pyo3(signature = (length = 1.0, kappa = 1.0))]
    fn single_edge(length: f64, kappa: f64) -> PyResult<Self> {
        Ok(Self {
            inner: single_edge(length, kappa).map_err(to_py)?,
        })
    }

    /// Parses the JSON interchange format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: HyperGraph::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.edges().len()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.nodes().len()
    }

    #[getter]
    fn edge_dim(&self) -> usize {
        self.inner.edge_dim()
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    /// Total measure of all hyperedges.
    fn measure(&self) -> f64 {
        self.inner.measure()
    }

    /// Node kinds as strings ("interior", "neumann" or "dirichlet").
    fn node_kinds(&self) -> Vec<&'static str> {
        self.inner.nodes().iter().map(|n| n.kind.name()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "HyperGraph(edge_dim={}, edges={}, nodes={})",
            self.inner.edge_dim(),
            self.inner.edges().len(),
            self.inner.nodes().len()
        )
    }
}

/// Reconstructed discrete solution.
#[pyclass(name = "Solution", frozen)]
pub struct PySolution {
    fields: SolutionFields,
    l2: Option<f64>,
    flux_l2: Option<f64>,
}

#[pymethods]
impl PySolution {
    /// Trace coefficients of all hypernodes, node by node.
    #[getter]
    fn trace(&self) -> Vec<f64> {
        self.fields.lambda.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.fields.stats.iterations
    }

    #[getter]
    fn dofs(&self) -> usize {
        self.fields.dofmap.total
    }

    #[getter]
    fn free_dofs(&self) -> usize {
        self.fields.dofmap.n_free()
    }

    /// L2 error of U when solved against an exact solution.
    #[getter]
    fn l2_error(&self) -> Option<f64> {
        self.l2
    }

    #[getter]
    fn flux_l2_error(&self) -> Option<f64> {
        self.flux_l2
    }

    /// |outflow through Dirichlet nodes - int f - sum int g|.
    #[getter]
    fn conservation_defect(&self) -> f64 {
        self.fields.conservation.defect()
    }

    fn node_trace(&self, node: usize) -> PyResult<Vec<f64>> {
        if node >= self.fields.dofmap.n_nodes() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.fields.node_trace(node).to_vec())
    }

    /// U on `edge` at reference coordinates `xi` in [0, 1]^d.
    fn eval_u(&self, edge: usize, xi: Vec<f64>) -> PyResult<f64> {
        if edge >= self.fields.edges.len() || xi.len() != self.fields.basis.dim {
            return Err(PyValueError::new_err("edge index or point dimension out of range"));
        }
        Ok(self.fields.eval_u(edge, &xi))
    }
}

fn options(p: usize, tau: f64, method: &str, tol: f64, jobs: usize) -> PyResult<SolveOptions> {
    Ok(SolveOptions {
        degree: p,
        tau,
        method: method.parse::<SolverMethod>().map_err(to_py)?,
        tol,
        jobs,
    })
}

fn wrap(graph: &HyperGraph, data: &dyn ProblemData, exact: Option<&ExactSolution>, opts: &SolveOptions) -> PyResult<PySolution> {
    let fields = solve_problem(graph, data, opts).map_err(to_py)?;
    Ok(PySolution {
        l2: exact.map(|e| l2_error(graph, &fields, e)),
        flux_l2: exact.map(|e| flux_l2_error(graph, &fields, e)),
        fields,
    })
}

/// Solves with data from an exact-solution catalog entry.
#[pyfunction]
#[pyo3(signature = (graph, exact = "paper_quadratic", p = 1, tau = 1.0, method = "cg_jacobi", tol = 1e-10, jobs = 0))]
fn solve(
    graph: PyRef<'_, PyHyperGraph>,
    exact: &str,
    p: usize,
    tau: f64,
    method: &str,
    tol: f64,
    jobs: usize,
) -> PyResult<PySolution> {
    let opts = options(p, tau, method, tol, jobs)?;
    let u = ExactSolution::from_catalog(exact, graph.inner.ambient_dim()).map_err(to_py)?;
    wrap(&graph.inner, &u, Some(&u), &opts)
}

/// Solves with piecewise-constant data given per node and per edge.
#[pyfunction]
#[pyo3(signature = (graph, dirichlet, edge_source = vec![], node_source = vec![], p = 1, tau = 1.0, tol = 1e-10))]
fn solve_nodal(
    graph: PyRef<'_, PyHyperGraph>,
    dirichlet: Vec<f64>,
    edge_source: Vec<f64>,
    node_source: Vec<f64>,
    p: usize,
    tau: f64,
    tol: f64,
) -> PyResult<PySolution> {
    let opts = options(p, tau, "cg_jacobi", tol, 0)?;
    let data = NodalData {
        dirichlet,
        edge_source,
        node_source,
    };
    wrap(&graph.inner, &data, None, &opts)
}

/// Filling (`filling` as (first, last)) or refinement sweep; returns CSV.
#[pyfunction]
#[pyo3(signature = (d, filling, refinement, p = 1, tau = 1.0))]
fn convergence_study(d: usize, filling: (u32, u32), refinement: (u32, u32), p: usize, tau: f64) -> PyResult<String> {
    let opts = options(p, tau, "cg_jacobi", 1e-10, 0)?;
    let plan = if filling.0 == filling.1 {
        StudyPlan::refinement(d, filling.0, refinement.0..=refinement.1, opts)
    } else if refinement.0 == refinement.1 {
        StudyPlan::filling(d, filling.0..=filling.1, refinement.0, opts)
    } else {
        return Err(PyValueError::new_err("sweep either filling or refinement, not both"));
    };
    Ok(run_study(&plan).map_err(to_py)?.to_csv())
}

/// Thin-domain sweep of a built-in scenario; returns CSV.
#[pyfunction]
#[pyo3(signature = (scenario, eps, weighted = true))]
fn epsilon_sweep(scenario: &str, eps: Vec<f64>, weighted: bool) -> PyResult<String> {
    let first = *eps.first().ok_or_else(|| PyValueError::new_err("empty eps list"))?;
    let spec = ThinDomainSpec::scenario(scenario, first).map_err(to_py)?;
    let weighting = if weighted { LimitWeighting::Weighted } else { LimitWeighting::Unweighted };
    Ok(run_sweep(&spec, &eps, &MeshRule::default(), weighting).map_err(to_py)?.to_csv())
}

/// Estimated orders of convergence of consecutive errors.
#[pyfunction]
fn eoc(errors: Vec<f64>) -> PyResult<Vec<f64>> {
    hyperhdg::eoc(&errors).map_err(to_py)
}

#[pymodule]
fn hyperhdg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHyperGraph>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_nodal, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(eoc, m)?)?;
    Ok(())
}
