//! End-to-end solve: local assembly and condensation (in parallel chunks),
//! deterministic global scatter, skeletal solve and local reconstruction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::HyperGraph;
use crate::local::basis::FaceTransfer;
use crate::local::solver::{assemble_local, condense, reconstruct, EdgeLoad, LocalMatrices, LocalSolution, ReferenceBasis};
use crate::problem::ProblemData;
use crate::skeletal::{enumerate_dofs, gather_edge, project_on_node, solve_skeletal, Assembler, DofMap, SkeletalSystem};
use crate::sparse::{SolveStats, SolverMethod};

/// Edges processed per parallel batch.
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub degree: usize,
    pub tau: f64,
    pub method: SolverMethod,
    pub tol: f64,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            degree: 1,
            tau: 1.0,
            method: SolverMethod::CgJacobi,
            tol: 1e-10,
            jobs: 0,
        }
    }
}

/// Runs `f` on a pool of `jobs` threads (or the global pool for 0).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Mass balance of a reconstructed solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    /// Total numerical flux leaving through Dirichlet nodes.
    pub dirichlet_outflow: f64,
    /// `int f` over all hyperedges.
    pub edge_source: f64,
    /// `int g` over all non-Dirichlet nodes.
    pub node_source: f64,
    /// Largest per-dof imbalance of the nodal flux balance on free nodes.
    pub max_nodal_residual: f64,
}

impl Conservation {
    pub fn defect(&self) -> f64 {
        (self.dirichlet_outflow - self.edge_source - self.node_source).abs()
    }
}

/// Discrete solution on every hyperedge together with the skeletal trace.
#[derive(Clone, Debug)]
pub struct SolutionFields {
    pub basis: ReferenceBasis,
    pub tau: f64,
    pub dofmap: DofMap,
    /// Trace coefficients in full dof numbering.
    pub lambda: Vec<f64>,
    pub edges: Vec<LocalSolution>,
    pub stats: SolveStats,
    pub conservation: Conservation,
}

impl SolutionFields {
    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn eval_u(&self, edge: usize, xi: &[f64]) -> f64 {
        self.edges[edge].eval_u(&self.basis.scalar, xi)
    }

    /// Ambient flux vector `Q` at reference point `xi` of `edge`.
    pub fn eval_flux(&self, graph: &HyperGraph, edge: usize, xi: &[f64]) -> Vec<f64> {
        let comps = self.edges[edge].eval_q(&self.basis.scalar, xi);
        let e = graph.edge(edge);
        let mut out = vec![0.0; graph.ambient_dim()];
        for ((c, axis), len) in comps.iter().zip(&e.axes).zip(e.lengths()) {
            for (o, a) in out.iter_mut().zip(axis) {
                *o += c * a / len;
            }
        }
        out
    }

    /// Trace coefficients of one node.
    pub fn node_trace(&self, node: usize) -> &[f64] {
        &self.lambda[self.dofmap.node_dofs(node)]
    }
}

/// Shared per-solve state for assembling local problems.
struct Setup<'a> {
    graph: &'a HyperGraph,
    data: &'a dyn ProblemData,
    opts: &'a SolveOptions,
    basis: ReferenceBasis,
    dofmap: DofMap,
    transfers: Vec<Vec<FaceTransfer>>,
    dirichlet_values: Vec<f64>,
    g_load: Vec<f64>,
}

impl<'a> Setup<'a> {
    fn new(graph: &'a HyperGraph, data: &'a dyn ProblemData, opts: &'a SolveOptions) -> Result<Self> {
        if !(opts.tol > 0.0) {
            return Err(Error::Invalid(format!("tolerance must be positive, got {}", opts.tol)));
        }
        let basis = ReferenceBasis::new(graph.edge_dim(), opts.degree)?;
        let dofmap = enumerate_dofs(graph, opts.degree);
        let transfers = crate::skeletal::face_transfers(graph, opts.degree)?;
        let mut dirichlet_values = vec![0.0; dofmap.total];
        let mut g_load = vec![0.0; dofmap.total];
        for node in 0..graph.nodes().len() {
            let range = dofmap.node_dofs(node);
            if dofmap.dirichlet[node] {
                let c = project_on_node(graph, node, opts.degree, |x| data.dirichlet(graph, node, x))?;
                dirichlet_values[range].copy_from_slice(&c);
            } else {
                let measure = graph.node(node).measure();
                let c = project_on_node(graph, node, opts.degree, |x| data.node_source(graph, node, x))?;
                for (slot, v) in g_load[range].iter_mut().zip(c) {
                    *slot = measure * v;
                }
            }
        }
        Ok(Self {
            graph,
            data,
            opts,
            basis,
            dofmap,
            transfers,
            dirichlet_values,
            g_load,
        })
    }

    fn local(&self, edge: usize) -> Result<LocalMatrices> {
        let trace = gather_edge(self.graph, &self.dofmap, &self.transfers, edge, &self.dirichlet_values);
        let f = |x: &[f64]| self.data.source(self.graph, edge, x);
        let load = EdgeLoad {
            source: if self.data.has_source() { Some(&f) } else { None },
            dirichlet_trace: Some(&trace),
        };
        assemble_local(self.graph.edge(edge), &self.basis, self.opts.tau, load)
    }

    fn assemble(&self) -> Result<SkeletalSystem> {
        let n_edges = self.graph.edges().len();
        let mut asm = Assembler::new(self.graph, self.dofmap.clone())?;
        for start in (0..n_edges).step_by(CHUNK) {
            let end = (start + CHUNK).min(n_edges);
            let ops: Vec<_> = (start..end)
                .into_par_iter()
                .map(|e| condense(&self.local(e)?, e))
                .collect::<Result<_>>()?;
            for (offset, op) in ops.iter().enumerate() {
                asm.add_edge(start + offset, op);
            }
        }
        asm.add_node_load(&self.g_load);
        Ok(asm.finish(self.dirichlet_values.clone()))
    }

    /// Returns each edge's fields and its `int f`.
    fn reconstruct_all(&self, lambda: &[f64]) -> Result<Vec<(LocalSolution, f64)>> {
        let n_edges = self.graph.edges().len();
        let free_only: Vec<f64> = (0..self.dofmap.total)
            .map(|d| if self.dofmap.free_index(d).is_some() { lambda[d] } else { 0.0 })
            .collect();
        let nq = self.graph.edge_dim() * self.basis.n_scalar();
        (0..n_edges)
            .into_par_iter()
            .with_min_len(64)
            .map(|e| {
                let local = self.local(e)?;
                let op = condense(&local, e)?;
                let lam = gather_edge(self.graph, &self.dofmap, &self.transfers, e, &free_only);
                let sol = reconstruct(&local, &op, &lam).map_err(|err| match err {
                    Error::SingularLocalSystem { .. } => Error::SingularLocalSystem { edge: e },
                    other => other,
                })?;
                Ok((sol, local.rhs_source[nq]))
            })
            .collect()
    }
}

/// Assembles the skeletal system without solving it.
pub fn assemble_problem(graph: &HyperGraph, data: &dyn ProblemData, opts: &SolveOptions) -> Result<SkeletalSystem> {
    with_jobs(opts.jobs, || Setup::new(graph, data, opts)?.assemble())?
}

pub fn solve_problem(graph: &HyperGraph, data: &dyn ProblemData, opts: &SolveOptions) -> Result<SolutionFields> {
    with_jobs(opts.jobs, || solve_inner(graph, data, opts))?
}

fn solve_inner(graph: &HyperGraph, data: &dyn ProblemData, opts: &SolveOptions) -> Result<SolutionFields> {
    let setup = Setup::new(graph, data, opts)?;
    let system = setup.assemble()?;
    let (free, stats) = solve_skeletal(&system, opts.method, opts.tol)?;
    let lambda = system.expand(&free);
    let results = setup.reconstruct_all(&lambda)?;

    let per = setup.dofmap.dofs_per_node;
    let faces = 2 * graph.edge_dim();
    let mut dirichlet_outflow = 0.0;
    let mut edge_source = 0.0;
    let mut balance = setup.g_load.clone();
    for (e, (sol, f_total)) in results.iter().enumerate() {
        edge_source += f_total;
        for f in 0..faces {
            let node = graph.face_incidence(e, f).node;
            let face_flux = &sol.flux[f * per..(f + 1) * per];
            if setup.dofmap.dirichlet[node] {
                dirichlet_outflow += face_flux[0];
            } else {
                let range = setup.dofmap.node_dofs(node);
                setup.transfers[e][f].face_to_node_add(face_flux, &mut balance[range]);
            }
        }
    }
    let node_source = (0..setup.dofmap.n_nodes())
        .filter(|&n| !setup.dofmap.dirichlet[n])
        .map(|n| setup.g_load[setup.dofmap.offsets[n]])
        .sum();
    let max_nodal_residual = (0..setup.dofmap.total)
        .filter(|&d| setup.dofmap.free_index(d).is_some())
        .fold(0.0f64, |m, d| m.max(balance[d].abs()));

    Ok(SolutionFields {
        tau: opts.tau,
        lambda,
        edges: results.into_iter().map(|(s, _)| s).collect(),
        stats,
        conservation: Conservation {
            dirichlet_outflow,
            edge_source,
            node_source,
            max_nodal_residual,
        },
        dofmap: setup.dofmap,
        basis: setup.basis,
    })
}
