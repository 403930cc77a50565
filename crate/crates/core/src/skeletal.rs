//! Global skeletal problem: hypernode dof numbering, scatter of the
//! condensed edge operators into a sparse SPD system over the free dofs,
//! and its solution.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::hypergraph::{HyperGraph, NodeKind};
use crate::local::basis::{FaceTransfer, TensorBasis};
use crate::local::quadrature::gauss_rule;
use crate::local::solver::CondensedOperator;
use crate::sparse::{solve, CsrMatrix, SolveStats, SolverMethod};

const NOT_FREE: usize = usize::MAX;

/// Numbering of the trace unknowns, node by node in id order.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub degree: usize,
    pub dofs_per_node: usize,
    pub offsets: Vec<usize>,
    pub total: usize,
    /// Per node: whether its dofs are prescribed.
    pub dirichlet: Vec<bool>,
    free_index: Vec<usize>,
    n_free: usize,
}

impl DofMap {
    pub fn node_dofs(&self, node: usize) -> Range<usize> {
        let o = self.offsets[node];
        o..o + self.dofs_per_node
    }

    /// Position of `dof` among the free unknowns.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        match self.free_index[dof] {
            NOT_FREE => None,
            i => Some(i),
        }
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len()
    }

    /// Scatters free unknowns and prescribed values into a full vector.
    pub fn expand(&self, free: &[f64], prescribed: &[f64]) -> Vec<f64> {
        (0..self.total)
            .map(|dof| self.free_index(dof).map_or(prescribed[dof], |i| free[i]))
            .collect()
    }
}

pub fn enumerate_dofs(graph: &HyperGraph, degree: usize) -> DofMap {
    let per = TensorBasis::new(graph.edge_dim() - 1, degree).len();
    let n_nodes = graph.nodes().len();
    let offsets: Vec<usize> = (0..n_nodes).map(|n| n * per).collect();
    let dirichlet: Vec<bool> = graph.nodes().iter().map(|n| n.kind == NodeKind::Dirichlet).collect();
    let mut free_index = vec![NOT_FREE; n_nodes * per];
    let mut n_free = 0;
    for (node, &is_d) in dirichlet.iter().enumerate() {
        if !is_d {
            for slot in &mut free_index[node * per..(node + 1) * per] {
                *slot = n_free;
                n_free += 1;
            }
        }
    }
    DofMap {
        degree,
        dofs_per_node: per,
        offsets,
        total: n_nodes * per,
        dirichlet,
        free_index,
        n_free,
    }
}

/// L2 projection coefficients of `f` onto the Legendre basis of `node`.
pub fn project_on_node(graph: &HyperGraph, node: usize, degree: usize, f: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let dim = graph.edge_dim() - 1;
    let basis = TensorBasis::new(dim, degree);
    let rule = gauss_rule(dim, degree + 2)?;
    let hn = graph.node(node);
    let mut coeffs = vec![0.0; basis.len()];
    for (t, w) in rule.points.iter().zip(&rule.weights) {
        let val = f(&hn.point(t));
        for (c, phi) in coeffs.iter_mut().zip(basis.eval(t)) {
            *c += w * val * phi;
        }
    }
    Ok(coeffs)
}

/// Node-to-face transfer maps of every incidence, indexed `[edge][face]`.
pub fn face_transfers(graph: &HyperGraph, degree: usize) -> Result<Vec<Vec<FaceTransfer>>> {
    let faces = 2 * graph.edge_dim();
    (0..graph.edges().len())
        .map(|e| {
            (0..faces)
                .map(|f| {
                    let map = FaceTransfer::new(&graph.face_incidence(e, f).isometry, degree);
                    if map.is_consistent() {
                        Ok(map)
                    } else {
                        Err(Error::OrientationError { edge: e, face: f })
                    }
                })
                .collect()
        })
        .collect()
}

/// Sparse system over the free trace unknowns.
#[derive(Clone, Debug)]
pub struct SkeletalSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofmap: DofMap,
    /// Projected Dirichlet values in full dof numbering (zero on free dofs).
    pub dirichlet_values: Vec<f64>,
}

impl SkeletalSystem {
    pub fn to_matrix_market(&self) -> String {
        self.matrix.to_matrix_market()
    }

    /// Full trace vector from a free solution.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        self.dofmap.expand(free, &self.dirichlet_values)
    }
}

/// Incremental scatter of condensed operators, one edge at a time.
pub struct Assembler<'g> {
    graph: &'g HyperGraph,
    dofmap: DofMap,
    transfers: Vec<Vec<FaceTransfer>>,
    matrix: CsrMatrix,
    rhs: Vec<f64>,
}

impl<'g> Assembler<'g> {
    pub fn new(graph: &'g HyperGraph, dofmap: DofMap) -> Result<Self> {
        let transfers = face_transfers(graph, dofmap.degree)?;
        let per = dofmap.dofs_per_node;
        let faces = 2 * graph.edge_dim();
        let n_nodes = dofmap.n_nodes();
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for e in 0..graph.edges().len() {
            let free: Vec<usize> = (0..faces)
                .map(|f| graph.face_incidence(e, f).node)
                .filter(|&n| !dofmap.dirichlet[n])
                .collect();
            for &a in &free {
                neighbours[a].extend(&free);
            }
        }
        let mut rows = Vec::with_capacity(dofmap.n_free());
        for (a, nb) in neighbours.iter_mut().enumerate() {
            if dofmap.dirichlet[a] {
                continue;
            }
            nb.sort_unstable();
            nb.dedup();
            let cols: Vec<usize> = nb
                .iter()
                .flat_map(|&b| dofmap.node_dofs(b).map(|dof| dofmap.free_index[dof]))
                .collect();
            for _ in 0..per {
                rows.push(cols.clone());
            }
        }
        let matrix = CsrMatrix::from_pattern(rows);
        let rhs = vec![0.0; dofmap.n_free()];
        Ok(Self {
            graph,
            dofmap,
            transfers,
            matrix,
            rhs,
        })
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn transfers(&self) -> &[Vec<FaceTransfer>] {
        &self.transfers
    }

    /// Edge trace vector (face ordering) of node-basis values `full`.
    pub fn gather(&self, edge: usize, full: &[f64]) -> Vec<f64> {
        gather_edge(self.graph, &self.dofmap, &self.transfers, edge, full)
    }

    /// Adds `P^T S P` to the matrix and the transferred lifts to the load.
    pub fn add_edge(&mut self, edge: usize, op: &CondensedOperator) {
        let per = self.dofmap.dofs_per_node;
        let faces = 2 * self.graph.edge_dim();
        let maps = &self.transfers[edge];
        let nodes: Vec<usize> = (0..faces).map(|f| self.graph.face_incidence(edge, f).node).collect();
        for f in 0..faces {
            let a = nodes[f];
            if self.dofmap.dirichlet[a] {
                continue;
            }
            let row0 = self.dofmap.free_index[self.dofmap.offsets[a]];
            for alpha in 0..per {
                let (ta, sa) = maps[f].entry(alpha);
                let row = row0 + alpha;
                let fi = f * per + ta;
                self.rhs[row] += sa * (op.lift_source[fi] + op.lift_dirichlet[fi]);
                for g in 0..faces {
                    let b = nodes[g];
                    if self.dofmap.dirichlet[b] {
                        continue;
                    }
                    let col0 = self.dofmap.free_index[self.dofmap.offsets[b]];
                    let start = self.matrix.position(row, col0).expect("pattern covers edge couplings");
                    for beta in 0..per {
                        let (tb, sb) = maps[g].entry(beta);
                        self.matrix.values[start + beta] += sa * sb * op.s[(fi, g * per + tb)];
                    }
                }
            }
        }
    }

    /// Adds node-basis functionals (full numbering) to the load of free dofs.
    pub fn add_node_load(&mut self, load: &[f64]) {
        for (dof, &v) in load.iter().enumerate() {
            if let Some(i) = self.dofmap.free_index(dof) {
                self.rhs[i] += v;
            }
        }
    }

    pub fn finish(self, dirichlet_values: Vec<f64>) -> SkeletalSystem {
        SkeletalSystem {
            matrix: self.matrix,
            rhs: self.rhs,
            dofmap: self.dofmap,
            dirichlet_values,
        }
    }
}

pub(crate) fn gather_edge(
    graph: &HyperGraph,
    dofmap: &DofMap,
    transfers: &[Vec<FaceTransfer>],
    edge: usize,
    full: &[f64],
) -> Vec<f64> {
    let faces = 2 * graph.edge_dim();
    let per = dofmap.dofs_per_node;
    let mut out = vec![0.0; faces * per];
    for f in 0..faces {
        let node = graph.face_incidence(edge, f).node;
        let face = transfers[edge][f].node_to_face(&full[dofmap.node_dofs(node)]);
        out[f * per..(f + 1) * per].copy_from_slice(&face);
    }
    out
}

/// Assembles the skeletal system from one condensed operator per edge.
///
/// `g_load` holds `int_N g mu` per dof in full numbering; `dirichlet_values`
/// holds the projected Dirichlet coefficients (the operators' Dirichlet
/// lifts must have been computed from the same values).
pub fn assemble_global(
    graph: &HyperGraph,
    condensed: &[CondensedOperator],
    dofmap: &DofMap,
    g_load: &[f64],
    dirichlet_values: &[f64],
) -> Result<SkeletalSystem> {
    if condensed.len() != graph.edges().len() {
        return Err(Error::DimensionMismatch {
            expected: graph.edges().len(),
            got: condensed.len(),
        });
    }
    for v in [g_load, dirichlet_values] {
        if v.len() != dofmap.total {
            return Err(Error::DimensionMismatch { expected: dofmap.total, got: v.len() });
        }
    }
    let mut asm = Assembler::new(graph, dofmap.clone())?;
    for (e, op) in condensed.iter().enumerate() {
        asm.add_edge(e, op);
    }
    asm.add_node_load(g_load);
    Ok(asm.finish(dirichlet_values.to_vec()))
}

/// Solves for the free trace unknowns.
pub fn solve_skeletal(system: &SkeletalSystem, method: SolverMethod, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    solve(&system.matrix, &system.rhs, method, tol)
}
