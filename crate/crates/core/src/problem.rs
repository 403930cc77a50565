//! Problem data: diffusion right-hand side `f`, nodal sources `g` and
//! Dirichlet values, plus a catalog of exact solutions.
//!
//! Nodal sources follow the balance `sum_E kappa grad u . n_E = g` on every
//! non-Dirichlet node, so a positive `g` injects mass at the node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{dot, HyperGraph};

pub trait ProblemData: Sync {
    fn dirichlet(&self, graph: &HyperGraph, node: usize, x: &[f64]) -> f64;

    fn source(&self, graph: &HyperGraph, edge: usize, x: &[f64]) -> f64;

    fn node_source(&self, graph: &HyperGraph, node: usize, x: &[f64]) -> f64;

    /// Whether `source` may be non-zero; lets the solver skip the load.
    fn has_source(&self) -> bool {
        true
    }
}

/// Exact solutions with closed-form data.
///
/// Every entry is a quadratic `c + b.x + x^T H x / 2` in ambient
/// coordinates; `f` and `g` are derived from it per hyperedge and hypernode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub name: String,
    pub constant: f64,
    pub linear: Vec<f64>,
    /// Symmetric Hessian, row-major `D x D`.
    pub hessian: Vec<Vec<f64>>,
}

impl ExactSolution {
    /// `u = -x^2 - y^2 - z^2`, the convergence-study solution.
    pub fn paper_quadratic(ambient_dim: usize) -> Self {
        let hessian = (0..ambient_dim)
            .map(|i| (0..ambient_dim).map(|j| if i == j { -2.0 } else { 0.0 }).collect())
            .collect();
        Self {
            name: "paper_quadratic".into(),
            constant: 0.0,
            linear: vec![0.0; ambient_dim],
            hessian,
        }
    }

    pub fn constant(ambient_dim: usize, c: f64) -> Self {
        Self {
            name: "constant".into(),
            constant: c,
            linear: vec![0.0; ambient_dim],
            hessian: vec![vec![0.0; ambient_dim]; ambient_dim],
        }
    }

    pub fn linear(constant: f64, gradient: Vec<f64>) -> Self {
        let n = gradient.len();
        Self {
            name: "linear".into(),
            constant,
            linear: gradient,
            hessian: vec![vec![0.0; n]; n],
        }
    }

    /// Looks up a catalog entry by key.
    pub fn from_catalog(key: &str, ambient_dim: usize) -> Result<Self> {
        match key {
            "paper_quadratic" | "quadratic" => Ok(Self::paper_quadratic(ambient_dim)),
            "constant" => Ok(Self::constant(ambient_dim, 1.5)),
            "linear" => Ok(Self::linear(
                1.0,
                [1.0, -2.0, 0.5].iter().copied().cycle().take(ambient_dim).collect(),
            )),
            other => Err(Error::Invalid(format!("unknown exact solution '{other}'"))),
        }
    }

    pub fn catalog_keys() -> &'static [&'static str] {
        &["paper_quadratic", "constant", "linear"]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let hx = self.hessian_times(x);
        self.constant + dot(&self.linear, x) + 0.5 * dot(x, &hx)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let hx = self.hessian_times(x);
        self.linear.iter().zip(hx).map(|(b, h)| b + h).collect()
    }

    fn hessian_times(&self, x: &[f64]) -> Vec<f64> {
        self.hessian.iter().map(|row| dot(row, x)).collect()
    }

    /// `-kappa` times the tangential Laplacian on `edge`.
    pub fn edge_source(&self, graph: &HyperGraph, edge: usize) -> f64 {
        let e = graph.edge(edge);
        let lap: f64 = e
            .axes
            .iter()
            .map(|a| {
                let len2 = dot(a, a);
                dot(a, &self.hessian_times(a)) / len2
            })
            .sum();
        -e.kappa * lap
    }

    /// `sum_E kappa_E grad u . n_E` over the edges meeting `node`.
    pub fn nodal_jump(&self, graph: &HyperGraph, node: usize, x: &[f64]) -> f64 {
        let grad = self.gradient(x);
        graph
            .node_incidences(node)
            .map(|inc| {
                let e = graph.edge(inc.edge);
                e.kappa * dot(&grad, &e.outward_normal(inc.face))
            })
            .sum()
    }
}

impl ProblemData for ExactSolution {
    fn dirichlet(&self, _graph: &HyperGraph, _node: usize, x: &[f64]) -> f64 {
        self.value(x)
    }

    fn source(&self, graph: &HyperGraph, edge: usize, _x: &[f64]) -> f64 {
        self.edge_source(graph, edge)
    }

    fn node_source(&self, graph: &HyperGraph, node: usize, x: &[f64]) -> f64 {
        self.nodal_jump(graph, node, x)
    }

    fn has_source(&self) -> bool {
        self.hessian.iter().flatten().any(|&h| h != 0.0)
    }
}

/// Piecewise-constant data given per node and per edge.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodalData {
    /// Dirichlet value per node id (ignored on other nodes); missing ids are 0.
    pub dirichlet: Vec<f64>,
    /// Constant `f` per edge id; missing ids are 0.
    pub edge_source: Vec<f64>,
    /// Constant `g` per node id; missing ids are 0.
    pub node_source: Vec<f64>,
}

impl NodalData {
    /// Dirichlet values `(0, 0, 1)` on the outer ends of a three-arm star.
    pub fn star_oracle() -> Self {
        Self {
            dirichlet: vec![0.0, 0.0, 0.0, 1.0],
            ..Self::default()
        }
    }
}

impl ProblemData for NodalData {
    fn dirichlet(&self, _graph: &HyperGraph, node: usize, _x: &[f64]) -> f64 {
        self.dirichlet.get(node).copied().unwrap_or(0.0)
    }

    fn source(&self, _graph: &HyperGraph, edge: usize, _x: &[f64]) -> f64 {
        self.edge_source.get(edge).copied().unwrap_or(0.0)
    }

    fn node_source(&self, _graph: &HyperGraph, node: usize, _x: &[f64]) -> f64 {
        self.node_source.get(node).copied().unwrap_or(0.0)
    }

    fn has_source(&self) -> bool {
        self.edge_source.iter().any(|&f| f != 0.0)
    }
}
