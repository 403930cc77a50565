//! Hybridized discontinuous Galerkin (LDG-H) solver for steady diffusion on
//! geometric hypergraphs, with mesh factories, a convergence harness and a
//! thin-domain limit laboratory.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hypergraph;
pub mod limit;
pub mod local;
pub mod mesh;
pub mod problem;
pub mod skeletal;
pub mod solve;
pub mod sparse;

pub use analysis::{convergence_study, eoc, l2_error, StudyPlan, StudyReport};
pub use error::{Error, Result};
pub use hypergraph::{HyperEdge, HyperGraph, HyperGraphFile, HyperNode, IncidenceRecord, Isometry, NodeKind};
pub use mesh::{cube_filling, single_edge, star_graph, star_graph_with_arms, FillingSpec, MeshGuard, StarArm};
pub use problem::{ExactSolution, NodalData, ProblemData};
pub use skeletal::{assemble_global, enumerate_dofs, solve_skeletal, DofMap, SkeletalSystem};
pub use solve::{assemble_problem, solve_problem, Conservation, SolutionFields, SolveOptions};
pub use sparse::{CsrMatrix, SolveStats, SolverMethod};
