//! Per-hyperedge machinery: quadrature, Legendre bases, the LDG-H local
//! solver and its condensation.

pub mod basis;
pub mod quadrature;
pub mod solver;

pub use basis::{FaceTransfer, TensorBasis};
pub use quadrature::{gauss_rule, QuadratureRule};
pub use solver::{
    assemble_local, condense, reconstruct, CondensedOperator, EdgeLoad, LocalMatrices, LocalSolution,
    ReferenceBasis,
};
