//! LDG-H local solver on one hyperedge and its static condensation.
//!
//! Local unknowns are ordered `[Q_0, .., Q_{d-1}, U]`, each block holding
//! `(p+1)^d` Legendre coefficients; `Q_k` is the flux component along the
//! unit vector of edge axis `k`. Trace unknowns are ordered face by face,
//! `(p+1)^{d-1}` coefficients per face in the face's own basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hypergraph::HyperEdge;
use crate::local::basis::TensorBasis;
use crate::local::quadrature::{gauss_rule, QuadratureRule};

/// Reference tables for one `(d, p)` pair, shared by all hyperedges.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub dim: usize,
    pub degree: usize,
    pub scalar: TensorBasis,
    pub face: TensorBasis,
    pub volume_rule: QuadratureRule,
    pub face_rule: QuadratureRule,
    vol_vals: Vec<Vec<f64>>,
    vol_grads: Vec<Vec<Vec<f64>>>,
    /// `trace_vals[f][q][i]`: scalar function `i` at face point `q` of face `f`.
    trace_vals: Vec<Vec<Vec<f64>>>,
    face_vals: Vec<Vec<f64>>,
}

impl ReferenceBasis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Invalid(format!("hyperedge dimension {dim} unsupported")));
        }
        let scalar = TensorBasis::new(dim, degree);
        let face = TensorBasis::new(dim - 1, degree);
        let n_quad = degree + 2;
        let volume_rule = gauss_rule(dim, n_quad)?;
        let face_rule = gauss_rule(dim - 1, n_quad)?;
        let mut vol_vals = Vec::with_capacity(volume_rule.len());
        let mut vol_grads = Vec::with_capacity(volume_rule.len());
        for x in &volume_rule.points {
            let (v, g) = scalar.eval_with_gradient(x);
            vol_vals.push(v);
            vol_grads.push(g);
        }
        let dummy = HyperEdge {
            corner: vec![0.0; dim],
            axes: (0..dim)
                .map(|k| (0..dim).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
                .collect(),
            kappa: 1.0,
        };
        let trace_vals = (0..2 * dim)
            .map(|f| {
                face_rule
                    .points
                    .iter()
                    .map(|s| scalar.eval(&dummy.face_to_reference(f, s)))
                    .collect()
            })
            .collect();
        let face_vals = face_rule.points.iter().map(|s| face.eval(s)).collect();
        Ok(Self {
            dim,
            degree,
            scalar,
            face,
            volume_rule,
            face_rule,
            vol_vals,
            vol_grads,
            trace_vals,
            face_vals,
        })
    }

    pub fn n_scalar(&self) -> usize {
        self.scalar.len()
    }

    pub fn n_face(&self) -> usize {
        self.face.len()
    }

    pub fn n_local(&self) -> usize {
        (self.dim + 1) * self.n_scalar()
    }

    pub fn n_trace(&self) -> usize {
        2 * self.dim * self.n_face()
    }
}

/// Scalar field evaluated at ambient points.
pub type SourceFn<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

/// Data entering the inhomogeneous local solve.
#[derive(Clone, Copy, Default)]
pub struct EdgeLoad<'a> {
    /// Right-hand side `f` at ambient points.
    pub source: Option<&'a SourceFn<'a>>,
    /// Dirichlet trace coefficients in edge face ordering (zero on faces
    /// that are not Dirichlet).
    pub dirichlet_trace: Option<&'a [f64]>,
}

/// Blocks of the LDG-H local system of one hyperedge.
#[derive(Clone, Debug)]
pub struct LocalMatrices {
    pub dim: usize,
    pub n_scalar: usize,
    pub n_face: usize,
    pub tau: f64,
    pub measure: f64,
    pub lengths: Vec<f64>,
    /// Flux mass `(1/kappa) Q . p`.
    pub a: DMatrix<f64>,
    /// `-U div p` (flux rows, scalar columns).
    pub b: DMatrix<f64>,
    /// `Q.n v` on the boundary minus `Q . grad v` (scalar rows, flux columns).
    pub bt: DMatrix<f64>,
    /// Stabilization `tau U v` on the boundary.
    pub d: DMatrix<f64>,
    /// Trace coupling: right-hand side per unit trace coefficient.
    pub c: DMatrix<f64>,
    /// Numerical-flux functional of the local unknowns, `(Q.n + tau U) mu`.
    pub t: DMatrix<f64>,
    /// Diagonal of the boundary trace mass `tau lambda mu`.
    pub trace_mass: DVector<f64>,
    /// `f v` load.
    pub rhs_source: DVector<f64>,
    /// Dirichlet trace in edge face ordering.
    pub dirichlet_trace: DVector<f64>,
}

impl LocalMatrices {
    pub fn n_local(&self) -> usize {
        (self.dim + 1) * self.n_scalar
    }

    pub fn n_trace(&self) -> usize {
        2 * self.dim * self.n_face
    }

    /// The full local saddle matrix.
    pub fn system(&self) -> DMatrix<f64> {
        let nq = self.dim * self.n_scalar;
        let n = self.n_local();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (nq, nq)).copy_from(&self.a);
        m.view_mut((0, nq), (nq, self.n_scalar)).copy_from(&self.b);
        m.view_mut((nq, 0), (self.n_scalar, nq)).copy_from(&self.bt);
        m.view_mut((nq, nq), (self.n_scalar, self.n_scalar)).copy_from(&self.d);
        m
    }

    /// Right-hand side of the inhomogeneous problem (`f` and `u_D`).
    pub fn rhs_inhomogeneous(&self) -> DVector<f64> {
        &self.rhs_source + &self.c * &self.dirichlet_trace
    }
}

/// Output of static condensation.
#[derive(Clone, Debug)]
pub struct CondensedOperator {
    /// Steklov-Poincare matrix: trace coefficients to minus the outward
    /// numerical flux functional.
    pub s: DMatrix<f64>,
    /// Outward numerical flux functional of the `f` solve with zero trace.
    pub lift_source: DVector<f64>,
    /// Outward numerical flux functional of the `u_D` solve (zero trace on
    /// the remaining faces).
    pub lift_dirichlet: DVector<f64>,
    factor: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Reconstructed local fields.
#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub u: Vec<f64>,
    /// `q[k]` are the coefficients of flux component `k`.
    pub q: Vec<Vec<f64>>,
    /// Outward numerical flux functionals `int (Q.n + tau (U - lambda)) mu`,
    /// in edge face ordering.
    pub flux: Vec<f64>,
}

/// Assembles the LDG-H blocks for `edge`.
pub fn assemble_local(
    edge: &HyperEdge,
    basis: &ReferenceBasis,
    tau: f64,
    load: EdgeLoad<'_>,
) -> Result<LocalMatrices> {
    let dim = basis.dim;
    if edge.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: edge.dim() });
    }
    if !(tau > 0.0) {
        return Err(Error::Invalid(format!("LDG-H requires tau > 0, got {tau}")));
    }
    let lengths = edge.lengths();
    if lengths.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
        return Err(Error::SingularGeometry("zero-length hyperedge axis".into()));
    }
    let nv = basis.n_scalar();
    let nf = basis.n_face();
    let nq = dim * nv;
    let nt = basis.n_trace();
    let measure: f64 = lengths.iter().product();
    let kappa = edge.kappa;

    let mut a = DMatrix::zeros(nq, nq);
    let mut b = DMatrix::zeros(nq, nv);
    let mut bt = DMatrix::zeros(nv, nq);
    let mut d = DMatrix::zeros(nv, nv);
    let mut c = DMatrix::zeros(nq + nv, nt);
    let mut t = DMatrix::zeros(nt, nq + nv);
    let mut trace_mass = DVector::zeros(nt);
    let mut rhs_source = DVector::zeros(nq + nv);

    // volume terms
    for (qp, &w) in basis.volume_rule.weights.iter().enumerate() {
        let v = &basis.vol_vals[qp];
        let g = &basis.vol_grads[qp];
        for j in 0..nv {
            for i in 0..nv {
                let mass = measure * w * v[i] * v[j];
                for k in 0..dim {
                    a[(k * nv + j, k * nv + i)] += mass / kappa;
                    let div = measure / lengths[k] * w * v[i] * g[k][j];
                    b[(k * nv + j, i)] -= div;
                    bt[(j, k * nv + i)] -= div;
                }
            }
        }
        if let Some(f) = load.source {
            let xi = &basis.volume_rule.points[qp];
            let val = f(&edge.point(xi));
            for j in 0..nv {
                rhs_source[nq + j] += measure * w * val * v[j];
            }
        }
    }

    // boundary terms
    for face in 0..2 * dim {
        let k = face / 2;
        let normal = if face % 2 == 0 { -1.0 } else { 1.0 };
        let area = measure / lengths[k];
        for (qp, &w) in basis.face_rule.weights.iter().enumerate() {
            let v = &basis.trace_vals[face][qp];
            let mu = &basis.face_vals[qp];
            for j in 0..nv {
                for i in 0..nv {
                    let m = area * w * v[i] * v[j];
                    bt[(j, k * nv + i)] += normal * m;
                    d[(j, i)] += tau * m;
                }
                for (m_idx, &mu_m) in mu.iter().enumerate() {
                    let col = face * nf + m_idx;
                    let m = area * w * mu_m * v[j];
                    c[(k * nv + j, col)] -= normal * m;
                    c[(nq + j, col)] += tau * m;
                    t[(col, k * nv + j)] += normal * m;
                    t[(col, nq + j)] += tau * m;
                }
            }
            for (m_idx, &mu_m) in mu.iter().enumerate() {
                trace_mass[face * nf + m_idx] += tau * area * w * mu_m * mu_m;
            }
        }
    }

    let dirichlet_trace = match load.dirichlet_trace {
        Some(tr) if tr.len() != nt => return Err(Error::DimensionMismatch { expected: nt, got: tr.len() }),
        Some(tr) => DVector::from_column_slice(tr),
        None => DVector::zeros(nt),
    };

    Ok(LocalMatrices {
        dim,
        n_scalar: nv,
        n_face: nf,
        tau,
        measure,
        lengths,
        a,
        b,
        bt,
        d,
        c,
        t,
        trace_mass,
        rhs_source,
        dirichlet_trace,
    })
}

/// Eliminates the local unknowns, leaving the trace-to-flux operator.
pub fn condense(local: &LocalMatrices, edge_id: usize) -> Result<CondensedOperator> {
    let factor = local.system().lu();
    let solved = factor
        .solve(&local.c)
        .ok_or(Error::SingularLocalSystem { edge: edge_id })?;
    let mut s = -(&local.t * solved);
    for (i, m) in local.trace_mass.iter().enumerate() {
        s[(i, i)] += m;
    }

    let x_source = factor
        .solve(&local.rhs_source)
        .ok_or(Error::SingularLocalSystem { edge: edge_id })?;
    let lift_source = &local.t * x_source;

    let x_dirichlet = factor
        .solve(&(&local.c * &local.dirichlet_trace))
        .ok_or(Error::SingularLocalSystem { edge: edge_id })?;
    let lift_dirichlet = &local.t * x_dirichlet - local.trace_mass.component_mul(&local.dirichlet_trace);

    Ok(CondensedOperator {
        s,
        lift_source,
        lift_dirichlet,
        factor,
    })
}

/// Recovers `(U, Q)` from the free trace `lambda` (zero on Dirichlet faces)
/// by superposing the homogeneous and inhomogeneous local solves.
pub fn reconstruct(
    local: &LocalMatrices,
    condensed: &CondensedOperator,
    lambda: &[f64],
) -> Result<LocalSolution> {
    let nt = local.n_trace();
    if lambda.len() != nt {
        return Err(Error::DimensionMismatch { expected: nt, got: lambda.len() });
    }
    let lam = DVector::from_column_slice(lambda);
    let rhs = &local.c * &lam + local.rhs_inhomogeneous();
    let x = condensed
        .factor
        .solve(&rhs)
        .ok_or(Error::SingularLocalSystem { edge: usize::MAX })?;
    let full_trace = lam + &local.dirichlet_trace;
    let flux = &local.t * &x - local.trace_mass.component_mul(&full_trace);
    let nv = local.n_scalar;
    let q = (0..local.dim)
        .map(|k| x.rows(k * nv, nv).iter().copied().collect())
        .collect();
    let u = x.rows(local.dim * nv, nv).iter().copied().collect();
    Ok(LocalSolution {
        u,
        q,
        flux: flux.iter().copied().collect(),
    })
}

impl LocalSolution {
    /// Value of `U` at reference point `xi`.
    pub fn eval_u(&self, basis: &TensorBasis, xi: &[f64]) -> f64 {
        basis.eval(xi).iter().zip(&self.u).map(|(a, b)| a * b).sum()
    }

    /// Flux components (in the edge's unit axis frame) at `xi`.
    pub fn eval_q(&self, basis: &TensorBasis, xi: &[f64]) -> Vec<f64> {
        let v = basis.eval(xi);
        self.q
            .iter()
            .map(|qk| v.iter().zip(qk).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Integrated outward numerical flux through each face.
    pub fn face_totals(&self, local: &LocalMatrices) -> Vec<f64> {
        // the constant face function is identically 1
        (0..2 * local.dim).map(|f| self.flux[f * local.n_face]).collect()
    }
}
