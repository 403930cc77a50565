//! Compressed-row matrices, Jacobi-preconditioned CG and a dense Cholesky
//! fallback.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square CSR matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the structure from sorted, deduplicated column lists per row.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            values: vec![0.0; col_idx.len()],
            col_idx,
        }
    }

    /// Builds from triplets, summing duplicates in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let mut m = Self::from_pattern(rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|p| lo + p)
    }

    /// Adds `v` at `(i, j)`; the entry must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.position(i, j).expect("entry outside sparsity pattern");
        self.values[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|` over the stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut av = vec![0.0; self.n];
        self.matvec(v, &mut av);
        av.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Matrix Market coordinate format (general, 1-based).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
            }
        }
        out
    }
}

/// Linear solver selection for the skeletal system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    CgJacobi,
    Direct,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg_jacobi" | "cg" => Ok(SolverMethod::CgJacobi),
            "direct" => Ok(SolverMethod::Direct),
            other => Err(Error::Invalid(format!("unknown solver method '{other}'"))),
        }
    }
}

/// Largest system accepted by the dense direct solver.
pub const DIRECT_LIMIT: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients with point-Jacobi preconditioning.
///
/// Stops once `||b - A x|| <= tol ||b||`; fails after `10 n` iterations.
pub fn cg_jacobi(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if n == 0 || b_norm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n.max(1);
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: norm(&r) / b_norm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r) / b_norm;
        if res <= tol {
            return Ok((x, SolveStats { iterations: it, relative_residual: res }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: norm(&r) / b_norm,
    })
}

/// Dense Cholesky solve for small SPD systems.
pub fn direct(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
    if a.n > DIRECT_LIMIT {
        return Err(Error::Invalid(format!(
            "direct solver limited to {DIRECT_LIMIT} unknowns, system has {}",
            a.n
        )));
    }
    if a.n == 0 {
        return Ok((vec![], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let chol = a
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::Invalid("skeletal matrix is not positive definite".into()))?;
    let x = chol.solve(&DVector::from_column_slice(b));
    let x: Vec<f64> = x.iter().copied().collect();
    let mut ax = vec![0.0; a.n];
    a.matvec(&x, &mut ax);
    let b_norm = norm(b);
    let res: Vec<f64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    let rel = if b_norm > 0.0 { norm(&res) / b_norm } else { norm(&res) };
    Ok((x, SolveStats { iterations: 1, relative_residual: rel }))
}

pub fn solve(a: &CsrMatrix, b: &[f64], method: SolverMethod, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    match method {
        SolverMethod::CgJacobi => cg_jacobi(a, b, tol),
        SolverMethod::Direct => direct(a, b),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
