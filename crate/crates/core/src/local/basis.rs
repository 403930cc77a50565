//! Tensor-product Legendre polynomials, orthonormal on the unit cube.

use crate::hypergraph::Isometry;

/// Orthonormal Legendre polynomial `sqrt(2k+1) P_k(2x-1)` on `[0,1]` and
/// its derivative, for all `k <= degree`.
pub fn legendre_1d(degree: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let z = 2.0 * x - 1.0;
    let mut p = vec![0.0; degree + 1];
    let mut dp = vec![0.0; degree + 1];
    p[0] = 1.0;
    if degree >= 1 {
        p[1] = z;
        dp[1] = 1.0;
    }
    for k in 2..=degree {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * z * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        dp[k] = dp[k - 2] + (2.0 * kf - 1.0) * p[k - 1];
    }
    for k in 0..=degree {
        let s = (2.0 * k as f64 + 1.0).sqrt();
        p[k] *= s;
        // chain rule for z = 2x - 1
        dp[k] *= 2.0 * s;
    }
    (p, dp)
}

/// Tensor-product space of per-axis degree `<= degree` on `[0,1]^dim`.
///
/// Function `i` has multi-index `alpha` with `i = sum_k alpha_k (p+1)^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorBasis {
    pub dim: usize,
    pub degree: usize,
}

impl TensorBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        Self { dim, degree }
    }

    pub fn len(&self) -> usize {
        (self.degree + 1).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let n = self.degree + 1;
        (0..self.dim)
            .map(|_| {
                let a = i % n;
                i /= n;
                a
            })
            .collect()
    }

    pub fn flat_index(&self, alpha: &[usize]) -> usize {
        let n = self.degree + 1;
        alpha.iter().rev().fold(0, |acc, &a| acc * n + a)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_with_gradient(x).0
    }

    /// Values and reference gradients (`grad[k][i]` = d/dx_k of function i).
    pub fn eval_with_gradient(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        debug_assert_eq!(x.len(), self.dim);
        let per_axis: Vec<_> = x.iter().map(|&xk| legendre_1d(self.degree, xk)).collect();
        let n = self.len();
        let mut val = vec![1.0; n];
        let mut grad = vec![vec![1.0; n]; self.dim];
        for i in 0..n {
            let alpha = self.multi_index(i);
            for (k, &a) in alpha.iter().enumerate() {
                let (p, dp) = &per_axis[k];
                val[i] *= p[a];
                for (j, g) in grad.iter_mut().enumerate() {
                    g[i] *= if j == k { dp[a] } else { p[a] };
                }
            }
        }
        (val, grad)
    }
}

/// Signed permutation taking node-basis coefficients to face-basis
/// coefficients for one incidence.
///
/// Node function `alpha` equals `sign * (face function beta)` with
/// `beta[perm[j]] = alpha[j]`; flipping an axis negates functions of odd
/// degree along it.
#[derive(Clone, Debug)]
pub struct FaceTransfer {
    /// `target[a]` is the face index of node function `a`.
    target: Vec<usize>,
    sign: Vec<f64>,
}

impl FaceTransfer {
    pub fn new(iso: &Isometry, degree: usize) -> Self {
        let basis = TensorBasis::new(iso.dim(), degree);
        let n = basis.len();
        let mut target = Vec::with_capacity(n);
        let mut sign = Vec::with_capacity(n);
        for a in 0..n {
            let alpha = basis.multi_index(a);
            let mut beta = vec![0; iso.dim()];
            let mut s = 1.0;
            for (j, (&p, &f)) in iso.perm.iter().zip(&iso.flips).enumerate() {
                beta[p] = alpha[j];
                if f == 1 && alpha[j] % 2 == 1 {
                    s = -s;
                }
            }
            target.push(basis.flat_index(&beta));
            sign.push(s);
        }
        Self { target, sign }
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Checks that the map is a bijective signed permutation.
    pub fn is_consistent(&self) -> bool {
        let mut seen = vec![false; self.len()];
        for &t in &self.target {
            if t >= seen.len() || seen[t] {
                return false;
            }
            seen[t] = true;
        }
        self.sign.iter().all(|s| s.abs() == 1.0)
    }

    /// Face index and sign of node function `a`.
    pub fn entry(&self, a: usize) -> (usize, f64) {
        (self.target[a], self.sign[a])
    }

    pub fn node_to_face(&self, node: &[f64]) -> Vec<f64> {
        let mut face = vec![0.0; self.len()];
        for (a, &c) in node.iter().enumerate() {
            face[self.target[a]] = self.sign[a] * c;
        }
        face
    }

    /// Adds face-basis functionals (or coefficients) to node-basis storage.
    pub fn face_to_node_add(&self, face: &[f64], node: &mut [f64]) {
        for a in 0..self.len() {
            node[a] += self.sign[a] * face[self.target[a]];
        }
    }
}
