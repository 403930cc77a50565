use crate::error::{Error, Result};

/// Tensor-product Gauss-Legendre rule on the unit cube `[0,1]^dim`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[0,1]` with `n` points.
pub fn gauss_1d(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=16).contains(&n) {
        return Err(Error::UnsupportedOrder(n));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    // Newton iteration on P_n from the Chebyshev-like initial guess
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    Ok((x, w))
}

/// `P_n(z)` and `P_n'(z)` on `[-1,1]`.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor-product rule with `n` points per axis. `dim = 0` yields the
/// single-point rule used on point-like hypernodes.
pub fn gauss_rule(dim: usize, n: usize) -> Result<QuadratureRule> {
    let (x, w) = gauss_1d(n)?;
    let mut points = vec![Vec::new()];
    let mut weights = vec![1.0];
    for _ in 0..dim {
        let mut np = Vec::with_capacity(points.len() * n);
        let mut nw = Vec::with_capacity(points.len() * n);
        // axis 0 runs fastest
        for (xi, wi) in x.iter().zip(&w) {
            for (p, pw) in points.iter().zip(&weights) {
                let mut q = p.clone();
                q.push(*xi);
                np.push(q);
                nw.push(pw * wi);
            }
        }
        points = np;
        weights = nw;
    }
    Ok(QuadratureRule { dim, points, weights })
}
