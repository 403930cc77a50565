//! Structured bilinear finite elements on thin cross-shaped domains: a
//! rectangular node hull with axis-aligned rectangular arms attached.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{cg_jacobi, CsrMatrix};

/// Axis direction of an arm leaving the node hull.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArmDirection {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "-y")]
    NegY,
}

impl ArmDirection {
    pub const ALL: [ArmDirection; 4] = [ArmDirection::PosX, ArmDirection::PosY, ArmDirection::NegX, ArmDirection::NegY];

    /// Index of the coordinate along the arm (0 for x, 1 for y).
    pub fn axis(self) -> usize {
        match self {
            ArmDirection::PosX | ArmDirection::NegX => 0,
            ArmDirection::PosY | ArmDirection::NegY => 1,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            ArmDirection::PosX | ArmDirection::PosY => 1.0,
            ArmDirection::NegX | ArmDirection::NegY => -1.0,
        }
    }

    /// Point at distance `s` from the origin along the arm midline.
    pub fn point(self, s: f64) -> [f64; 2] {
        let mut p = [0.0; 2];
        p[self.axis()] = self.sign() * s;
        p
    }
}

/// One thin arm of width `thickness * eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinArm {
    pub direction: ArmDirection,
    /// Distance of the far end from the origin.
    pub length: f64,
    /// Thickness factor `d_i`.
    pub thickness: f64,
    pub kappa: f64,
    /// Constant right-hand side on the arm.
    pub source: f64,
    /// Dirichlet value at the far end; `None` leaves it insulated.
    pub far_end: Option<f64>,
}

/// Thin domain `Omega^eps`: node hull `eps * omega` plus arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinDomainSpec {
    pub arms: Vec<ThinArm>,
    pub eps: f64,
    /// Diffusion coefficient on the node hull.
    pub kappa_node: f64,
    /// Nodal source `g`; spread over the hull as `g / (eps |omega|)`.
    pub node_source: f64,
    /// Minimal recession of the arms from the origin, in units of `eps`.
    pub alpha: f64,
}

impl ThinDomainSpec {
    /// Half-extents of `omega` along x and y (in units of `eps`).
    pub fn hull_half_extents(&self) -> [f64; 2] {
        let mut half = [self.alpha; 2];
        for arm in &self.arms {
            let across = 1 - arm.direction.axis();
            half[across] = half[across].max(arm.thickness / 2.0);
        }
        half
    }

    /// `|omega|`, the hull area divided by `eps^2`.
    pub fn omega_measure(&self) -> f64 {
        let [hx, hy] = self.hull_half_extents();
        4.0 * hx * hy
    }

    /// Exact area of `Omega^eps`.
    pub fn area(&self) -> f64 {
        let half = self.hull_half_extents();
        let arms: f64 = self
            .arms
            .iter()
            .map(|a| a.thickness * self.eps * (a.length - half[a.direction.axis()] * self.eps))
            .sum();
        arms + self.eps * self.eps * self.omega_measure()
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() || self.arms.len() > 4 {
            return Err(Error::Invalid(format!("thin domain needs 1 to 4 arms, got {}", self.arms.len())));
        }
        if !(self.eps > 0.0) || !(self.kappa_node > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::Invalid("eps, kappa_node and alpha must be positive".into()));
        }
        for (k, arm) in self.arms.iter().enumerate() {
            if !(arm.length > 0.0 && arm.thickness > 0.0 && arm.kappa > 0.0) {
                return Err(Error::Invalid(format!("arm {k}: length, thickness and kappa must be positive")));
            }
            if self.arms[..k].iter().any(|b| b.direction == arm.direction) {
                return Err(Error::OverlapError(format!("arms share direction {:?}", arm.direction)));
            }
        }
        if self.arms.iter().all(|a| a.far_end.is_none()) {
            return Err(Error::Invalid("at least one arm needs a Dirichlet far end".into()));
        }
        let half = self.hull_half_extents();
        for (k, arm) in self.arms.iter().enumerate() {
            let recess = half[arm.direction.axis()] * self.eps;
            if recess >= arm.length {
                return Err(Error::OverlapError(format!(
                    "arm {k} of length {} lies inside the node hull (recession {recess})",
                    arm.length
                )));
            }
        }
        Ok(())
    }
}

/// Grid resolution for a thin domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshRule {
    /// Spacing across arms and inside the hull, in units of `eps`.
    pub across: f64,
    /// First step along an arm next to the hull, in units of `eps`.
    pub first_along: f64,
    /// Geometric growth of consecutive steps along an arm.
    pub growth: f64,
    /// Largest step along an arm as a fraction of its length (never finer
    /// than the first step).
    pub max_along_fraction: f64,
}

impl Default for MeshRule {
    fn default() -> Self {
        Self {
            across: 0.25,
            first_along: 1.0,
            growth: 1.25,
            max_along_fraction: 1.0 / 32.0,
        }
    }
}

/// Region a cell belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Hull,
    Arm(usize),
}

/// Active cells of a tensor grid covering the thin domain.
#[derive(Clone, Debug)]
pub struct ThinMesh {
    /// Grid lines; lines[0] along x, lines[1] along y.
    pub lines: [Vec<f64>; 2],
    /// `cell_region[iy * (nx - 1) + ix]`; `None` for cells outside.
    cell_region: Vec<Option<Region>>,
    /// Grid point to mesh node, `usize::MAX` when unused.
    node_of_point: Vec<usize>,
    pub points: Vec<[f64; 2]>,
    /// Cells as `(ix, iy, region)`.
    pub cells: Vec<(usize, usize, Region)>,
    pub h: f64,
}

const UNUSED: usize = usize::MAX;

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

/// Steps from 0 to `length` starting at `first`, growing to `cap`.
fn graded_steps(length: f64, first: f64, growth: f64, cap: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut step = first.min(length);
    let mut pos = 0.0;
    while length - pos > 1e-12 {
        let mut next = pos + step;
        if length - next < 0.5 * step {
            next = length;
        }
        out.push(next);
        pos = next;
        step = (step * growth).min(cap);
    }
    out
}

impl ThinMesh {
    fn nx(&self) -> usize {
        self.lines[0].len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    fn node(&self, ix: usize, iy: usize) -> usize {
        self.node_of_point[iy * self.nx() + ix]
    }

    /// Node ids of cell `(ix, iy)` counter-clockwise from the lower left.
    pub fn cell_nodes(&self, ix: usize, iy: usize) -> [usize; 4] {
        [self.node(ix, iy), self.node(ix + 1, iy), self.node(ix + 1, iy + 1), self.node(ix, iy + 1)]
    }

    pub fn cell_size(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.lines[0][ix + 1] - self.lines[0][ix],
            self.lines[1][iy + 1] - self.lines[1][iy],
        )
    }

    pub fn area(&self) -> f64 {
        self.cells
            .iter()
            .map(|&(ix, iy, _)| {
                let (a, b) = self.cell_size(ix, iy);
                a * b
            })
            .sum()
    }

    /// Active cell containing `p` (closed cells; the first match wins).
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let mut candidates = [[0usize; 2]; 2];
        for k in 0..2 {
            let lines = &self.lines[k];
            if p[k] < lines[0] - 1e-12 || p[k] > lines[lines.len() - 1] + 1e-12 {
                return None;
            }
            let upper = lines.partition_point(|&l| l <= p[k]);
            let hi = upper.clamp(1, lines.len() - 1) - 1;
            // a point on a grid line also touches the cell below it
            let lo = if hi > 0 && (p[k] - lines[hi]).abs() < 1e-12 { hi - 1 } else { hi };
            candidates[k] = [hi, lo];
        }
        for &ix in &candidates[0] {
            for &iy in &candidates[1] {
                if self.cell_region[iy * (self.nx() - 1) + ix].is_some() {
                    return Some((ix, iy));
                }
            }
        }
        None
    }
}

/// Builds the tensor grid of `spec` with spacing `h` across the arms.
pub fn build_thin_mesh(spec: &ThinDomainSpec, h: f64, rule: &MeshRule) -> Result<ThinMesh> {
    spec.validate()?;
    let eps = spec.eps;
    let half = spec.hull_half_extents();
    for (k, arm) in spec.arms.iter().enumerate() {
        let width = arm.thickness * eps;
        if width / h < 4.0 - 1e-9 {
            return Err(Error::Invalid(format!("arm {k}: fewer than 4 cells across (h = {h})")));
        }
        let across = 1 - arm.direction.axis();
        if !is_integer(width / (2.0 * h)) || !is_integer((half[across] * eps - width / 2.0) / h) {
            return Err(Error::Invalid(format!("arm {k}: width {width} not aligned with spacing {h}")));
        }
    }
    let mut lines: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for axis in 0..2 {
        let hull = half[axis] * eps;
        let cells = 2.0 * hull / h;
        if !is_integer(cells) {
            return Err(Error::Invalid(format!("hull extent {} not a multiple of h = {h}", 2.0 * hull)));
        }
        let n = cells.round() as usize;
        let mut ls: Vec<f64> = Vec::new();
        for sign in [-1.0, 1.0] {
            let arm = spec.arms.iter().find(|a| a.direction.axis() == axis && a.direction.sign() == sign);
            if let Some(arm) = arm {
                let len = arm.length - hull;
                let cap = (rule.max_along_fraction * arm.length).max(rule.first_along * eps);
                let steps = graded_steps(len, rule.first_along * eps, rule.growth, cap);
                ls.extend(steps.iter().skip(1).map(|s| sign * (hull + s)));
            }
        }
        ls.extend((0..=n).map(|j| -hull + j as f64 * h));
        ls.sort_by(f64::total_cmp);
        ls.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        lines[axis] = ls;
    }

    let (nx, ny) = (lines[0].len(), lines[1].len());
    let mut cell_region = vec![None; (nx - 1) * (ny - 1)];
    let mut cells = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let c = [
                0.5 * (lines[0][ix] + lines[0][ix + 1]),
                0.5 * (lines[1][iy] + lines[1][iy + 1]),
            ];
            let region = if c[0].abs() < half[0] * eps && c[1].abs() < half[1] * eps {
                Some(Region::Hull)
            } else {
                spec.arms.iter().position(|arm| {
                    let a = arm.direction.axis();
                    let along = arm.direction.sign() * c[a];
                    along > half[a] * eps && along < arm.length && c[1 - a].abs() < arm.thickness * eps / 2.0
                })
                .map(Region::Arm)
            };
            if let Some(r) = region {
                cell_region[iy * (nx - 1) + ix] = Some(r);
                cells.push((ix, iy, r));
            }
        }
    }
    let mut node_of_point = vec![UNUSED; nx * ny];
    let mut points = Vec::new();
    for &(ix, iy, _) in &cells {
        for (jx, jy) in [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)] {
            let slot = &mut node_of_point[jy * nx + jx];
            if *slot == UNUSED {
                *slot = points.len();
                points.push([lines[0][jx], lines[1][jy]]);
            }
        }
    }
    Ok(ThinMesh {
        lines,
        cell_region,
        node_of_point,
        points,
        cells,
        h,
    })
}

/// Bilinear element matrices per unit diffusion for an `a x b` cell.
fn element_stiffness(a: f64, b: f64) -> [[f64; 4]; 4] {
    let g = 0.5 / 3f64.sqrt();
    let gauss = [0.5 - g, 0.5 + g];
    let mut k = [[0.0; 4]; 4];
    for &s in &gauss {
        for &t in &gauss {
            // reference gradients of the four shape functions
            let grads = [
                [-(1.0 - t) / a, -(1.0 - s) / b],
                [(1.0 - t) / a, -s / b],
                [t / a, s / b],
                [-t / a, (1.0 - s) / b],
            ];
            let w = 0.25 * a * b;
            for i in 0..4 {
                for j in 0..4 {
                    k[i][j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
    }
    k
}

/// Data of a scalar diffusion problem on a thin mesh.
pub struct FemProblem<'a> {
    pub kappa: &'a dyn Fn(Region) -> f64,
    pub source: &'a dyn Fn(Region) -> f64,
    /// Prescribed value per node, if any.
    pub dirichlet: &'a dyn Fn(usize) -> Option<f64>,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct ThinSolution {
    pub mesh: ThinMesh,
    pub values: Vec<f64>,
    /// `int kappa |grad u|^2`.
    pub energy: f64,
    pub iterations: usize,
    /// Largest weak-form residual over free nodes.
    pub residual: f64,
}

/// Solves `-div(kappa grad u) = f` with natural boundary conditions except
/// at prescribed nodes.
pub fn solve_fem(mesh: ThinMesh, problem: &FemProblem<'_>) -> Result<ThinSolution> {
    let n = mesh.node_count();
    let prescribed: Vec<Option<f64>> = (0..n).map(|i| (problem.dirichlet)(i)).collect();
    let mut free_index = vec![UNUSED; n];
    let mut n_free = 0;
    for (i, p) in prescribed.iter().enumerate() {
        if p.is_none() {
            free_index[i] = n_free;
            n_free += 1;
        }
    }
    if n_free == n {
        return Err(Error::SolveFailure("thin problem without Dirichlet nodes".into()));
    }
    let mut triplets = Vec::with_capacity(16 * mesh.cell_count());
    let mut rhs = vec![0.0; n_free];
    let mut full_load = vec![0.0; n];
    let mut elements = Vec::with_capacity(mesh.cell_count());
    for &(ix, iy, region) in &mesh.cells {
        let (a, b) = mesh.cell_size(ix, iy);
        let kappa = (problem.kappa)(region);
        let mut k = element_stiffness(a, b);
        for row in &mut k {
            for v in row.iter_mut() {
                *v *= kappa;
            }
        }
        let nodes = mesh.cell_nodes(ix, iy);
        let load = (problem.source)(region) * a * b / 4.0;
        for i in 0..4 {
            full_load[nodes[i]] += load;
            let fi = free_index[nodes[i]];
            if fi == UNUSED {
                continue;
            }
            rhs[fi] += load;
            for j in 0..4 {
                match prescribed[nodes[j]] {
                    Some(v) => rhs[fi] -= k[i][j] * v,
                    None => triplets.push((fi, free_index[nodes[j]], k[i][j])),
                }
            }
        }
        elements.push((nodes, k));
    }
    let matrix = CsrMatrix::from_triplets(n_free, &triplets);
    let (free, stats) = cg_jacobi(&matrix, &rhs, problem.tol).map_err(|e| Error::SolveFailure(e.to_string()))?;
    let values: Vec<f64> = (0..n)
        .map(|i| prescribed[i].unwrap_or_else(|| free[free_index[i]]))
        .collect();
    let mut energy = 0.0;
    let mut residual = full_load;
    for (nodes, k) in &elements {
        for i in 0..4 {
            let ku: f64 = (0..4).map(|j| k[i][j] * values[nodes[j]]).sum();
            energy += values[nodes[i]] * ku;
            residual[nodes[i]] -= ku;
        }
    }
    let residual = (0..n)
        .filter(|&i| prescribed[i].is_none())
        .fold(0.0f64, |m, i| m.max(residual[i].abs()));
    Ok(ThinSolution {
        mesh,
        values,
        energy,
        iterations: stats.iterations,
        residual,
    })
}

impl ThinSolution {
    /// Bilinear interpolant at `p`, if `p` lies in the mesh.
    pub fn value_at(&self, p: [f64; 2]) -> Option<f64> {
        let (ix, iy) = self.mesh.locate(p)?;
        let (a, b) = self.mesh.cell_size(ix, iy);
        let s = (p[0] - self.mesh.lines[0][ix]) / a;
        let t = (p[1] - self.mesh.lines[1][iy]) / b;
        let v = self.mesh.cell_nodes(ix, iy).map(|n| self.values[n]);
        Some((1.0 - s) * (1.0 - t) * v[0] + s * (1.0 - t) * v[1] + s * t * v[2] + (1.0 - s) * t * v[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(eps: f64) -> ThinDomainSpec {
        ThinDomainSpec {
            arms: vec![ThinArm {
                direction: ArmDirection::PosX,
                length: 1.0,
                thickness: 1.0,
                kappa: 1.0,
                source: 0.0,
                far_end: Some(0.0),
            }],
            eps,
            kappa_node: 1.0,
            node_source: 0.0,
            alpha: 0.5,
        }
    }

    #[test]
    fn single_strip_is_a_rectangle() {
        let spec = strip(0.1);
        let mesh = build_thin_mesh(&spec, 0.025, &MeshRule::default()).unwrap();
        assert!((mesh.area() - 1.05 * 0.1).abs() < 1e-12);
        assert!((spec.area() - mesh.area()).abs() < 1e-12);
        let nx = mesh.lines[0].len();
        let ny = mesh.lines[1].len();
        assert_eq!(mesh.cell_count(), (nx - 1) * (ny - 1));
        assert_eq!(ny, 5);
    }

    #[test]
    fn linear_patch_test() {
        let spec = strip(0.1);
        let mesh = build_thin_mesh(&spec, 0.025, &MeshRule::default()).unwrap();
        let (x0, x1) = (mesh.lines[0][0], *mesh.lines[0].last().unwrap());
        let (y0, y1) = (mesh.lines[1][0], *mesh.lines[1].last().unwrap());
        let pts = mesh.points.clone();
        let boundary = move |i: usize| {
            let [x, y] = pts[i];
            let on = [x0, x1].iter().any(|b| (x - b).abs() < 1e-12) || [y0, y1].iter().any(|b| (y - b).abs() < 1e-12);
            on.then_some(x + 2.0 * y)
        };
        let problem = FemProblem {
            kappa: &|_| 1.0,
            source: &|_| 0.0,
            dirichlet: &boundary,
            tol: 1e-14,
        };
        let sol = solve_fem(mesh, &problem).unwrap();
        for (p, v) in sol.mesh.points.iter().zip(&sol.values) {
            assert!((v - (p[0] + 2.0 * p[1])).abs() < 1e-11);
        }
        assert!((sol.value_at([0.3, 0.01]).unwrap() - 0.32).abs() < 1e-11);
    }

    #[test]
    fn overlap_and_alignment_guards() {
        let mut spec = strip(0.1);
        spec.eps = 4.0;
        assert!(matches!(build_thin_mesh(&spec, 1.0, &MeshRule::default()), Err(Error::OverlapError(_))));
        let spec = strip(0.1);
        assert!(build_thin_mesh(&spec, 0.03, &MeshRule::default()).is_err());
        assert!(build_thin_mesh(&spec, 0.05, &MeshRule::default()).is_err());
        let mut twin = strip(0.1);
        twin.arms.push(twin.arms[0].clone());
        assert!(matches!(twin.validate(), Err(Error::OverlapError(_))));
    }

    #[test]
    fn graded_steps_end_exactly() {
        let s = graded_steps(0.95, 0.1, 1.25, 0.2);
        assert_eq!(*s.last().unwrap(), 0.95);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!((s[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn element_matrix_rows_sum_to_zero() {
        let k = element_stiffness(0.3, 0.1);
        for row in &k {
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
        }
        // diagonal of a bilinear element: (b/a + a/b) / 3
        assert!((k[0][0] - (0.1 / 0.3 + 0.3 / 0.1) / 3.0).abs() < 1e-13);
    }
}
