//! Error norms, convergence orders and the cube-filling convergence study.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{dist, HyperGraph};
use crate::mesh::{cube_filling_guarded, with_kappa, FillingSpec, MeshGuard};
use crate::problem::ExactSolution;
use crate::solve::{solve_problem, SolutionFields, SolveOptions};

/// `sqrt(sum_E int_E (U - u)^2)` with the solver's volume quadrature.
pub fn l2_error(graph: &HyperGraph, fields: &SolutionFields, exact: &ExactSolution) -> f64 {
    let rule = &fields.basis.volume_rule;
    let mut total = 0.0;
    for (e, edge) in graph.edges().iter().enumerate() {
        let measure = edge.measure();
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let diff = fields.eval_u(e, xi) - exact.value(&edge.point(xi));
            total += measure * w * diff * diff;
        }
    }
    total.sqrt()
}

/// L2 error of the flux `Q` against `-kappa grad u` projected on each edge.
pub fn flux_l2_error(graph: &HyperGraph, fields: &SolutionFields, exact: &ExactSolution) -> f64 {
    let rule = &fields.basis.volume_rule;
    let mut total = 0.0;
    for (e, edge) in graph.edges().iter().enumerate() {
        let measure = edge.measure();
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let x = edge.point(xi);
            let grad = exact.gradient(&x);
            let q = fields.eval_flux(graph, e, xi);
            // tangential part of the exact flux in the edge frame
            let mut exact_q = vec![0.0; x.len()];
            for axis in &edge.axes {
                let len2: f64 = axis.iter().map(|a| a * a).sum();
                let c: f64 = axis.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>() / len2;
                for (o, a) in exact_q.iter_mut().zip(axis) {
                    *o -= edge.kappa * c * a;
                }
            }
            let d = dist(&q, &exact_q);
            total += measure * w * d * d;
        }
    }
    total.sqrt()
}

/// Orders `log2(e_{k-1} / e_k)` of consecutive errors.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::NonPositiveError(bad));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// A sweep of filling meshes solved with one method configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub meshes: Vec<FillingSpec>,
    pub solve: SolveOptions,
    /// Exact-solution catalog key.
    pub exact: String,
    /// Diffusion coefficient on every hyperedge.
    pub kappa: f64,
    pub record_walltime: bool,
    pub guard: MeshGuard,
}

impl StudyPlan {
    pub fn new(meshes: Vec<FillingSpec>, solve: SolveOptions) -> Self {
        Self {
            meshes,
            solve,
            exact: "paper_quadratic".into(),
            kappa: 1.0,
            record_walltime: false,
            guard: MeshGuard::default(),
        }
    }

    /// Filling levels `levels` at fixed refinement.
    pub fn filling(edge_dim: usize, levels: std::ops::RangeInclusive<u32>, refinement: u32, solve: SolveOptions) -> Self {
        Self::new(levels.map(|i| FillingSpec::new(edge_dim, i, refinement)).collect(), solve)
    }

    /// Refinement levels `levels` at fixed filling.
    pub fn refinement(edge_dim: usize, filling: u32, levels: std::ops::RangeInclusive<u32>, solve: SolveOptions) -> Self {
        Self::new(levels.map(|r| FillingSpec::new(edge_dim, filling, r)).collect(), solve)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub d: usize,
    pub i: u32,
    pub r: u32,
    pub p: usize,
    pub dofs: usize,
    pub l2_error: f64,
    pub eoc: Option<f64>,
    pub tau: f64,
    pub iterations: usize,
    pub conservation_defect: f64,
    pub walltime_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub tau: f64,
    pub tol: f64,
    pub walltime_s: f64,
    /// For degrees `>= 2`: the largest error over all rows, which should
    /// vanish because quadratics are reproduced exactly.
    pub exactness_max_error: Option<f64>,
}

pub const CSV_HEADER: &str = "d,i,r,p,dofs,l2_error,eoc,tau,walltime_s";

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let eoc = row.eoc.map(|e| format!("{e:.4}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6e},{},{},{:.3}",
                row.d, row.i, row.r, row.p, row.dofs, row.l2_error, eoc, row.tau, row.walltime_s
            );
        }
        out
    }

    pub fn eocs(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.eoc).collect()
    }

    pub fn last_eoc(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.eoc)
    }
}

/// Consecutive rows form a sweep step when they share `d` and `p` and the
/// mesh size halves in exactly one of filling or refinement.
fn is_halving_step(prev: &StudyRow, next: &StudyRow) -> bool {
    prev.d == next.d
        && prev.p == next.p
        && ((next.i == prev.i + 1 && next.r == prev.r) || (next.r == prev.r + 1 && next.i == prev.i))
}

/// Solves every mesh of the plan in order, returning errors and orders.
pub fn convergence_study(plan: &StudyPlan) -> Result<StudyReport> {
    let start = Instant::now();
    let mut rows: Vec<StudyRow> = Vec::with_capacity(plan.meshes.len());
    for spec in &plan.meshes {
        let row_start = Instant::now();
        let graph = with_kappa(&cube_filling_guarded(*spec, &plan.guard)?, plan.kappa)?;
        let exact = ExactSolution::from_catalog(&plan.exact, graph.ambient_dim())?;
        let fields = solve_problem(&graph, &exact, &plan.solve)?;
        let l2 = l2_error(&graph, &fields, &exact);
        let mut row = StudyRow {
            d: spec.edge_dim,
            i: spec.filling,
            r: spec.refinement,
            p: plan.solve.degree,
            dofs: fields.dofmap.total,
            l2_error: l2,
            eoc: None,
            tau: plan.solve.tau,
            iterations: fields.stats.iterations,
            conservation_defect: fields.conservation.defect(),
            walltime_s: if plan.record_walltime { row_start.elapsed().as_secs_f64() } else { 0.0 },
        };
        if let Some(prev) = rows.last() {
            if is_halving_step(prev, &row) && prev.l2_error > 0.0 && row.l2_error > 0.0 {
                row.eoc = Some(eoc(&[prev.l2_error, row.l2_error])?[0]);
            }
        }
        rows.push(row);
    }
    let exactness_max_error = (plan.solve.degree >= 2).then(|| rows.iter().fold(0.0f64, |m, r| m.max(r.l2_error)));
    Ok(StudyReport {
        rows,
        tau: plan.solve.tau,
        tol: plan.solve.tol,
        walltime_s: if plan.record_walltime { start.elapsed().as_secs_f64() } else { 0.0 },
        exactness_max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_examples() {
        assert!((eoc(&[4.05e-2, 1.00e-2]).unwrap()[0] - 2.0).abs() < 0.02);
        assert_eq!(eoc(&[3.0, 3.0]).unwrap(), vec![0.0]);
        let r = eoc(&[8e-3, 2e-3, 5e-4]).unwrap();
        assert!(r.iter().all(|x| (x - 2.0).abs() < 1e-12));
        assert!(matches!(eoc(&[1.0, 0.0]), Err(Error::NonPositiveError(_))));
        assert!(matches!(eoc(&[-1.0]), Err(Error::NonPositiveError(_))));
    }

    #[test]
    fn quadratic_is_reproduced_with_p2() {
        let plan = StudyPlan::refinement(2, 1, 0..=1, SolveOptions { degree: 2, tol: 1e-13, ..Default::default() });
        let report = convergence_study(&plan).unwrap();
        assert!(report.exactness_max_error.unwrap() < 1e-9);
        assert!(report.rows.iter().all(|r| r.eoc.is_none() || r.l2_error < 1e-9));
    }

    #[test]
    fn csv_layout() {
        let plan = StudyPlan::filling(3, 0..=1, 0, SolveOptions::default());
        let report = convergence_study(&plan).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[6], "");
        assert_eq!(first[8], "0.000");
        assert!(report.rows[1].eoc.is_some());
    }

    #[test]
    fn flux_error_vanishes_for_linear_data() {
        let graph = cube_filling_guarded(FillingSpec::new(2, 1, 0), &MeshGuard::default()).unwrap();
        let exact = ExactSolution::from_catalog("linear", 3).unwrap();
        let fields = solve_problem(&graph, &exact, &SolveOptions { tol: 1e-13, ..Default::default() }).unwrap();
        assert!(l2_error(&graph, &fields, &exact) < 1e-10);
        assert!(flux_l2_error(&graph, &fields, &exact) < 1e-10);
    }
}
