//! Thin-domain laboratory: solves diffusion on thin 2D junction domains and
//! compares midline traces with the limit graph problem as `eps -> 0`.

pub mod thin;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{star_graph_with_arms, StarArm};
use crate::problem::NodalData;
use crate::solve::{solve_problem, SolutionFields, SolveOptions};

pub use thin::{build_thin_mesh, solve_fem, ArmDirection, FemProblem, MeshRule, Region, ThinArm, ThinDomainSpec, ThinMesh, ThinSolution};

/// Tolerance of the thin-domain CG solve.
pub const THIN_TOL: f64 = 1e-12;

impl ThinDomainSpec {
    /// Built-in sweep scenarios.
    pub fn scenario(name: &str, eps: f64) -> Result<Self> {
        let arm = |direction, thickness, far_end| ThinArm {
            direction,
            length: 1.0,
            thickness,
            kappa: 1.0,
            source: 0.0,
            far_end,
        };
        use ArmDirection::*;
        let mut spec = ThinDomainSpec {
            arms: Vec::new(),
            eps,
            kappa_node: 1.0,
            node_source: 0.0,
            alpha: 0.5,
        };
        match name {
            "cross" => {
                spec.arms = vec![arm(PosX, 1.0, Some(0.0)), arm(PosY, 1.0, Some(0.0)), arm(NegX, 1.0, Some(1.0))];
            }
            "weighted" => {
                spec.arms = vec![arm(PosX, 2.0, Some(0.0)), arm(PosY, 1.0, Some(0.0)), arm(NegX, 1.0, Some(1.0))];
            }
            "nodal-source" => {
                spec.arms = vec![arm(PosX, 1.0, Some(0.0)), arm(PosY, 1.0, None), arm(NegX, 1.0, None)];
                spec.node_source = 1.0;
            }
            "arm-load" => {
                spec.arms = vec![
                    arm(PosX, 1.0, Some(0.0)),
                    arm(PosY, 1.0, Some(0.0)),
                    arm(NegX, 1.0, Some(0.0)),
                    arm(NegY, 1.0, None),
                ];
                for a in &mut spec.arms {
                    a.source = 1.0;
                }
            }
            other => return Err(Error::Invalid(format!("unknown thin-domain scenario '{other}'"))),
        }
        Ok(spec)
    }

    pub fn scenario_names() -> &'static [&'static str] {
        &["cross", "weighted", "nodal-source", "arm-load"]
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    /// Default spacing across arms: a quarter of the thinnest arm width,
    /// but not coarser than `eps / 4`.
    pub fn default_spacing(&self, rule: &MeshRule) -> f64 {
        let thinnest = self.arms.iter().fold(1.0f64, |m, a| m.min(a.thickness));
        rule.across * self.eps * thinnest
    }
}

/// Solves the thin-domain problem with far-end Dirichlet values imposed on
/// mesh nodes.
pub fn solve_thin(spec: &ThinDomainSpec, h: f64, rule: &MeshRule) -> Result<ThinSolution> {
    let mesh = build_thin_mesh(spec, h, rule)?;
    let hull_source = spec.node_source / (spec.eps * spec.omega_measure());
    let far: Vec<Option<(usize, f64, f64)>> = spec
        .arms
        .iter()
        .map(|a| a.far_end.map(|v| (a.direction.axis(), a.direction.sign() * a.length, v)))
        .collect();
    let pts = mesh.points.clone();
    let dirichlet = move |i: usize| {
        let p = pts[i];
        far.iter().flatten().find(|(axis, pos, _)| (p[*axis] - pos).abs() < 1e-12).map(|&(_, _, v)| v)
    };
    let kappa = |r: Region| match r {
        Region::Hull => spec.kappa_node,
        Region::Arm(k) => spec.arms[k].kappa,
    };
    let source = |r: Region| match r {
        Region::Hull => hull_source,
        Region::Arm(k) => spec.arms[k].source,
    };
    solve_fem(
        mesh,
        &FemProblem {
            kappa: &kappa,
            source: &source,
            dirichlet: &dirichlet,
            tol: THIN_TOL,
        },
    )
}

/// Coefficients of the limit graph problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitWeighting {
    /// `kappa_i` and `f_i` multiplied by the thickness factor `d_i`.
    Weighted,
    /// Raw `kappa_i` and `f_i`.
    Unweighted,
}

/// Solution of the star-graph limit problem.
#[derive(Clone, Debug)]
pub struct GraphReference {
    pub lengths: Vec<f64>,
    pub fields: SolutionFields,
}

impl GraphReference {
    /// Value on arm `arm` at distance `s` from the junction.
    pub fn value(&self, arm: usize, s: f64) -> f64 {
        self.fields.eval_u(arm, &[s / self.lengths[arm]])
    }

    pub fn junction_value(&self) -> f64 {
        self.value(0, 0.0)
    }
}

pub fn limit_graph_solution(spec: &ThinDomainSpec, weighting: LimitWeighting) -> Result<GraphReference> {
    let factor = |a: &ThinArm| match weighting {
        LimitWeighting::Weighted => a.thickness,
        LimitWeighting::Unweighted => 1.0,
    };
    let arms: Vec<StarArm> = spec
        .arms
        .iter()
        .map(|a| StarArm::new(a.length, factor(a) * a.kappa, a.far_end.is_some()))
        .collect();
    let graph = star_graph_with_arms(&arms)?;
    let mut dirichlet = vec![0.0];
    dirichlet.extend(spec.arms.iter().map(|a| a.far_end.unwrap_or(0.0)));
    let data = NodalData {
        dirichlet,
        edge_source: spec.arms.iter().map(|a| factor(a) * a.source).collect(),
        node_source: vec![spec.node_source],
    };
    let opts = SolveOptions {
        degree: 2,
        tol: 1e-14,
        jobs: 1,
        ..SolveOptions::default()
    };
    let fields = solve_problem(&graph, &data, &opts)?;
    Ok(GraphReference {
        lengths: spec.arms.iter().map(|a| a.length).collect(),
        fields,
    })
}

/// Per-arm `L2(0, L_i)` distance between the thin midline trace and the
/// graph solution.
pub fn midline_discrepancy(spec: &ThinDomainSpec, thin: &ThinSolution, graph: &GraphReference) -> Result<Vec<f64>> {
    let g = 0.5 * (0.6f64).sqrt();
    let nodes = [0.5 - g, 0.5, 0.5 + g];
    let weights = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    spec.arms
        .iter()
        .enumerate()
        .map(|(k, arm)| {
            let dir = arm.direction;
            let mut breaks: Vec<f64> = thin.mesh.lines[dir.axis()]
                .iter()
                .map(|&l| dir.sign() * l)
                .filter(|&s| s > 0.0 && s < arm.length)
                .collect();
            breaks.push(0.0);
            breaks.push(arm.length);
            breaks.sort_by(f64::total_cmp);
            let mut total = 0.0;
            for w in breaks.windows(2) {
                let len = w[1] - w[0];
                for (t, wt) in nodes.iter().zip(&weights) {
                    let s = w[0] + t * len;
                    let u = thin
                        .value_at(dir.point(s))
                        .ok_or_else(|| Error::SolveFailure(format!("midline point {s} of arm {k} outside mesh")))?;
                    let diff = u - graph.value(k, s);
                    total += wt * len * diff * diff;
                }
            }
            Ok(total.sqrt())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub h: f64,
    /// Arm index, or "all" for the combined norm.
    pub arm: String,
    pub midline_l2_discrepancy: f64,
    pub energy_over_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "eps,h,arm,midline_l2_discrepancy,energy_over_eps";

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6e},{:.6e}",
                r.eps, r.h, r.arm, r.midline_l2_discrepancy, r.energy_over_eps
            );
        }
        out
    }

    /// Combined discrepancy per `eps`, in sweep order.
    pub fn total_discrepancy(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.arm == "all").map(|r| r.midline_l2_discrepancy).collect()
    }

    pub fn energy_over_eps(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.arm == "all").map(|r| r.energy_over_eps).collect()
    }
}

/// Solves the thin problem for every `eps` and measures the distance to the
/// limit graph solution.
pub fn epsilon_sweep(
    template: &ThinDomainSpec,
    eps_list: &[f64],
    rule: &MeshRule,
    weighting: LimitWeighting,
) -> Result<SweepReport> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Invalid("eps list must be non-empty and strictly decreasing".into()));
    }
    let graph = limit_graph_solution(template, weighting)?;
    let per_eps: Vec<Vec<SweepRow>> = eps_list
        .par_iter()
        .map(|&eps| {
            let spec = template.with_eps(eps);
            let h = spec.default_spacing(rule);
            let thin = solve_thin(&spec, h, rule)?;
            let disc = midline_discrepancy(&spec, &thin, &graph)?;
            let energy_over_eps = thin.energy / eps;
            let total = disc.iter().map(|d| d * d).sum::<f64>().sqrt();
            let mut rows: Vec<SweepRow> = disc
                .iter()
                .enumerate()
                .map(|(k, &d)| SweepRow {
                    eps,
                    h,
                    arm: k.to_string(),
                    midline_l2_discrepancy: d,
                    energy_over_eps,
                })
                .collect();
            rows.push(SweepRow {
                eps,
                h,
                arm: "all".into(),
                midline_l2_discrepancy: total,
                energy_over_eps,
            });
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        rows: per_eps.into_iter().flatten().collect(),
    })
}
