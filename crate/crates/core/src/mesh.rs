//! Hypergraph factories: skeletons of refined unit cubes and star graphs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{HyperEdge, HyperGraph, HyperNode, IncidenceRecord, Isometry, NodeKind};

/// Upper bounds on filling and refinement levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshGuard {
    pub max_filling: u32,
    pub max_refinement: u32,
}

impl Default for MeshGuard {
    fn default() -> Self {
        Self {
            max_filling: 6,
            max_refinement: 4,
        }
    }
}

/// The d-dimensional skeleton of the unit cube, `filling` times uniformly
/// refined, with every d-face split `refinement` more times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillingSpec {
    pub edge_dim: usize,
    pub filling: u32,
    pub refinement: u32,
}

impl FillingSpec {
    pub fn new(edge_dim: usize, filling: u32, refinement: u32) -> Self {
        Self {
            edge_dim,
            filling,
            refinement,
        }
    }

    pub const AMBIENT_DIM: usize = 3;

    /// Closed-form hyperedge count `C(3,d) (2^i + 1)^{3-d} (2^{i+r})^d`.
    pub fn expected_edges(&self) -> usize {
        let coarse = (1usize << self.filling) + 1;
        let fine = 1usize << (self.filling + self.refinement);
        binomial(3, self.edge_dim) * coarse.pow(3 - self.edge_dim as u32) * fine.pow(self.edge_dim as u32)
    }

    fn validate(&self, guard: &MeshGuard) -> Result<()> {
        if !(1..=3).contains(&self.edge_dim) {
            return Err(Error::Invalid(format!("edge dimension {} not in 1..=3", self.edge_dim)));
        }
        if self.filling > guard.max_filling || self.refinement > guard.max_refinement {
            return Err(Error::GuardExceeded(format!(
                "filling {} / refinement {} exceed limits {} / {}",
                self.filling, self.refinement, guard.max_filling, guard.max_refinement
            )));
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

/// Builds the cube-skeleton hypergraph with the default guard.
pub fn cube_filling(spec: FillingSpec) -> Result<HyperGraph> {
    cube_filling_guarded(spec, &MeshGuard::default())
}

pub fn cube_filling_guarded(spec: FillingSpec, guard: &MeshGuard) -> Result<HyperGraph> {
    spec.validate(guard)?;
    let d = spec.edge_dim;
    let n = 1i64 << (spec.filling + spec.refinement);
    let coarse_step = 1i64 << spec.refinement;
    let h = 1.0 / n as f64;

    let unit = |k: usize| -> Vec<f64> {
        let mut v = vec![0.0; 3];
        v[k] = h;
        v
    };
    let to_point = |c: [i64; 3]| -> Vec<f64> { c.iter().map(|&x| x as f64 * h).collect() };

    let axis_sets: Vec<Vec<usize>> = match d {
        1 => vec![vec![0], vec![1], vec![2]],
        2 => vec![vec![0, 1], vec![0, 2], vec![1, 2]],
        _ => vec![vec![0, 1, 2]],
    };

    let mut edges = Vec::with_capacity(spec.expected_edges());
    let mut nodes: Vec<HyperNode> = Vec::new();
    let mut incidences = Vec::with_capacity(spec.expected_edges() * 2 * d);
    let mut node_ids: HashMap<([i64; 3], u8), usize> = HashMap::new();

    for axes in &axis_sets {
        let in_set = |k: usize| axes.contains(&k);
        let range = |k: usize| -> Vec<i64> {
            if in_set(k) {
                (0..n).collect()
            } else {
                (0..=n).step_by(coarse_step as usize).collect()
            }
        };
        let (r0, r1, r2) = (range(0), range(1), range(2));
        for &c2 in &r2 {
            for &c1 in &r1 {
                for &c0 in &r0 {
                    let corner = [c0, c1, c2];
                    let edge_id = edges.len();
                    edges.push(HyperEdge {
                        corner: to_point(corner),
                        axes: axes.iter().map(|&k| unit(k)).collect(),
                        kappa: 1.0,
                    });
                    for (j, &k) in axes.iter().enumerate() {
                        for side in 0..2 {
                            let mut nc = corner;
                            nc[k] += side;
                            let node_axes: Vec<usize> = axes.iter().copied().filter(|&a| a != k).collect();
                            let mask = node_axes.iter().fold(0u8, |m, &a| m | (1 << a));
                            let id = *node_ids.entry((nc, mask)).or_insert_with(|| {
                                let on_boundary =
                                    (0..3).any(|a| mask & (1 << a) == 0 && (nc[a] == 0 || nc[a] == n));
                                nodes.push(HyperNode {
                                    corner: to_point(nc),
                                    axes: node_axes.iter().map(|&a| unit(a)).collect(),
                                    kind: if on_boundary { NodeKind::Dirichlet } else { NodeKind::Interior },
                                });
                                nodes.len() - 1
                            });
                            incidences.push(IncidenceRecord {
                                edge: edge_id,
                                face: 2 * j + side as usize,
                                node: id,
                                isometry: Isometry::identity(d - 1),
                            });
                        }
                    }
                }
            }
        }
    }
    HyperGraph::build(edges, nodes, incidences)
}

/// One interval arm of a star graph, leaving the center along its own axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarArm {
    pub length: f64,
    pub kappa: f64,
    /// Whether the outer end is a Dirichlet node (otherwise Neumann).
    pub dirichlet: bool,
}

impl StarArm {
    pub fn new(length: f64, kappa: f64, dirichlet: bool) -> Self {
        Self { length, kappa, dirichlet }
    }
}

/// Star graph with unit diffusion: `lengths.len()` intervals joined at a
/// center node (id 0); outer node of arm `k` has id `k + 1`.
pub fn star_graph(lengths: &[f64], dirichlet: &[bool]) -> Result<HyperGraph> {
    if lengths.len() != dirichlet.len() {
        return Err(Error::DimensionMismatch {
            expected: lengths.len(),
            got: dirichlet.len(),
        });
    }
    let arms: Vec<StarArm> = lengths
        .iter()
        .zip(dirichlet)
        .map(|(&l, &dl)| StarArm::new(l, 1.0, dl))
        .collect();
    star_graph_with_arms(&arms)
}

/// Star graph embedded in `R^m`, arm `k` along the `k`-th unit vector.
pub fn star_graph_with_arms(arms: &[StarArm]) -> Result<HyperGraph> {
    let m = arms.len();
    if m == 0 {
        return Err(Error::Invalid("star graph needs at least one arm".into()));
    }
    let origin = vec![0.0; m];
    let mut nodes = vec![HyperNode {
        corner: origin.clone(),
        axes: vec![],
        kind: if m >= 2 { NodeKind::Interior } else { NodeKind::Neumann },
    }];
    let mut edges = Vec::with_capacity(m);
    let mut incidences = Vec::with_capacity(2 * m);
    for (k, arm) in arms.iter().enumerate() {
        let mut axis = vec![0.0; m];
        axis[k] = arm.length;
        nodes.push(HyperNode {
            corner: axis.clone(),
            axes: vec![],
            kind: if arm.dirichlet { NodeKind::Dirichlet } else { NodeKind::Neumann },
        });
        edges.push(HyperEdge {
            corner: origin.clone(),
            axes: vec![axis],
            kappa: arm.kappa,
        });
        incidences.push(IncidenceRecord { edge: k, face: 0, node: 0, isometry: Isometry::identity(0) });
        incidences.push(IncidenceRecord { edge: k, face: 1, node: k + 1, isometry: Isometry::identity(0) });
    }
    HyperGraph::build(edges, nodes, incidences)
}

/// A single interval `[0, length]` with Dirichlet nodes at both ends.
pub fn single_edge(length: f64, kappa: f64) -> Result<HyperGraph> {
    HyperGraph::build(
        vec![HyperEdge { corner: vec![0.0], axes: vec![vec![length]], kappa }],
        vec![
            HyperNode { corner: vec![0.0], axes: vec![], kind: NodeKind::Dirichlet },
            HyperNode { corner: vec![length], axes: vec![], kind: NodeKind::Dirichlet },
        ],
        vec![
            IncidenceRecord { edge: 0, face: 0, node: 0, isometry: Isometry::identity(0) },
            IncidenceRecord { edge: 0, face: 1, node: 1, isometry: Isometry::identity(0) },
        ],
    )
}

/// Copy of `graph` with diffusion coefficient `kappa` on every hyperedge.
pub fn with_kappa(graph: &HyperGraph, kappa: f64) -> Result<HyperGraph> {
    let mut file = graph.to_file();
    for e in &mut file.edges {
        e.kappa = kappa;
    }
    HyperGraph::from_file(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Independent node count: all (d-1)-cells of the fine lattice that lie
    /// in the coarse d-skeleton, enumerated by brute force.
    fn brute_node_count(spec: FillingSpec) -> usize {
        let n = 1i64 << (spec.filling + spec.refinement);
        let step = 1i64 << spec.refinement;
        let coarse = |x: i64| x % step == 0;
        let mut set = HashSet::new();
        for mask in 0u8..8 {
            if mask.count_ones() as usize != spec.edge_dim - 1 {
                continue;
            }
            for c0 in 0..=n {
                for c1 in 0..=n {
                    for c2 in 0..=n {
                        let c = [c0, c1, c2];
                        if (0..3).any(|a| mask & (1 << a) != 0 && c[a] == n) {
                            continue;
                        }
                        // contained in a d-face: some free axis k added to the
                        // cell's axes leaves all remaining fixed coords coarse
                        let ok = (0..3).filter(|&k| mask & (1 << k) == 0).any(|k| {
                            (0..3).all(|a| a == k || mask & (1 << a) != 0 || coarse(c[a]))
                        });
                        if ok {
                            set.insert((c, mask));
                        }
                    }
                }
            }
        }
        set.len()
    }

    #[test]
    fn closed_form_counts() {
        for d in 1..=3 {
            for i in 0..=3 {
                for r in 0..=2 {
                    if i + r > 4 {
                        continue;
                    }
                    let spec = FillingSpec::new(d, i, r);
                    let g = cube_filling(spec).unwrap();
                    assert_eq!(g.edges().len(), spec.expected_edges(), "{spec:?}");
                    assert_eq!(g.nodes().len(), brute_node_count(spec), "{spec:?}");
                    let degree_sum: usize = (0..g.nodes().len()).map(|n| g.degree(n)).sum();
                    assert_eq!(degree_sum, g.edges().len() * 2 * d);
                }
            }
        }
    }

    #[test]
    fn cube_faces() {
        let g = cube_filling(FillingSpec::new(2, 0, 0)).unwrap();
        assert_eq!(g.edges().len(), 6);
        assert_eq!(g.nodes().len(), 12);
        assert!(g.nodes().iter().all(|n| n.kind == NodeKind::Dirichlet));
        assert!((0..12).all(|n| g.degree(n) == 2));
    }

    #[test]
    fn grid_counts() {
        assert_eq!(cube_filling(FillingSpec::new(1, 1, 0)).unwrap().edges().len(), 54);
        assert_eq!(cube_filling(FillingSpec::new(2, 1, 0)).unwrap().edges().len(), 36);
    }

    #[test]
    fn interior_degrees_for_surfaces() {
        for i in 1..=3 {
            for r in 0..=2 {
                let g = cube_filling(FillingSpec::new(2, i, r)).unwrap();
                for (n, node) in g.nodes().iter().enumerate() {
                    if node.kind == NodeKind::Interior {
                        assert!(matches!(g.degree(n), 2 | 4), "degree {}", g.degree(n));
                    }
                }
            }
        }
    }

    #[test]
    fn volume_is_conserved() {
        for i in 0..=3 {
            for r in 0..=2 {
                if i + r > 4 {
                    continue;
                }
                let g = cube_filling(FillingSpec::new(3, i, r)).unwrap();
                assert!((g.measure() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_marking_requires_closure_in_boundary() {
        // the segment x = y = 1/2, z in [0, 1/2] touches z = 0 only at an end
        let g = cube_filling(FillingSpec::new(2, 1, 0)).unwrap();
        let node = g
            .nodes()
            .iter()
            .find(|n| n.corner == vec![0.5, 0.5, 0.0] && n.axes[0][2] > 0.0)
            .unwrap();
        assert_eq!(node.kind, NodeKind::Interior);
        let node = g
            .nodes()
            .iter()
            .find(|n| n.corner == vec![0.5, 0.0, 0.0] && n.axes[0][2] > 0.0)
            .unwrap();
        assert_eq!(node.kind, NodeKind::Dirichlet);
    }

    #[test]
    fn guard() {
        assert!(matches!(cube_filling(FillingSpec::new(3, 7, 0)), Err(Error::GuardExceeded(_))));
        assert!(matches!(cube_filling(FillingSpec::new(1, 0, 5)), Err(Error::GuardExceeded(_))));
        let loose = MeshGuard { max_filling: 7, max_refinement: 4 };
        assert!(cube_filling_guarded(FillingSpec::new(1, 7, 0), &loose).is_ok());
    }

    #[test]
    fn stars() {
        let g = star_graph(&[1.0], &[true]).unwrap();
        assert_eq!(g.edges().len(), 1);
        let g = star_graph(&[1.0; 3], &[true; 3]).unwrap();
        assert_eq!(g.degree(0), 3);
        assert_eq!(g.node(0).kind, NodeKind::Interior);
        assert!((1..4).all(|n| g.degree(n) == 1 && g.node(n).kind == NodeKind::Dirichlet));
        let g = star_graph(&[1.0; 3], &[true, false, false]).unwrap();
        assert_eq!(g.node(2).kind, NodeKind::Neumann);
    }
}
