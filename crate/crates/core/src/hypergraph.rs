//! Geometric hypergraphs: flat d-dimensional hyperedges glued along
//! (d-1)-dimensional hypernodes.
//!
//! Every hyperedge is the affine image of the reference cube `[0,1]^d`, given
//! by a corner and `d` pairwise orthogonal edge vectors in the ambient space.
//! Face `2k` is `{xi_k = 0}`, face `2k + 1` is `{xi_k = 1}`; the intrinsic
//! coordinates of a face are the remaining reference coordinates in
//! increasing axis order. Hypernodes carry their own affine frame, and each
//! incidence record stores the isometry translating face coordinates into
//! node coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::quadrature::gauss_rule;

/// Tolerance of the point-for-point check between face and node frames.
pub const GEOMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperEdge {
    pub corner: Vec<f64>,
    /// Edge vectors; their number is the hyperedge dimension.
    pub axes: Vec<Vec<f64>>,
    pub kappa: f64,
}

impl HyperEdge {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn face_count(&self) -> usize {
        2 * self.dim()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.axes.iter().map(|a| norm(a)).collect()
    }

    pub fn measure(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Ambient point of reference coordinates `xi`.
    pub fn point(&self, xi: &[f64]) -> Vec<f64> {
        affine_point(&self.corner, &self.axes, xi)
    }

    /// Reference coordinates of face `face` at face coordinates `s`.
    pub fn face_to_reference(&self, face: usize, s: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let normal_axis = face / 2;
        let mut xi = Vec::with_capacity(d);
        let mut it = s.iter();
        for k in 0..d {
            if k == normal_axis {
                xi.push((face % 2) as f64);
            } else {
                xi.push(*it.next().expect("face coordinate count"));
            }
        }
        xi
    }

    /// Unit outward normal of `face` in the ambient space.
    pub fn outward_normal(&self, face: usize) -> Vec<f64> {
        let a = &self.axes[face / 2];
        let len = norm(a);
        let sign = if face.is_multiple_of(2) { -1.0 } else { 1.0 };
        a.iter().map(|c| sign * c / len).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Interior,
    Neumann,
    Dirichlet,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Interior => "interior",
            NodeKind::Neumann => "neumann",
            NodeKind::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperNode {
    pub corner: Vec<f64>,
    pub axes: Vec<Vec<f64>>,
    pub kind: NodeKind,
}

impl HyperNode {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn measure(&self) -> f64 {
        self.axes.iter().map(|a| norm(a)).product()
    }

    pub fn point(&self, t: &[f64]) -> Vec<f64> {
        affine_point(&self.corner, &self.axes, t)
    }
}

/// Orientation code between a face frame and a node frame.
///
/// Node coordinate `j` is `s[perm[j]]`, or `1 - s[perm[j]]` when `flips[j]`
/// is set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Isometry {
    pub perm: Vec<usize>,
    pub flips: Vec<u8>,
}

impl Isometry {
    pub fn identity(dim: usize) -> Self {
        Self {
            perm: (0..dim).collect(),
            flips: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn is_valid(&self, dim: usize) -> bool {
        if self.perm.len() != dim || self.flips.len() != dim {
            return false;
        }
        let mut seen = vec![false; dim];
        for &p in &self.perm {
            if p >= dim || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        self.flips.iter().all(|&f| f <= 1)
    }

    pub fn face_to_node(&self, s: &[f64]) -> Vec<f64> {
        self.perm
            .iter()
            .zip(&self.flips)
            .map(|(&p, &f)| if f == 1 { 1.0 - s[p] } else { s[p] })
            .collect()
    }

    pub fn node_to_face(&self, t: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.dim()];
        for (j, (&p, &f)) in self.perm.iter().zip(&self.flips).enumerate() {
            s[p] = if f == 1 { 1.0 - t[j] } else { t[j] };
        }
        s
    }

    /// Finds the isometry mapping `edge`'s face onto `node`, if one exists.
    pub fn infer(edge: &HyperEdge, face: usize, node: &HyperNode) -> Option<Isometry> {
        let n = node.dim();
        if edge.dim() != n + 1 {
            return None;
        }
        let face_axes: Vec<&Vec<f64>> = (0..edge.dim())
            .filter(|&k| k != face / 2)
            .map(|k| &edge.axes[k])
            .collect();
        let mut perm = Vec::with_capacity(n);
        let mut flips = Vec::with_capacity(n);
        for b in &node.axes {
            let scale = norm(b).max(1.0);
            let hit = face_axes.iter().enumerate().find_map(|(k, a)| {
                if dist(a, b) <= GEOMETRY_TOL * scale {
                    Some((k, 0u8))
                } else if a.iter().zip(b).all(|(x, y)| (x + y).abs() <= GEOMETRY_TOL * scale) {
                    Some((k, 1u8))
                } else {
                    None
                }
            })?;
            perm.push(hit.0);
            flips.push(hit.1);
        }
        let iso = Isometry { perm, flips };
        if !iso.is_valid(n) {
            return None;
        }
        // corner of the node must be the image of the flipped face corner
        let s0 = iso.node_to_face(&vec![0.0; n]);
        let x = edge.point(&edge.face_to_reference(face, &s0));
        if dist(&x, &node.corner) <= GEOMETRY_TOL * norm(&x).max(1.0) {
            Some(iso)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidenceRecord {
    pub edge: usize,
    pub face: usize,
    pub node: usize,
    #[serde(flatten)]
    pub isometry: Isometry,
}

/// A validated, immutable hypergraph.
#[derive(Clone, Debug)]
pub struct HyperGraph {
    ambient_dim: usize,
    edge_dim: usize,
    edges: Vec<HyperEdge>,
    nodes: Vec<HyperNode>,
    incidences: Vec<IncidenceRecord>,
    /// `edge_faces[e][f]` is the incidence index of face `f` of edge `e`.
    edge_faces: Vec<Vec<usize>>,
    /// Incidence indices touching each node, in incidence order.
    node_incidences: Vec<Vec<usize>>,
}

/// Serialized form of a hypergraph (the interchange file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperGraphFile {
    pub ambient_dim: usize,
    pub edges: Vec<HyperEdge>,
    pub nodes: Vec<HyperNode>,
    pub incidences: Vec<IncidenceRecord>,
}

impl HyperGraph {
    /// Validates the raw parts and builds the hypergraph.
    pub fn build(
        edges: Vec<HyperEdge>,
        nodes: Vec<HyperNode>,
        incidences: Vec<IncidenceRecord>,
    ) -> Result<Self> {
        let first = edges
            .first()
            .ok_or_else(|| Error::Invalid("hypergraph has no hyperedges".into()))?;
        let ambient_dim = first.corner.len();
        let edge_dim = first.dim();
        if !(1..=3).contains(&edge_dim) || edge_dim > ambient_dim {
            return Err(Error::Invalid(format!(
                "hyperedge dimension {edge_dim} unsupported in ambient dimension {ambient_dim}"
            )));
        }

        for (e, edge) in edges.iter().enumerate() {
            if edge.dim() != edge_dim || edge.corner.len() != ambient_dim {
                return Err(Error::Invalid(format!("edge {e} has inconsistent dimensions")));
            }
            if edge.axes.iter().any(|a| a.len() != ambient_dim) {
                return Err(Error::Invalid(format!("edge {e} axis of wrong length")));
            }
            check_frame(&edge.axes).map_err(|m| Error::SingularGeometry(format!("edge {e}: {m}")))?;
            if !(edge.kappa > 0.0) || !edge.kappa.is_finite() {
                return Err(Error::Invalid(format!("edge {e} has non-positive kappa {}", edge.kappa)));
            }
        }
        for (n, node) in nodes.iter().enumerate() {
            if node.dim() + 1 != edge_dim || node.corner.len() != ambient_dim {
                return Err(Error::Invalid(format!("node {n} has inconsistent dimensions")));
            }
            if node.axes.iter().any(|a| a.len() != ambient_dim) {
                return Err(Error::Invalid(format!("node {n} axis of wrong length")));
            }
            check_frame(&node.axes).map_err(|m| Error::SingularGeometry(format!("node {n}: {m}")))?;
        }

        let mut edge_faces = vec![vec![usize::MAX; 2 * edge_dim]; edges.len()];
        let mut node_incidences = vec![Vec::new(); nodes.len()];
        for (idx, inc) in incidences.iter().enumerate() {
            if inc.edge >= edges.len() || inc.node >= nodes.len() || inc.face >= 2 * edge_dim {
                return Err(Error::Invalid(format!("incidence {idx} references out-of-range ids")));
            }
            if !inc.isometry.is_valid(edge_dim - 1) {
                return Err(Error::Invalid(format!("incidence {idx} has an invalid isometry")));
            }
            let slot = &mut edge_faces[inc.edge][inc.face];
            if *slot != usize::MAX {
                return Err(Error::Invalid(format!(
                    "edge {} face {} has more than one incidence",
                    inc.edge, inc.face
                )));
            }
            *slot = idx;
            node_incidences[inc.node].push(idx);
        }
        for (e, faces) in edge_faces.iter().enumerate() {
            if let Some(face) = faces.iter().position(|&i| i == usize::MAX) {
                return Err(Error::DanglingFace { edge: e, face });
            }
        }

        for inc in &incidences {
            let deviation = incidence_deviation(&edges[inc.edge], inc.face, &nodes[inc.node], &inc.isometry);
            if deviation > GEOMETRY_TOL {
                return Err(Error::GeometryMismatch {
                    edge: inc.edge,
                    face: inc.face,
                    node: inc.node,
                    deviation,
                });
            }
        }

        for (n, node) in nodes.iter().enumerate() {
            let degree = node_incidences[n].len();
            let ok = match node.kind {
                NodeKind::Interior => degree >= 2,
                NodeKind::Neumann => degree == 1,
                NodeKind::Dirichlet => degree >= 1,
            };
            if !ok {
                return Err(Error::DegreeMismatch {
                    node: n,
                    kind: node.kind.name(),
                    degree,
                });
            }
        }

        let components = count_components(edges.len(), nodes.len(), &incidences);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }

        Ok(Self {
            ambient_dim,
            edge_dim,
            edges,
            nodes,
            incidences,
            edge_faces,
            node_incidences,
        })
    }

    pub fn from_file(file: HyperGraphFile) -> Result<Self> {
        let g = Self::build(file.edges, file.nodes, file.incidences)?;
        if g.ambient_dim != file.ambient_dim {
            return Err(Error::Invalid(format!(
                "ambient_dim {} disagrees with coordinates of length {}",
                file.ambient_dim, g.ambient_dim
            )));
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn to_file(&self) -> HyperGraphFile {
        HyperGraphFile {
            ambient_dim: self.ambient_dim,
            edges: self.edges.clone(),
            nodes: self.nodes.clone(),
            incidences: self.incidences.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn edges(&self) -> &[HyperEdge] {
        &self.edges
    }

    pub fn nodes(&self) -> &[HyperNode] {
        &self.nodes
    }

    pub fn incidences(&self) -> &[IncidenceRecord] {
        &self.incidences
    }

    pub fn edge(&self, e: usize) -> &HyperEdge {
        &self.edges[e]
    }

    pub fn node(&self, n: usize) -> &HyperNode {
        &self.nodes[n]
    }

    /// Incidence record of face `face` of edge `edge`.
    pub fn face_incidence(&self, edge: usize, face: usize) -> &IncidenceRecord {
        &self.incidences[self.edge_faces[edge][face]]
    }

    pub fn node_incidences(&self, node: usize) -> impl Iterator<Item = &IncidenceRecord> {
        self.node_incidences[node].iter().map(move |&i| &self.incidences[i])
    }

    pub fn degree(&self, node: usize) -> usize {
        self.node_incidences[node].len()
    }

    pub fn has_dirichlet(&self) -> bool {
        self.nodes.iter().any(|n| n.kind == NodeKind::Dirichlet)
    }

    /// Sum of edge measures.
    pub fn measure(&self) -> f64 {
        self.edges.iter().map(HyperEdge::measure).sum()
    }

    /// Sums per-face flux traces into per-node functionals.
    ///
    /// `traces[e][f]` holds the coefficients of the outward normal flux of
    /// edge `e` on face `f` in the face's Legendre basis of per-axis degree
    /// `degree`. The result holds one coefficient vector per node, in the
    /// node's own basis.
    pub fn jump_residual(&self, degree: usize, traces: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
        let nf = (degree + 1).pow((self.edge_dim - 1) as u32);
        if traces.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                got: traces.len(),
            });
        }
        let mut out = vec![vec![0.0; nf]; self.nodes.len()];
        for inc in &self.incidences {
            let faces = &traces[inc.edge];
            if faces.len() != 2 * self.edge_dim {
                return Err(Error::DimensionMismatch {
                    expected: 2 * self.edge_dim,
                    got: faces.len(),
                });
            }
            let trace = &faces[inc.face];
            if trace.len() != nf {
                return Err(Error::BasisMismatch { expected: nf, got: trace.len() });
            }
            let map = crate::local::basis::FaceTransfer::new(&inc.isometry, degree);
            map.face_to_node_add(trace, &mut out[inc.node]);
        }
        Ok(out)
    }
}

/// Largest distance between face and node parameterizations at Gauss points.
pub fn incidence_deviation(edge: &HyperEdge, face: usize, node: &HyperNode, iso: &Isometry) -> f64 {
    let dim = node.dim();
    let rule = gauss_rule(dim, 3).expect("3-point rule");
    rule.points
        .iter()
        .map(|s| {
            let xf = edge.point(&edge.face_to_reference(face, s));
            let xn = node.point(&iso.face_to_node(s));
            dist(&xf, &xn)
        })
        .fold(0.0, f64::max)
}

fn check_frame(axes: &[Vec<f64>]) -> std::result::Result<(), String> {
    for (i, a) in axes.iter().enumerate() {
        let la = norm(a);
        if !(la > 0.0) || !la.is_finite() {
            return Err(format!("axis {i} has zero length"));
        }
        for (j, b) in axes.iter().enumerate().skip(i + 1) {
            let lb = norm(b);
            if dot(a, b).abs() > 1e-12 * la * lb {
                return Err(format!("axes {i} and {j} are not orthogonal"));
            }
        }
    }
    Ok(())
}

fn count_components(n_edges: usize, n_nodes: usize, incidences: &[IncidenceRecord]) -> usize {
    // union-find over edges (0..n_edges) and nodes (n_edges..)
    let mut parent: Vec<usize> = (0..n_edges + n_nodes).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for inc in incidences {
        let a = find(&mut parent, inc.edge);
        let b = find(&mut parent, n_edges + inc.node);
        if a != b {
            parent[a] = b;
        }
    }
    (0..n_edges + n_nodes).filter(|&x| find(&mut parent, x) == x).count()
}

pub(crate) fn affine_point(corner: &[f64], axes: &[Vec<f64>], coords: &[f64]) -> Vec<f64> {
    let mut x = corner.to_vec();
    for (a, &c) in axes.iter().zip(coords) {
        for (xi, ai) in x.iter_mut().zip(a) {
            *xi += c * ai;
        }
    }
    x
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
