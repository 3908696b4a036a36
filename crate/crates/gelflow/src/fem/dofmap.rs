use std::collections::BTreeMap;

use crate::error::FemError;
use crate::mesh::{BoundaryTag, Mesh, Point};

use super::basis::{eval_basis, ElementGeometry, ElementKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    ScalarP1,
    ScalarP2,
    /// Two-component P2, interleaved: scalar node `s` owns dofs `2s` (x) and
    /// `2s + 1` (y).
    VectorP2,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::ScalarP1 => "scalar P1",
            SpaceKind::ScalarP2 => "scalar P2",
            SpaceKind::VectorP2 => "vector P2",
        }
    }

    pub fn element(self) -> ElementKind {
        match self {
            SpaceKind::ScalarP1 => ElementKind::P1,
            _ => ElementKind::P2,
        }
    }

    pub fn components(self) -> usize {
        match self {
            SpaceKind::VectorP2 => 2,
            _ => 1,
        }
    }
}

/// Local-to-global numbering for one space on one mesh.
///
/// Scalar nodes are the mesh vertices followed (for P2) by the edge
/// midpoints, so the midpoint of edge `e` is node `num_vertices + e`.
/// Local vector dofs are ordered `2a + c` for local node `a`, component `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    kind: SpaceKind,
    num_nodes: usize,
    local: usize,
    cell_dofs: Vec<usize>,
    boundary: BTreeMap<BoundaryTag, Vec<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, kind: SpaceKind) -> Self {
        let nv = mesh.num_vertices();
        let el = kind.element();
        let nc = kind.components();
        let nl = el.num_local();
        let num_nodes = match el {
            ElementKind::P1 => nv,
            ElementKind::P2 => nv + mesh.num_edges(),
        };
        let mut cell_dofs = Vec::with_capacity(mesh.num_triangles() * nl * nc);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let te = mesh.triangle_edges()[t];
            let nodes: Vec<usize> = match el {
                ElementKind::P1 => tri.to_vec(),
                ElementKind::P2 => vec![tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]],
            };
            for s in nodes {
                for c in 0..nc {
                    cell_dofs.push(nc * s + c);
                }
            }
        }
        let mut boundary: BTreeMap<BoundaryTag, Vec<usize>> = BTreeMap::new();
        for e in mesh.boundary() {
            let list = boundary.entry(e.tag).or_default();
            let mut nodes = vec![e.vertices[0], e.vertices[1]];
            if el == ElementKind::P2 {
                nodes.push(nv + e.edge);
            }
            for s in nodes {
                for c in 0..nc {
                    list.push(nc * s + c);
                }
            }
        }
        for list in boundary.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        DofMap {
            kind,
            num_nodes,
            local: nl * nc,
            cell_dofs,
            boundary,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn num_dofs(&self) -> usize {
        self.num_nodes * self.kind.components()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_local(&self) -> usize {
        self.local
    }

    pub fn cell_dofs(&self, t: usize) -> &[usize] {
        &self.cell_dofs[t * self.local..(t + 1) * self.local]
    }

    pub fn boundary_tags(&self) -> impl Iterator<Item = BoundaryTag> + '_ {
        self.boundary.keys().copied()
    }

    pub fn boundary_dofs(&self, tag: BoundaryTag) -> &[usize] {
        self.boundary.get(&tag).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Coordinates of the scalar nodes.
    pub fn node_points(&self, mesh: &Mesh) -> Vec<Point> {
        let mut pts = mesh.vertices().to_vec();
        if self.kind.element() == ElementKind::P2 {
            pts.extend(mesh.edges().iter().map(|&[a, b]| {
                let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
                [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
            }));
        }
        pts
    }

    pub(crate) fn expect(&self, kind: SpaceKind) -> Result<(), FemError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(FemError::Space {
                expected: kind.name(),
                found: self.kind.name(),
            })
        }
    }
}

/// Coefficient vector tied to a dof map.
#[derive(Debug, Clone, Copy)]
pub struct FeField<'a> {
    dofmap: &'a DofMap,
    coeffs: &'a [f64],
}

impl<'a> FeField<'a> {
    pub fn new(dofmap: &'a DofMap, coeffs: &'a [f64]) -> Result<Self, FemError> {
        if coeffs.len() != dofmap.num_dofs() {
            return Err(FemError::Dimension {
                expected: dofmap.num_dofs(),
                found: coeffs.len(),
            });
        }
        Ok(FeField { dofmap, coeffs })
    }

    pub fn dofmap(&self) -> &DofMap {
        self.dofmap
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs
    }

    /// Value of each component at a barycentric point of triangle `t`.
    pub fn value(&self, t: usize, l: [f64; 3]) -> [f64; 2] {
        let nc = self.dofmap.kind.components();
        let e = eval_basis(self.dofmap.kind.element(), l);
        let dofs = self.dofmap.cell_dofs(t);
        let mut out = [0.0; 2];
        for (a, phi) in e.values.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate().take(nc) {
                *o += phi * self.coeffs[dofs[nc * a + c]];
            }
        }
        out
    }

    /// Gradient of each component: `out[c] = grad(component c)`.
    pub fn gradient(&self, geo: &ElementGeometry, t: usize, l: [f64; 3]) -> [[f64; 2]; 2] {
        let nc = self.dofmap.kind.components();
        let e = eval_basis(self.dofmap.kind.element(), l);
        let dofs = self.dofmap.cell_dofs(t);
        let mut out = [[0.0; 2]; 2];
        for (a, r) in e.ref_grads.iter().enumerate() {
            let g = geo.map_gradient(*r);
            for (c, o) in out.iter_mut().enumerate().take(nc) {
                let v = self.coeffs[dofs[nc * a + c]];
                o[0] += g[0] * v;
                o[1] += g[1] * v;
            }
        }
        out
    }
}
