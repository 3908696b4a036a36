use crate::error::FemError;
use crate::linsolve::CsrMatrix;
use crate::mesh::{BoundaryEdge, BoundaryTag, Mesh, Point};
use crate::params::BoundaryLoad;

use super::basis::{ElementGeometry, ElementKind, Tabulation};
use super::dofmap::{DofMap, FeField, SpaceKind};
use super::quadrature::{edge_rule, triangle_rule};

fn geometry(mesh: &Mesh, t: usize) -> ElementGeometry {
    ElementGeometry::new(mesh.triangle_points(t))
}

/// P2 trace on a boundary edge: scalar nodes `(a, b, midpoint)` and their
/// basis values at edge parameter `s` (0 at `a`, 1 at `b`).
fn p2_trace(mesh: &Mesh, e: &BoundaryEdge, s: f64) -> ([usize; 3], [f64; 3]) {
    let nv = mesh.num_vertices();
    (
        [e.vertices[0], e.vertices[1], nv + e.edge],
        [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)],
    )
}

/// Iterates boundary quadrature points as `(edge, s, point, weight)`.
fn boundary_points(mesh: &Mesh) -> impl Iterator<Item = (&BoundaryEdge, f64, Point, f64)> {
    mesh.boundary().iter().flat_map(move |e| {
        let [p, q] = mesh.boundary_edge_points(e);
        let len = mesh.boundary_edge_length(e);
        edge_rule().into_iter().map(move |(s, w)| {
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            (e, s, x, w * len)
        })
    })
}

/// `int_Omega g dx` with the degree-4 rule.
pub fn integrate(mesh: &Mesh, g: impl Fn(Point) -> f64) -> f64 {
    let rule = triangle_rule();
    (0..mesh.num_triangles())
        .map(|t| {
            let geo = geometry(mesh, t);
            rule.scaled(geo.area)
                .map(|(l, w)| w * g(geo.point(l)))
                .sum::<f64>()
        })
        .sum()
}

/// `oint h(x, normal, tag) dS` with three Gauss points per edge.
pub fn boundary_integral(mesh: &Mesh, h: impl Fn(Point, [f64; 2], BoundaryTag) -> f64) -> f64 {
    boundary_points(mesh)
        .map(|(e, _, x, w)| w * h(x, e.normal, e.tag))
        .sum()
}

/// `A[2i+c][2j+c] = beta int grad(phi_i) . grad(phi_j)`.
pub fn assemble_vector_laplacian(mesh: &Mesh, vdm: &DofMap, beta: f64) -> CsrMatrix {
    assert_eq!(vdm.kind(), SpaceKind::VectorP2);
    let rule = triangle_rule();
    let tab = Tabulation::new(ElementKind::P2, &rule);
    let mut trip = Vec::with_capacity(mesh.num_triangles() * 72);
    for t in 0..mesh.num_triangles() {
        let geo = geometry(mesh, t);
        let mut k = [[0.0; 6]; 6];
        for (q, (_, w)) in rule.scaled(geo.area).enumerate() {
            let g = tab.grads(&geo, q);
            for a in 0..6 {
                for b in 0..6 {
                    k[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        let dofs = vdm.cell_dofs(t);
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..2 {
                    trip.push((dofs[2 * a + c], dofs[2 * b + c], beta * k[a][b]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(vdm.num_dofs(), vdm.num_dofs(), &trip)
}

/// `B[k][2i+c] = int psi_k d(phi_i)/dx_c`, so `(B v)_k = (div v, psi_k)`.
pub fn assemble_divergence(mesh: &Mesh, vdm: &DofMap, sdm: &DofMap) -> CsrMatrix {
    assert_eq!(vdm.kind(), SpaceKind::VectorP2);
    assert_eq!(sdm.kind(), SpaceKind::ScalarP1);
    let rule = triangle_rule();
    let t2 = Tabulation::new(ElementKind::P2, &rule);
    let t1 = Tabulation::new(ElementKind::P1, &rule);
    let mut trip = Vec::with_capacity(mesh.num_triangles() * 36);
    for t in 0..mesh.num_triangles() {
        let geo = geometry(mesh, t);
        let mut b = [[[0.0; 2]; 6]; 3];
        for (q, (_, w)) in rule.scaled(geo.area).enumerate() {
            let g = t2.grads(&geo, q);
            let psi = &t1.at[q].values;
            for k in 0..3 {
                for a in 0..6 {
                    for c in 0..2 {
                        b[k][a][c] += w * psi[k] * g[a][c];
                    }
                }
            }
        }
        let vd = vdm.cell_dofs(t);
        let sd = sdm.cell_dofs(t);
        for k in 0..3 {
            for a in 0..6 {
                for c in 0..2 {
                    trip.push((sd[k], vd[2 * a + c], b[k][a][c]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(sdm.num_dofs(), vdm.num_dofs(), &trip)
}

fn assemble_p1(mesh: &Mesh, local: impl Fn(&ElementGeometry) -> [[f64; 3]; 3]) -> CsrMatrix {
    let n = mesh.num_vertices();
    let mut trip = Vec::with_capacity(mesh.num_triangles() * 9);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let m = local(&geometry(mesh, t));
        for a in 0..3 {
            for b in 0..3 {
                trip.push((tri[a], tri[b], m[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

/// P1 mass matrix `int psi_i psi_j`.
pub fn assemble_mass_p1(mesh: &Mesh) -> CsrMatrix {
    let rule = triangle_rule();
    let tab = Tabulation::new(ElementKind::P1, &rule);
    assemble_p1(mesh, |geo| {
        let mut m = [[0.0; 3]; 3];
        for (q, (_, w)) in rule.scaled(geo.area).enumerate() {
            let v = &tab.at[q].values;
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += w * v[a] * v[b];
                }
            }
        }
        m
    })
}

/// P1 stiffness matrix `int grad(psi_i) . grad(psi_j)`.
pub fn assemble_stiffness_p1(mesh: &Mesh) -> CsrMatrix {
    assemble_p1(mesh, |geo| {
        let g = geo.grad_lambda;
        let mut s = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                s[a][b] = geo.area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        s
    })
}

/// `F[2i+c] = oint f_c phi_i dS` for the load evaluated at time `t`.
pub fn assemble_boundary_load(mesh: &Mesh, vdm: &DofMap, f: &BoundaryLoad, t: f64) -> Vec<f64> {
    assert_eq!(vdm.kind(), SpaceKind::VectorP2);
    let mut out = vec![0.0; vdm.num_dofs()];
    for (e, s, x, w) in boundary_points(mesh) {
        let fx = f.eval(x, e.normal, e.tag, t);
        let (nodes, phi) = p2_trace(mesh, e, s);
        for a in 0..3 {
            for c in 0..2 {
                out[2 * nodes[a] + c] += w * fx[c] * phi[a];
            }
        }
    }
    out
}

/// Linear functionals used as constraint rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRows {
    /// `int (phi_i)_x dx`
    pub mean_u_x: Vec<f64>,
    /// `int (phi_i)_y dx`
    pub mean_u_y: Vec<f64>,
    /// `oint phi_i . normal dS`
    pub flux_u: Vec<f64>,
    /// `int psi_k dx`
    pub mean_ptilde: Vec<f64>,
}

pub fn assemble_moment_rows(mesh: &Mesh, vdm: &DofMap, sdm: &DofMap) -> MomentRows {
    assert_eq!(vdm.kind(), SpaceKind::VectorP2);
    assert_eq!(sdm.kind(), SpaceKind::ScalarP1);
    let ones = assemble_load_vector_p2(mesh, vdm, |_| [1.0, 1.0]);
    let mut mean_u_x = vec![0.0; vdm.num_dofs()];
    let mut mean_u_y = vec![0.0; vdm.num_dofs()];
    for s in 0..vdm.num_nodes() {
        mean_u_x[2 * s] = ones[2 * s];
        mean_u_y[2 * s + 1] = ones[2 * s + 1];
    }
    let mut flux_u = vec![0.0; vdm.num_dofs()];
    for (e, s, _, w) in boundary_points(mesh) {
        let (nodes, phi) = p2_trace(mesh, e, s);
        for a in 0..3 {
            for c in 0..2 {
                flux_u[2 * nodes[a] + c] += w * phi[a] * e.normal[c];
            }
        }
    }
    MomentRows {
        mean_u_x,
        mean_u_y,
        flux_u,
        mean_ptilde: assemble_load_p1(mesh, |_| 1.0),
    }
}

/// `b[k] = int g psi_k dx`.
pub fn assemble_load_p1(mesh: &Mesh, g: impl Fn(Point) -> f64) -> Vec<f64> {
    let rule = triangle_rule();
    let tab = Tabulation::new(ElementKind::P1, &rule);
    let mut out = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = geometry(mesh, t);
        for (q, (l, w)) in rule.scaled(geo.area).enumerate() {
            let gv = g(geo.point(l));
            for a in 0..3 {
                out[tri[a]] += w * gv * tab.at[q].values[a];
            }
        }
    }
    out
}

/// `b[2i+c] = int g_c phi_i dx`.
pub fn assemble_load_vector_p2(mesh: &Mesh, vdm: &DofMap, g: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let rule = triangle_rule();
    let tab = Tabulation::new(ElementKind::P2, &rule);
    let mut out = vec![0.0; vdm.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let geo = geometry(mesh, t);
        let dofs = vdm.cell_dofs(t);
        for (q, (l, w)) in rule.scaled(geo.area).enumerate() {
            let gv = g(geo.point(l));
            for a in 0..6 {
                let phi = tab.at[q].values[a];
                out[dofs[2 * a]] += w * gv[0] * phi;
                out[dofs[2 * a + 1]] += w * gv[1] * phi;
            }
        }
    }
    out
}

/// `b[2i+c] = int grad(w_c) . grad(phi_i) dx` where `grad_w(x)[c]` is the
/// gradient of component `c`.
pub fn assemble_gradient_load(
    mesh: &Mesh,
    vdm: &DofMap,
    grad_w: impl Fn(Point) -> [[f64; 2]; 2],
) -> Vec<f64> {
    let rule = triangle_rule();
    let tab = Tabulation::new(ElementKind::P2, &rule);
    let mut out = vec![0.0; vdm.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let geo = geometry(mesh, t);
        let dofs = vdm.cell_dofs(t);
        for (q, (l, w)) in rule.scaled(geo.area).enumerate() {
            let gw = grad_w(geo.point(l));
            let g = tab.grads(&geo, q);
            for a in 0..6 {
                for c in 0..2 {
                    out[dofs[2 * a + c]] += w * (gw[c][0] * g[a][0] + gw[c][1] * g[a][1]);
                }
            }
        }
    }
    out
}

/// `b[k] = oint h(x, normal, tag) psi_k dS`.
pub fn assemble_boundary_load_p1(
    mesh: &Mesh,
    h: impl Fn(Point, [f64; 2], BoundaryTag) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; mesh.num_vertices()];
    for (e, s, x, w) in boundary_points(mesh) {
        let hv = w * h(x, e.normal, e.tag);
        out[e.vertices[0]] += hv * (1.0 - s);
        out[e.vertices[1]] += hv * s;
    }
    out
}

pub fn interpolate_p1(mesh: &Mesh, g: impl Fn(Point) -> f64) -> Vec<f64> {
    mesh.vertices().iter().map(|&x| g(x)).collect()
}

pub fn interpolate_vector_p2(mesh: &Mesh, vdm: &DofMap, u: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    vdm.node_points(mesh)
        .into_iter()
        .flat_map(u)
        .collect()
}

/// Divergence of a vector P2 field at a barycentric point of triangle `t`.
pub fn divergence_at(mesh: &Mesh, field: &FeField<'_>, t: usize, l: [f64; 3]) -> f64 {
    let g = field.gradient(&geometry(mesh, t), t, l);
    g[0][0] + g[1][1]
}

/// Domain and boundary functionals of a discrete state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    /// `int q dx`
    pub int_q: f64,
    /// `int p~ dx`
    pub int_ptilde: f64,
    /// `oint u . normal dS`
    pub flux_u: f64,
    /// `<f, u>`
    pub load_u: f64,
    /// `oint f . x dS`
    pub moment_f: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_functionals(
    mesh: &Mesh,
    vdm: &DofMap,
    sdm: &DofMap,
    u: &[f64],
    q: &[f64],
    ptilde: &[f64],
    f: &BoundaryLoad,
    t: f64,
) -> Result<Functionals, FemError> {
    vdm.expect(SpaceKind::VectorP2)?;
    sdm.expect(SpaceKind::ScalarP1)?;
    FeField::new(vdm, u)?;
    FeField::new(sdm, q)?;
    FeField::new(sdm, ptilde)?;
    let rule = triangle_rule();
    let (mut int_q, mut int_ptilde) = (0.0, 0.0);
    for (tt, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(tt);
        for (l, w) in rule.scaled(area) {
            for a in 0..3 {
                int_q += w * l[a] * q[tri[a]];
                int_ptilde += w * l[a] * ptilde[tri[a]];
            }
        }
    }
    let (mut flux_u, mut load_u, mut moment_f) = (0.0, 0.0, 0.0);
    for (e, s, x, w) in boundary_points(mesh) {
        let (nodes, phi) = p2_trace(mesh, e, s);
        let mut uv = [0.0; 2];
        for a in 0..3 {
            uv[0] += phi[a] * u[2 * nodes[a]];
            uv[1] += phi[a] * u[2 * nodes[a] + 1];
        }
        let fv = f.eval(x, e.normal, e.tag, t);
        flux_u += w * (uv[0] * e.normal[0] + uv[1] * e.normal[1]);
        load_u += w * (fv[0] * uv[0] + fv[1] * uv[1]);
        moment_f += w * (fv[0] * x[0] + fv[1] * x[1]);
    }
    Ok(Functionals {
        int_q,
        int_ptilde,
        flux_u,
        load_u,
        moment_f,
    })
}
