//! Brute-force reference assembly.
//!
//! Shape functions come from inverting the Vandermonde matrix of the
//! monomials at the physical nodes, integration uses a 7-point degree-5
//! rule in physical coordinates, and the global numbering is rebuilt from
//! the mesh (vertices first, then `nv + edge id`, vector dof `2 s + c`).
//! Nothing here shares code with the library's assembly.

#![allow(clippy::needless_range_loop)]

use gelflow::mesh::Mesh;

type Dense = Vec<Vec<f64>>;

pub struct Reference {
    pub laplacian: Dense,
    pub divergence: Dense,
    pub mass: Dense,
    pub stiffness: Dense,
    pub mean_u_x: Vec<f64>,
    pub mean_u_y: Vec<f64>,
    pub flux_u: Vec<f64>,
    pub mean_ptilde: Vec<f64>,
}

/// Points (barycentric) and weights summing to one.
fn rule7() -> Vec<([f64; 3], f64)> {
    let s = 15f64.sqrt();
    let a = (6.0 - s) / 21.0;
    let b = (6.0 + s) / 21.0;
    let wa = (155.0 - s) / 1200.0;
    let wb = (155.0 + s) / 1200.0;
    let mut r = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
    for (p, w) in [(a, wa), (b, wb)] {
        let q = 1.0 - 2.0 * p;
        r.push(([p, p, q], w));
        r.push(([p, q, p], w));
        r.push(([q, p, p], w));
    }
    r
}

/// Gauss-Legendre on [0, 1], 4 points.
fn gauss4() -> [(f64, f64); 4] {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30f64.sqrt()) / 36.0;
    let wb = (18.0 - 30f64.sqrt()) / 36.0;
    [
        (0.5 * (1.0 - b), 0.5 * wb),
        (0.5 * (1.0 - a), 0.5 * wa),
        (0.5 * (1.0 + a), 0.5 * wa),
        (0.5 * (1.0 + b), 0.5 * wb),
    ]
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut m: Dense) -> Dense {
    let n = m.len();
    let mut inv: Dense = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let d = m[c][c];
        assert!(d.abs() > 1e-14, "singular Vandermonde matrix");
        for j in 0..n {
            m[c][j] /= d;
            inv[c][j] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = m[i][c];
                for j in 0..n {
                    m[i][j] -= f * m[c][j];
                    inv[i][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

/// Nodal basis of degree `deg` (1 or 2) on the given nodes: values and
/// gradients at `x`.
struct Basis {
    coef: Dense,
    deg: usize,
}

impl Basis {
    fn monomials(deg: usize, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (a, b) = (x[0], x[1]);
        if deg == 1 {
            (vec![1.0, a, b], vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        } else {
            (
                vec![1.0, a, b, a * a, a * b, b * b],
                vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0 * a, 0.0], [b, a], [0.0, 2.0 * b]],
            )
        }
    }

    fn new(deg: usize, nodes: &[[f64; 2]]) -> Self {
        let v: Dense = nodes.iter().map(|&p| Self::monomials(deg, p).0).collect();
        // row j of V is the monomials at node j, so basis j has coefficients
        // in column j of V^{-1}
        Basis { coef: invert(v), deg }
    }

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (m, dm) = Self::monomials(self.deg, x);
        let n = m.len();
        let mut val = vec![0.0; n];
        let mut grad = vec![[0.0; 2]; n];
        for j in 0..n {
            for k in 0..n {
                val[j] += self.coef[k][j] * m[k];
                grad[j][0] += self.coef[k][j] * dm[k][0];
                grad[j][1] += self.coef[k][j] * dm[k][1];
            }
        }
        (val, grad)
    }
}

fn edge_id(mesh: &Mesh, a: usize, b: usize) -> usize {
    let key = [a.min(b), a.max(b)];
    mesh.edges().iter().position(|e| *e == key).expect("edge present")
}

pub fn assemble(mesh: &Mesh, beta: f64) -> Reference {
    let nv = mesh.num_vertices();
    let ns = nv + mesh.num_edges();
    let nu = 2 * ns;
    let zeros = |r: usize, c: usize| vec![vec![0.0; c]; r];
    let mut out = Reference {
        laplacian: zeros(nu, nu),
        divergence: zeros(nv, nu),
        mass: zeros(nv, nv),
        stiffness: zeros(nv, nv),
        mean_u_x: vec![0.0; nu],
        mean_u_y: vec![0.0; nu],
        flux_u: vec![0.0; nu],
        mean_ptilde: vec![0.0; nv],
    };
    let rule = rule7();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let mid = |i: usize, j: usize| [(p[i][0] + p[j][0]) / 2.0, (p[i][1] + p[j][1]) / 2.0];
        let nodes2 = [p[0], p[1], p[2], mid(0, 1), mid(1, 2), mid(2, 0)];
        let glob2 = [
            tri[0],
            tri[1],
            tri[2],
            nv + edge_id(mesh, tri[0], tri[1]),
            nv + edge_id(mesh, tri[1], tri[2]),
            nv + edge_id(mesh, tri[2], tri[0]),
        ];
        let b1 = Basis::new(1, &p);
        let b2 = Basis::new(2, &nodes2);
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
        for (l, w) in &rule {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let w = w * area;
            let (v1, g1) = b1.eval(x);
            let (v2, g2) = b2.eval(x);
            for i in 0..3 {
                out.mean_ptilde[tri[i]] += w * v1[i];
                for j in 0..3 {
                    out.mass[tri[i]][tri[j]] += w * v1[i] * v1[j];
                    out.stiffness[tri[i]][tri[j]] += w * (g1[i][0] * g1[j][0] + g1[i][1] * g1[j][1]);
                }
                for s in 0..6 {
                    for c in 0..2 {
                        out.divergence[tri[i]][2 * glob2[s] + c] += w * v1[i] * g2[s][c];
                    }
                }
            }
            for s in 0..6 {
                out.mean_u_x[2 * glob2[s]] += w * v2[s];
                out.mean_u_y[2 * glob2[s] + 1] += w * v2[s];
                for r in 0..6 {
                    let a = beta * (g2[s][0] * g2[r][0] + g2[s][1] * g2[r][1]);
                    for c in 0..2 {
                        out.laplacian[2 * glob2[s] + c][2 * glob2[r] + c] += w * a;
                    }
                }
            }
        }
    }
    // traces of the P2 basis on an edge are the 1-D quadratic Lagrange
    // functions at its ends and midpoint
    for e in mesh.boundary() {
        let [a, b] = e.vertices;
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let m = nv + edge_id(mesh, a, b);
        for (s, w) in gauss4() {
            let phi = [(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)];
            for (node, v) in [a, m, b].into_iter().zip(phi) {
                for c in 0..2 {
                    out.flux_u[2 * node + c] += w * len * v * e.normal[c];
                }
            }
        }
    }
    out
}
