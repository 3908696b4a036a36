//! Conforming triangulations of planar domains.
//!
//! Triangles are stored counter-clockwise. Boundary edges are oriented so
//! that the domain lies on their left, which makes the outward normal of an
//! edge `a -> b` equal to the unit vector `(dy, -dx) / |d|`.
//!
//! Local edge `k` of a triangle joins local vertices `k` and `(k + 1) % 3`.
//! The quadratic element places its local node `3 + k` at the midpoint of
//! local edge `k`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::MeshError;

pub type Point = [f64; 2];
pub type BoundaryTag = u32;

pub const TAG_LEFT: BoundaryTag = 1;
pub const TAG_RIGHT: BoundaryTag = 2;
pub const TAG_BOTTOM: BoundaryTag = 3;
pub const TAG_TOP: BoundaryTag = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    /// Oriented with the domain on the left.
    pub vertices: [usize; 2],
    /// Outward unit normal.
    pub normal: [f64; 2],
    pub tag: BoundaryTag,
    /// Index of the unique triangle containing the edge.
    pub triangle: usize,
    /// Index into [`Mesh::edges`].
    pub edge: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.boundary == other.boundary
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh and validates every structural invariant.
    ///
    /// Boundary records may be given in either orientation; they are
    /// re-oriented to match their parent triangle.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<(usize, usize, BoundaryTag)>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(MeshError::Validation("mesh has no triangles".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(MeshError::Validation(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(MeshError::Validation(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Validation(format!(
                    "triangle {t} has repeated vertices"
                )));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(MeshError::Validation(format!(
                    "negative area in triangle {t} (signed area {area:e})"
                )));
            }
        }

        // edge -> (edge id, incident (triangle, forward?) list)
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut incidence: Vec<Vec<(usize, bool)>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = edge_key(a, b);
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    incidence.push(Vec::new());
                    edges.len() - 1
                });
                incidence[id].push((t, a == key.0));
                te[k] = id;
            }
            triangle_edges.push(te);
        }
        for (id, inc) in incidence.iter().enumerate() {
            match inc.len() {
                1 => {}
                2 if inc[0].1 != inc[1].1 => {}
                2 => {
                    return Err(MeshError::Validation(format!(
                        "inconsistent orientation across edge {:?}",
                        edges[id]
                    )))
                }
                n => {
                    return Err(MeshError::Validation(format!(
                        "non-manifold edge {:?} shared by {n} triangles",
                        edges[id]
                    )))
                }
            }
        }

        let mut listed = vec![false; edges.len()];
        let mut bedges = Vec::with_capacity(boundary.len());
        for &(a, b, tag) in &boundary {
            let id = match edge_ids.get(&edge_key(a, b)) {
                Some(&id) if incidence[id].len() == 1 => id,
                _ => {
                    return Err(MeshError::Validation(format!(
                        "boundary not closed: record ({a}, {b}) is not a boundary edge of the triangulation"
                    )))
                }
            };
            if listed[id] {
                return Err(MeshError::Validation(format!(
                    "boundary edge ({a}, {b}) listed twice"
                )));
            }
            listed[id] = true;
            let (t, forward) = incidence[id][0];
            let e = edges[id];
            let vertices_oriented = if forward { [e[0], e[1]] } else { [e[1], e[0]] };
            let p = vertices[vertices_oriented[0]];
            let q = vertices[vertices_oriented[1]];
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dy);
            bedges.push(BoundaryEdge {
                vertices: vertices_oriented,
                normal: [dy / len, -dx / len],
                tag,
                triangle: t,
                edge: id,
            });
        }
        for (id, inc) in incidence.iter().enumerate() {
            if inc.len() == 1 && !listed[id] {
                return Err(MeshError::Validation(format!(
                    "boundary not closed: edge {:?} lies on the mesh boundary but has no boundary record",
                    edges[id]
                )));
            }
        }
        let mut out_deg = vec![0u32; nv];
        let mut in_deg = vec![0u32; nv];
        for e in &bedges {
            out_deg[e.vertices[0]] += 1;
            in_deg[e.vertices[1]] += 1;
        }
        if let Some(v) = (0..nv).find(|&v| out_deg[v] != in_deg[v] || out_deg[v] > 1) {
            return Err(MeshError::Validation(format!(
                "boundary not closed: vertex {v} has {} outgoing and {} incoming boundary edges",
                out_deg[v], in_deg[v]
            )));
        }

        Ok(Mesh {
            vertices,
            triangles,
            boundary: bedges,
            edges,
            triangle_edges,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Unique undirected edges, each stored with the smaller vertex first.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge ids of the three local edges of each triangle.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area enclosed by the boundary loops (shoelace formula).
    pub fn boundary_polygon_area(&self) -> f64 {
        self.boundary
            .iter()
            .map(|e| {
                let p = self.vertices[e.vertices[0]];
                let q = self.vertices[e.vertices[1]];
                0.5 * (p[0] * q[1] - q[0] * p[1])
            })
            .sum()
    }

    pub fn boundary_edge_points(&self, e: &BoundaryEdge) -> [Point; 2] {
        [self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]]
    }

    pub fn boundary_edge_length(&self, e: &BoundaryEdge) -> f64 {
        let [p, q] = self.boundary_edge_points(e);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), v| (sx + v[0], sy + v[1]));
        [sx / n, sy / n]
    }
}

/// Maximum edge length over all triangles.
pub fn mesh_size(m: &Mesh) -> f64 {
    m.edges
        .iter()
        .map(|&[a, b]| {
            let (p, q) = (m.vertices[a], m.vertices[b]);
            (q[0] - p[0]).hypot(q[1] - p[1])
        })
        .fold(0.0, f64::max)
}

/// Structured `nx` x `ny` grid, each cell split along its lower-left to
/// upper-right diagonal. Tags: 1 left, 2 right, 3 bottom, 4 top.
pub fn gen_rect_mesh(nx: usize, ny: usize, lower: Point, upper: Point) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument(format!(
            "cell counts must be positive, got {nx} x {ny}"
        )));
    }
    if !(upper[0] > lower[0] && upper[1] > lower[1]) {
        return Err(MeshError::InvalidArgument(format!(
            "degenerate rectangle {lower:?} .. {upper:?}"
        )));
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = lower[1] + (upper[1] - lower[1]) * j as f64 / ny as f64;
        for i in 0..=nx {
            let x = lower[0] + (upper[0] - lower[0]) * i as f64 / nx as f64;
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push((idx(i, 0), idx(i + 1, 0), TAG_BOTTOM));
    }
    for j in 0..ny {
        boundary.push((idx(nx, j), idx(nx, j + 1), TAG_RIGHT));
    }
    for i in (0..nx).rev() {
        boundary.push((idx(i + 1, ny), idx(i, ny), TAG_TOP));
    }
    for j in (0..ny).rev() {
        boundary.push((idx(0, j + 1), idx(0, j), TAG_LEFT));
    }
    Mesh::new(vertices, triangles, boundary)
}

/// Polar-structured mesh of the polygon inscribed in the ellipse
/// `x^2/a^2 + y^2/b^2 <= 1`.
///
/// Ring `i` (of `n_r`) carries `round(n_theta * i / n_r)` points (at least
/// three); the outer ring has exactly `n_theta`. Boundary tags are the
/// angular quadrant (1..=4) of each edge midpoint.
pub fn gen_ellipse_mesh(a: f64, b: f64, n_r: usize, n_theta: usize) -> Result<Mesh, MeshError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(MeshError::InvalidArgument(format!(
            "semi-axes must be positive, got a = {a}, b = {b}"
        )));
    }
    if n_r == 0 || n_theta < 3 {
        return Err(MeshError::InvalidArgument(format!(
            "need n_r >= 1 and n_theta >= 3, got n_r = {n_r}, n_theta = {n_theta}"
        )));
    }
    use std::f64::consts::TAU;
    let ring_count = |i: usize| -> usize {
        if i == n_r {
            n_theta
        } else {
            ((n_theta as f64 * i as f64 / n_r as f64).round() as usize).max(3)
        }
    };
    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; n_r + 1];
    for i in 1..=n_r {
        ring_start[i] = vertices.len();
        let m = ring_count(i);
        let rho = i as f64 / n_r as f64;
        for j in 0..m {
            let th = TAU * j as f64 / m as f64;
            vertices.push([a * rho * th.cos(), b * rho * th.sin()]);
        }
    }
    let mut triangles = Vec::new();
    let m1 = ring_count(1);
    for j in 0..m1 {
        triangles.push([0, ring_start[1] + j, ring_start[1] + (j + 1) % m1]);
    }
    for i in 1..n_r {
        let (m_in, m_out) = (ring_count(i), ring_count(i + 1));
        let vin = |j: usize| ring_start[i] + j % m_in;
        let vout = |k: usize| ring_start[i + 1] + k % m_out;
        let ang_in = |j: usize| j as f64 / m_in as f64;
        let ang_out = |k: usize| k as f64 / m_out as f64;
        let (mut j, mut k) = (0usize, 0usize);
        while j < m_in || k < m_out {
            let advance_out = k < m_out && (j == m_in || ang_out(k + 1) <= ang_in(j + 1) + 1e-12);
            if advance_out {
                triangles.push([vin(j), vout(k), vout(k + 1)]);
                k += 1;
            } else {
                triangles.push([vin(j), vout(k), vin(j + 1)]);
                j += 1;
            }
        }
    }
    let s = ring_start[n_r];
    let mut boundary = Vec::with_capacity(n_theta);
    for j in 0..n_theta {
        let (p, q) = (s + j, s + (j + 1) % n_theta);
        let mx = 0.5 * (vertices[p][0] + vertices[q][0]);
        let my = 0.5 * (vertices[p][1] + vertices[q][1]);
        let ang = my.atan2(mx).rem_euclid(TAU);
        let quadrant = ((ang / (TAU / 4.0)).floor() as u32).min(3);
        boundary.push((p, q, quadrant + 1));
    }
    Mesh::new(vertices, triangles, boundary)
}

/// Splits every triangle into four through its edge midpoints.
///
/// New vertex `num_vertices + e` sits at the midpoint of edge `e`; child
/// boundary edges inherit the parent tag.
pub fn refine_uniform(m: &Mesh) -> Mesh {
    let nv = m.num_vertices();
    let mut vertices = m.vertices.clone();
    vertices.extend(m.edges.iter().map(|&[a, b]| {
        let (p, q) = (m.vertices[a], m.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }));
    let mut triangles = Vec::with_capacity(4 * m.num_triangles());
    for (tri, te) in m.triangles.iter().zip(&m.triangle_edges) {
        let [a, b, c] = *tri;
        let (mab, mbc, mca) = (nv + te[0], nv + te[1], nv + te[2]);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
    }
    let mut boundary = Vec::with_capacity(2 * m.boundary.len());
    for e in &m.boundary {
        let mid = nv + e.edge;
        boundary.push((e.vertices[0], mid, e.tag));
        boundary.push((mid, e.vertices[1], e.tag));
    }
    Mesh::new(vertices, triangles, boundary).expect("refinement of a valid mesh is valid")
}

/// Serializes a mesh in the line-oriented text format (1-based ids).
pub fn write_mesh(m: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "$Nodes\n{}", m.num_vertices());
    for (i, v) in m.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i + 1, v[0], v[1]);
    }
    let _ = writeln!(s, "$Triangles\n{}", m.num_triangles());
    for (i, t) in m.triangles.iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1);
    }
    let _ = writeln!(s, "$BoundaryEdges\n{}", m.boundary.len());
    for (i, e) in m.boundary.iter().enumerate() {
        let _ = writeln!(
            s,
            "{} {} {} {}",
            i + 1,
            e.vertices[0] + 1,
            e.vertices[1] + 1,
            e.tag
        );
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), MeshError> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok((i + 1, l));
            }
        }
        Err(MeshError::Parse {
            line: self.last + 1,
            msg: "unexpected end of input".into(),
        })
    }

    fn expect_header(&mut self, name: &str) -> Result<(), MeshError> {
        let (line, l) = self.next_line()?;
        if l != name {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected `{name}`, found `{l}`"),
            });
        }
        Ok(())
    }

    fn count(&mut self) -> Result<usize, MeshError> {
        let (line, l) = self.next_line()?;
        l.parse().map_err(|_| MeshError::Parse {
            line,
            msg: format!("expected a count, found `{l}`"),
        })
    }

    fn record<T: std::str::FromStr>(
        &mut self,
        expected_id: usize,
        fields: usize,
    ) -> Result<(usize, Vec<T>), MeshError> {
        let (line, l) = self.next_line()?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != fields + 1 {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected {} fields, found {}", fields + 1, toks.len()),
            });
        }
        let id: usize = toks[0].parse().map_err(|_| MeshError::Parse {
            line,
            msg: format!("bad id `{}`", toks[0]),
        })?;
        if id != expected_id {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected id {expected_id}, found {id}"),
            });
        }
        let vals = toks[1..]
            .iter()
            .map(|t| {
                t.parse::<T>().map_err(|_| MeshError::Parse {
                    line,
                    msg: format!("cannot parse `{t}`"),
                })
            })
            .collect::<Result<Vec<T>, _>>()?;
        Ok((line, vals))
    }
}

/// Parses the text format produced by [`write_mesh`] and validates the result.
pub fn read_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
        last: 0,
    };
    lines.expect_header("$Nodes")?;
    let n = lines.count()?;
    let mut vertices = Vec::with_capacity(n);
    for i in 0..n {
        let (_, v) = lines.record::<f64>(i + 1, 2)?;
        vertices.push([v[0], v[1]]);
    }
    lines.expect_header("$Triangles")?;
    let m = lines.count()?;
    let mut triangles = Vec::with_capacity(m);
    for i in 0..m {
        let (line, v) = lines.record::<usize>(i + 1, 3)?;
        if v.iter().any(|&k| k == 0 || k > n) {
            return Err(MeshError::Parse {
                line,
                msg: format!("vertex id out of range 1..={n}"),
            });
        }
        triangles.push([v[0] - 1, v[1] - 1, v[2] - 1]);
    }
    lines.expect_header("$BoundaryEdges")?;
    let b = lines.count()?;
    let mut boundary = Vec::with_capacity(b);
    for i in 0..b {
        let (line, v) = lines.record::<usize>(i + 1, 3)?;
        if v[0] == 0 || v[0] > n || v[1] == 0 || v[1] > n {
            return Err(MeshError::Parse {
                line,
                msg: format!("vertex id out of range 1..={n}"),
            });
        }
        boundary.push((v[0] - 1, v[1] - 1, v[2] as BoundaryTag));
    }
    if let Ok((line, l)) = lines.next_line() {
        return Err(MeshError::Parse {
            line,
            msg: format!("trailing content `{l}`"),
        });
    }
    Mesh::new(vertices, triangles, boundary)
}
