use std::fmt::Write as _;

use crate::mesh::Mesh;
use crate::scheme::{Diagnostics, State};

pub const DIAGNOSTICS_HEADER: &str = "step,t,J_h,C_q,C_u,C_ptilde,C_p,theta,mult_x,mult_y";

/// Legacy VTK 2.0 ASCII snapshot of one state.
///
/// Displacement is exported at the vertices only. The pressure is written as
/// zeros where it is undefined (level 0 of Algorithm 1).
pub fn write_snapshot(state: &State, mesh: &Mesh, magnification: f64) -> String {
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    let mut s = String::with_capacity(120 * nv);
    // writing into a String cannot fail
    let _ = writeln!(s, "# vtk DataFile Version 2.0");
    let _ = writeln!(s, "gelflow step {} t {}", state.step, state.t);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    let zeros = vec![0.0; nv];
    let pressure = state.p.as_deref().unwrap_or(&zeros);
    for (name, values) in [("pressure", pressure), ("q", &state.q[..])] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in &values[..nv] {
            let _ = writeln!(s, "{v}");
        }
    }
    for (name, scale) in [("displacement", 1.0), ("warp", magnification)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in 0..nv {
            let _ = writeln!(s, "{} {} 0", scale * state.u[2 * v], scale * state.u[2 * v + 1]);
        }
    }
    s
}

/// One row per time level `n = 1..N`.
pub fn diagnostics_csv(diag: &Diagnostics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{DIAGNOSTICS_HEADER}");
    for r in &diag.records {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.step, r.t, r.energy, r.c_q, r.c_u, r.c_ptilde, r.c_p, r.theta, r.multipliers[0], r.multipliers[1]
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_rect_mesh;

    fn zero_state(mesh: &Mesh, with_p: bool) -> State {
        let nv = mesh.num_vertices();
        let nu = 2 * (nv + mesh.num_edges());
        State {
            step: 0,
            t: 0.0,
            u: vec![0.0; nu],
            ptilde: with_p.then(|| vec![0.0; nv]),
            q: vec![0.0; nv],
            q_lag: vec![0.0; nv],
            p: with_p.then(|| vec![0.0; nv]),
            multipliers: [0.0; 2],
        }
    }

    /// Data lines of the named section.
    fn section<'a>(text: &'a str, head: &str, rows: usize) -> Vec<&'a str> {
        let mut lines = text.lines().skip_while(|l| !l.starts_with(head)).skip(1);
        if head.starts_with("SCALARS") {
            lines.next();
        }
        lines.take(rows).collect()
    }

    #[test]
    fn zero_state_layout() {
        let mesh = gen_rect_mesh(2, 3, [0.0, 0.0], [1.0, 1.0]).unwrap();
        for with_p in [false, true] {
            let text = write_snapshot(&zero_state(&mesh, with_p), &mesh, 500.0);
            assert!(text.starts_with("# vtk DataFile Version 2.0\n"));
            assert!(text.contains(&format!("POINTS {} double", mesh.num_vertices())));
            assert!(text.contains(&format!("CELLS {} {}", mesh.num_triangles(), 4 * mesh.num_triangles())));
            let nv = mesh.num_vertices();
            for head in ["SCALARS pressure", "SCALARS q"] {
                let rows = section(&text, head, nv);
                assert_eq!(rows.len(), nv);
                assert!(rows.iter().all(|l| l.parse::<f64>().unwrap() == 0.0));
            }
            for head in ["VECTORS displacement", "VECTORS warp"] {
                assert!(section(&text, head, nv).iter().all(|l| *l == "0 0 0"));
            }
        }
    }

    #[test]
    fn warp_is_magnified_displacement() {
        let mesh = gen_rect_mesh(2, 2, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let mut s = zero_state(&mesh, true);
        for (i, u) in s.u.iter_mut().enumerate() {
            *u = 1e-3 * (i as f64 + 1.0);
        }
        let text = write_snapshot(&s, &mesh, 500.0);
        let nv = mesh.num_vertices();
        let parse = |l: &str| -> Vec<f64> { l.split(' ').map(|x| x.parse().unwrap()).collect() };
        let disp = section(&text, "VECTORS displacement", nv);
        let warp = section(&text, "VECTORS warp", nv);
        for v in 0..nv {
            let (d, w) = (parse(disp[v]), parse(warp[v]));
            assert_eq!(d[0], s.u[2 * v]);
            assert_eq!(d[1], s.u[2 * v + 1]);
            assert!((w[0] - 500.0 * d[0]).abs() <= 1e-12 * w[0].abs());
            assert!((w[1] - 500.0 * d[1]).abs() <= 1e-12 * w[1].abs());
        }
    }
}
