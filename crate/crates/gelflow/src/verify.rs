//! Manufactured solutions, error norms and convergence studies.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::SchemeError;
use crate::fem::{self, ElementGeometry, FeField};
use crate::mesh::{gen_rect_mesh, mesh_size, Mesh, Point};
use crate::params::{BoundaryLoad, DerivedParams, InitialData};
use crate::scheme::{self, Algorithm, Operators, Problem, SourceHooks, State};

/// An analytic solution of the gel system with the induced data.
///
/// Gradients follow the convention `grad_u(x, t)[c] = grad(u_c)`.
pub trait ExactSolution: Send + Sync {
    fn alpha(&self) -> f64;
    fn u(&self, x: Point, t: f64) -> [f64; 2];
    fn grad_u(&self, x: Point, t: f64) -> [[f64; 2]; 2];
    fn q(&self, x: Point, t: f64) -> f64;
    fn ptilde(&self, x: Point, t: f64) -> f64;
    fn grad_q(&self, x: Point, t: f64) -> [f64; 2];
    fn grad_ptilde(&self, x: Point, t: f64) -> [f64; 2];
    /// `-beta lap u + grad p~`
    fn g_u(&self, x: Point, t: f64) -> [f64; 2];
    /// `q_t - kappa lap(alpha q + p~)`
    fn g_q(&self, x: Point, t: f64) -> f64;
    /// `beta (grad u) n - p~ n`
    fn traction(&self, x: Point, n: [f64; 2], t: f64) -> [f64; 2];
    /// `kappa grad(alpha q + p~) . n`
    fn q_flux(&self, x: Point, n: [f64; 2], t: f64) -> f64;

    fn p(&self, x: Point, t: f64) -> f64 {
        self.ptilde(x, t) + self.alpha() * self.q(x, t)
    }

    fn grad_p(&self, x: Point, t: f64) -> [f64; 2] {
        let (a, b) = (self.grad_ptilde(x, t), self.grad_q(x, t));
        [a[0] + self.alpha() * b[0], a[1] + self.alpha() * b[1]]
    }
}

/// `u = c e^{-t} sin(pi x) sin(pi y) (1, 1)`, `q = div u`,
/// `p~ = e^{-t} cos(pi x) cos(pi y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineSolution {
    pub amplitude: f64,
    pub params: DerivedParams,
}

/// The default manufactured solution with amplitude `1e-2`.
pub fn mms_default(dp: &DerivedParams) -> SineSolution {
    SineSolution {
        amplitude: 1e-2,
        params: *dp,
    }
}

impl SineSolution {
    fn trig(x: Point) -> (f64, f64, f64, f64) {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        (sx, cx, sy, cy)
    }
}

impl ExactSolution for SineSolution {
    fn alpha(&self) -> f64 {
        self.params.alpha
    }

    fn u(&self, x: Point, t: f64) -> [f64; 2] {
        let (sx, _, sy, _) = Self::trig(x);
        let v = self.amplitude * (-t).exp() * sx * sy;
        [v, v]
    }

    fn grad_u(&self, x: Point, t: f64) -> [[f64; 2]; 2] {
        let (sx, cx, sy, cy) = Self::trig(x);
        let a = self.amplitude * (-t).exp() * PI;
        let g = [a * cx * sy, a * sx * cy];
        [g, g]
    }

    fn q(&self, x: Point, t: f64) -> f64 {
        self.amplitude * PI * (-t).exp() * (PI * (x[0] + x[1])).sin()
    }

    fn ptilde(&self, x: Point, t: f64) -> f64 {
        let (_, cx, _, cy) = Self::trig(x);
        (-t).exp() * cx * cy
    }

    fn grad_q(&self, x: Point, t: f64) -> [f64; 2] {
        let v = self.amplitude * PI * PI * (-t).exp() * (PI * (x[0] + x[1])).cos();
        [v, v]
    }

    fn grad_ptilde(&self, x: Point, t: f64) -> [f64; 2] {
        let (sx, cx, sy, cy) = Self::trig(x);
        let e = (-t).exp();
        [-PI * e * sx * cy, -PI * e * cx * sy]
    }

    fn g_u(&self, x: Point, t: f64) -> [f64; 2] {
        let u = self.u(x, t);
        let gp = self.grad_ptilde(x, t);
        let k = 2.0 * self.params.beta * PI * PI;
        [k * u[0] + gp[0], k * u[1] + gp[1]]
    }

    fn g_q(&self, x: Point, t: f64) -> f64 {
        let q = self.q(x, t);
        -q + 2.0 * PI * PI * self.params.kappa * (self.params.alpha * q + self.ptilde(x, t))
    }

    fn traction(&self, x: Point, n: [f64; 2], t: f64) -> [f64; 2] {
        let g = self.grad_u(x, t);
        let p = self.ptilde(x, t);
        let b = self.params.beta;
        [
            b * (g[0][0] * n[0] + g[0][1] * n[1]) - p * n[0],
            b * (g[1][0] * n[0] + g[1][1] * n[1]) - p * n[1],
        ]
    }

    fn q_flux(&self, x: Point, n: [f64; 2], t: f64) -> f64 {
        let g = self.grad_p(x, t);
        self.params.kappa * (g[0] * n[0] + g[1] * n[1])
    }
}

/// Builds a run of the scheme driven by an exact solution.
pub fn manufactured_problem<S: ExactSolution + Clone + 'static>(
    exact: &S,
    mesh: Mesh,
    params: DerivedParams,
    dt: f64,
    t_final: f64,
    algorithm: Algorithm,
) -> Problem {
    let (e1, e2, e3, e4, e5, e6) = (
        exact.clone(),
        exact.clone(),
        exact.clone(),
        exact.clone(),
        exact.clone(),
        exact.clone(),
    );
    Problem {
        mesh,
        params,
        load: BoundaryLoad::time_dependent(move |x, n, _, t| e1.traction(x, n, t)),
        initial: InitialData::new(move |x| e2.u(x, 0.0))
            .with_div(move |x| e3.q(x, 0.0))
            .with_grad(move |x| e4.grad_u(x, 0.0)),
        hooks: SourceHooks {
            g_u: Some(Arc::new(move |x, t| e5.g_u(x, t))),
            g_q: Some(Arc::new(move |x, t| e6.g_q(x, t))),
            q_flux: Some({
                let e = exact.clone();
                Arc::new(move |x, n, t| e.q_flux(x, n, t))
            }),
        },
        dt,
        t_final,
        algorithm,
        theta_threshold: f64::INFINITY,
    }
}

/// Errors at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `|grad(u - u_h)|_{L2}`
    pub h1_u: f64,
    /// `|q - q_h|_{L2}`
    pub l2_q: f64,
    /// `|grad(p - p_h)|_{L2}`; zero when the state has no pressure.
    pub grad_p: f64,
}

pub fn error_norms(mesh: &Mesh, ops: &Operators, state: &State, exact: &dyn ExactSolution) -> Result<ErrorNorms, SchemeError> {
    let t = state.t;
    let u = FeField::new(&ops.vdm, &state.u)?;
    let q = FeField::new(&ops.sdm, &state.q)?;
    let p = match &state.p {
        Some(p) => Some(FeField::new(&ops.sdm, p)?),
        None => None,
    };
    let rule = fem::triangle_rule();
    let (mut eu, mut eq, mut ep) = (0.0, 0.0, 0.0);
    for tt in 0..mesh.num_triangles() {
        let geo = ElementGeometry::new(mesh.triangle_points(tt));
        for (l, w) in rule.scaled(geo.area) {
            let x = geo.point(l);
            let gu = u.gradient(&geo, tt, l);
            let ge = exact.grad_u(x, t);
            for c in 0..2 {
                eu += w * ((ge[c][0] - gu[c][0]).powi(2) + (ge[c][1] - gu[c][1]).powi(2));
            }
            eq += w * (exact.q(x, t) - q.value(tt, l)[0]).powi(2);
            if let Some(p) = &p {
                let gp = p.gradient(&geo, tt, l)[0];
                let ge = exact.grad_p(x, t);
                ep += w * ((ge[0] - gp[0]).powi(2) + (ge[1] - gp[1]).powi(2));
            }
        }
    }
    Ok(ErrorNorms {
        h1_u: eu.sqrt(),
        l2_q: eq.sqrt(),
        grad_p: ep.sqrt(),
    })
}

/// How the time step follows the mesh across levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Mesh refined, `dt` divided by 4.
    DtH2,
    /// Mesh refined, `dt` halved.
    DtH,
    /// Mesh fixed, `dt` halved.
    FixedMesh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    /// Cells per side of the coarsest unit-square mesh.
    pub base_cells: usize,
    pub levels: usize,
    pub coupling: Coupling,
    /// Time step on the coarsest level.
    pub dt0: f64,
    pub t_final: f64,
    pub params: DerivedParams,
    pub amplitude: f64,
    pub algorithm: Algorithm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub h1_u: f64,
    pub l2_q: f64,
    /// `(sum_n dt |grad(p - p_h)(t_n)|^2)^{1/2}`
    pub grad_p: f64,
    /// `sqrt(beta) h1_u + sqrt(alpha) l2_q`
    pub total: f64,
    pub rate_u: Option<f64>,
    pub rate_q: Option<f64>,
    pub rate_p: Option<f64>,
    pub rate_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub coupling: Coupling,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn finest(&self) -> &RateRow {
        self.rows.last().expect("rate table has rows")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,dt,H1_u,rate_u,L2_q,rate_q,gradP,rate_p\n");
        let r = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for row in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.6e},{:.6e},{:.6e},{},{:.6e},{},{:.6e},{}",
                row.level,
                row.h,
                row.dt,
                row.h1_u,
                r(row.rate_u),
                row.l2_q,
                r(row.rate_q),
                row.grad_p,
                r(row.rate_p)
            );
        }
        s
    }
}

fn rate(prev: f64, cur: f64, ratio: f64) -> f64 {
    (prev / cur).ln() / ratio.ln()
}

/// Runs one level and returns its errors.
pub fn run_level<S: ExactSolution + Clone + 'static>(
    exact: &S,
    mesh: Mesh,
    params: DerivedParams,
    dt: f64,
    t_final: f64,
    algorithm: Algorithm,
) -> Result<(ErrorNorms, f64), SchemeError> {
    let problem = manufactured_problem(exact, mesh, params, dt, t_final, algorithm);
    let mut acc = 0.0;
    let mut last: Option<Result<ErrorNorms, SchemeError>> = None;
    let mut prev_t = 0.0;
    scheme::run_with(&problem, |sim, s| {
        let e = error_norms(&problem.mesh, &sim.ops, s, exact);
        if let Ok(e) = &e {
            if s.step > 0 {
                acc += (s.t - prev_t) * e.grad_p * e.grad_p;
            }
        }
        prev_t = s.t;
        last = Some(e);
    })?;
    let final_err = last.expect("at least one level observed")?;
    Ok((final_err, acc.sqrt()))
}

/// Convergence study on the unit square against [`mms_default`]-style
/// solutions.
pub fn convergence_study(cfg: &StudyConfig) -> Result<RateTable, SchemeError> {
    if cfg.levels < 2 {
        return Err(SchemeError::TimeGrid("a study needs at least two levels".into()));
    }
    let exact = SineSolution {
        amplitude: cfg.amplitude,
        params: cfg.params,
    };
    let mut rows: Vec<RateRow> = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        let (cells, dt) = match cfg.coupling {
            Coupling::DtH2 => (cfg.base_cells << level, cfg.dt0 / 4f64.powi(level as i32)),
            Coupling::DtH => (cfg.base_cells << level, cfg.dt0 / 2f64.powi(level as i32)),
            Coupling::FixedMesh => (cfg.base_cells, cfg.dt0 / 2f64.powi(level as i32)),
        };
        let mesh = gen_rect_mesh(cells, cells, [0.0, 0.0], [1.0, 1.0])?;
        let h = mesh_size(&mesh);
        let (e, grad_p) = run_level(&exact, mesh, cfg.params, dt, cfg.t_final, cfg.algorithm)?;
        let total = cfg.params.beta.sqrt() * e.h1_u + cfg.params.alpha.sqrt() * e.l2_q;
        let mut row = RateRow {
            level,
            h,
            dt,
            h1_u: e.h1_u,
            l2_q: e.l2_q,
            grad_p,
            total,
            rate_u: None,
            rate_q: None,
            rate_p: None,
            rate_total: None,
        };
        if let Some(prev) = rows.last() {
            let ratio = if cfg.coupling == Coupling::FixedMesh { prev.dt / dt } else { prev.h / h };
            row.rate_u = Some(rate(prev.h1_u, row.h1_u, ratio));
            row.rate_q = Some(rate(prev.l2_q, row.l2_q, ratio));
            row.rate_p = Some(rate(prev.grad_p, row.grad_p, ratio));
            row.rate_total = Some(rate(prev.total, row.total, ratio));
        }
        log::info!(
            "level {level}: h = {h:.4e}, dt = {dt:.4e}, H1_u = {:.4e}, L2_q = {:.4e}, gradP = {:.4e}",
            row.h1_u,
            row.l2_q,
            row.grad_p
        );
        rows.push(row);
    }
    Ok(RateTable {
        coupling: cfg.coupling,
        rows,
    })
}
