use crate::error::SchemeError;
use crate::fem::{self, DofMap, FeField, MomentRows, SpaceKind};
use crate::linsolve::{AugmentedFactorization, CsrMatrix, SparseLu};
use crate::mesh::{mesh_size, Mesh};
use crate::params::{DerivedParams, InitialData};

use super::SourceHooks;

/// Everything assembled once per mesh.
#[derive(Debug, Clone)]
pub struct Operators {
    pub vdm: DofMap,
    pub sdm: DofMap,
    /// `beta`-scaled vector Laplacian.
    pub laplacian: CsrMatrix,
    /// P1 x vector-P2 divergence pairing.
    pub divergence: CsrMatrix,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub moments: MomentRows,
    pub h: f64,
    pub area: f64,
}

impl Operators {
    pub fn new(mesh: &Mesh, dp: &DerivedParams) -> Self {
        let vdm = DofMap::new(mesh, SpaceKind::VectorP2);
        let sdm = DofMap::new(mesh, SpaceKind::ScalarP1);
        Operators {
            laplacian: fem::assemble_vector_laplacian(mesh, &vdm, dp.beta),
            divergence: fem::assemble_divergence(mesh, &vdm, &sdm),
            mass: fem::assemble_mass_p1(mesh),
            stiffness: fem::assemble_stiffness_p1(mesh),
            moments: fem::assemble_moment_rows(mesh, &vdm, &sdm),
            h: mesh_size(mesh),
            area: mesh.total_area(),
            vdm,
            sdm,
        }
    }

    pub fn num_u(&self) -> usize {
        self.vdm.num_dofs()
    }

    pub fn num_p(&self) -> usize {
        self.sdm.num_dofs()
    }

    /// Symmetric saddle block `[[A, -B^T], [-B, 0]]` acting on `(u, p~)`.
    pub fn stokes_core(&self) -> CsrMatrix {
        let nu = self.num_u();
        let n = nu + self.num_p();
        let mut trip = self.laplacian.triplets();
        for (k, i, v) in self.divergence.triplets() {
            trip.push((nu + k, i, -v));
            trip.push((i, nu + k, -v));
        }
        CsrMatrix::from_triplets(n, n, &trip)
    }

    /// Translation pinning rows `int u_x`, `int u_y` padded over `p~`.
    pub fn stokes_constraints(&self) -> Vec<Vec<f64>> {
        let np = self.num_p();
        [&self.moments.mean_u_x, &self.moments.mean_u_y]
            .into_iter()
            .map(|r| {
                let mut row = r.clone();
                row.extend(std::iter::repeat_n(0.0, np));
                row
            })
            .collect()
    }

    /// Right-hand side of the saddle block for a given displacement load
    /// and prescribed divergence.
    pub fn stokes_rhs(&self, load: &[f64], q_prev: &[f64]) -> Vec<f64> {
        let mut rhs = load.to_vec();
        rhs.extend(self.mass.matvec(q_prev).into_iter().map(|v| -v));
        rhs
    }

    /// `M / dt + kappa alpha S`.
    pub fn diffusion_matrix(&self, dp: &DerivedParams, dt: f64) -> CsrMatrix {
        self.mass.add_scaled(1.0 / dt, &self.stiffness, dp.kappa * dp.alpha)
    }

    /// `M q_prev / dt - kappa S p~_new + extra`.
    pub fn diffusion_rhs(&self, dp: &DerivedParams, dt: f64, q_prev: &[f64], ptilde_new: &[f64], extra: Option<&[f64]>) -> Vec<f64> {
        let mq = self.mass.matvec(q_prev);
        let sp = self.stiffness.matvec(ptilde_new);
        let mut rhs: Vec<f64> = mq.iter().zip(&sp).map(|(m, s)| m / dt - dp.kappa * s).collect();
        if let Some(e) = extra {
            rhs.iter_mut().zip(e).for_each(|(r, v)| *r += v);
        }
        rhs
    }
}

/// Result of one generalized Stokes solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesSolution {
    pub u: Vec<f64>,
    pub ptilde: Vec<f64>,
    /// Multipliers of the two translation pins.
    pub multipliers: [f64; 2],
}

/// Factorized Stokes operator with its translation pins.
#[derive(Debug)]
pub struct StokesSolver {
    fact: AugmentedFactorization,
    pins: [f64; 2],
}

impl StokesSolver {
    pub fn new(ops: &Operators, pins: [f64; 2]) -> Result<Self, SchemeError> {
        let fact = AugmentedFactorization::new(&ops.stokes_core(), &ops.stokes_constraints())?;
        Ok(StokesSolver { fact, pins })
    }

    pub fn pins(&self) -> [f64; 2] {
        self.pins
    }

    /// Solves with displacement load `load` (boundary plus volume terms) and
    /// prescribed divergence `q_prev`.
    pub fn solve(&self, ops: &Operators, load: &[f64], q_prev: &[f64]) -> Result<StokesSolution, SchemeError> {
        let rhs = ops.stokes_rhs(load, q_prev);
        let (mut x, mu) = self.fact.solve(&rhs, &self.pins)?;
        let ptilde = x.split_off(ops.num_u());
        Ok(StokesSolution {
            u: x,
            ptilde,
            multipliers: [mu[0], mu[1]],
        })
    }
}

/// Factorized `M / dt + kappa alpha S`.
#[derive(Debug)]
pub struct DiffusionSolver {
    lu: SparseLu,
    dt: f64,
}

impl DiffusionSolver {
    pub fn new(ops: &Operators, dp: &DerivedParams, dt: f64) -> Result<Self, SchemeError> {
        Ok(DiffusionSolver {
            lu: SparseLu::factor(&ops.diffusion_matrix(dp, dt))?,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn solve(
        &self,
        ops: &Operators,
        dp: &DerivedParams,
        q_prev: &[f64],
        ptilde_new: &[f64],
        extra: Option<&[f64]>,
    ) -> Result<Vec<f64>, SchemeError> {
        let rhs = ops.diffusion_rhs(dp, self.dt, q_prev, ptilde_new, extra);
        Ok(self.lu.solve(&rhs)?)
    }
}

/// `(q_h^0, chi) = (div u0, chi)` for all linear `chi`.
pub fn project_initial_q(mesh: &Mesh, ops: &Operators, u0: &InitialData) -> Result<Vec<f64>, SchemeError> {
    let load = match u0.div() {
        Some(div) => fem::assemble_load_p1(mesh, div),
        None => {
            let coeffs = fem::interpolate_vector_p2(mesh, &ops.vdm, |x| u0.u0(x));
            let field = FeField::new(&ops.vdm, &coeffs)?;
            let rule = fem::triangle_rule();
            let mut load = vec![0.0; ops.num_p()];
            for (t, tri) in mesh.triangles().iter().enumerate() {
                for (l, w) in rule.scaled(mesh.triangle_area(t)) {
                    let d = fem::divergence_at(mesh, &field, t, l);
                    for a in 0..3 {
                        load[tri[a]] += w * d * l[a];
                    }
                }
            }
            load
        }
    };
    Ok(SparseLu::factor(&ops.mass)?.solve(&load)?)
}

/// Elliptic projection of `u0`: `(grad u_h, grad w) = (grad u0, grad w)` with
/// `int u_h = int u0` (both components) and `oint u_h . n = oint u0 . n`.
///
/// Returns the coefficients and the three multipliers.
pub fn project_initial_u(mesh: &Mesh, ops: &Operators, dp: &DerivedParams, u0: &InitialData) -> Result<(Vec<f64>, Vec<f64>), SchemeError> {
    let unit = {
        let t: Vec<_> = ops
            .laplacian
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, v / dp.beta))
            .collect();
        CsrMatrix::from_triplets(ops.num_u(), ops.num_u(), &t)
    };
    let rhs = match u0.grad() {
        Some(g) => fem::assemble_gradient_load(mesh, &ops.vdm, g),
        None => unit.matvec(&fem::interpolate_vector_p2(mesh, &ops.vdm, |x| u0.u0(x))),
    };
    let mean_x = fem::integrate(mesh, |x| u0.u0(x)[0]);
    let mean_y = fem::integrate(mesh, |x| u0.u0(x)[1]);
    let flux = fem::boundary_integral(mesh, |x, n, _| {
        let u = u0.u0(x);
        u[0] * n[0] + u[1] * n[1]
    });
    let rows = vec![
        ops.moments.mean_u_x.clone(),
        ops.moments.mean_u_y.clone(),
        ops.moments.flux_u.clone(),
    ];
    let fact = AugmentedFactorization::new(&unit, &rows)?;
    Ok(fact.solve(&rhs, &[mean_x, mean_y, flux])?)
}

/// Volume and boundary source loads for the displacement at time `t`.
pub fn displacement_load(mesh: &Mesh, ops: &Operators, load: &crate::params::BoundaryLoad, hooks: &SourceHooks, t: f64) -> Vec<f64> {
    let mut f = fem::assemble_boundary_load(mesh, &ops.vdm, load, t);
    if let Some(g) = &hooks.g_u {
        let gv = fem::assemble_load_vector_p2(mesh, &ops.vdm, |x| g(x, t));
        f.iter_mut().zip(&gv).for_each(|(a, b)| *a += b);
    }
    f
}

/// Source terms of the diffusion step at time `t`, if any hook is set.
pub fn diffusion_load(mesh: &Mesh, ops: &Operators, hooks: &SourceHooks, t: f64) -> Option<Vec<f64>> {
    if hooks.g_q.is_none() && hooks.q_flux.is_none() {
        return None;
    }
    let mut b = vec![0.0; ops.num_p()];
    if let Some(g) = &hooks.g_q {
        b = fem::assemble_load_p1(mesh, |x| g(x, t));
    }
    if let Some(h) = &hooks.q_flux {
        let hb = fem::assemble_boundary_load_p1(mesh, |x, n, _| h(x, n, t));
        b.iter_mut().zip(&hb).for_each(|(a, v)| *a += v);
    }
    Some(b)
}
