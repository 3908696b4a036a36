//! Decoupled time stepping.
//!
//! Each step solves the generalized Stokes problem
//! `beta (grad u, grad v) - (p~, div v) = <f, v>`, `(div u, phi) = (q, phi)`
//! and the diffusion problem
//! `(d_t q, psi) + kappa (grad(alpha q + p~), grad psi) = 0`.
//! [`Algorithm::Alg1`] runs Stokes first, [`Algorithm::Alg2`] diffusion first.
//!
//! Rigid translations are pinned by holding `int u_x` and `int u_y` at the
//! values of the initial projection. The remaining conserved quantities
//! hold automatically and are measured, not imposed.

mod energy;
mod ops;

use std::sync::Arc;

pub use energy::{energy, energy_identity, energy_monotonicity_report, EnergyBalance};
pub use ops::{
    diffusion_load, displacement_load, project_initial_q, project_initial_u, DiffusionSolver, Operators,
    StokesSolution, StokesSolver,
};

use crate::error::SchemeError;
use crate::fem;
use crate::mesh::{Mesh, Point};
use crate::params::{check_compatibility, compute_conserved, BoundaryLoad, ConservedSet, DerivedParams, InitialData};

/// Relative tolerance on time grid divisibility.
const DIVISIBILITY_TOL: f64 = 1e-12;
/// Relative tolerance for conservation checks made during a run.
const CONSERVATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Stokes with `q^n`, then diffusion with `p~^{n+1}`;
    /// pressure `p^n = p~^n + alpha q^{n-1}`.
    Alg1,
    /// Diffusion with `p~^n`, then Stokes with `q^{n+1}`, after an initial
    /// Stokes solve; pressure `p^n = p~^n + alpha q^n`.
    Alg2,
}

/// Uniform steps of size `dt` up to `t_final`, with a shorter final step
/// when `dt` does not divide `t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub last_dt: f64,
    pub shortened: bool,
    /// `kappa beta dt / h^2`
    pub theta: f64,
}

impl TimeGrid {
    pub fn new(dt: f64, t_final: f64, h: f64, dp: &DerivedParams) -> Result<Self, SchemeError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SchemeError::TimeGrid(format!("dt must be positive, got {dt}")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(SchemeError::TimeGrid(format!("final time must be positive, got {t_final}")));
        }
        let ratio = t_final / dt;
        let rounded = ratio.round().max(1.0);
        let (steps, last_dt, shortened) = if (rounded * dt - t_final).abs() <= DIVISIBILITY_TOL * t_final {
            (rounded as usize, dt, false)
        } else {
            let full = ratio.floor() as usize;
            (full + 1, t_final - full as f64 * dt, true)
        };
        Ok(TimeGrid {
            dt,
            t_final,
            steps,
            last_dt,
            shortened,
            theta: dp.kappa * dp.beta * dt / (h * h),
        })
    }

    /// Time of level `n`.
    pub fn time(&self, n: usize) -> f64 {
        if n >= self.steps {
            self.t_final
        } else {
            n as f64 * self.dt
        }
    }

    /// Size of the step from level `n` to `n + 1`.
    pub fn step_size(&self, n: usize) -> f64 {
        if n + 1 == self.steps {
            self.last_dt
        } else {
            self.dt
        }
    }
}

type VectorSource = dyn Fn(Point, f64) -> [f64; 2] + Send + Sync;
type ScalarSource = dyn Fn(Point, f64) -> f64 + Send + Sync;
type FluxSource = dyn Fn(Point, [f64; 2], f64) -> f64 + Send + Sync;

/// Extra source terms for manufactured solutions; empty in physical runs.
#[derive(Clone, Default)]
pub struct SourceHooks {
    /// Volume force added to the Stokes load.
    pub g_u: Option<Arc<VectorSource>>,
    /// Volume source added to the diffusion load.
    pub g_q: Option<Arc<ScalarSource>>,
    /// Boundary flux `kappa d(alpha q + p~)/dn` added to the diffusion load.
    pub q_flux: Option<Arc<FluxSource>>,
}

impl std::fmt::Debug for SourceHooks {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SourceHooks")
            .field("g_u", &self.g_u.is_some())
            .field("g_q", &self.g_q.is_some())
            .field("q_flux", &self.q_flux.is_some())
            .finish()
    }
}

impl SourceHooks {
    pub fn is_empty(&self) -> bool {
        self.g_u.is_none() && self.g_q.is_none() && self.q_flux.is_none()
    }
}

/// A complete run description.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub params: DerivedParams,
    pub load: BoundaryLoad,
    pub initial: InitialData,
    pub hooks: SourceHooks,
    pub dt: f64,
    pub t_final: f64,
    pub algorithm: Algorithm,
    pub theta_threshold: f64,
}

impl Problem {
    /// True when the run is the unmodified gel model.
    pub fn is_physical(&self) -> bool {
        self.hooks.is_empty() && !self.load.is_time_dependent()
    }
}

/// Discrete solution at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    /// Not defined at level 0 of [`Algorithm::Alg1`].
    pub ptilde: Option<Vec<f64>>,
    pub q: Vec<f64>,
    /// `q^{n-1}`; equal to `q` at level 0.
    pub q_lag: Vec<f64>,
    /// Reconstructed pressure, when `ptilde` is defined.
    pub p: Option<Vec<f64>>,
    pub multipliers: [f64; 2],
}

/// `p = p~ + alpha q^{n-1}` for [`Algorithm::Alg1`], `p~ + alpha q^n` for
/// [`Algorithm::Alg2`].
pub fn reconstruct_pressure(ptilde: &[f64], q: &[f64], q_lag: &[f64], alpha: f64, algorithm: Algorithm) -> Result<Vec<f64>, SchemeError> {
    let qq = match algorithm {
        Algorithm::Alg1 => q_lag,
        Algorithm::Alg2 => q,
    };
    if ptilde.len() != qq.len() {
        return Err(crate::error::FemError::Dimension {
            expected: ptilde.len(),
            found: qq.len(),
        }
        .into());
    }
    Ok(ptilde.iter().zip(qq).map(|(a, b)| a + alpha * b).collect())
}

/// Measured quantities at one level `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// `J^{n-1}` for [`Algorithm::Alg1`] (it needs `u^n`), `J^n` for
    /// [`Algorithm::Alg2`].
    pub energy: f64,
    pub c_q: f64,
    pub c_u: f64,
    pub c_ptilde: f64,
    pub c_p: f64,
    pub theta: f64,
    pub multipliers: [f64; 2],
    /// `|oint f dS|` at this level.
    pub compatibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub algorithm: Algorithm,
    pub records: Vec<StepRecord>,
    /// `J^0` for [`Algorithm::Alg2`]; for [`Algorithm::Alg1`] it is the
    /// energy of the first record.
    pub initial_energy: Option<f64>,
    /// Values predicted from the data.
    pub expected: ConservedSet,
    pub grid: TimeGrid,
    pub h: f64,
    pub shortened_last_step: bool,
}

impl Diagnostics {
    /// Energies in time order, `J^0, J^1, ...`.
    pub fn energies(&self) -> Vec<f64> {
        self.initial_energy
            .into_iter()
            .chain(self.records.iter().map(|r| r.energy))
            .collect()
    }
}

/// A problem with its operators assembled and factorized.
#[derive(Debug)]
pub struct Simulation<'a> {
    pub problem: &'a Problem,
    pub ops: Operators,
    pub grid: TimeGrid,
    pub conserved: ConservedSet,
    stokes: StokesSolver,
    diffusion: DiffusionSolver,
    diffusion_last: Option<DiffusionSolver>,
    u_projected: Vec<f64>,
    load_static: Option<Vec<f64>>,
}

impl<'a> Simulation<'a> {
    pub fn new(problem: &'a Problem) -> Result<Self, SchemeError> {
        let dp = &problem.params;
        let mesh = &problem.mesh;
        let ops = Operators::new(mesh, dp);
        let grid = TimeGrid::new(problem.dt, problem.t_final, ops.h, dp)?;
        if grid.theta > problem.theta_threshold {
            log::warn!(
                "theta = kappa beta dt / h^2 = {:.3e} exceeds threshold {:.3e}; energy decay is not guaranteed",
                grid.theta,
                problem.theta_threshold
            );
        }
        if grid.shortened {
            log::warn!(
                "dt = {} does not divide T = {}; last step shortened to {:.3e}",
                grid.dt,
                grid.t_final,
                grid.last_dt
            );
        }
        if problem.is_physical() {
            let res = check_compatibility(&problem.load, mesh, 0.0);
            let scale = fem::boundary_integral(mesh, |x, n, tag| {
                let f = problem.load.eval(x, n, tag, 0.0);
                f[0].hypot(f[1])
            });
            if res > 1e-10 * scale + 1e-14 {
                return Err(SchemeError::LoadIncompatible(res));
            }
        }
        let conserved = compute_conserved(&problem.initial, &problem.load, mesh, dp);
        let (u_projected, _) = project_initial_u(mesh, &ops, dp, &problem.initial)?;
        let pins = [
            dot(&ops.moments.mean_u_x, &u_projected),
            dot(&ops.moments.mean_u_y, &u_projected),
        ];
        let stokes = StokesSolver::new(&ops, pins)?;
        let diffusion = DiffusionSolver::new(&ops, dp, grid.dt)?;
        let diffusion_last = if grid.shortened {
            Some(DiffusionSolver::new(&ops, dp, grid.last_dt)?)
        } else {
            None
        };
        let load_static = (!problem.load.is_time_dependent())
            .then(|| displacement_load(mesh, &ops, &problem.load, &SourceHooks::default(), 0.0));
        Ok(Simulation {
            problem,
            ops,
            grid,
            conserved,
            stokes,
            diffusion,
            diffusion_last,
            u_projected,
            load_static,
        })
    }

    fn displacement_load(&self, t: f64) -> Vec<f64> {
        let p = self.problem;
        match (&self.load_static, p.hooks.g_u.is_some()) {
            (Some(f), false) => f.clone(),
            _ => displacement_load(&p.mesh, &self.ops, &p.load, &p.hooks, t),
        }
    }

    /// Boundary-load vector `<f(t), phi_i>` without volume sources.
    pub fn boundary_load(&self, t: f64) -> Vec<f64> {
        match &self.load_static {
            Some(f) => f.clone(),
            None => fem::assemble_boundary_load(&self.problem.mesh, &self.ops.vdm, &self.problem.load, t),
        }
    }

    fn check_divergence_data(&self, q_prev: &[f64]) -> Result<(), SchemeError> {
        if !self.problem.is_physical() {
            return Ok(());
        }
        let found = dot(&self.ops.moments.mean_ptilde, q_prev);
        let expected = self.conserved.c_q;
        let scale = expected
            .abs()
            .max(q_prev.iter().fold(0.0f64, |m, v| m.max(v.abs())) * self.ops.area);
        if (found - expected).abs() > CONSERVATION_TOL * scale {
            return Err(SchemeError::Incompatible { found, expected });
        }
        Ok(())
    }

    /// Generalized Stokes step with prescribed divergence `q_prev` and loads
    /// evaluated at time `t`.
    pub fn stokes_step(&self, q_prev: &[f64], t: f64) -> Result<StokesSolution, SchemeError> {
        self.check_divergence_data(q_prev)?;
        let sol = self.stokes.solve(&self.ops, &self.displacement_load(t), q_prev)?;
        if self.problem.is_physical() {
            let c = &self.conserved;
            let int_p = dot(&self.ops.moments.mean_ptilde, &sol.ptilde);
            let flux = dot(&self.ops.moments.flux_u, &sol.u);
            let scale = c.c_ptilde.abs() + self.problem.params.beta * c.c_q.abs() + 1e-300;
            if (int_p - c.c_ptilde).abs() > CONSERVATION_TOL * scale {
                log::warn!("(p~, 1) = {int_p:e} drifted from {:e}", c.c_ptilde);
            }
            if (flux - c.c_u).abs() > CONSERVATION_TOL * (c.c_u.abs() + 1e-300) {
                log::warn!("<u, n> = {flux:e} drifted from {:e}", c.c_u);
            }
        }
        Ok(sol)
    }

    /// Diffusion step from level `n` to `n + 1`.
    pub fn diffusion_step(&self, n: usize, q_prev: &[f64], ptilde_new: &[f64]) -> Result<Vec<f64>, SchemeError> {
        let solver = match &self.diffusion_last {
            Some(last) if n + 1 == self.grid.steps => last,
            _ => &self.diffusion,
        };
        let t_new = self.grid.time(n + 1);
        let extra = diffusion_load(&self.problem.mesh, &self.ops, &self.problem.hooks, t_new);
        solver.solve(&self.ops, &self.problem.params, q_prev, ptilde_new, extra.as_deref())
    }

    pub fn initial_state(&self) -> Result<State, SchemeError> {
        let p = self.problem;
        let q0 = project_initial_q(&p.mesh, &self.ops, &p.initial)?;
        match p.algorithm {
            Algorithm::Alg1 => Ok(State {
                step: 0,
                t: 0.0,
                u: self.u_projected.clone(),
                ptilde: None,
                q_lag: q0.clone(),
                q: q0,
                p: None,
                multipliers: [0.0; 2],
            }),
            Algorithm::Alg2 => {
                let sol = self.stokes_step(&q0, 0.0)?;
                let pr = reconstruct_pressure(&sol.ptilde, &q0, &q0, p.params.alpha, Algorithm::Alg2)?;
                Ok(State {
                    step: 0,
                    t: 0.0,
                    u: sol.u,
                    ptilde: Some(sol.ptilde),
                    q_lag: q0.clone(),
                    q: q0,
                    p: Some(pr),
                    multipliers: sol.multipliers,
                })
            }
        }
    }

    /// Advances `s` (at level `n`) to level `n + 1`.
    pub fn step(&self, s: &State) -> Result<State, SchemeError> {
        let n = s.step;
        if n >= self.grid.steps {
            return Err(SchemeError::TimeGrid(format!("no step after level {n}")));
        }
        let t_new = self.grid.time(n + 1);
        let alpha = self.problem.params.alpha;
        let wrap = |e: SchemeError| SchemeError::Step {
            step: n + 1,
            source: Box::new(e),
        };
        let (u, ptilde, q, multipliers) = match self.problem.algorithm {
            Algorithm::Alg1 => {
                let sol = self.stokes_step(&s.q, t_new).map_err(wrap)?;
                let q = self.diffusion_step(n, &s.q, &sol.ptilde).map_err(wrap)?;
                (sol.u, sol.ptilde, q, sol.multipliers)
            }
            Algorithm::Alg2 => {
                let pt = s.ptilde.as_ref().expect("level state of Alg2 carries p~");
                let q = self.diffusion_step(n, &s.q, pt).map_err(wrap)?;
                let sol = self.stokes_step(&q, t_new).map_err(wrap)?;
                (sol.u, sol.ptilde, q, sol.multipliers)
            }
        };
        let p = reconstruct_pressure(&ptilde, &q, &s.q, alpha, self.problem.algorithm)?;
        Ok(State {
            step: n + 1,
            t: t_new,
            u,
            ptilde: Some(ptilde),
            q,
            q_lag: s.q.clone(),
            p: Some(p),
            multipliers,
        })
    }

    /// Energy paired with a level per the algorithm (see [`StepRecord::energy`]).
    pub fn level_energy(&self, s: &State) -> f64 {
        let q = match self.problem.algorithm {
            Algorithm::Alg1 => &s.q_lag,
            Algorithm::Alg2 => &s.q,
        };
        energy(&self.ops, &self.problem.params, &s.u, q, &self.boundary_load(s.t))
    }

    pub fn record(&self, s: &State) -> StepRecord {
        let m = &self.ops.moments;
        let ptilde_int = s.ptilde.as_ref().map_or(f64::NAN, |p| dot(&m.mean_ptilde, p));
        let p_int = s.p.as_ref().map_or(f64::NAN, |p| dot(&m.mean_ptilde, p));
        StepRecord {
            step: s.step,
            t: s.t,
            energy: self.level_energy(s),
            c_q: dot(&m.mean_ptilde, &s.q),
            c_u: dot(&m.flux_u, &s.u),
            c_ptilde: ptilde_int,
            c_p: p_int,
            theta: self.grid.theta,
            multipliers: s.multipliers,
            compatibility: if self.problem.load.is_time_dependent() {
                check_compatibility(&self.problem.load, &self.problem.mesh, s.t)
            } else {
                0.0
            },
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the problem, calling `observer` on every level including 0.
pub fn run_with(problem: &Problem, mut observer: impl FnMut(&Simulation<'_>, &State)) -> Result<Diagnostics, SchemeError> {
    let sim = Simulation::new(problem)?;
    let mut state = sim.initial_state()?;
    observer(&sim, &state);
    let initial_energy = match problem.algorithm {
        Algorithm::Alg1 => None,
        Algorithm::Alg2 => Some(sim.level_energy(&state)),
    };
    let mut records = Vec::with_capacity(sim.grid.steps);
    for _ in 0..sim.grid.steps {
        state = sim.step(&state)?;
        records.push(sim.record(&state));
        observer(&sim, &state);
    }
    Ok(Diagnostics {
        algorithm: problem.algorithm,
        records,
        initial_energy,
        expected: sim.conserved,
        grid: sim.grid,
        h: sim.ops.h,
        shortened_last_step: sim.grid.shortened,
    })
}

/// Runs the problem and keeps every level.
pub fn run(problem: &Problem) -> Result<(Vec<State>, Diagnostics), SchemeError> {
    let mut states = Vec::new();
    let diag = run_with(problem, |_, s| states.push(s.clone()))?;
    Ok((states, diag))
}

#[cfg(test)]
mod tests;
