use crate::params::DerivedParams;

use super::{dot, Algorithm, Diagnostics, Operators, Simulation, State};

/// `1/2 [beta |grad u|^2 + alpha |q|^2 - 2 <f, u>]`, with `load` the
/// assembled boundary-load vector.
pub fn energy(ops: &Operators, dp: &DerivedParams, u: &[f64], q: &[f64], load: &[f64]) -> f64 {
    0.5 * (ops.laplacian.bilinear(u, u) + dp.alpha * ops.mass.bilinear(q, q) - 2.0 * dot(load, u))
}

/// Steps `n` at which `J^n > J^{n-1} + tol |J^0|`, with energies indexed as
/// in [`Diagnostics::energies`].
pub fn energy_monotonicity_report(diag: &Diagnostics, tol: f64) -> Vec<usize> {
    let e = diag.energies();
    let Some(&j0) = e.first() else {
        return Vec::new();
    };
    e.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + tol * j0.abs())
        .map(|(k, _)| k + 1)
        .collect()
}

/// Both sides of the telescoped discrete energy identity
///
/// `J^N - J^0 + sum [beta/2 |grad du|^2 + alpha/2 |dq|^2 + dt kappa |grad p|^2]
///  = sum dt kappa (grad dp~, grad p)`
///
/// where the sums run over the steps for which every term is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub lhs: f64,
    pub rhs: f64,
    /// Sum of the magnitudes of all terms.
    pub scale: f64,
}

impl EnergyBalance {
    pub fn relative_mismatch(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Evaluates the identity over a stored trajectory `states[0..]` of a
/// physical run.
pub fn energy_identity(sim: &Simulation<'_>, states: &[State]) -> EnergyBalance {
    let ops = &sim.ops;
    let dp = &sim.problem.params;
    let load = sim.boundary_load(0.0);
    let e = |u: &[f64], q: &[f64]| energy(ops, dp, u, q, &load);
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut scale = 0.0;
    let mut add = |l: f64, r: f64| {
        lhs += l;
        rhs += r;
        scale += l.abs() + r.abs();
    };
    // per summand: (index of the new q, index of the new u)
    let terms: Vec<(usize, usize)> = match sim.problem.algorithm {
        // step n uses u^{n+1}, u^n, q^n, q^{n-1}, p~^{n+1}, p~^n
        Algorithm::Alg1 => (1..states.len().saturating_sub(1)).map(|n| (n, n + 1)).collect(),
        // step n uses u^n, u^{n-1}, q^n, q^{n-1}, p~^n, p~^{n-1}
        Algorithm::Alg2 => (1..states.len()).map(|n| (n, n)).collect(),
    };
    let Some(&(first_q, first_u)) = terms.first() else {
        return EnergyBalance { lhs: 0.0, rhs: 0.0, scale: 0.0 };
    };
    let &(last_q, last_u) = terms.last().unwrap();
    let j_start = e(&states[first_u - 1].u, &states[first_q - 1].q);
    let j_end = e(&states[last_u].u, &states[last_q].q);
    add(j_end, 0.0);
    add(-j_start, 0.0);
    for &(nq, nu) in &terms {
        let dt = states[nq].t - states[nq - 1].t;
        let du = diff(&states[nu].u, &states[nu - 1].u);
        let dq = diff(&states[nq].q, &states[nq - 1].q);
        let pt_new = states[nu].ptilde.as_ref().expect("p~ defined");
        let pt_old = states[nu - 1].ptilde.as_ref().expect("p~ defined");
        let p: Vec<f64> = pt_new.iter().zip(&states[nq].q).map(|(a, b)| a + dp.alpha * b).collect();
        let dpt = diff(pt_new, pt_old);
        add(0.5 * ops.laplacian.bilinear(&du, &du), 0.0);
        add(0.5 * dp.alpha * ops.mass.bilinear(&dq, &dq), 0.0);
        add(dt * dp.kappa * ops.stiffness.bilinear(&p, &p), 0.0);
        add(0.0, dt * dp.kappa * ops.stiffness.bilinear(&dpt, &p));
    }
    EnergyBalance { lhs, rhs, scale }
}
