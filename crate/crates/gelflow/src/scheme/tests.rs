use super::*;
use crate::mesh::gen_rect_mesh;
use crate::params::{derive_params, MaterialParams};

fn unit_params() -> DerivedParams {
    derive_params(&MaterialParams { k: 1.0, g: 1.0, phi: 0.0, xi: 1.0 }, 2).unwrap()
}

fn problem(n: usize, initial: InitialData, load: BoundaryLoad, dt: f64, t_final: f64, algorithm: Algorithm) -> Problem {
    Problem {
        mesh: gen_rect_mesh(n, n, [0.0, 0.0], [1.0, 1.0]).unwrap(),
        params: unit_params(),
        load,
        initial,
        hooks: SourceHooks::default(),
        dt,
        t_final,
        algorithm,
        theta_threshold: 0.1,
    }
}

#[test]
fn time_grid() {
    let dp = unit_params();
    let g = TimeGrid::new(0.01, 0.05, 0.1, &dp).unwrap();
    assert_eq!((g.steps, g.shortened), (5, false));
    assert!((g.theta - 1.0).abs() < 1e-12);
    let g = TimeGrid::new(0.02, 0.05, 0.1, &dp).unwrap();
    assert_eq!((g.steps, g.shortened), (3, true));
    assert!((g.last_dt - 0.01).abs() < 1e-15);
    assert!((g.time(3) - 0.05).abs() < 1e-15);
    assert!(TimeGrid::new(0.0, 1.0, 0.1, &dp).is_err());
}

#[test]
fn pressure_reconstruction() {
    let p = reconstruct_pressure(&[1.0; 3], &[2.0; 3], &[5.0; 3], 3.0, Algorithm::Alg2).unwrap();
    assert_eq!(p, vec![7.0; 3]);
    let p = reconstruct_pressure(&[1.0; 3], &[5.0; 3], &[2.0; 3], 3.0, Algorithm::Alg1).unwrap();
    assert_eq!(p, vec![7.0; 3]);
    assert!(reconstruct_pressure(&[1.0; 3], &[2.0; 2], &[2.0; 2], 3.0, Algorithm::Alg2).is_err());
}

#[test]
fn zero_data_gives_zero_trajectory() {
    for alg in [Algorithm::Alg1, Algorithm::Alg2] {
        let pb = problem(3, InitialData::zero(), BoundaryLoad::zero(), 0.01, 0.03, alg);
        let (states, diag) = run(&pb).unwrap();
        for s in &states {
            assert!(s.u.iter().chain(&s.q).all(|v| *v == 0.0));
        }
        assert!(diag.energies().iter().all(|e| *e == 0.0));
    }
}

#[test]
fn initial_projections_reproduce_space_members() {
    let pb = problem(3, InitialData::uniform_dilation(2.0, [0.3, 0.1]), BoundaryLoad::zero(), 0.01, 0.01, Algorithm::Alg1);
    let ops = Operators::new(&pb.mesh, &pb.params);
    let q = project_initial_q(&pb.mesh, &ops, &pb.initial).unwrap();
    assert!(q.iter().all(|v| (v - 2.0).abs() < 1e-12));
    let (u, mu) = project_initial_u(&pb.mesh, &ops, &pb.params, &pb.initial).unwrap();
    let exact = fem::interpolate_vector_p2(&pb.mesh, &ops.vdm, |x| pb.initial.u0(x));
    assert!(u.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-10));
    assert!(mu.iter().all(|m| m.abs() < 1e-10));
}

#[test]
fn stokes_closed_form_and_residual() {
    let c = 0.3;
    let pb = problem(4, InitialData::uniform_dilation(c, [0.5, 0.5]), BoundaryLoad::zero(), 0.01, 0.01, Algorithm::Alg1);
    let sim = Simulation::new(&pb).unwrap();
    let q = vec![c; sim.ops.num_p()];
    let sol = sim.stokes_step(&q, 0.01).unwrap();
    let beta = pb.params.beta;
    assert!(sol.ptilde.iter().all(|p| (p - beta * c / 2.0).abs() < 1e-10));
    let exact = fem::interpolate_vector_p2(&pb.mesh, &sim.ops.vdm, |x| [0.5 * c * (x[0] - 0.5), 0.5 * c * (x[1] - 0.5)]);
    assert!(sol.u.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-10));
    assert!(sol.multipliers.iter().all(|m| m.abs() < 1e-12));
    // substitution residual against every test function
    let core = sim.ops.stokes_core();
    let mut x = sol.u.clone();
    x.extend(&sol.ptilde);
    let r = core.matvec(&x);
    let rhs = sim.ops.stokes_rhs(&vec![0.0; sim.ops.num_u()], &q);
    assert!(r.iter().zip(&rhs).all(|(a, b)| (a - b).abs() < 1e-10));

    let zero = sim.stokes_step(&vec![0.0; sim.ops.num_p()], 0.0);
    // zero divergence is incompatible with C_q != 0 for this initial datum
    assert!(matches!(zero, Err(SchemeError::Incompatible { .. })));
}

#[test]
fn diffusion_properties() {
    let pb = problem(4, InitialData::diagonal_sine(1e-2), BoundaryLoad::zero(), 0.01, 0.01, Algorithm::Alg1);
    let sim = Simulation::new(&pb).unwrap();
    let q_prev: Vec<f64> = pb.mesh.vertices().iter().map(|x| (3.0 * x[0]).sin() + x[1]).collect();
    let flat = vec![4.2; sim.ops.num_p()];
    let zero = vec![0.0; sim.ops.num_p()];
    // a constant p~ drops out of the update
    let q_flat = sim.diffusion_step(0, &q_prev, &flat).unwrap();
    let q_zero = sim.diffusion_step(0, &q_prev, &zero).unwrap();
    assert!(q_flat.iter().zip(&q_zero).all(|(a, b)| (a - b).abs() < 1e-12));
    let c = vec![-1.5; sim.ops.num_p()];
    let q = sim.diffusion_step(0, &c, &flat).unwrap();
    assert!(q.iter().all(|v| (v + 1.5).abs() < 1e-12));
    let pt: Vec<f64> = pb.mesh.vertices().iter().map(|x| x[0] * x[1]).collect();
    let q = sim.diffusion_step(0, &q_prev, &pt).unwrap();
    let m = &sim.ops.moments.mean_ptilde;
    assert!((dot(m, &q) - dot(m, &q_prev)).abs() < 1e-12);
}

#[test]
fn fixed_point_both_algorithms() {
    let c = 0.02;
    for alg in [Algorithm::Alg1, Algorithm::Alg2] {
        let pb = problem(3, InitialData::uniform_dilation(c, [0.5, 0.5]), BoundaryLoad::zero(), 0.1, 1.0, alg);
        let (states, diag) = run(&pb).unwrap();
        for s in &states {
            assert!(s.q.iter().all(|v| (v - c).abs() < 1e-9));
            if let Some(pt) = &s.ptilde {
                assert!(pt.iter().all(|v| (v - pb.params.beta * c / 2.0).abs() < 1e-9));
            }
        }
        let e = diag.energies();
        assert!(e.iter().all(|v| (v - e[0]).abs() < 1e-12));
    }
}

#[test]
fn shortened_last_step_reaches_final_time() {
    let pb = problem(3, InitialData::diagonal_sine(1e-2), BoundaryLoad::tangential(0.1), 0.004, 0.01, Algorithm::Alg2);
    let (states, diag) = run(&pb).unwrap();
    assert!(diag.shortened_last_step);
    assert_eq!(states.len(), 4);
    assert!((states.last().unwrap().t - 0.01).abs() < 1e-15);
}

#[test]
fn incompatible_load_rejected() {
    let pb = problem(2, InitialData::zero(), BoundaryLoad::from_fn(|_, _, _| [1.0, 0.0]), 0.01, 0.01, Algorithm::Alg1);
    assert!(matches!(Simulation::new(&pb), Err(SchemeError::LoadIncompatible(_))));
}

#[test]
fn energy_identity_balances() {
    for alg in [Algorithm::Alg1, Algorithm::Alg2] {
        let pb = problem(4, InitialData::diagonal_sine(1e-2), BoundaryLoad::tangential(0.1), 0.01, 0.05, alg);
        let (states, _) = run(&pb).unwrap();
        let sim = Simulation::new(&pb).unwrap();
        let b = energy_identity(&sim, &states);
        assert!(b.relative_mismatch() < 1e-10, "{alg:?}: {b:?}");
    }
}
