mod common;

use common::*;
use evolve::evolution::*;
use evolve::linalg::{c, max_abs_vec, real_diag, CMat, CVec};
use evolve::Error;

fn scalar(m0: f64, m1: f64) -> EvolutionarySystem {
    EvolutionarySystem::new(real_diag(&[m0]), real_diag(&[m1]), CMat::zeros(1, 1), CMat::identity(1, 1)).unwrap()
}

#[test]
fn time_grid_validation() {
    assert!(TimeGrid::new(1.0, 0, 1.0).is_err());
    assert!(TimeGrid::new(-1.0, 4, 1.0).is_err());
    assert!(TimeGrid::new(1.0, 4, f64::NAN).is_err());
    let g = TimeGrid::new(2.0, 8, 1.0).unwrap();
    assert_eq!(g.times().len(), 9);
    assert_eq!(g.index_of(0.74), 3);
}

#[test]
fn scheme_names_round_trip() {
    for s in [Scheme::BackwardEuler, Scheme::ImplicitMidpoint] {
        assert_eq!(Scheme::parse(s.name()).unwrap(), s);
    }
    assert!(Scheme::parse("rk4").is_err());
}

#[test]
fn backward_euler_matches_scalar_recursion() {
    let sys = scalar(1.0, 2.0);
    let g = TimeGrid::new(1.0, 10, 1.0).unwrap();
    let traj = solve(&sys, &CVec::from_element(1, c(1.0)), &|_| CVec::zeros(1), g, Scheme::BackwardEuler).unwrap();
    for k in 0..=10 {
        let expect = (1.0 + 2.0 * g.tau).powi(-(k as i32));
        assert!((traj.states[k][0].re - expect).abs() < 1e-14);
    }
}

#[test]
fn midpoint_matches_scalar_recursion() {
    let sys = scalar(1.0, 1.0);
    let g = TimeGrid::new(1.0, 16, 1.0).unwrap();
    let traj = solve(&sys, &CVec::from_element(1, c(1.0)), &|_| CVec::zeros(1), g, Scheme::ImplicitMidpoint).unwrap();
    let q = (1.0 - 0.5 * g.tau) / (1.0 + 0.5 * g.tau);
    for k in 0..=16 {
        assert!((traj.states[k][0].re - q.powi(k as i32)).abs() < 1e-14);
    }
    assert_eq!(traj.first_regular_step(), 0);
}

#[test]
fn midpoint_is_second_order() {
    let sys = scalar(1.0, 1.0);
    let err = |n: usize| {
        let g = TimeGrid::new(1.0, n, 1.0).unwrap();
        let tr = solve(&sys, &CVec::from_element(1, c(1.0)), &|_| CVec::zeros(1), g, Scheme::ImplicitMidpoint).unwrap();
        (tr.states[n][0].re - (-1.0f64).exp()).abs()
    };
    let ratio = err(20) / err(40);
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
}

#[test]
fn singular_mass_triggers_startup_step() {
    let sys = EvolutionarySystem::new(real_diag(&[1.0, 0.0]), real_diag(&[1.0, 1.0]), CMat::zeros(2, 2), CMat::identity(2, 2)).unwrap();
    let g = TimeGrid::new(1.0, 5, 1.0).unwrap();
    let traj = solve(&sys, &CVec::zeros(2), &|t| CVec::from_element(2, c(t)), g, Scheme::ImplicitMidpoint).unwrap();
    assert_eq!(traj.step_schemes[0], Scheme::BackwardEuler);
    assert_eq!(traj.first_regular_step(), 1);
    // The algebraic component equals the input at each collocation time.
    for k in 0..5 {
        assert!((traj.collocation_state(k)[1] - c(traj.sample_times[k])).norm() < 1e-13);
    }
}

#[test]
fn constructor_rejects_non_selfadjoint_mass_and_non_skew_a() {
    let bad_m0 = CMat::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
    assert!(EvolutionarySystem::new(bad_m0, CMat::zeros(2, 2), CMat::zeros(2, 2), CMat::identity(2, 2)).is_err());
    let bad_a = CMat::identity(2, 2);
    assert!(EvolutionarySystem::new(CMat::identity(2, 2), CMat::zeros(2, 2), bad_a, CMat::identity(2, 2)).is_err());
}

#[test]
fn wellposed_identity_mass() {
    let r = check_wellposed(&CMat::identity(3, 3), &CMat::zeros(3, 3), 2.0).unwrap();
    assert!(r.ok && (r.c - 2.0).abs() < 1e-12);
}

#[test]
fn wellposed_violation_has_witness_in_kernel() {
    let m0 = real_diag(&[1.0, 0.0]);
    let m1 = real_diag(&[0.0, 0.0]);
    let r = check_wellposed(&m0, &m1, 1.0).unwrap();
    assert!(!r.ok);
    assert!(r.witness[0].norm() < 1e-12 && (r.witness[1].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn causality_rejects_inputs_differing_early() {
    let sys = scalar(1.0, 1.0);
    let g = TimeGrid::new(1.0, 10, 1.0).unwrap();
    let f1 = |_: f64| CVec::zeros(1);
    let f2 = |t: f64| CVec::from_element(1, c(if t > 0.2 { 1.0 } else { 0.0 }));
    let e = causality_defect(&sys, &CVec::zeros(1), &f1, &f2, 0.5, g, Scheme::BackwardEuler);
    assert!(matches!(e, Err(Error::InputsDiffer { .. })));
    assert_eq!(causality_defect(&sys, &CVec::zeros(1), &f1, &f2, 0.15, g, Scheme::BackwardEuler).unwrap(), 0.0);
}

#[test]
fn backward_euler_energy_residual_closes() {
    let mut r = rng(31);
    let n = 8;
    let q = rmat(&mut r, n, n);
    let s = rmat(&mut r, n, n);
    let sys = EvolutionarySystem::new(&q * q.adjoint(), CMat::identity(n, n) * c(0.1), (&s - s.adjoint()) * c(0.5), CMat::identity(n, n)).unwrap();
    let dir = rvec(&mut r, n);
    let traj = solve(&sys, &rvec(&mut r, n), &|t| &dir * c(t.cos()), TimeGrid::new(1.0, 20, 1.0).unwrap(), Scheme::BackwardEuler).unwrap();
    for e in step_energies(&sys, &traj) {
        assert!(e.residual().abs() < 1e-11);
        assert!(e.numerical_dissipation >= 0.0);
    }
}

#[test]
fn weighted_norm_of_constant_trajectory() {
    let sys = scalar(1.0, 0.0);
    let g = TimeGrid::new(1.0, 2000, 0.5).unwrap();
    let traj = solve(&sys, &CVec::from_element(1, c(1.0)), &|_| CVec::zeros(1), g, Scheme::BackwardEuler).unwrap();
    let expect = ((1.0 - (-1.0f64).exp()) / 1.0).sqrt();
    assert!((weighted_norm(&traj, &CMat::identity(1, 1)) - expect).abs() < 1e-6);
    assert!(max_abs_vec(&(&traj.states[2000] - &traj.states[0])) < 1e-14);
}
