mod common;

use common::*;
use evolve::linalg::{c, from_real_vec, max_abs, max_abs_vec, CVec};
use evolve::spatial_complex::*;
use evolve::Error;

#[test]
fn grid_geometry() {
    let g = Grid1D::new(-1.0, 2.0, 6).unwrap();
    assert_eq!(g.n_nodes(), 7);
    assert!((g.h - 0.5).abs() < 1e-15);
    assert_eq!(g.nodes()[6], 2.0);
    assert!((g.midpoints()[0] + 0.75).abs() < 1e-15);
}

#[test]
fn one_cell_is_invalid() {
    let g = Grid1D::new(0.0, 1.0, 1).unwrap();
    assert!(matches!(build_sbp_pair_1d(g), Err(Error::InvalidGrid(_))));
    assert!(matches!(Grid1D::new(0.0, f64::NAN, 3), Err(Error::InvalidGrid(_))));
}

#[test]
fn gradient_of_square_is_exact_at_midpoints() {
    let p = pair(12);
    let x2 = from_real_vec(&p.grid.nodes().iter().map(|x| x * x).collect::<Vec<_>>());
    let expect = from_real_vec(&p.grid.midpoints().iter().map(|x| 2.0 * x).collect::<Vec<_>>());
    assert!(max_abs_vec(&(&p.g * x2 - expect)) < 1e-12);
}

#[test]
fn trapezoid_weights_integrate_linears_exactly() {
    let p = pair(9);
    let total: f64 = p.w0.iter().zip(p.grid.nodes()).map(|(w, x)| w * (3.0 * x + 1.0)).sum();
    assert!((total - 2.5).abs() < 1e-14);
    assert!((p.w1.iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn divergence_maps_discrete_exponentials_back() {
    // D G u = u for u_i = r^i: the fitted boundary rows reproduce the
    // interior recursion at the ends.
    for n in [2, 3, 8, 40] {
        let p = pair(n);
        let (rp, rm) = discrete_exponential_roots(p.grid.h);
        for r in [rp, rm] {
            let u = from_real_vec(&(0..=n).map(|i| r.powi(i as i32) / rp.powi(n as i32 / 2)).collect::<Vec<_>>());
            let dgu = &p.d * (&p.g * &u);
            assert!(max_abs_vec(&(dgu - &u)) < 1e-8 * max_abs_vec(&u), "n = {n}");
        }
    }
}

#[test]
fn ibp_holds_for_random_vectors() {
    let mut r = rng(11);
    for n in [2, 5, 33] {
        let p = pair(n);
        for _ in 0..20 {
            assert!(ibp_defect(&p, &rvec(&mut r, n + 1), &rvec(&mut r, n)).unwrap() < 1e-12);
        }
    }
}

#[test]
fn boundary_term_vanishes_on_zero_boundary_vectors() {
    let mut r = rng(12);
    let p = pair(10);
    let pn = minimal_projector(&p, Side::Node);
    let pc = minimal_projector(&p, Side::Cell);
    let u = &pn * rvec(&mut r, 11);
    let v = rvec(&mut r, 10);
    assert!(p.boundary_term(&u, &v).norm() < 1e-14);
    let v = &pc * rvec(&mut r, 10);
    let u = rvec(&mut r, 11);
    assert!(p.boundary_term(&u, &v).norm() < 1e-14);
}

#[test]
fn minimal_operators_are_negative_adjoints() {
    let p = pair(14);
    assert!(max_abs(&(p.g_min_ext() + p.d_adjoint())) < 1e-9);
    let pn = minimal_projector(&p, Side::Node);
    assert!(max_abs(&(p.g_min_ext() * &pn - &p.g * &pn)) < 1e-12);
}

#[test]
fn constants_lie_in_kernel_of_gradient() {
    let p = pair(7);
    assert!(max_abs_vec(&(&p.g * CVec::from_element(8, c(2.5)))) < 1e-12);
}
