#![allow(dead_code)]

use evolve::control_system::{assemble_control, BlockPartition, ControlSystem};
use evolve::linalg::{c, CMat, CVec, I};
use evolve::spatial_complex::{build_sbp_pair_1d, GradDivPair, Grid1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rvec(r: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(r.gen_range(-1.0..1.0)) + I * r.gen_range(-1.0..1.0))
}

pub fn rmat(r: &mut ChaCha8Rng, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| c(r.gen_range(-1.0..1.0)) + I * r.gen_range(-1.0..1.0))
}

pub fn pair(n: usize) -> GradDivPair {
    build_sbp_pair_1d(Grid1D::new(0.0, 1.0, n).unwrap()).unwrap()
}

/// Roots of `r + 1/r = 2 + h^2`, the discrete exponentials `r^i` solving
/// `u_i = (u_{i+1} - 2 u_i + u_{i-1}) / h^2`.
pub fn discrete_exponential_roots(h: f64) -> (f64, f64) {
    let s = 1.0 + 0.5 * h * h;
    let d = (s * s - 1.0).sqrt();
    (s + d, s - d)
}

/// Random system with `M0 = diag(M0', 0)` and `B0`, `B1` chosen to satisfy
/// the compatibility conditions.
pub fn compatible_system(seed: u64, n0: usize, n1: usize, ny: usize, nu: usize) -> ControlSystem {
    let mut r = rng(seed);
    let p = BlockPartition { n0, n1, ny, nu, nw: 0 };
    let n = p.state_dim();
    let nh = n0 + n1;
    let q = rmat(&mut r, nh, nh);
    let mut m0 = CMat::zeros(n, n);
    m0.view_mut((0, 0), (nh, nh)).copy_from(&(&q * q.adjoint() + CMat::identity(nh, nh)));
    let mut m1 = rmat(&mut r, n, n) * c(0.2);
    let m22 = rmat(&mut r, ny, ny) * c(0.2) + CMat::identity(ny, ny) * c(2.0);
    m1.view_mut((nh, nh), (ny, ny)).copy_from(&m22);
    let f = rmat(&mut r, n1, n0);
    let b2 = rmat(&mut r, ny, nu);
    let m22_inv = m22.try_inverse().unwrap();
    let b0 = (&m22_inv * m1.view((nh, 0), (ny, n0))).adjoint() * &b2;
    let b1 = (&m22_inv * m1.view((nh, n0), (ny, n1))).adjoint() * &b2;
    let mut b = CMat::zeros(n, nu);
    b.view_mut((0, 0), (n0, nu)).copy_from(&b0);
    b.view_mut((n0, 0), (n1, nu)).copy_from(&b1);
    b.view_mut((nh, 0), (ny, nu)).copy_from(&b2);
    assemble_control(p, m0, m1, f.clone(), f.adjoint(), b).unwrap()
}
