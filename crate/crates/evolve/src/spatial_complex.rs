//! Staggered gradient/divergence pairs on an interval.
//!
//! Node vectors play the role of `H0`, cell vectors the role of `H1`. `G` is the
//! forward difference node -> cell, `D` is defined through
//! `W0 D = T - G^T W1`, so `<Gu|v>_W1 + <u|Dv>_W0 = u^H T v` holds exactly for
//! all `u`, `v`. The two boundary rows of `T` (and hence of `D`) are fitted so
//! that `N(1 - DG)` and `N(1 - GD)` are both two-dimensional, which makes the
//! zero-boundary subspaces and the boundary data spaces exact graph-orthogonal
//! complements of each other.

use crate::error::{Error, Result};
use crate::linalg::{c, inner, real_diag, CMat, CVec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!("need a < b, got a = {a}, b = {b}")));
        }
        if n_cells == 0 {
            return Err(Error::InvalidGrid("n_cells must be positive".into()));
        }
        Ok(Grid1D { a, b, n_cells, h: (b - a) / n_cells as f64 })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|i| self.a + i as f64 * self.h).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.a + (j as f64 + 0.5) * self.h).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Node,
    Cell,
}

#[derive(Clone, Debug)]
pub struct GradDivPair {
    pub grid: Grid1D,
    /// cells x nodes
    pub g: CMat,
    /// nodes x cells
    pub d: CMat,
    /// nodes x cells boundary form
    pub t: CMat,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub boundary_node_indices: (usize, usize),
    pub minimal_mask_nodes: Vec<bool>,
    pub minimal_mask_cells: Vec<bool>,
}

impl GradDivPair {
    pub fn n_nodes(&self) -> usize {
        self.grid.n_nodes()
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells
    }

    pub fn w0_mat(&self) -> CMat {
        real_diag(&self.w0)
    }

    pub fn w1_mat(&self) -> CMat {
        real_diag(&self.w1)
    }

    pub fn w0_inv_mat(&self) -> CMat {
        real_diag(&self.w0.iter().map(|w| 1.0 / w).collect::<Vec<_>>())
    }

    pub fn w1_inv_mat(&self) -> CMat {
        real_diag(&self.w1.iter().map(|w| 1.0 / w).collect::<Vec<_>>())
    }

    /// Weighted adjoint `G* = W0^{-1} G^H W1` (cells -> nodes).
    pub fn g_adjoint(&self) -> CMat {
        self.w0_inv_mat() * self.g.adjoint() * self.w1_mat()
    }

    /// Weighted adjoint `D* = W1^{-1} D^H W0` (nodes -> cells).
    pub fn d_adjoint(&self) -> CMat {
        self.w1_inv_mat() * self.d.adjoint() * self.w0_mat()
    }

    /// The minimal divergence extended by duality to all cell vectors,
    /// `D - W0^{-1} T = -G*`. It agrees with `D` on the zero-boundary cells.
    pub fn d_min_ext(&self) -> CMat {
        &self.d - self.w0_inv_mat() * &self.t
    }

    /// The minimal gradient extended by duality, `G - W1^{-1} T^H = -D*`.
    pub fn g_min_ext(&self) -> CMat {
        &self.g - self.w1_inv_mat() * self.t.adjoint()
    }

    /// Gram matrix of the graph inner product of `G` on node vectors.
    pub fn graph_gram_nodes(&self) -> CMat {
        self.w0_mat() + self.g.adjoint() * self.w1_mat() * &self.g
    }

    /// Gram matrix of the graph inner product of `D` on cell vectors.
    pub fn graph_gram_cells(&self) -> CMat {
        self.w1_mat() + self.d.adjoint() * self.w0_mat() * &self.d
    }

    pub fn boundary_term(&self, u: &CVec, v: &CVec) -> num_complex::Complex64 {
        u.dotc(&(&self.t * v))
    }
}

/// Boundary rows of `D` as coefficients on the first and last cell.
fn closure_rows(n: usize, h: f64) -> ([f64; 2], [f64; 2]) {
    // Cell sequences solving v_j = (v_{j+1} - 2 v_j + v_{j-1}) / h^2.
    let r_minus = 1.0 / (1.0 + 0.5 * h * h + h * (1.0 + 0.25 * h * h).sqrt());
    let last = (n - 1) as i32;
    let e_left = |j: usize| r_minus.powi(j as i32);
    let e_right = |j: usize| r_minus.powi(last - j as i32);
    let d_left = |v: &dyn Fn(usize) -> f64| (v(1) - v(0)) / h - h * v(0);
    let d_right = |v: &dyn Fn(usize) -> f64| (v(n - 1) - v(n - 2)) / h + h * v(n - 1);
    let rho = r_minus.powi(last);
    let det = 1.0 - rho * rho;
    let solve = |f0: f64, f1: f64| [(f0 - rho * f1) / det, (f1 - rho * f0) / det];
    let left = solve(d_left(&e_left), d_left(&e_right));
    let right = solve(d_right(&e_left), d_right(&e_right));
    (left, right)
}

pub fn build_sbp_pair_1d(grid: Grid1D) -> Result<GradDivPair> {
    let n = grid.n_cells;
    if n < 2 {
        return Err(Error::InvalidGrid(format!("n_cells must be at least 2, got {n}")));
    }
    let h = grid.h;
    let nn = n + 1;

    let mut g = CMat::zeros(n, nn);
    for j in 0..n {
        g[(j, j)] = c(-1.0 / h);
        g[(j, j + 1)] = c(1.0 / h);
    }
    let mut w0 = vec![h; nn];
    w0[0] = 0.5 * h;
    w0[n] = 0.5 * h;
    let w1 = vec![h; n];

    let (left, right) = closure_rows(n, h);
    let mut t = CMat::zeros(nn, n);
    t[(0, 0)] += c(w0[0] * left[0] - 1.0);
    t[(0, n - 1)] += c(w0[0] * left[1]);
    t[(n, 0)] += c(w0[n] * right[0]);
    t[(n, n - 1)] += c(w0[n] * right[1] + 1.0);

    let w0_inv = real_diag(&w0.iter().map(|w| 1.0 / w).collect::<Vec<_>>());
    let d = &w0_inv * (&t - g.adjoint() * real_diag(&w1));

    let minimal_mask_nodes = (0..nn).map(|i| i != 0 && i != n).collect();
    let minimal_mask_cells = (0..n).map(|j| j != 0 && j != n - 1).collect();

    Ok(GradDivPair {
        grid,
        g,
        d,
        t,
        w0,
        w1,
        boundary_node_indices: (0, n),
        minimal_mask_nodes,
        minimal_mask_cells,
    })
}

/// `|<Gu|v>_W1 + <u|Dv>_W0 - u^H T v|`.
pub fn ibp_defect(pair: &GradDivPair, u: &CVec, v: &CVec) -> Result<f64> {
    if u.len() != pair.n_nodes() || v.len() != pair.n_cells() {
        return Err(Error::Shape(format!(
            "expected node vector of length {} and cell vector of length {}, got {} and {}",
            pair.n_nodes(),
            pair.n_cells(),
            u.len(),
            v.len()
        )));
    }
    let lhs = inner(&pair.w1_mat(), &(&pair.g * u), v) + inner(&pair.w0_mat(), u, &(&pair.d * v));
    Ok((lhs - pair.boundary_term(u, v)).norm())
}

/// Orthogonal projector onto the zero-boundary subspace of the given side.
/// The projector is diagonal, hence symmetric in the diagonal weights.
pub fn minimal_projector(pair: &GradDivPair, side: Side) -> CMat {
    let mask = match side {
        Side::Node => &pair.minimal_mask_nodes,
        Side::Cell => &pair.minimal_mask_cells,
    };
    real_diag(&mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_vec, max_abs, max_abs_vec};

    fn pair(n: usize) -> GradDivPair {
        build_sbp_pair_1d(Grid1D::new(0.0, 1.0, n).unwrap()).unwrap()
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid1D::new(1.0, 1.0, 4).is_err());
        assert!(Grid1D::new(0.0, 1.0, 0).is_err());
        assert!(build_sbp_pair_1d(Grid1D::new(0.0, 1.0, 1).unwrap()).is_err());
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let p = pair(8);
        let one = CVec::from_element(9, c(1.0));
        assert!(max_abs_vec(&(&p.g * one)) < 1e-14 * 8.0);
    }

    #[test]
    fn gradient_of_coordinate_is_one() {
        let p = pair(10);
        let x = from_real_vec(&p.grid.nodes());
        let gx = &p.g * x;
        assert!(gx.iter().all(|z| (z - c(1.0)).norm() < 1e-12));
    }

    #[test]
    fn sbp_identity_holds_matrixwise() {
        for n in [2, 3, 4, 17] {
            let p = pair(n);
            let lhs = p.w0_mat() * &p.d + p.g.adjoint() * p.w1_mat();
            assert!(max_abs(&(lhs - &p.t)) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn boundary_form_lives_on_boundary() {
        let p = pair(9);
        for i in 1..9 {
            assert_eq!(p.t.row(i).iter().map(|z| z.norm()).sum::<f64>(), 0.0);
        }
        for j in 1..8 {
            assert_eq!(p.t.column(j).iter().map(|z| z.norm()).sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn interior_divergence_is_backward_difference() {
        let p = pair(6);
        let h = p.grid.h;
        for i in 1..6 {
            assert!((p.d[(i, i)] - c(1.0 / h)).norm() < 1e-12);
            assert!((p.d[(i, i - 1)] + c(1.0 / h)).norm() < 1e-12);
        }
    }

    #[test]
    fn projectors_behave() {
        let p = pair(5);
        for side in [Side::Node, Side::Cell] {
            let pr = minimal_projector(&p, side);
            assert!(max_abs(&(&pr * &pr - &pr)) < 1e-14);
        }
        let pn = minimal_projector(&p, Side::Node);
        let mut e0 = CVec::zeros(6);
        e0[0] = c(1.0);
        assert_eq!(max_abs_vec(&(&pn * &e0)), 0.0);
        let mut e2 = CVec::zeros(6);
        e2[2] = c(1.0);
        assert_eq!(&pn * &e2, e2);
    }

    #[test]
    fn ibp_defect_shape_error() {
        let p = pair(4);
        assert!(ibp_defect(&p, &CVec::zeros(4), &CVec::zeros(4)).is_err());
    }

    #[test]
    fn minimal_extension_agrees_on_zero_boundary_cells() {
        let p = pair(7);
        let pc = minimal_projector(&p, Side::Cell);
        assert!(max_abs(&(p.d_min_ext() * &pc - &p.d * &pc)) < 1e-12);
        assert!(max_abs(&(p.d_min_ext() + p.g_adjoint())) < 1e-10);
    }
}
