//! Abstract linear control systems
//! `(d/dt M0 + M1 + A) x = (1 B) (f, u)` on `H0 + H1 + Y` with
//! `A = [[0, -F*, 0], [F, 0, 0], [0, 0, 0]]`.
//!
//! All matrices are in coordinates that are orthonormal for the underlying
//! inner products, so the adjoint of a block is its conjugate transpose.

use crate::bdspace::BoundaryStructure;
use crate::error::{Error, Result};
use crate::evolution::{EvolutionarySystem, Scheme, Trajectory};
use crate::linalg::{c, herm_part, hermitian_defect, inner, lstsq, max_abs, max_abs_vec, CMat, CVec, Factored};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub n0: usize,
    pub n1: usize,
    pub ny: usize,
    /// Control dimension (columns of `B`).
    pub nu: usize,
    /// Trailing part of `H1` carrying boundary variables `w`.
    pub nw: usize,
}

impl BlockPartition {
    pub fn state_dim(&self) -> usize {
        self.n0 + self.n1 + self.ny
    }

    pub fn h0(&self) -> std::ops::Range<usize> {
        0..self.n0
    }

    pub fn h1(&self) -> std::ops::Range<usize> {
        self.n0..self.n0 + self.n1
    }

    pub fn y(&self) -> std::ops::Range<usize> {
        self.n0 + self.n1..self.state_dim()
    }

    pub fn w(&self) -> std::ops::Range<usize> {
        self.n0 + self.n1 - self.nw..self.n0 + self.n1
    }
}

#[derive(Clone, Debug)]
pub struct ControlSystem {
    pub partition: BlockPartition,
    pub m0: CMat,
    pub m1: CMat,
    /// `F: H0 -> H1`.
    pub f: CMat,
    /// `F*: H1 -> H0` as supplied, checked against `F^H`.
    pub f_adj: CMat,
    pub a: CMat,
    /// `(B0; B1; B2)`.
    pub b: CMat,
    /// `J = (1 B)`.
    pub j: CMat,
    pub evo: EvolutionarySystem,
}

fn block(m: &CMat, r: std::ops::Range<usize>, k: std::ops::Range<usize>) -> CMat {
    m.view((r.start, k.start), (r.len(), k.len())).into_owned()
}

fn rows(m: &CMat, r: std::ops::Range<usize>) -> CMat {
    m.rows(r.start, r.len()).into_owned()
}

pub fn assemble_control(
    partition: BlockPartition,
    m0: CMat,
    m1: CMat,
    f: CMat,
    f_adj: CMat,
    b: CMat,
) -> Result<ControlSystem> {
    let p = partition;
    let n = p.state_dim();
    if p.nw > p.n1 {
        return Err(Error::Shape(format!("nw = {} exceeds n1 = {}", p.nw, p.n1)));
    }
    let checks = [
        ("M0", m0.shape(), (n, n)),
        ("M1", m1.shape(), (n, n)),
        ("F", f.shape(), (p.n1, p.n0)),
        ("F*", f_adj.shape(), (p.n0, p.n1)),
        ("B", b.shape(), (n, p.nu)),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(Error::Shape(format!("{name} is {got:?}, expected {want:?}")));
        }
    }
    let hd = hermitian_defect(&m0);
    if hd > 1e-12 * max_abs(&m0).max(1.0) {
        return Err(Error::Hypothesis(format!("M0 is not selfadjoint (defect {hd:.3e})")));
    }
    let adj = max_abs(&(&f_adj - f.adjoint()));
    if adj > 1e-10 * max_abs(&f).max(1.0) {
        return Err(Error::Hypothesis(format!("supplied F* is not the adjoint of F (defect {adj:.3e})")));
    }
    let mut a = CMat::zeros(n, n);
    a.view_mut((0, p.n0), (p.n0, p.n1)).copy_from(&(-&f_adj));
    a.view_mut((p.n0, 0), (p.n1, p.n0)).copy_from(&f);
    let mut j = CMat::zeros(n, n + p.nu);
    j.view_mut((0, 0), (n, n)).fill_with_identity();
    j.view_mut((0, n), (n, p.nu)).copy_from(&b);
    // F* is taken from F so that A is skew to roundoff.
    let a_skew = (&a - a.adjoint()) * c(0.5);
    let evo = EvolutionarySystem::new(m0.clone(), m1.clone(), a_skew.clone(), j.clone())?;
    Ok(ControlSystem { partition, m0, m1, f, f_adj, a: a_skew, b, j, evo })
}

impl ControlSystem {
    pub fn dim(&self) -> usize {
        self.partition.state_dim()
    }

    /// Full source vector `(0, u)` for a control value `u`.
    pub fn source(&self, u: &CVec) -> CVec {
        let n = self.dim();
        let mut f = CVec::zeros(n + self.partition.nu);
        f.rows_mut(n, self.partition.nu).copy_from(u);
        f
    }

    pub fn control_of(&self, f: &CVec) -> CVec {
        f.rows(self.dim(), self.partition.nu).into_owned()
    }

    pub fn m1_block(&self, r: usize, k: usize) -> CMat {
        let ranges = [self.partition.h0(), self.partition.h1(), self.partition.y()];
        block(&self.m1, ranges[r].clone(), ranges[k].clone())
    }

    pub fn b_block(&self, r: usize) -> CMat {
        let ranges = [self.partition.h0(), self.partition.h1(), self.partition.y()];
        rows(&self.b, ranges[r].clone())
    }

    pub fn skew_defect(&self) -> f64 {
        max_abs(&(&self.a + self.a.adjoint()))
    }

    /// `|<F x|z> - <x|F* z>|`.
    pub fn adjoint_defect(&self, x: &CVec, z: &CVec) -> f64 {
        ((&self.f * x).dotc(z) - x.dotc(&(&self.f_adj * z))).norm()
    }
}

/// `(|(M22^{-1} M20)^H B2 - B0|, |(M22^{-1} M21)^H B2 - B1|)` in the Frobenius norm.
pub fn check_compatibility(sys: &ControlSystem) -> Result<(f64, f64)> {
    let m22 = sys.m1_block(2, 2);
    let fac = Factored::new(&m22).map_err(|e| {
        Error::Hypothesis(format!("M1 block on Y is not invertible ({e})"))
    })?;
    let b2 = sys.b_block(2);
    let d0 = fac.solve_mat(&sys.m1_block(2, 0)).adjoint() * &b2 - sys.b_block(0);
    let d1 = fac.solve_mat(&sys.m1_block(2, 1)).adjoint() * &b2 - sys.b_block(1);
    Ok((d0.norm(), d1.norm()))
}

#[derive(Clone, Copy, Debug)]
pub struct EnergyLedger {
    pub a: f64,
    pub b: f64,
    /// `1/2 <x|M0 x>(a) - 1/2 <x|M0 x>(b)`.
    pub stored_drop: f64,
    /// `int <x|Re M1 x>`.
    pub dissipation: f64,
    /// `int <B2 u|Re(M22^{-1}) B2 u>`.
    pub supply: f64,
    /// `sum 1/2 <dx|M0 dx>` over backward Euler steps.
    pub numerical_dissipation: f64,
    /// `stored_drop - (dissipation - supply)`.
    pub defect: f64,
}

/// Energy balance over `[a, b]`, both on the time grid. Quadrature uses the
/// collocation state and input sample of each step.
pub fn energy_ledger(sys: &ControlSystem, traj: &Trajectory, a: f64, b: f64) -> Result<EnergyLedger> {
    let g = &traj.grid;
    let (ka, kb) = (g.index_of(a), g.index_of(b));
    let on_grid = |t: f64, k: usize| (t - g.time(k)).abs() <= 1e-9 * g.tau;
    if !(on_grid(a, ka) && on_grid(b, kb)) || ka >= kb {
        return Err(Error::Spec(format!("interval [{a}, {b}] must be increasing grid points")));
    }
    let p = sys.partition;
    let m0_y = rows(&sys.m0, p.y());
    if max_abs(&m0_y) > 0.0 {
        return Err(Error::Hypothesis("M0 has a nonzero block row on Y".into()));
    }
    let (d0, d1) = check_compatibility(sys)?;
    if d0 > 1e-10 || d1 > 1e-10 {
        return Err(Error::Hypothesis(format!(
            "compatibility conditions fail: B0 defect {d0:.3e}, B1 defect {d1:.3e}"
        )));
    }
    let m22_inv = sys
        .m1_block(2, 2)
        .try_inverse()
        .ok_or_else(|| Error::Hypothesis("M1 block on Y is not invertible".into()))?;
    let re_m22_inv = herm_part(&m22_inv);
    let re_m1 = herm_part(&sys.m1);
    let b2 = sys.b_block(2);
    let n = sys.dim();
    let tau = g.tau;

    let (mut diss, mut supply, mut num) = (0.0, 0.0, 0.0);
    for k in ka..kb {
        let src = &traj.inputs[k];
        if src.len() != n + p.nu {
            return Err(Error::Shape("trajectory was not produced by this control system".into()));
        }
        if max_abs_vec(&src.rows(0, n).into_owned()) > 0.0 {
            return Err(Error::Hypothesis("trajectory carries a nonzero state source".into()));
        }
        let xc = traj.collocation_state(k);
        diss += tau * inner(&re_m1, &xc, &xc).re;
        let bu = &b2 * sys.control_of(src);
        supply += tau * inner(&re_m22_inv, &bu, &bu).re;
        if traj.step_schemes[k] == Scheme::BackwardEuler {
            let dx = &traj.states[k + 1] - &traj.states[k];
            num += 0.5 * inner(&sys.m0, &dx, &dx).re;
        }
    }
    let e = |k: usize| 0.5 * inner(&sys.m0, &traj.states[k], &traj.states[k]).re;
    let stored_drop = e(ka) - e(kb);
    Ok(EnergyLedger {
        a,
        b,
        stored_drop,
        dissipation: diss,
        supply,
        numerical_dissipation: num,
        defect: stored_drop - (diss - supply),
    })
}

#[derive(Clone, Debug)]
pub struct IoSamples {
    /// Collocation time of each step.
    pub t: Vec<f64>,
    pub u: Vec<CVec>,
    pub w: Vec<CVec>,
    pub y: Vec<CVec>,
    /// Largest deviation between the recovered `(w, y)` and the trajectory.
    pub deviation: f64,
}

/// Recovers `(w, y)` at each collocation state from the algebraic rows
/// `[[M1_ww, M1_wy], [M1_yw, M1_yy]] (w; y) = B_wy u - (M1 + A)_{wy, rest} x_rest`.
pub fn extract_io(sys: &ControlSystem, traj: &Trajectory) -> Result<IoSamples> {
    let p = sys.partition;
    let alg: Vec<usize> = p.w().chain(p.y()).collect();
    let rest: Vec<usize> = (0..p.n0 + p.n1 - p.nw).collect();
    let m0_alg = sys.m0.select_rows(&alg);
    if max_abs(&m0_alg) > 0.0 {
        return Err(Error::Hypothesis("M0 has nonzero rows on (w, y); they are not algebraic".into()));
    }
    let op = &sys.m1 + &sys.a;
    let k_aa = op.select_rows(&alg).select_columns(&alg);
    let k_ar = op.select_rows(&alg).select_columns(&rest);
    let b_a = sys.b.select_rows(&alg);
    let fac = Factored::new(&k_aa).map_err(|e| {
        Error::Hypothesis(format!("block of M1 on (w, y) is not invertible ({e})"))
    })?;
    let mut out = IoSamples { t: vec![], u: vec![], w: vec![], y: vec![], deviation: 0.0 };
    for k in 0..traj.grid.n_steps {
        let xc = traj.collocation_state(k);
        let u = sys.control_of(&traj.inputs[k]);
        let x_rest = xc.select_rows(&rest);
        let wy = fac.solve(&(&b_a * &u - &k_ar * x_rest));
        let direct = xc.select_rows(&alg);
        out.deviation = out.deviation.max(max_abs_vec(&(&wy - direct)));
        out.t.push(traj.sample_times[k]);
        out.w.push(wy.rows(0, p.nw).into_owned());
        out.y.push(wy.rows(p.nw, p.ny).into_owned());
        out.u.push(u);
    }
    Ok(out)
}

/// Norm of `pi_BD(D) (zeta + D_min^{-1} C<> w)` in `BD(D)` coordinates.
/// `c_dual_w` is `C<> w` as a node vector; its component along the constants
/// is removed before the least-squares solve.
pub fn boundary_equation_defect(bs: &BoundaryStructure, zeta: &CVec, c_dual_w: &CVec) -> f64 {
    let pair = &bs.pair;
    let w0 = pair.w0_mat();
    let one = CVec::from_element(pair.n_nodes(), c(1.0));
    let r = c_dual_w - &one * (inner(&w0, &one, c_dual_w) / inner(&w0, &one, &one));
    let pre = lstsq(&pair.d_min_ext(), &r, 1e-10);
    bs.bd_d.project(&(zeta + pre)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;

    /// The scalar example: H0 = C, H1 = C^2 = (zeta, w), Y = C.
    fn sqrt2_example(b1: [f64; 2]) -> ControlSystem {
        let s2 = 2f64.sqrt();
        let p = BlockPartition { n0: 1, n1: 2, ny: 1, nu: 1, nw: 1 };
        let m0 = real_diag(&[1.0, 1.0, 0.0, 0.0]);
        let mut m1 = CMat::zeros(4, 4);
        m1[(2, 2)] = c(1.0);
        m1[(3, 2)] = c(s2);
        m1[(3, 3)] = c(1.0);
        let f = CMat::from_column_slice(2, 1, &[c(1.0), c(0.5)]);
        let b = CMat::from_column_slice(4, 1, &[c(0.0), c(b1[0]), c(b1[1]), c(-1.0)]);
        assemble_control(p, m0, m1, f.clone(), f.adjoint(), b).unwrap()
    }

    #[test]
    fn compatible_example() {
        let s2 = 2f64.sqrt();
        let (d0, d1) = check_compatibility(&sqrt2_example([0.0, -s2])).unwrap();
        assert!(d0 < 1e-12 && d1 < 1e-12);
        let (_, d1) = check_compatibility(&sqrt2_example([0.0, 0.0])).unwrap();
        assert!((d1 - s2).abs() < 1e-12);
    }

    #[test]
    fn wrong_adjoint_rejected() {
        let p = BlockPartition { n0: 1, n1: 1, ny: 0, nu: 0, nw: 0 };
        let f = real_diag(&[1.0]);
        let r = assemble_control(p, real_diag(&[1.0, 1.0]), CMat::zeros(2, 2), f, real_diag(&[2.0]), CMat::zeros(2, 0));
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn singular_y_block_is_hypothesis_error() {
        let p = BlockPartition { n0: 1, n1: 1, ny: 1, nu: 1, nw: 0 };
        let f = real_diag(&[1.0]);
        let sys = assemble_control(p, real_diag(&[1.0, 1.0, 0.0]), CMat::zeros(3, 3), f.clone(), f, CMat::zeros(3, 1)).unwrap();
        assert!(matches!(check_compatibility(&sys), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn assembled_operator_is_skew() {
        let sys = sqrt2_example([0.0, -2f64.sqrt()]);
        assert!(sys.skew_defect() < 1e-14);
        assert_eq!(sys.a[(1, 0)], c(1.0));
        assert_eq!(sys.a[(0, 1)], c(-1.0));
    }
}
