//! Preset systems: a 1D port-Hamiltonian system, the wave system with
//! boundary control and observation through the space `U`, its mixed-type
//! variant and a boundary lifting solve for a 1D Maxwell analogue.
//!
//! Control systems are assembled in coordinates that are orthonormal for the
//! physical inner products (`W0` on nodes, `W1` on cells, the `U` Gram matrix on
//! boundary variables). Each model keeps the maps back to physical vectors.

use crate::bdspace::{build_u_space, BoundaryStructure, USpace};
use crate::control_system::{assemble_control, boundary_equation_defect, BlockPartition, ControlSystem};
use crate::error::{Error, Result};
use crate::evolution::{solve, EvolutionarySystem, Scheme, TimeGrid, Trajectory};
use crate::linalg::{
    block_diag, c, inner, lambda_min_herm, max_abs, max_abs_vec, real_diag, weighted_gram_schmidt, CMat,
    CVec, Factored,
};
use crate::spatial_complex::{build_sbp_pair_1d, GradDivPair, Grid1D};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Integrates a control system for a control signal `u(t)`.
pub fn solve_controlled(
    sys: &ControlSystem,
    x0: &CVec,
    u: &dyn Fn(f64) -> CVec,
    grid: TimeGrid,
    scheme: Scheme,
) -> Result<Trajectory> {
    let f = |t: f64| sys.source(&u(t));
    solve(&sys.evo, x0, &f, grid, scheme)
}

fn sqrt_diag(w: &[f64]) -> CMat {
    real_diag(&w.iter().map(|x| x.sqrt()).collect::<Vec<_>>())
}

fn inv_sqrt_diag(w: &[f64]) -> CMat {
    real_diag(&w.iter().map(|x| 1.0 / x.sqrt()).collect::<Vec<_>>())
}

fn indicator(v: &[bool]) -> Vec<f64> {
    v.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

// ---------------------------------------------------------------------------
// Wave system

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Indicator functions of the elliptic, parabolic and hyperbolic regions on
/// nodes and on cells.
#[derive(Clone, Debug)]
pub struct MixedPartition {
    pub nodes: [Vec<bool>; 3],
    pub cells: [Vec<bool>; 3],
}

impl MixedPartition {
    pub fn uniform(grid: &Grid1D, region: Region) -> Self {
        let k = region as usize;
        let mk = |len: usize| -> [Vec<bool>; 3] {
            let mut out = [vec![false; len], vec![false; len], vec![false; len]];
            out[k] = vec![true; len];
            out
        };
        MixedPartition { nodes: mk(grid.n_nodes()), cells: mk(grid.n_cells) }
    }

    /// Assigns `regions[0]` on `[a, x1)`, `regions[1]` on `[x1, x2)` and
    /// `regions[2]` on `[x2, b]`, evaluated at nodes and cell midpoints.
    pub fn three_region(grid: &Grid1D, x1: f64, x2: f64, regions: [Region; 3]) -> Self {
        let pick = |x: f64| {
            if x < x1 {
                regions[0]
            } else if x < x2 {
                regions[1]
            } else {
                regions[2]
            }
        };
        let build = |xs: Vec<f64>| -> [Vec<bool>; 3] {
            let r: Vec<Region> = xs.into_iter().map(pick).collect();
            [Region::Elliptic, Region::Parabolic, Region::Hyperbolic]
                .map(|target| r.iter().map(|&x| x == target).collect())
        };
        MixedPartition { nodes: build(grid.nodes()), cells: build(grid.midpoints()) }
    }

    fn validate(&self, grid: &Grid1D) -> Result<()> {
        for (name, ind, len) in [("node", &self.nodes, grid.n_nodes()), ("cell", &self.cells, grid.n_cells)] {
            if ind.iter().any(|v| v.len() != len) {
                return Err(Error::Spec(format!("{name} indicators must have length {len}")));
            }
            for i in 0..len {
                let count = ind.iter().filter(|v| v[i]).count();
                if count != 1 {
                    return Err(Error::Spec(format!(
                        "{name} {i} belongs to {count} regions; the regions must partition the grid"
                    )));
                }
            }
        }
        Ok(())
    }

    fn chi(ind: &[Vec<bool>; 3], regions: &[Region]) -> Vec<bool> {
        (0..ind[0].len()).map(|i| regions.iter().any(|&r| ind[r as usize][i])).collect()
    }
}

#[derive(Clone, Debug)]
pub struct WaveSpec {
    pub grid: Grid1D,
    /// `b` on `U`, in `BD(grad)` coordinates.
    pub b_map: CMat,
    /// `N: BD(grad) -> BD(div)` for the `U` inner product; `None` selects `G_dot`.
    pub n_map: Option<CMat>,
}

impl WaveSpec {
    pub fn new(grid: Grid1D) -> Self {
        WaveSpec { grid, b_map: CMat::identity(2, 2), n_map: None }
    }
}

#[derive(Clone, Debug)]
pub struct WaveModel {
    pub sys: ControlSystem,
    pub bs: BoundaryStructure,
    pub uspace: USpace,
    /// `W0`-orthonormal basis of the node vectors orthogonal to constants.
    pub qv: CMat,
    /// Orthonormal basis (in scaled cell coordinates) of the range of grad.
    pub zbasis: CMat,
    /// Lower Cholesky factor of the `U` Gram matrix.
    pub l_u: CMat,
    pub b_map: CMat,
    /// `C = -b j pi_BD(grad)`, node vectors -> `U` coordinates.
    pub c_phys: CMat,
    /// `C<>`, `U` coordinates -> node vectors.
    pub c_dual: CMat,
    pub partition_regions: MixedPartition,
}

pub fn build_weiss_tucsnak_wave(spec: &WaveSpec) -> Result<WaveModel> {
    let regions = MixedPartition::uniform(&spec.grid, Region::Hyperbolic);
    build_mixed_type_wave(spec, &regions)
}

/// Region-dependent blocks: `M0` carries `chi_h + chi_p` on `v` and `chi_h` on
/// `zeta`; `M1` carries `chi_e` on `v` and `chi_e + chi_p` on `zeta`.
pub fn build_mixed_type_wave(spec: &WaveSpec, regions: &MixedPartition) -> Result<WaveModel> {
    regions.validate(&spec.grid)?;
    let pair = build_sbp_pair_1d(spec.grid)?;
    let bs = BoundaryStructure::new(&pair)?;
    let k = bs.dim();
    if spec.b_map.shape() != (k, k) {
        return Err(Error::Shape(format!("b must be {k}x{k}")));
    }
    let n_map = spec.n_map.clone().unwrap_or_else(|| bs.g_dot.clone());
    let uspace = build_u_space(&bs.bd_g, &bs.bd_d, &n_map, &pair)?;
    let l_u = uspace.cholesky_factor()?;
    let l_u_inv_h = l_u.adjoint().try_inverse().ok_or_else(|| Error::Conditioning("singular U factor".into()))?;

    let nn = pair.n_nodes();
    let w0 = pair.w0_mat();
    // Deflation of constants.
    let one = CVec::from_element(nn, c(1.0));
    let mut cols = vec![one];
    for i in 0..nn - 1 {
        let mut e = CVec::zeros(nn);
        e[i] = c(1.0);
        cols.push(e);
    }
    let q_all = weighted_gram_schmidt(&CMat::from_columns(&cols), &w0, 1e-10)?;
    let qv = q_all.columns(1, nn - 1).into_owned();
    let nv = qv.ncols();

    // Range of grad on the deflated space, in scaled cell coordinates.
    let s1 = sqrt_diag(&pair.w1);
    let s1_inv = inv_sqrt_diag(&pair.w1);
    let g_tilde = &s1 * &pair.g * &qv;
    let qr = g_tilde.clone().qr();
    let r = qr.r();
    let rmax = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let rank = (0..r.nrows().min(r.ncols())).filter(|&i| r[(i, i)].norm() > 1e-10 * rmax).count();
    let zbasis = if rank == pair.n_cells() {
        CMat::identity(rank, rank)
    } else {
        qr.q().columns(0, rank).into_owned()
    };
    let nz = zbasis.ncols();

    let b_map = spec.b_map.clone();
    let c_phys = -(&b_map * &bs.bd_g.projector);
    let gram_u = &uspace.gram;
    let gram_u_inv = gram_u.clone().try_inverse().ok_or_else(|| Error::Conditioning("singular U Gram matrix".into()))?;
    let b_star = &gram_u_inv * b_map.adjoint() * gram_u;
    let c_dual = -(bs.dual_projection() * &uspace.j_adjoint * &b_star);

    // F = (-pi_grad grad; C) and F* = (D_min, C<>) in orthonormal coordinates.
    let f_zeta = -(zbasis.adjoint() * &g_tilde);
    let f_w = l_u.adjoint() * &c_phys * &qv;
    let f = stack_rows(&[&f_zeta, &f_w]);
    let proj_v = qv.adjoint() * &w0;
    let fa_zeta = &proj_v * pair.d_min_ext() * &s1_inv * &zbasis;
    let fa_w = &proj_v * &c_dual * &l_u_inv_h;
    let f_adj = stack_cols(&[&fa_zeta, &fa_w]);

    // Material laws.
    let chi_n = |r: &[Region]| indicator(&MixedPartition::chi(&regions.nodes, r));
    let chi_c = |r: &[Region]| indicator(&MixedPartition::chi(&regions.cells, r));
    let v_block = |chi: Vec<f64>| -> CMat {
        if chi.iter().all(|&x| x == 1.0) {
            CMat::identity(nv, nv)
        } else if chi.iter().all(|&x| x == 0.0) {
            CMat::zeros(nv, nv)
        } else {
            qv.adjoint() * &w0 * real_diag(&chi) * &qv
        }
    };
    let z_block = |chi: Vec<f64>| -> CMat {
        if chi.iter().all(|&x| x == 1.0) {
            CMat::identity(nz, nz)
        } else if chi.iter().all(|&x| x == 0.0) {
            CMat::zeros(nz, nz)
        } else {
            zbasis.adjoint() * real_diag(&chi) * &zbasis
        }
    };
    use Region::*;
    let m0_v = v_block(chi_n(&[Hyperbolic, Parabolic]));
    let m1_v = v_block(chi_n(&[Elliptic]));
    let m0_z = z_block(chi_c(&[Hyperbolic]));
    let m1_z = z_block(chi_c(&[Elliptic, Parabolic]));

    let p = BlockPartition { n0: nv, n1: nz + k, ny: k, nu: k, nw: k };
    let n = p.state_dim();
    let zk = CMat::zeros(k, k);
    let m0 = block_diag(&[&m0_v, &m0_z, &zk, &zk]);
    let mut m1 = block_diag(&[&m1_v, &m1_z, &CMat::identity(k, k), &CMat::identity(k, k)]);
    let (wr, yr) = (p.w(), p.y());
    m1.view_mut((yr.start, wr.start), (k, k)).copy_from(&(CMat::identity(k, k) * c(SQRT2)));
    let mut b = CMat::zeros(n, k);
    b.view_mut((wr.start, 0), (k, k)).copy_from(&(CMat::identity(k, k) * c(-SQRT2)));
    b.view_mut((yr.start, 0), (k, k)).copy_from(&(CMat::identity(k, k) * c(-1.0)));

    let sys = assemble_control(p, m0, m1, f, f_adj, b)?;
    Ok(WaveModel {
        sys,
        bs,
        uspace,
        qv,
        zbasis,
        l_u,
        b_map,
        c_phys,
        c_dual,
        partition_regions: regions.clone(),
    })
}

fn stack_rows(blocks: &[&CMat]) -> CMat {
    let ncols = blocks[0].ncols();
    let nrows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(nrows, ncols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), ncols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

fn stack_cols(blocks: &[&CMat]) -> CMat {
    let nrows = blocks[0].nrows();
    let ncols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(nrows, ncols);
    let mut k = 0;
    for b in blocks {
        out.view_mut((0, k), (nrows, b.ncols())).copy_from(*b);
        k += b.ncols();
    }
    out
}

/// Physical components of a wave state.
#[derive(Clone, Debug)]
pub struct WaveFields {
    pub v: CVec,
    pub zeta: CVec,
    /// `U` coordinates.
    pub w: CVec,
    /// `U` coordinates.
    pub y: CVec,
}

impl WaveModel {
    pub fn pair(&self) -> &GradDivPair {
        &self.bs.pair
    }

    fn l_inv_h(&self) -> CMat {
        self.l_u.adjoint().try_inverse().expect("checked at construction")
    }

    /// State from physical data; `v` is projected off the constants.
    pub fn state(&self, v: &CVec, zeta: &CVec, w: &CVec, y: &CVec) -> CVec {
        let p = self.sys.partition;
        let pair = self.pair();
        let mut x = CVec::zeros(p.state_dim());
        x.rows_mut(0, p.n0).copy_from(&(self.qv.adjoint() * pair.w0_mat() * v));
        let nz = self.zbasis.ncols();
        x.rows_mut(p.n0, nz).copy_from(&(self.zbasis.adjoint() * sqrt_diag(&pair.w1) * zeta));
        x.rows_mut(p.w().start, p.nw).copy_from(&(self.l_u.adjoint() * w));
        x.rows_mut(p.y().start, p.ny).copy_from(&(self.l_u.adjoint() * y));
        x
    }

    /// Initial state for `delta (x) (z1, (z0, 0), 0)`.
    pub fn initial_state(&self, z1: &CVec, z0: &CVec) -> CVec {
        let k = self.bs.dim();
        self.state(z1, z0, &CVec::zeros(k), &CVec::zeros(k))
    }

    pub fn fields(&self, x: &CVec) -> WaveFields {
        let p = self.sys.partition;
        let pair = self.pair();
        let nz = self.zbasis.ncols();
        let li = self.l_inv_h();
        WaveFields {
            v: &self.qv * x.rows(0, p.n0),
            zeta: inv_sqrt_diag(&pair.w1) * (&self.zbasis * x.rows(p.n0, nz)),
            w: &li * x.rows(p.w().start, p.nw),
            y: &li * x.rows(p.y().start, p.ny),
        }
    }

    /// Control value in orthonormal `U` coordinates from `U` coordinates.
    pub fn control(&self, u: &CVec) -> CVec {
        self.l_u.adjoint() * u
    }

    /// `C` in orthonormal coordinates (rows of `F` belonging to `w`).
    pub fn c_tilde(&self) -> CMat {
        let p = self.sys.partition;
        self.sys.f.rows(p.n1 - p.nw, p.nw).into_owned()
    }

    /// `|<F v|(zeta, w)> - <v|D_min zeta + C<> w>|` with physical vectors and
    /// inner products `W0`, `W1` and the `U` Gram matrix.
    pub fn f_adjoint_defect(&self, v: &CVec, zeta: &CVec, w: &CVec) -> f64 {
        let pair = self.pair();
        let lhs = inner(&pair.w1_mat(), &(-(&pair.g * v)), zeta) + self.uspace.inner(&(&self.c_phys * v), w);
        let rhs = inner(&pair.w0_mat(), v, &(pair.d_min_ext() * zeta + &self.c_dual * w));
        (lhs - rhs).norm()
    }

    /// Boundary equation `pi_BD(div)(zeta + D_min^{-1} C<> w)` at each
    /// collocation state.
    pub fn boundary_equation_defects(&self, traj: &Trajectory) -> Vec<f64> {
        (0..traj.grid.n_steps)
            .map(|k| {
                let f = self.fields(&traj.collocation_state(k));
                boundary_equation_defect(&self.bs, &f.zeta, &(&self.c_dual * &f.w))
            })
            .collect()
    }

    /// Largest deviation from `w = -sqrt2 u - C v` and `w = C v - sqrt2 y`,
    /// evaluated at collocation states in orthonormal coordinates.
    pub fn io_relation_defect(&self, traj: &Trajectory) -> f64 {
        let p = self.sys.partition;
        let ct = self.c_tilde();
        let mut worst: f64 = 0.0;
        for k in 0..traj.grid.n_steps {
            let x = traj.collocation_state(k);
            let u = self.sys.control_of(&traj.inputs[k]);
            let v = x.rows(0, p.n0).into_owned();
            let w = x.rows(p.w().start, p.nw).into_owned();
            let y = x.rows(p.y().start, p.ny).into_owned();
            let cv = &ct * &v;
            worst = worst.max(max_abs_vec(&(&w - (&u * c(-SQRT2) - &cv))));
            worst = worst.max(max_abs_vec(&(&w - (&cv - &y * c(SQRT2)))));
        }
        worst
    }

    /// Terms of the wave energy identity over `[a, b]`:
    /// `(stored drop, int |w|^2 + sqrt2 Re<w|y> + |y|^2 - |u|^2, int 1/2|y|^2 - 1/2|u|^2)`.
    pub fn wave_ledger(&self, traj: &Trajectory, a: f64, b: f64) -> (f64, f64, f64) {
        let p = self.sys.partition;
        let g = &traj.grid;
        let (ka, kb) = (g.index_of(a), g.index_of(b));
        let energy = |x: &CVec| {
            let s = x.rows(0, p.n0 + p.n1 - p.nw).into_owned();
            0.5 * s.norm_squared()
        };
        let drop = energy(&traj.states[ka]) - energy(&traj.states[kb]);
        let (mut wform, mut reduced) = (0.0, 0.0);
        for k in ka..kb {
            let x = traj.collocation_state(k);
            let u = self.sys.control_of(&traj.inputs[k]);
            let w = x.rows(p.w().start, p.nw).into_owned();
            let y = x.rows(p.y().start, p.ny).into_owned();
            wform += g.tau * (w.norm_squared() + SQRT2 * w.dotc(&y).re + y.norm_squared() - u.norm_squared());
            reduced += g.tau * (0.5 * y.norm_squared() - 0.5 * u.norm_squared());
        }
        (drop, wform, reduced)
    }

    /// Spread (max - min) of `v - div grad v` over interior nodes whose
    /// neighbouring cells are all elliptic, at each collocation state. The
    /// deflation of constants leaves a spatially constant multiplier, so the
    /// steady relation holds up to that constant.
    pub fn elliptic_residual_spread(&self, traj: &Trajectory) -> Vec<f64> {
        let pair = self.pair();
        let n = pair.n_cells();
        let cells_e = &self.partition_regions.cells[Region::Elliptic as usize];
        let nodes_e = &self.partition_regions.nodes[Region::Elliptic as usize];
        let idx: Vec<usize> = (1..n).filter(|&i| nodes_e[i] && cells_e[i - 1] && cells_e[i]).collect();
        let dg = &pair.d * &pair.g;
        (0..traj.grid.n_steps)
            .map(|k| {
                if idx.is_empty() {
                    return 0.0;
                }
                let f = self.fields(&traj.collocation_state(k));
                let r = &f.v - &dg * &f.v;
                let vals: Vec<f64> = idx.iter().map(|&i| r[i].re).collect();
                let vals_im: Vec<f64> = idx.iter().map(|&i| r[i].im).collect();
                let spread = |v: &[f64]| {
                    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
                };
                spread(&vals).max(spread(&vals_im))
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Port-Hamiltonian system

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryClosure {
    /// Boundary nodes of `x0` carry neither mass nor `P0`; their rows become
    /// algebraic and enforce `x1(b) = w1`, `x1(a) = w2` exactly.
    Algebraic,
    /// Boundary nodes keep their trapezoid mass.
    Lumped,
}

#[derive(Clone, Debug)]
pub struct PortHamiltonianSpec {
    pub grid: Grid1D,
    /// `N`, an invertible `l x l` matrix.
    pub n_mat: CMat,
    /// Hamiltonian density for `x0`, one selfadjoint `l x l` matrix per node.
    pub h0: Vec<CMat>,
    /// Hamiltonian density for `x1`, one per cell.
    pub h1: Vec<CMat>,
    /// `P0` as a `2l x 2l` matrix acting on `(x0, x1)`.
    pub p0: CMat,
    /// `(M1_22, M1_23, M1_32, M1_33)`, each `2l x 2l`.
    pub m1_lower: [CMat; 4],
    pub b1: CMat,
    pub b2: CMat,
    pub closure: BoundaryClosure,
}

impl PortHamiltonianSpec {
    /// String normal form: `N = 1`, `H = 1`, `P0 = 0`, `w` driven by `u`,
    /// `y = w`.
    pub fn string(grid: Grid1D) -> Self {
        let one = CMat::identity(1, 1);
        let i2 = CMat::identity(2, 2);
        PortHamiltonianSpec {
            grid,
            n_mat: one.clone(),
            h0: vec![one.clone(); grid.n_nodes()],
            h1: vec![one; grid.n_cells],
            p0: CMat::zeros(2, 2),
            m1_lower: [i2.clone(), CMat::zeros(2, 2), -&i2, i2.clone()],
            b1: i2,
            b2: CMat::zeros(2, 2),
            closure: BoundaryClosure::Algebraic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PortHamiltonianModel {
    pub sys: ControlSystem,
    pub pair: GradDivPair,
    pub ell: usize,
    /// Physical `F` (node-major `x0` -> (cell-major `x1`, `w`)).
    pub f_phys: CMat,
    /// `W`-adjoint of `f_phys`.
    pub f_adj_phys: CMat,
    /// Diagonal weights of `x0` and of `(x1, w)`.
    pub weights0: Vec<f64>,
    pub weights1: Vec<f64>,
}

fn check_density(h: &CMat, ell: usize, what: &str) -> Result<()> {
    if h.shape() != (ell, ell) {
        return Err(Error::Spec(format!("{what} must be {ell}x{ell}")));
    }
    let hd = max_abs(&(h - h.adjoint()));
    if hd > 1e-12 * max_abs(h).max(1.0) {
        return Err(Error::Spec(format!("{what} is not selfadjoint")));
    }
    let (lmin, _) = lambda_min_herm(h);
    if lmin <= 0.0 {
        return Err(Error::Spec(format!("{what} is not positive (smallest eigenvalue {lmin:.3e})")));
    }
    Ok(())
}

pub fn build_port_hamiltonian(spec: &PortHamiltonianSpec) -> Result<PortHamiltonianModel> {
    let ell = spec.n_mat.nrows();
    if ell == 0 || spec.n_mat.ncols() != ell {
        return Err(Error::Spec("N must be a nonempty square matrix".into()));
    }
    Factored::new(&spec.n_mat).map_err(|_| Error::Spec("N is not invertible".into()))?;
    let pair = build_sbp_pair_1d(spec.grid)?;
    let (nn, nc) = (pair.n_nodes(), pair.n_cells());
    if spec.h0.len() != nn || spec.h1.len() != nc {
        return Err(Error::Spec(format!("need {nn} node and {nc} cell Hamiltonian densities")));
    }
    for (i, h) in spec.h0.iter().enumerate() {
        check_density(h, ell, &format!("H at node {i}"))?;
    }
    for (j, h) in spec.h1.iter().enumerate() {
        check_density(h, ell, &format!("H at cell {j}"))?;
    }
    let l2 = 2 * ell;
    if spec.p0.shape() != (l2, l2) {
        return Err(Error::Spec(format!("P0 must be {l2}x{l2}")));
    }
    for m in &spec.m1_lower {
        if m.shape() != (l2, l2) {
            return Err(Error::Spec(format!("lower M1 blocks must be {l2}x{l2}")));
        }
    }
    let nu = spec.b1.ncols();
    if spec.b1.nrows() != l2 || spec.b2.shape() != (l2, nu) {
        return Err(Error::Spec(format!("B1 and B2 must be {l2}x(m) with equal m")));
    }
    let lower = stack_rows(&[
        &stack_cols(&[&spec.m1_lower[0], &spec.m1_lower[1]]),
        &stack_cols(&[&spec.m1_lower[2], &spec.m1_lower[3]]),
    ]);
    if lambda_min_herm(&lower).0 <= 0.0 {
        eprintln!("warning: Re of the lower M1 block is not positive definite");
    }

    let id_l = CMat::identity(ell, ell);
    let n0 = nn * ell;
    let n1x = nc * ell;
    let boundary_mask: Vec<f64> = (0..nn)
        .map(|i| match spec.closure {
            BoundaryClosure::Algebraic if i == 0 || i == nn - 1 => 0.0,
            _ => 1.0,
        })
        .collect();
    let mask0 = real_diag(&boundary_mask).kronecker(&id_l);

    // Physical weights, node-major.
    let weights0: Vec<f64> = pair.w0.iter().flat_map(|&w| std::iter::repeat(w).take(ell)).collect();
    let mut weights1: Vec<f64> = pair.w1.iter().flat_map(|&w| std::iter::repeat(w).take(ell)).collect();
    weights1.extend(std::iter::repeat(1.0).take(l2));

    // F = (-N d; -C), C x0 = (-N x0(b), N x0(a)).
    let ng = pair.g.kronecker(&spec.n_mat);
    let mut c_mat = CMat::zeros(l2, n0);
    c_mat.view_mut((0, (nn - 1) * ell), (ell, ell)).copy_from(&(-&spec.n_mat));
    c_mat.view_mut((ell, 0), (ell, ell)).copy_from(&spec.n_mat);
    let f_phys = stack_rows(&[&(-ng), &(-c_mat)]);
    let w1d = real_diag(&weights1);
    let w0_inv = real_diag(&weights0.iter().map(|w| 1.0 / w).collect::<Vec<_>>());
    let f_adj_phys = &w0_inv * f_phys.adjoint() * &w1d;

    let s0 = sqrt_diag(&weights0);
    let s0_inv = inv_sqrt_diag(&weights0);
    let s1 = sqrt_diag(&weights1);
    let s1_inv = inv_sqrt_diag(&weights1);
    let f = &s1 * &f_phys * &s0_inv;
    let f_adj = &s0 * &f_adj_phys * &s1_inv;

    // M0 = H^{-1} blockwise.
    let inv = |h: &CMat| h.clone().try_inverse().expect("positive density");
    let mut m0_x0 = CMat::zeros(n0, n0);
    for (i, h) in spec.h0.iter().enumerate() {
        m0_x0.view_mut((i * ell, i * ell), (ell, ell)).copy_from(&inv(h));
    }
    let m0_x0 = &mask0 * m0_x0 * &mask0;
    let mut m0_x1 = CMat::zeros(n1x, n1x);
    for (j, h) in spec.h1.iter().enumerate() {
        m0_x1.view_mut((j * ell, j * ell), (ell, ell)).copy_from(&inv(h));
    }

    // Upper M1 = -P0 with node <-> cell averaging for the off-diagonal blocks.
    let mut avg = CMat::zeros(nc, nn);
    for j in 0..nc {
        avg[(j, j)] = c(0.5);
        avg[(j, j + 1)] = c(0.5);
    }
    let avg_adj = &pair.w0_inv_mat() * avg.adjoint() * pair.w1_mat();
    let pb = |r: usize, k: usize| spec.p0.view((r * ell, k * ell), (ell, ell)).into_owned();
    let p00 = CMat::identity(nn, nn).kronecker(&pb(0, 0));
    let p01 = avg_adj.kronecker(&pb(0, 1));
    let p10 = avg.kronecker(&pb(1, 0));
    let p11 = CMat::identity(nc, nc).kronecker(&pb(1, 1));
    let p00 = &mask0 * p00 * &mask0;
    let p01 = &mask0 * p01;
    let p10 = p10 * &mask0;
    // To orthonormal coordinates.
    let sx1 = sqrt_diag(&weights1[..n1x]);
    let sx1_inv = inv_sqrt_diag(&weights1[..n1x]);
    let p00t = &s0 * p00 * &s0_inv;
    let p01t = &s0 * p01 * &sx1_inv;
    let p10t = &sx1 * p10 * &s0_inv;
    let p11t = &sx1 * p11 * &sx1_inv;

    let p = BlockPartition { n0, n1: n1x + l2, ny: l2, nu, nw: l2 };
    let n = p.state_dim();
    let mut m0 = CMat::zeros(n, n);
    m0.view_mut((0, 0), (n0, n0)).copy_from(&m0_x0);
    m0.view_mut((n0, n0), (n1x, n1x)).copy_from(&m0_x1);
    let mut m1 = CMat::zeros(n, n);
    m1.view_mut((0, 0), (n0, n0)).copy_from(&(-p00t));
    m1.view_mut((0, n0), (n0, n1x)).copy_from(&(-p01t));
    m1.view_mut((n0, 0), (n1x, n0)).copy_from(&(-p10t));
    m1.view_mut((n0, n0), (n1x, n1x)).copy_from(&(-p11t));
    let (wr, yr) = (p.w(), p.y());
    m1.view_mut((wr.start, wr.start), (l2, l2)).copy_from(&spec.m1_lower[0]);
    m1.view_mut((wr.start, yr.start), (l2, l2)).copy_from(&spec.m1_lower[1]);
    m1.view_mut((yr.start, wr.start), (l2, l2)).copy_from(&spec.m1_lower[2]);
    m1.view_mut((yr.start, yr.start), (l2, l2)).copy_from(&spec.m1_lower[3]);
    let mut b = CMat::zeros(n, nu);
    b.view_mut((wr.start, 0), (l2, nu)).copy_from(&spec.b1);
    b.view_mut((yr.start, 0), (l2, nu)).copy_from(&spec.b2);

    let sys = assemble_control(p, m0, m1, f, f_adj, b)?;
    Ok(PortHamiltonianModel { sys, pair, ell, f_phys, f_adj_phys, weights0, weights1 })
}

impl PortHamiltonianModel {
    /// Physical `x0` (node-major).
    pub fn x0(&self, x: &CVec) -> CVec {
        inv_sqrt_diag(&self.weights0) * x.rows(0, self.sys.partition.n0)
    }

    /// Physical `x1` (cell-major).
    pub fn x1(&self, x: &CVec) -> CVec {
        let n1x = self.sys.partition.n1 - self.sys.partition.nw;
        inv_sqrt_diag(&self.weights1[..n1x]) * x.rows(self.sys.partition.n0, n1x)
    }

    pub fn w(&self, x: &CVec) -> CVec {
        x.rows(self.sys.partition.w().start, self.sys.partition.nw).into_owned()
    }

    pub fn y(&self, x: &CVec) -> CVec {
        x.rows(self.sys.partition.y().start, self.sys.partition.ny).into_owned()
    }

    /// State from physical `(x0, x1)` with `w = y = 0`.
    pub fn state(&self, x0: &CVec, x1: &CVec) -> CVec {
        let p = self.sys.partition;
        let n1x = p.n1 - p.nw;
        let mut x = CVec::zeros(p.state_dim());
        x.rows_mut(0, p.n0).copy_from(&(sqrt_diag(&self.weights0) * x0));
        x.rows_mut(p.n0, n1x).copy_from(&(sqrt_diag(&self.weights1[..n1x]) * x1));
        x
    }

    /// `max(|x1(b) - w1|, |x1(a) - w2|)` for one state; `x1(b)` and `x1(a)`
    /// are the values on the last and first cell.
    pub fn coupling_defect(&self, x: &CVec) -> f64 {
        let ell = self.ell;
        let x1 = self.x1(x);
        let w = self.w(x);
        let nc = self.pair.n_cells();
        let right = x1.rows((nc - 1) * ell, ell) - w.rows(0, ell);
        let left = x1.rows(0, ell) - w.rows(ell, ell);
        max_abs_vec(&right).max(max_abs_vec(&left))
    }

    /// Weighted two-sided adjoint identity for the physical `F`.
    pub fn f_adjoint_defect(&self, x0: &CVec, z: &CVec) -> f64 {
        let lhs = inner(&real_diag(&self.weights1), &(&self.f_phys * x0), z);
        let rhs = inner(&real_diag(&self.weights0), x0, &(&self.f_adj_phys * z));
        (lhs - rhs).norm()
    }
}

// ---------------------------------------------------------------------------
// Boundary lifting for a 1D Maxwell analogue

#[derive(Clone, Debug)]
pub struct MaxwellLift {
    /// Unknowns `(E, H~)` in orthonormal coordinates, `H~` on interior cells.
    pub lifted: Trajectory,
    /// Unknowns `(E, H, lambda)` in physical coordinates.
    pub direct: Trajectory,
    pub bs: BoundaryStructure,
    /// `u_bd` at the grid times.
    pub u_grid: Vec<CVec>,
    interior: Vec<usize>,
}

impl MaxwellLift {
    fn n_nodes(&self) -> usize {
        self.bs.pair.n_nodes()
    }

    /// Physical `(E, H)` of the lifted run at grid index `k`, with
    /// `H = H~ + pi*_BD(D) u`.
    pub fn lifted_fields(&self, k: usize) -> (CVec, CVec) {
        let pair = &self.bs.pair;
        let nn = self.n_nodes();
        let x = &self.lifted.states[k];
        let e = inv_sqrt_diag(&pair.w0) * x.rows(0, nn);
        let mut h = self.bs.bd_d.embed(&self.u_grid[k]);
        for (m, &j) in self.interior.iter().enumerate() {
            h[j] += x[nn + m] / c(pair.w1[j].sqrt());
        }
        (e, h)
    }

    pub fn direct_fields(&self, k: usize) -> (CVec, CVec) {
        let nn = self.n_nodes();
        let nc = self.bs.pair.n_cells();
        let x = &self.direct.states[k];
        (x.rows(0, nn).into_owned(), x.rows(nn, nc).into_owned())
    }

    /// `max_{k >= k0} max(|E_lift - E_direct|, |H_lift - H_direct|)`.
    pub fn agreement(&self, k0: usize) -> f64 {
        (k0..self.lifted.states.len())
            .map(|k| {
                let (el, hl) = self.lifted_fields(k);
                let (ed, hd) = self.direct_fields(k);
                max_abs_vec(&(el - ed)).max(max_abs_vec(&(hl - hd)))
            })
            .fold(0.0, f64::max)
    }
}

/// The lifted system in orthonormal coordinates: unknowns `(E, H~)` with `H~`
/// on the interior cells, `M0 = diag(eps, mu)`, `M1 = 0` and the skew
/// operator built from `G` and the minimal divergence.
pub fn maxwell_lifted_system(pair: &GradDivPair, eps: &[f64], mu: &[f64]) -> Result<EvolutionarySystem> {
    let (nn, nc) = (pair.n_nodes(), pair.n_cells());
    if eps.len() != nn || mu.len() != nc {
        return Err(Error::Shape("eps needs node length, mu cell length".into()));
    }
    let interior: Vec<usize> = (0..nc).filter(|&j| pair.minimal_mask_cells[j]).collect();
    let ni = interior.len();
    let s0_inv = inv_sqrt_diag(&pair.w0);
    let sel = CMat::from_fn(ni, nc, |r, j| if interior[r] == j { c(1.0) } else { c(0.0) });
    let s_int = sqrt_diag(&interior.iter().map(|&j| pair.w1[j]).collect::<Vec<_>>());
    let a_he = &s_int * &sel * &pair.g * &s0_inv;
    let a_eh = -a_he.adjoint();
    let n_l = nn + ni;
    let mut a = CMat::zeros(n_l, n_l);
    a.view_mut((0, nn), (nn, ni)).copy_from(&a_eh);
    a.view_mut((nn, 0), (ni, nn)).copy_from(&a_he);
    let mu_int: Vec<f64> = interior.iter().map(|&j| mu[j]).collect();
    let m0 = block_diag(&[&real_diag(eps), &real_diag(&mu_int)]);
    EvolutionarySystem::new(m0, CMat::zeros(n_l, n_l), a, CMat::identity(n_l, n_l))
}

/// Solves `d/dt eps E + D H = 0`, `d/dt mu H + G E = 0` with boundary data
/// `pi_BD(D) H = u_bd(t)` twice: once through the substitution
/// `H~ = H - pi*_BD(D) u` with the minimal divergence and sources
/// `-D pi* u` and `-mu pi* du/dt`, and once directly as a DAE with Lagrange
/// multipliers on the first and last cell. `eps` and `mu` are diagonal
/// (node and cell values). `e0`, `h0` are physical initial fields; the two
/// solves coincide only if `pi_BD(D) h0 = u_bd(0)`.
#[allow(clippy::too_many_arguments)]
pub fn maxwell_lift_solve(
    pair: &GradDivPair,
    eps: &[f64],
    mu: &[f64],
    u_bd: &dyn Fn(f64) -> CVec,
    e0: &CVec,
    h0: &CVec,
    grid: TimeGrid,
    scheme: Scheme,
) -> Result<MaxwellLift> {
    let (nn, nc) = (pair.n_nodes(), pair.n_cells());
    if eps.len() != nn || mu.len() != nc || e0.len() != nn || h0.len() != nc {
        return Err(Error::Shape("eps/E0 need node length, mu/H0 cell length".into()));
    }
    if eps.iter().chain(mu.iter()).any(|&x| !(x > 0.0)) {
        return Err(Error::Spec("eps and mu must be positive".into()));
    }
    let bs = BoundaryStructure::new(pair)?;
    let k = bs.dim();
    let interior: Vec<usize> = (0..nc).filter(|&j| pair.minimal_mask_cells[j]).collect();
    let ni = interior.len();

    let lifted_sys = maxwell_lifted_system(pair, eps, mu)?;
    let s0 = sqrt_diag(&pair.w0);
    let sel = CMat::from_fn(ni, nc, |r, j| if interior[r] == j { c(1.0) } else { c(0.0) });
    let s_int = sqrt_diag(&interior.iter().map(|&j| pair.w1[j]).collect::<Vec<_>>());
    let n_l = nn + ni;

    let tau = grid.tau;
    let d_emb = &pair.d * &bs.bd_d.embedding;
    let mu_emb = &sel * real_diag(mu) * &bs.bd_d.embedding;
    let src = |t: f64| -> CVec {
        let u = u_bd(t);
        let du = (u_bd(t + 0.5 * tau) - u_bd(t - 0.5 * tau)) / c(tau);
        let mut f = CVec::zeros(n_l);
        f.rows_mut(0, nn).copy_from(&(-(&s0 * (&d_emb * &u))));
        f.rows_mut(nn, ni).copy_from(&(-(&s_int * (&mu_emb * du))));
        f
    };
    let u0 = u_bd(0.0);
    let mut x0_l = CVec::zeros(n_l);
    x0_l.rows_mut(0, nn).copy_from(&(&s0 * e0));
    let h_tilde0 = h0 - bs.bd_d.embed(&u0);
    x0_l.rows_mut(nn, ni).copy_from(&(&s_int * (&sel * h_tilde0)));
    let lifted = solve(&lifted_sys, &x0_l, &src, grid, scheme)?;

    // Direct DAE in physical coordinates: (E, H, lambda).
    let n_d = nn + nc + k;
    let m0_d = block_diag(&[&real_diag(eps), &real_diag(mu), &CMat::zeros(k, k)]);
    let mut m1_d = CMat::zeros(n_d, n_d);
    m1_d.view_mut((0, nn), (nn, nc)).copy_from(&pair.d);
    m1_d.view_mut((nn, 0), (nc, nn)).copy_from(&pair.g);
    let boundary_cells: Vec<usize> = (0..nc).filter(|&j| !pair.minimal_mask_cells[j]).collect();
    if boundary_cells.len() != k {
        return Err(Error::Spec("boundary cells do not match dim BD(D)".into()));
    }
    for (m, &j) in boundary_cells.iter().enumerate() {
        m1_d[(nn + j, nn + nc + m)] = c(1.0);
    }
    m1_d.view_mut((nn + nc, nn), (k, nc)).copy_from(&bs.bd_d.projector);
    let mut j_d = CMat::zeros(n_d, k);
    j_d.view_mut((nn + nc, 0), (k, k)).fill_with_identity();
    let direct_sys = EvolutionarySystem::new(m0_d, m1_d, CMat::zeros(n_d, n_d), j_d)?;
    let mut x0_d = CVec::zeros(n_d);
    x0_d.rows_mut(0, nn).copy_from(e0);
    x0_d.rows_mut(nn, nc).copy_from(h0);
    let direct = solve(&direct_sys, &x0_d, u_bd, grid, scheme)?;

    let u_grid = grid.times().iter().map(|&t| u_bd(t)).collect();
    Ok(MaxwellLift { lifted, direct, bs, u_grid, interior })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_system::check_compatibility;
    use crate::evolution::check_wellposed;

    #[test]
    fn wave_blocks_match_printed_values() {
        let m = build_weiss_tucsnak_wave(&WaveSpec::new(Grid1D::new(0.0, 1.0, 8).unwrap())).unwrap();
        let (d0, d1) = check_compatibility(&m.sys).unwrap();
        assert!(d0 < 1e-12 && d1 < 1e-12);
        assert!(m.sys.skew_defect() < 1e-12);
        let r = check_wellposed(&m.sys.m0, &m.sys.m1, 1.0).unwrap();
        assert!(r.ok);
        assert!((r.c - (1.0 - 1.0 / SQRT2)).abs() < 1e-8);
    }

    #[test]
    fn mixed_partition_rejects_overlap() {
        let grid = Grid1D::new(0.0, 1.0, 6).unwrap();
        let mut part = MixedPartition::uniform(&grid, Region::Hyperbolic);
        part.nodes[0][2] = true;
        assert!(matches!(build_mixed_type_wave(&WaveSpec::new(grid), &part), Err(Error::Spec(_))));
    }

    #[test]
    fn port_hamiltonian_rejects_indefinite_density() {
        let grid = Grid1D::new(0.0, 1.0, 4).unwrap();
        let mut spec = PortHamiltonianSpec::string(grid);
        spec.h1[2] = CMat::identity(1, 1) * c(-1.0);
        assert!(matches!(build_port_hamiltonian(&spec), Err(Error::Spec(_))));
    }
}
