//! Boundary data spaces `BD(G) = N(1 - DG)` and `BD(D) = N(1 - GD)`.
//!
//! Bases are orthonormal in the graph inner product of the respective operator,
//! so coordinates are Euclidean and adjoints of coordinate maps are plain
//! conjugate transposes.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{
    c, inner, lambda_min_herm, max_abs, max_abs_vec, norm1, null_space, weighted_gram_schmidt,
    CMat, CVec, I,
};
use crate::spatial_complex::{minimal_projector, GradDivPair, Side};

const NULL_CUT: f64 = 1e-8;
const GS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdSide {
    /// `N(1 - DG)` in node vectors.
    G,
    /// `N(1 - GD)` in cell vectors.
    D,
}

#[derive(Clone, Debug)]
pub struct BoundaryDataSpace {
    pub side: BdSide,
    /// Graph-orthonormal columns spanning the space.
    pub basis: CMat,
    /// Gram matrix of the graph inner product on the ambient side.
    pub gram: CMat,
    /// `pi_BD`: ambient vector -> coordinates.
    pub projector: CMat,
    /// `pi*_BD`: coordinates -> ambient vector.
    pub embedding: CMat,
}

impl BoundaryDataSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn project(&self, u: &CVec) -> CVec {
        &self.projector * u
    }

    pub fn embed(&self, coords: &CVec) -> CVec {
        &self.embedding * coords
    }

    pub fn graph_inner(&self, u: &CVec, v: &CVec) -> num_complex::Complex64 {
        inner(&self.gram, u, v)
    }

    /// `max |basis^H Gram basis - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        max_abs(&(self.basis.adjoint() * &self.gram * &self.basis - CMat::identity(k, k)))
    }

    /// `max_j |(1 - DG) phi_j|` (resp. `1 - GD`).
    pub fn kernel_defect(&self, pair: &GradDivPair) -> f64 {
        max_abs(&(kernel_operator(pair, self.side) * &self.basis))
    }
}

fn kernel_operator(pair: &GradDivPair, side: BdSide) -> CMat {
    match side {
        BdSide::G => CMat::identity(pair.n_nodes(), pair.n_nodes()) - &pair.d * &pair.g,
        BdSide::D => CMat::identity(pair.n_cells(), pair.n_cells()) - &pair.g * &pair.d,
    }
}

fn ambient(side: BdSide) -> Side {
    match side {
        BdSide::G => Side::Node,
        BdSide::D => Side::Cell,
    }
}

pub fn compute_bd_space(pair: &GradDivPair, side: BdSide) -> Result<BoundaryDataSpace> {
    let k = kernel_operator(pair, side);
    let raw = null_space(&k, NULL_CUT);
    if raw.ncols() == 0 {
        return Err(Error::NumericalRank(format!("{side:?}: empty null space of the kernel operator")));
    }
    let gram = match side {
        BdSide::G => pair.graph_gram_nodes(),
        BdSide::D => pair.graph_gram_cells(),
    };
    let basis = weighted_gram_schmidt(&raw, &gram, GS_TOL)?;
    let projector = basis.adjoint() * &gram;
    Ok(BoundaryDataSpace { side, embedding: basis.clone(), basis, gram, projector })
}

/// Coordinate matrix of `G: BD(G) -> BD(D)` or `D: BD(D) -> BD(G)`, chosen by
/// the side of `from`.
pub fn dot_map(from: &BoundaryDataSpace, to: &BoundaryDataSpace, pair: &GradDivPair) -> Result<CMat> {
    let op = match (from.side, to.side) {
        (BdSide::G, BdSide::D) => &pair.g,
        (BdSide::D, BdSide::G) => &pair.d,
        _ => {
            return Err(Error::Shape(format!(
                "dot_map needs opposite sides, got {:?} -> {:?}",
                from.side, to.side
            )))
        }
    };
    Ok(&to.projector * (op * &from.basis))
}

/// Graph-isometry defect of `G` on `BD(G)`, evaluated on ambient vectors:
/// `max |(G phi)^H Gram_D (G phi) - phi^H Gram_G phi|` over basis pairs.
pub fn isometry_defect(bd_g: &BoundaryDataSpace, bd_d: &BoundaryDataSpace, pair: &GradDivPair) -> f64 {
    let gphi = &pair.g * &bd_g.basis;
    let lhs = gphi.adjoint() * &bd_d.gram * &gphi;
    let rhs = bd_g.basis.adjoint() * &bd_g.gram * &bd_g.basis;
    max_abs(&(lhs - rhs))
}

/// `(I + G*G)^{-1}` with `G*` the weighted adjoint. Equal to `Gram^{-1} W0`.
pub fn riesz_map(pair: &GradDivPair) -> Result<CMat> {
    let n = pair.n_nodes();
    let op = CMat::identity(n, n) + pair.g_adjoint() * &pair.g;
    let inv = op
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Conditioning("I + G*G is singular".into()))?;
    let cond = norm1(&op) * norm1(&inv);
    if cond > 1e12 {
        return Err(Error::Conditioning(format!("Riesz map condition estimate {cond:.3e}")));
    }
    Ok(inv)
}

/// `pi<>_BD(G) = pi*_BD(G) - D_min pi*_BD(D) G_dot`, a map from `BD(G)`
/// coordinates to node vectors. `D_min` is the duality extension of the
/// minimal divergence.
pub fn dual_projection(bd_g: &BoundaryDataSpace, bd_d: &BoundaryDataSpace, pair: &GradDivPair) -> Result<CMat> {
    let gdot = dot_map(bd_g, bd_d, pair)?;
    Ok(&bd_g.embedding - pair.d_min_ext() * &bd_d.embedding * gdot)
}

/// The same formula with `D_min` taken as `D` restricted to zero-boundary
/// cells. Kept for comparison; it does not invert the Riesz map.
pub fn dual_projection_restricted(
    bd_g: &BoundaryDataSpace,
    bd_d: &BoundaryDataSpace,
    pair: &GradDivPair,
) -> Result<CMat> {
    let gdot = dot_map(bd_g, bd_d, pair)?;
    let dmin = &pair.d * minimal_projector(pair, Side::Cell);
    Ok(&bd_g.embedding - dmin * &bd_d.embedding * gdot)
}

/// Both boundary data spaces of a pair together with the dot maps.
#[derive(Clone, Debug)]
pub struct BoundaryStructure {
    pub pair: GradDivPair,
    pub bd_g: BoundaryDataSpace,
    pub bd_d: BoundaryDataSpace,
    /// `G_dot` in coordinates, `BD(G) -> BD(D)`.
    pub g_dot: CMat,
    /// `D_dot` in coordinates, `BD(D) -> BD(G)`.
    pub d_dot: CMat,
}

impl BoundaryStructure {
    pub fn new(pair: &GradDivPair) -> Result<Self> {
        let bd_g = compute_bd_space(pair, BdSide::G)?;
        let bd_d = compute_bd_space(pair, BdSide::D)?;
        if bd_g.dim() != bd_d.dim() {
            return Err(Error::NumericalRank(format!(
                "dim BD(G) = {} but dim BD(D) = {}",
                bd_g.dim(),
                bd_d.dim()
            )));
        }
        let g_dot = dot_map(&bd_g, &bd_d, pair)?;
        let d_dot = dot_map(&bd_d, &bd_g, pair)?;
        Ok(BoundaryStructure { pair: pair.clone(), bd_g, bd_d, g_dot, d_dot })
    }

    pub fn dim(&self) -> usize {
        self.bd_g.dim()
    }

    /// `max(|G_dot^H G_dot - I|, |D_dot G_dot - I|, |D_dot - G_dot^H|)`.
    pub fn unitarity_defect(&self) -> f64 {
        let k = self.dim();
        let id = CMat::identity(k, k);
        let a = max_abs(&(self.g_dot.adjoint() * &self.g_dot - &id));
        let b = max_abs(&(&self.d_dot * &self.g_dot - &id));
        let d = max_abs(&(&self.d_dot - self.g_dot.adjoint()));
        a.max(b).max(d)
    }

    pub fn dual_projection(&self) -> CMat {
        &self.bd_g.embedding - self.pair.d_min_ext() * &self.bd_d.embedding * &self.g_dot
    }
}

/// Splits `u = u_min + pi* pi u` and returns
/// `max(|u_min on the boundary|, |<u_min|phi>_graph|, |u - u_min - pi* pi u|)`.
pub fn decomposition_defect(bd: &BoundaryDataSpace, pair: &GradDivPair, u: &CVec) -> f64 {
    let u_bd = bd.embed(&bd.project(u));
    let u_min = u - &u_bd;
    let outside = CMat::identity(u.len(), u.len()) - minimal_projector(pair, ambient(bd.side));
    let boundary = max_abs_vec(&(&outside * &u_min));
    let orth = max_abs_vec(&(bd.basis.adjoint() * &bd.gram * &u_min));
    let recon = max_abs_vec(&(u - (&u_min + &u_bd)));
    boundary.max(orth).max(recon)
}

/// The auxiliary boundary space `U`: `BD(G)` with the inner product
/// `<f|g>_U = 1/2 <Nf|G_dot g> + 1/2 <G_dot f|Ng>`.
#[derive(Clone, Debug)]
pub struct USpace {
    pub n_map: CMat,
    pub gram: CMat,
    /// `j*: U -> BD(G)`, `1/2 (D_dot N + N^H G_dot)`.
    pub j_adjoint: CMat,
}

impl USpace {
    /// Lower factor `L` with `gram = L L^H`.
    pub fn cholesky_factor(&self) -> Result<CMat> {
        Cholesky::new(self.gram.clone())
            .map(|ch| ch.l())
            .ok_or_else(|| Error::NotInnerProduct { witness: lambda_min_herm(&self.gram).1, value: lambda_min_herm(&self.gram).0 })
    }

    pub fn inner(&self, f: &CVec, g: &CVec) -> num_complex::Complex64 {
        inner(&self.gram, f, g)
    }
}

pub fn build_u_space(
    bd_g: &BoundaryDataSpace,
    bd_d: &BoundaryDataSpace,
    n_map: &CMat,
    pair: &GradDivPair,
) -> Result<USpace> {
    let k = bd_g.dim();
    if n_map.nrows() != bd_d.dim() || n_map.ncols() != k {
        return Err(Error::Shape(format!(
            "N must be {}x{}, got {}x{}",
            bd_d.dim(),
            k,
            n_map.nrows(),
            n_map.ncols()
        )));
    }
    let g_dot = dot_map(bd_g, bd_d, pair)?;
    let d_dot = dot_map(bd_d, bd_g, pair)?;
    let sum = &d_dot * n_map + n_map.adjoint() * &g_dot;
    let (lmin, witness) = lambda_min_herm(&sum);
    let scale = max_abs(&sum).max(1.0);
    if lmin <= 1e-12 * scale {
        return Err(Error::NotInnerProduct { witness, value: lmin });
    }
    let gram = (n_map.adjoint() * &g_dot + g_dot.adjoint() * n_map) * c(0.5);
    let j_adjoint = sum * c(0.5);
    Ok(USpace { n_map: n_map.clone(), gram, j_adjoint })
}

/// Two-sided evaluation of the Green identity for
/// `S* = -i [[0, D], [G, 0]]`, `Gamma0 (x, y) = pi_BD(G) x`,
/// `Gamma1 (x, y) = i D_dot pi_BD(D) y`.
pub fn boundary_triple_defect(
    bs: &BoundaryStructure,
    x: &CVec,
    y: &CVec,
    x2: &CVec,
    y2: &CVec,
) -> Result<f64> {
    let p = &bs.pair;
    for (v, n, name) in [(x, p.n_nodes(), "x"), (y, p.n_cells(), "y"), (x2, p.n_nodes(), "x2"), (y2, p.n_cells(), "y2")] {
        if v.len() != n {
            return Err(Error::Shape(format!("{name} has length {}, expected {n}", v.len())));
        }
    }
    let w0 = p.w0_mat();
    let w1 = p.w1_mat();
    let s = |x: &CVec, y: &CVec| ((&p.d * y) * (-I), (&p.g * x) * (-I));
    let (sx, sy) = s(x, y);
    let (sx2, sy2) = s(x2, y2);
    let lhs = inner(&w0, &sx, x2) + inner(&w1, &sy, y2) - inner(&w0, x, &sx2) - inner(&w1, y, &sy2);
    let gamma0 = |x: &CVec| bs.bd_g.project(x);
    let gamma1 = |y: &CVec| (&bs.d_dot * bs.bd_d.project(y)) * I;
    let rhs = gamma0(x).dotc(&gamma1(y2)) - gamma1(y).dotc(&gamma0(x2));
    Ok((lhs - rhs).norm())
}
