//! Small dense linear-algebra helpers over complex scalars.

use nalgebra::{DMatrix, DVector, SymmetricEigen, LU, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn real_diag(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| c(x))))
}

pub fn from_real(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

pub fn from_real_vec(v: &[f64]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&x| c(x)))
}

/// `u^H W v`.
pub fn inner(w: &CMat, u: &CVec, v: &CVec) -> Complex64 {
    u.dotc(&(w * v))
}

/// Euclidean `u^H v`.
pub fn dotc(u: &CVec, v: &CVec) -> Complex64 {
    u.dotc(v)
}

/// Hermitian part `(M + M^H) / 2`.
pub fn herm_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn skew_defect(m: &CMat) -> f64 {
    max_abs(&(m + m.adjoint()))
}

/// Smallest eigenvalue of the Hermitian part of `m` and a unit eigenvector.
pub fn lambda_min_herm(m: &CMat) -> (f64, CVec) {
    let h = herm_part(m);
    let n = h.nrows();
    if n == 0 {
        return (f64::INFINITY, CVec::zeros(0));
    }
    let eig = SymmetricEigen::new(h);
    let mut k = 0;
    for i in 1..n {
        if eig.eigenvalues[i] < eig.eigenvalues[k] {
            k = i;
        }
    }
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

/// Orthonormal (Euclidean) basis of the null space of a square matrix, using a
/// singular-value cutoff relative to the largest singular value.
pub fn null_space(m: &CMat, rel_cut: f64) -> CMat {
    let n = m.ncols();
    assert_eq!(m.nrows(), n, "null_space expects a square matrix");
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_cut * smax.max(f64::MIN_POSITIVE);
    let cols: Vec<CVec> = (0..n)
        .filter(|&i| svd.singular_values[i] <= cut)
        .map(|i| v_t.row(i).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass in the inner product
/// `<u|v> = u^H W v`. Columns whose residual norm falls below `tol` times their
/// original norm are rejected.
pub fn weighted_gram_schmidt(vectors: &CMat, w: &CMat, tol: f64) -> Result<CMat> {
    let mut out: Vec<CVec> = Vec::with_capacity(vectors.ncols());
    for j in 0..vectors.ncols() {
        let mut v = vectors.column(j).into_owned();
        let n0 = inner(w, &v, &v).re.max(0.0).sqrt();
        for _pass in 0..2 {
            for q in &out {
                let r = inner(w, q, &v);
                v -= q * r;
            }
        }
        let nv = inner(w, &v, &v).re.max(0.0).sqrt();
        if nv <= tol * n0.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalRank(format!(
                "column {j} is dependent on its predecessors"
            )));
        }
        out.push(v / c(nv));
    }
    if out.is_empty() {
        Ok(CMat::zeros(vectors.nrows(), 0))
    } else {
        Ok(CMat::from_columns(&out))
    }
}

/// A factored square matrix together with a 1-norm condition estimate.
pub struct Factored {
    lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    pub cond: f64,
}

impl Factored {
    pub fn new(m: &CMat) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Shape(format!("{}x{} is not square", n, m.ncols())));
        }
        let lu = LU::new(m.clone());
        let inv = match lu.try_inverse() {
            Some(inv) => inv,
            None => return Err(Error::StepSingular { cond: f64::INFINITY }),
        };
        let cond = norm1(m) * norm1(&inv);
        if !cond.is_finite() || cond > 1e14 {
            return Err(Error::StepSingular { cond });
        }
        Ok(Factored { lu, cond })
    }

    pub fn solve(&self, b: &CVec) -> CVec {
        self.lu.solve(b).expect("factorization checked at construction")
    }

    pub fn solve_mat(&self, b: &CMat) -> CMat {
        self.lu.solve(b).expect("factorization checked at construction")
    }
}

pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Least-squares solution of `m x = b` via SVD, discarding singular values
/// below `rel_cut` times the largest one.
pub fn lstsq(m: &CMat, b: &CVec, rel_cut: f64) -> CVec {
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = rel_cut * smax.max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("u and v_t requested")
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn to_real_vec(v: &DVector<f64>) -> CVec {
    v.map(c)
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut k) = (0, 0);
    for b in blocks {
        out.view_mut((r, k), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        k += b.ncols();
    }
    out
}
