//! Dense complex kernels: Hermitian positive-definite log-determinants,
//! linear solves and the small helpers the rate and surrogate code share.
//!
//! Positive definiteness is decided by whether a Cholesky factorization
//! succeeds; there is no eigenvalue thresholding anywhere in this crate.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest tolerated elementwise `|A - A^H|` for inputs declared Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Residual bound `‖AX - B‖_F ≤ SOLVE_RESIDUAL_TOL · max(1, ‖B‖_F)` for [`solve_hpd`].
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-8;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn max_asymmetry(a: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A^H) / 2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// `X X^H`, symmetrized against rounding.
pub fn gram(x: &CMatrix) -> CMatrix {
    hermitize(&(x * x.adjoint()))
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of `Tr(A)`.
pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `Re Tr(A B)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

fn check_square(a: &CMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn factor(a: &CMatrix) -> Result<Cholesky<Complex64, Dyn>> {
    check_square(a, "hpd factorization")?;
    let asym = max_asymmetry(a);
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    for i in 0..a.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0) || d.im.abs() > HERMITIAN_TOL * d.re.max(1.0) {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(chol)
}

/// `log₂ det(A)` for Hermitian positive-definite `A`, via Cholesky.
pub fn logdet_hpd(a: &CMatrix) -> Result<f64> {
    let chol = factor(a)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        acc += l[(i, i)].re.log2();
    }
    Ok(2.0 * acc)
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve_hpd: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let chol = factor(a)?;
    Ok(chol.solve(b))
}

/// Inverse of a Hermitian positive-definite matrix, symmetrized.
pub fn inverse_hpd(a: &CMatrix) -> Result<CMatrix> {
    let inv = solve_hpd(a, &identity(a.nrows()))?;
    Ok(hermitize(&inv))
}
