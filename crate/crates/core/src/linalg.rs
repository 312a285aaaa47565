//! Functional calculus for real symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number above which an inverse power is refused.
pub const MAX_CONDITION: f64 = 1e14;

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigendecomposition of the symmetric part of `a`.
pub fn sym_eigen(a: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(a))
}

/// `f(A)` for symmetric `A`.
pub fn sym_apply(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = sym_eigen(a);
    recompose(&e.eigenvectors, &e.eigenvalues.map(f))
}

/// `V diag(w) V^T`.
pub fn recompose(v: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= w[j];
    }
    symmetrize(&(scaled * v.transpose()))
}

fn spd_spectrum(a: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let e = sym_eigen(a);
    let max = e.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: min });
    }
    let cond = max / min;
    if cond > MAX_CONDITION {
        return Err(Error::NearSingular { cond });
    }
    Ok(e)
}

/// `A^s` for symmetric positive definite `A`.
pub fn spd_power(a: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>> {
    let e = spd_spectrum(a)?;
    Ok(recompose(&e.eigenvectors, &e.eigenvalues.map(|x| x.powf(s))))
}

/// `log A` for symmetric positive definite `A`.
pub fn spd_log(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = spd_spectrum(a)?;
    Ok(recompose(&e.eigenvectors, &e.eigenvalues.map(f64::ln)))
}

/// `|A| = (A^T A)^{1/2}`.
pub fn matrix_abs(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_apply(&(a.transpose() * a), |x| x.max(0.0).sqrt())
}

/// Inverse of `A + v w^T` from `A^{-1}`.
pub fn sherman_morrison_inverse(a_inv: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let av = a_inv * v;
    let wa = a_inv.transpose() * w;
    let denom = 1.0 + w.dot(&av);
    let scale = 1.0 + w.abs().dot(&av.abs());
    if denom.abs() <= 1e-14 * scale {
        return Err(Error::SingularUpdate { denom });
    }
    Ok(a_inv - (av * wa.transpose()) / denom)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}
