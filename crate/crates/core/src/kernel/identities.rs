//! Independent checks of the kernel diagonal through the half-size blocks.
//!
//! Conjugating `|S1^T|^{+-2}` with `U = [[I, I], [I, -I]] / sqrt 2` splits
//! them into four `|I^+|`-sized blocks whose diagonal entries (A)-(D) sum to
//! the diagonal of `cosh 2K - 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::{max_abs_diff, sherman_morrison_inverse, spd_power};
use crate::quadrature::{integrate_semi_infinite, QuadratureSpec};

/// The four diagonal terms for plus-half position `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcdTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl AbcdTerms {
    /// `(A + B + C + D - 4) / 4`.
    pub fn diagonal(&self) -> f64 {
        0.25 * (-4.0 + self.a + self.b + self.c + self.d)
    }
}

/// All four block matrices at once.
pub fn abcd_blocks(d: &DVector<f64>, b: &DMatrix<f64>) -> Result<[DMatrix<f64>; 4]> {
    let dm = DMatrix::from_diagonal(d);
    let dh = DMatrix::from_diagonal(&d.map(f64::sqrt));
    let dhi = DMatrix::from_diagonal(&d.map(|x| 1.0 / x.sqrt()));
    let p = &dm + b * 2.0;
    let ph = spd_power(&p, 0.5)?;
    let phi = spd_power(&p, -0.5)?;
    let inner_d = &dh * &p * &dh;
    let inner_p = &ph * &dm * &ph;
    let a = &dh * spd_power(&inner_d, -0.5)? * &dh;
    let bb = &ph * spd_power(&inner_p, -0.5)? * &ph;
    let c = &dhi * spd_power(&inner_d, 0.5)? * &dhi;
    let dd = &phi * spd_power(&inner_p, 0.5)? * &phi;
    Ok([a, bb, c, dd])
}

pub fn abcd_terms(d: &DVector<f64>, b: &DMatrix<f64>, i: usize) -> Result<AbcdTerms> {
    let [a, bb, c, dd] = abcd_blocks(d, b)?;
    Ok(AbcdTerms { a: a[(i, i)], b: bb[(i, i)], c: c[(i, i)], d: dd[(i, i)] })
}

/// `A^{1/2}` entrywise from `(2/pi) int_0^inf (1 - mu^2 (A + mu^2)^{-1}) dmu`.
pub fn sqrt_via_integral(a: &DMatrix<f64>, spec: &QuadratureSpec) -> Result<DMatrix<f64>> {
    resolvent_integral(a, spec, |r, mu, i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - mu * mu * r[(i, j)]
    })
}

/// `A^{-1/2}` entrywise from `(2/pi) int_0^inf (A + mu^2)^{-1} dmu`.
pub fn inv_sqrt_via_integral(a: &DMatrix<f64>, spec: &QuadratureSpec) -> Result<DMatrix<f64>> {
    resolvent_integral(a, spec, |r, _, i, j| r[(i, j)])
}

fn resolvent_integral(
    a: &DMatrix<f64>,
    spec: &QuadratureSpec,
    entry: impl Fn(&DMatrix<f64>, f64, usize, usize) -> f64,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let scale: Vec<f64> = a.diagonal().iter().map(|x| x.abs().sqrt()).collect();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let f = |mu: f64| {
                let r = (a + DMatrix::identity(n, n) * (mu * mu))
                    .try_inverse()
                    .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
                entry(&r, mu, i, j)
            };
            out[(i, j)] = integrate_semi_infinite(f, &scale, spec)?.value * 2.0 / std::f64::consts::PI;
        }
    }
    Ok(out)
}

/// Result of comparing the resolvent integrals with the spectral powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub sqrt_deviation: f64,
    pub inv_sqrt_deviation: f64,
    pub tol: f64,
}

impl IdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.sqrt_deviation.max(self.inv_sqrt_deviation)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() <= self.tol
    }
}

/// Checks both resolvent integral identities for the SPD matrix `a`, entrywise.
pub fn verify_integral_identities(a: &DMatrix<f64>, tol: f64) -> Result<IdentityReport> {
    let spec = QuadratureSpec::tight();
    let sqrt_deviation = max_abs_diff(&sqrt_via_integral(a, &spec)?, &spd_power(a, 0.5)?);
    let inv_sqrt_deviation = max_abs_diff(&inv_sqrt_via_integral(a, &spec)?, &spd_power(a, -0.5)?);
    Ok(IdentityReport { sqrt_deviation, inv_sqrt_deviation, tol })
}

/// `(d + c |v><v|)^{-1}` for diagonal `d` by one Sherman-Morrison step.
pub fn diag_plus_rank_one_inverse(d: &DVector<f64>, v: &DVector<f64>, c: f64) -> Result<DMatrix<f64>> {
    let dinv = DMatrix::from_diagonal(&d.map(|x| 1.0 / x));
    sherman_morrison_inverse(&dinv, &(v * c), v)
}
