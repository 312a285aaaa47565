//! Infinite-volume occupation numbers and the Daniel-Vosko comparison formulas.
//!
//! `thermo_nq` is the continuum limit of the asymptotic lattice formula for a
//! radial interaction. The DV functions transcribe the Coulomb RPA momentum
//! distribution and its short-range truncation.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::occupation::lindhard_half;
use crate::quadrature::{integrate_interval_with_breaks, integrate_semi_infinite, QuadratureSpec};

/// Continuum `kappa = (3 / (4 pi))^{1/3}`.
pub fn kappa_continuum() -> f64 {
    (3.0 / (4.0 * PI)).cbrt()
}

/// Cutoff for the semi-infinite `|k|` integral, in units of `kF`.
pub const DV_TAIL_CUTOFF: f64 = 50.0;

/// Parameters of the continuum formulas.
#[derive(Clone)]
pub struct ThermoParams {
    pub kf: f64,
    pub hbar: f64,
    pub kappa: f64,
    pub r: f64,
    pub vhat_radial: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub e_coul: f64,
    pub quad: QuadratureSpec,
}

impl std::fmt::Debug for ThermoParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ThermoParams")
            .field("kf", &self.kf)
            .field("hbar", &self.hbar)
            .field("kappa", &self.kappa)
            .field("r", &self.r)
            .field("e_coul", &self.e_coul)
            .finish()
    }
}

impl ThermoParams {
    /// Radial potential `vhat` cut off at `r`, with `hbar = kappa / kF`.
    ///
    /// With this `hbar` the continuum prefactors agree with the lattice
    /// convention `hbar = N^{-1/3}`, and the Lindhard strength
    /// `3 V / (2 kappa hbar kF)` reduces to `2 pi kappa V`.
    pub fn new(kf: f64, r: f64, vhat: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let kappa = kappa_continuum();
        ThermoParams {
            kf,
            hbar: kappa / kf,
            kappa,
            r,
            vhat_radial: Arc::new(move |k| if k < r { vhat(k) } else { 0.0 }),
            e_coul: 0.0,
            quad: QuadratureSpec { abs_tol: 1e-14, rel_tol: 1e-10, max_subdivisions: 1 << 14 },
        }
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_e_coul(mut self, e: f64) -> Self {
        self.e_coul = e;
        self
    }

    /// Coulomb-like potential matched to the short-range DV formula,
    /// `8 kappa e^2 hbar kF^2 / (3 pi |k|^2)`.
    pub fn matched_coulomb(kf: f64, r: f64, e_coul: f64) -> Self {
        let kappa = kappa_continuum();
        let hbar = kappa / kf;
        let c = 8.0 * kappa * e_coul * e_coul * hbar * kf * kf / (3.0 * PI);
        ThermoParams::new(kf, r, move |k| c / (k * k)).with_e_coul(e_coul)
    }

    pub fn vhat(&self, k: f64) -> f64 {
        (self.vhat_radial)(k)
    }

    /// `R_q = ||q| - kF|`.
    pub fn r_q(&self, q_norm: f64) -> f64 {
        (q_norm - self.kf).abs()
    }

    /// `alpha = e^2 / (pi^2 kF)`.
    pub fn alpha(&self) -> f64 {
        self.e_coul * self.e_coul / (PI * PI * self.kf)
    }

    /// Continuum `Q_k^(0)(mu) = 3 V_k / (2 kappa hbar kF) (1 - mu atan(1/mu))`.
    pub fn q0(&self, mu: f64, k: f64) -> f64 {
        3.0 * self.vhat(k) / (2.0 * self.kappa * self.hbar * self.kf) * lindhard_half(mu)
    }
}

/// `int_{lmin}^1 (mu^2 - l^2)(mu^2 + l^2)^{-2} dl` in closed form.
pub fn lambda_integral_closed(lmin: f64, mu: f64) -> f64 {
    1.0 / (1.0 + mu * mu) - lmin / (lmin * lmin + mu * mu)
}

fn thermo_inner(tp: &ThermoParams, k: f64, lmin: f64) -> Result<f64> {
    let w = |mu: f64| 1.0 / (1.0 + tp.q0(mu, k));
    if lmin == 0.0 {
        let a = integrate_semi_infinite(|mu| w(mu) / (1.0 + mu * mu), &[1.0], &tp.quad)?;
        return Ok(a.value - 0.5 * PI * w(0.0));
    }
    // both Lorentzians integrate to pi/2, so only the Q-dependent part of the weight remains
    let f = |mu: f64| -lambda_integral_closed(lmin, mu) * tp.q0(mu, k) * w(mu);
    Ok(integrate_semi_infinite(f, &[lmin, 1.0], &tp.quad)?.value)
}

/// Continuum `n_q` for `|q| = q_norm`.
pub fn thermo_nq(q_norm: f64, tp: &ThermoParams) -> Result<f64> {
    let rq = tp.r_q(q_norm);
    if rq >= tp.r {
        return Ok(0.0);
    }
    let mut err = None;
    let outer = |k: f64| {
        if k <= 0.0 {
            return 0.0;
        }
        let pref = 3.0 * tp.vhat(k) / (4.0 * PI * tp.hbar * tp.kf.powi(3) * tp.kappa);
        match thermo_inner(tp, k, (rq / k).min(1.0)) {
            Ok(v) => k * pref * v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate_interval_with_breaks(outer, rq, tp.r, &[], &tp.quad);
    if let Some(e) = err {
        return Err(e);
    }
    Ok(r?.value)
}

/// `Q^(SR)(mu) = 4 pi (1 - mu atan(1/mu))`.
pub fn q_sr(mu: f64) -> f64 {
    4.0 * PI * lindhard_half(mu)
}

/// The Daniel-Vosko Lindhard-type function `Q^(DV)_k(mu)`.
pub fn dv_q(mu: f64, k_norm: f64, kf: f64) -> f64 {
    let h = 0.5 * k_norm;
    let coeff = (kf * kf * (1.0 + mu * mu) - h * h) / (2.0 * k_norm * kf);
    let den = (kf - h).powi(2) + kf * kf * mu * mu;
    let log = (2.0 * kf * k_norm / den).ln_1p();
    let at = |x: f64| if mu == 0.0 { 0.0 } else { mu * (x / mu).atan() };
    2.0 * PI * (1.0 + coeff * log - at(1.0 + h / kf) - at(1.0 - h / kf))
}

/// Which reprinted formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvSide {
    /// The first reprinted formula, with lower limit `|q| - kF`.
    Outside,
    /// The second reprinted formula, with lower limit `kF - |q|` and a tail term.
    Inside,
}

fn dv_bracket(a: f64, b: f64, kf: f64, mu: f64) -> f64 {
    let m2 = kf * kf * mu * mu;
    a / (a * a + m2) - b / (b * b + m2)
}

fn dv_radial(
    tp: &ThermoParams,
    lo: f64,
    hi: f64,
    short_range: bool,
    ab: impl Fn(f64) -> (f64, f64) + Sync,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let kf = tp.kf;
    let alpha = tp.alpha();
    let mut err = None;
    let outer = |k: f64| {
        let (a, b) = ab(k);
        let inner = |mu: f64| {
            let q = if short_range { q_sr(mu) } else { dv_q(mu, k, kf) };
            dv_bracket(a, b, kf, mu) / (k * k / (kf * kf) + alpha * q)
        };
        match integrate_semi_infinite(inner, &[a.abs() / kf, b.abs() / kf, 1.0], &tp.quad) {
            Ok(v) => k * v.value,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate_interval_with_breaks(outer, lo, hi, &[2.0 * kf], &tp.quad);
    if let Some(e) = err {
        return Err(e);
    }
    Ok(r?.value)
}

/// Daniel-Vosko occupation at `|q| = q_norm`.
///
/// With `cutoff = Some(R)` the `|k|` range is truncated at `R` and `Q^(DV)` is
/// replaced by `Q^(SR)`.
pub fn dv_nq(q_norm: f64, side: DvSide, tp: &ThermoParams, cutoff: Option<f64>) -> Result<f64> {
    if q_norm == tp.kf {
        return Err(Error::InvalidParameter("|q| must differ from kF".into()));
    }
    if tp.e_coul == 0.0 {
        return Ok(0.0);
    }
    let kf = tp.kf;
    let q = q_norm;
    let sr = cutoff.is_some();
    let top = |hi: f64| cutoff.map_or(hi, |r| hi.min(r));
    let value = match side {
        DvSide::Outside => dv_radial(tp, q - kf, top(q + kf), sr, |k| (q - 0.5 * k, (q * q - kf * kf) / (2.0 * k)))?,
        DvSide::Inside => {
            let first = dv_radial(tp, kf - q, top(kf + q), sr, |k| (q + 0.5 * k, (kf * kf - q * q) / (2.0 * k)))?;
            let second = dv_radial(tp, kf + q, top(DV_TAIL_CUTOFF * kf), sr, |k| (q + 0.5 * k, 0.5 * k - q))?;
            first + second
        }
    };
    Ok(tp.alpha() / q * value)
}
