//! Bosonized occupation numbers `n_q` and the asymptotic formula.
//!
//! `n_q` is evaluated three ways: from the diagonal of `cosh 2K - 1`
//! (matrix route), from the truncated cosh series in powers of `K`
//! (series route), and from the one-dimensional `mu`-integral (integral
//! route). Per-`(k, alpha)` pieces depend on `q` only through `alpha_q`,
//! so they are cached on first use.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{build_all_kernels, KernelBundle};
use crate::lattice::{lambda_qk, FermiGeometry, ModelParams, Momentum3};
use crate::patches::{PatchLattice, PatchSet};
use crate::quadrature::{integrate_interval, integrate_semi_infinite, QuadratureSpec};

/// Number of cosh-series terms cached per kernel.
pub const SERIES_CACHE_TERMS: usize = 40;

/// `Q_k^(0)(mu) = 2 pi kappa V_k (1 - mu atan(1/mu))`.
pub fn q0(mu: f64, kappa: f64, vhat: f64) -> f64 {
    TAU * kappa * vhat * lindhard_half(mu)
}

/// `1 - mu atan(1/mu)`, equal to 1 at `mu = 0`.
pub fn lindhard_half(mu: f64) -> f64 {
    if mu == 0.0 {
        1.0
    } else if mu > 1e4 {
        let x = 1.0 / (mu * mu);
        x / 3.0 - x * x / 5.0 + x * x * x / 7.0
    } else {
        1.0 - mu * (1.0 / mu).atan()
    }
}

/// `int over the upper unit half-sphere of cos^2 / (cos^2 + mu^2)` by nested quadrature.
pub fn half_sphere_angular_quadrature(mu: f64, spec: &QuadratureSpec) -> Result<f64> {
    let inner = |theta: f64| {
        let c = theta.cos();
        c * c / (c * c + mu * mu) * theta.sin()
    };
    let mut theta_breaks = vec![];
    if mu > 0.0 && mu < 1.0 {
        theta_breaks.push(mu.acos());
    }
    let mut err = None;
    let outer = integrate_interval(
        |_phi| match crate::quadrature::integrate_interval_with_breaks(inner, 0.0, FRAC_PI_2, &theta_breaks, spec) {
            Ok(r) => r.value,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        0.0,
        TAU,
        spec,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(outer?.value)
}

/// `(1/pi) int_0^inf h_lambda(mu) / (1 + Q(mu)) dmu` with
/// `h_lambda = (mu^2 - lambda^2)(mu^2 + lambda^2)^{-2}`.
///
/// Evaluated as `-(1/pi) int h Q / (1 + Q)` using `int h = 0`. Returns
/// `+inf` for `lambda = 0`, where the integral diverges.
pub fn signed_kernel_integral(
    lambda: f64,
    q: impl Fn(f64) -> f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(f64::INFINITY);
    }
    let l2 = lambda * lambda;
    let f = |mu: f64| {
        let m2 = mu * mu;
        let h = (m2 - l2) / ((m2 + l2) * (m2 + l2));
        let qv = q(mu);
        -h * qv / (1.0 + qv)
    };
    let mut br = breaks.to_vec();
    br.push(lambda);
    let spec = QuadratureSpec { abs_tol: spec.abs_tol / lambda, ..*spec };
    Ok(integrate_semi_infinite(f, &br, &spec)?.value / PI)
}

/// Which evaluation routes to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Routes {
    pub matrix: bool,
    pub series: bool,
    pub integral: bool,
    pub asymptotic: bool,
}

impl Routes {
    pub const ALL: Routes = Routes { matrix: true, series: true, integral: true, asymptotic: true };
    pub const MATRIX: Routes = Routes { matrix: true, series: false, integral: false, asymptotic: false };
}

impl Default for Routes {
    fn default() -> Self {
        Routes::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Matrix,
    Series,
    Integral,
    Asymptotic,
}

/// Per-`k` contribution to `n_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub k: Momentum3,
    pub lambda_alpha: f64,
    pub lambda_q: f64,
    pub n2: u64,
    pub g: f64,
    pub matrix: f64,
    pub series: Option<f64>,
    pub integral: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationResult {
    pub q: Momentum3,
    pub alpha_q: Option<usize>,
    pub inside_fermi: bool,
    pub in_q_eps: bool,
    pub contributions: Vec<Contribution>,
    pub nq_matrix: Option<f64>,
    pub nq_series: Option<f64>,
    pub nq_integral: Option<f64>,
    pub nq_asymptotic: Option<f64>,
    pub diag_eii: Option<f64>,
    pub diag_eiii: Option<f64>,
}

impl OccupationResult {
    pub fn route(&self, r: Route) -> Option<f64> {
        match r {
            Route::Matrix => self.nq_matrix,
            Route::Series => self.nq_series,
            Route::Integral => self.nq_integral,
            Route::Asymptotic => self.nq_asymptotic,
        }
    }

    /// Largest pairwise gap among the bosonic routes that were evaluated.
    pub fn max_route_disagreement(&self) -> f64 {
        let v: Vec<f64> = [self.nq_matrix, self.nq_series, self.nq_integral].iter().flatten().copied().collect();
        let mut gap: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                gap = gap.max((v[i] - v[j]).abs());
            }
        }
        gap
    }
}

fn clip(v: f64) -> f64 {
    if (-1e-12..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

struct KernelEntry {
    bundle: KernelBundle,
    vhat: f64,
    integral_q: OnceLock<Result<Vec<f64>>>,
    integral_q0: OnceLock<Result<Vec<f64>>>,
    series_diag: OnceLock<Vec<Vec<f64>>>,
}

/// Everything needed to evaluate `n_q` for one closed-shell configuration.
pub struct Model {
    pub params: ModelParams,
    pub geom: FermiGeometry,
    pub patches: PatchSet,
    pub lattice: PatchLattice,
    pub quad: QuadratureSpec,
    pub epsilon: f64,
    kernels: BTreeMap<Momentum3, KernelEntry>,
}

/// One element of `C~^q` with the kernel position of `alpha_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtildeEntry {
    pub k: Momentum3,
    pub position: usize,
    pub plus_position: usize,
    pub sign: i8,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        Self::with_quadrature(params, QuadratureSpec::tight(), None)
    }

    pub fn with_quadrature(params: ModelParams, quad: QuadratureSpec, epsilon: Option<f64>) -> Result<Self> {
        let r = params.r();
        let geom = FermiGeometry::new(params.kf, r)?;
        let patches = PatchSet::new(params.kf, r, params.m)?;
        let lattice = patches.assign_lattice(&geom);
        let bundles = build_all_kernels(&geom, &patches, &lattice, &params)?;
        let kernels = bundles
            .into_iter()
            .map(|b| {
                let vhat = params.vhat.value(b.k);
                (
                    b.k,
                    KernelEntry {
                        bundle: b,
                        vhat,
                        integral_q: OnceLock::new(),
                        integral_q0: OnceLock::new(),
                        series_diag: OnceLock::new(),
                    },
                )
            })
            .collect();
        let epsilon = match epsilon {
            Some(e) => e,
            None => default_epsilon(&geom),
        };
        Ok(Model { params, geom, patches, lattice, quad, epsilon, kernels })
    }

    pub fn kernel(&self, k: Momentum3) -> Option<&KernelBundle> {
        self.kernels.get(&k).map(|e| &e.bundle)
    }

    pub fn kernels(&self) -> impl Iterator<Item = &KernelBundle> {
        self.kernels.values().map(|e| &e.bundle)
    }

    pub fn alpha_of(&self, q: Momentum3) -> Option<usize> {
        self.lattice.owner(q)
    }

    /// `C~^q` with kernel positions. Empty when `q` is in no patch.
    pub fn ctilde(&self, q: Momentum3) -> Vec<CtildeEntry> {
        let Some(alpha) = self.alpha_of(q) else {
            return Vec::new();
        };
        let w = self.patches.omega_hat(alpha);
        let belt = self.params.belt();
        let inside = self.geom.in_ball(q);
        let mut out = Vec::new();
        for &k in self.geom.gamma_nor() {
            let s = k.dot_f64(&w);
            if s.abs() < belt {
                continue;
            }
            let sign: i8 = if s > 0.0 { 1 } else { -1 };
            let partner = if inside {
                if sign > 0 { q + k } else { q - k }
            } else if sign > 0 {
                q - k
            } else {
                q + k
            };
            let ok = self.geom.in_ball(partner) != inside && self.lattice.owner(partner) == Some(alpha);
            if !ok {
                continue;
            }
            if let Some(kb) = self.kernel(k) {
                if let Some((position, plus_position)) = kb.position(alpha) {
                    out.push(CtildeEntry { k, position, plus_position, sign });
                }
            }
        }
        out
    }

    pub fn ctilde_q(&self, q: Momentum3) -> Vec<Momentum3> {
        self.ctilde(q).into_iter().map(|e| e.k).collect()
    }

    /// `rho_{q,k}` by direct lattice membership, for either sign choice.
    fn rho(&self, q: Momentum3, alpha: usize, k: Momentum3, sign: i8) -> f64 {
        let kb = &self.kernels[&k].bundle;
        let Some((_, i)) = kb.position(alpha) else {
            return 0.0;
        };
        let inside = self.geom.in_ball(q);
        let kk = if sign > 0 { k } else { -k };
        let hit = if inside {
            let p = q + kk;
            !self.geom.in_ball(p) && self.lattice.owner(p) == Some(alpha)
        } else {
            let h = q - kk;
            self.geom.in_ball(h) && self.lattice.owner(h) == Some(alpha)
        };
        if hit {
            1.0 / kb.counts[i] as f64
        } else {
            0.0
        }
    }

    pub fn nq_boson_matrix(&self, q: Momentum3) -> f64 {
        clip(
            self.ctilde(q)
                .iter()
                .map(|e| {
                    let kb = &self.kernels[&e.k].bundle;
                    0.5 * kb.cosh2k_minus1[(e.position, e.position)] / kb.counts[e.plus_position] as f64
                })
                .sum(),
        )
    }

    fn series_diag(&self, k: Momentum3) -> &Vec<Vec<f64>> {
        let entry = &self.kernels[&k];
        entry.series_diag.get_or_init(|| {
            let kmat = &entry.bundle.kmat;
            let k2 = kmat * kmat;
            let mut pow = k2.clone();
            let mut out = Vec::with_capacity(SERIES_CACHE_TERMS);
            for _ in 0..SERIES_CACHE_TERMS {
                out.push(pow.diagonal().iter().copied().collect());
                pow = &pow * &k2;
            }
            out
        })
    }

    fn series_terms(&self, k: Momentum3, position: usize, m_max: usize) -> Vec<f64> {
        if m_max <= SERIES_CACHE_TERMS {
            return self.series_diag(k)[..m_max].iter().map(|d| d[position]).collect();
        }
        let kmat = &self.kernels[&k].bundle.kmat;
        let k2 = kmat * kmat;
        let mut pow = k2.clone();
        let mut out = Vec::with_capacity(m_max);
        for _ in 0..m_max {
            out.push(pow[(position, position)]);
            pow = &pow * &k2;
        }
        out
    }

    /// Series route truncated after `m_max` terms.
    pub fn nq_boson_series(&self, q: Momentum3, m_max: usize) -> Result<f64> {
        let Some(alpha) = self.alpha_of(q) else {
            return Ok(0.0);
        };
        let mut total = 0.0;
        for e in self.ctilde(q) {
            let rho = self.rho(q, alpha, e.k, e.sign);
            if rho == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "pair indicator vanishes for q = {q}, k = {}",
                    e.k
                )));
            }
            total += series_sum(&self.series_terms(e.k, e.position, m_max)) * rho;
        }
        Ok(clip(total))
    }

    fn integrals_q(&self, k: Momentum3) -> Result<&Vec<f64>> {
        let entry = &self.kernels[&k];
        entry
            .integral_q
            .get_or_init(|| {
                let kb = &entry.bundle;
                kb.lambdas
                    .iter()
                    .map(|&l| signed_kernel_integral(l, |mu| kb.q_finite(mu), &kb.lambdas, &self.quad))
                    .collect()
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn integrals_q0(&self, k: Momentum3) -> Result<&Vec<f64>> {
        let entry = &self.kernels[&k];
        let kappa = self.params.kappa;
        entry
            .integral_q0
            .get_or_init(|| {
                entry
                    .bundle
                    .lambdas
                    .iter()
                    .map(|&l| signed_kernel_integral(l, |mu| q0(mu, kappa, entry.vhat), &[1.0], &self.quad))
                    .collect()
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Integral route with the finite-`N` function `Q_k`.
    pub fn nq_boson_integral(&self, q: Momentum3) -> Result<f64> {
        let mut total = 0.0;
        for e in self.ctilde(q) {
            let g = self.kernels[&e.k].bundle.g;
            total += g * self.integrals_q(e.k)?[e.plus_position];
        }
        Ok(clip(total))
    }

    /// `Q_k^(0)` for this model.
    pub fn q0(&self, mu: f64, k: Momentum3) -> f64 {
        q0(mu, self.params.kappa, self.params.vhat.value(k))
    }

    /// Asymptotic formula summed over `C^q` with `lambda_{q,k}` and `Q_k^(0)`.
    ///
    /// Infinite when some `k` in `C^q` is orthogonal to `q`.
    pub fn nq_asymptotic(&self, q: Momentum3) -> Result<f64> {
        asymptotic_nq(&self.geom, &self.params, q, &self.quad)
    }

    /// `(E_II gap, E_III gap)` over `C~^q`.
    pub fn error_diagnostics(&self, q: Momentum3) -> Result<(f64, f64)> {
        let mut f = 0.0;
        let mut f0 = 0.0;
        let mut f0q = 0.0;
        let kappa = self.params.kappa;
        for e in self.ctilde(q) {
            let entry = &self.kernels[&e.k];
            let g = entry.bundle.g;
            f += g * self.integrals_q(e.k)?[e.plus_position];
            let i0 = self.integrals_q0(e.k)?[e.plus_position];
            f0 += g * i0;
            let lq = lambda_qk(q, e.k);
            let iq = if lq == entry.bundle.lambdas[e.plus_position] {
                i0
            } else {
                signed_kernel_integral(lq, |mu| q0(mu, kappa, entry.vhat), &[1.0], &self.quad)?
            };
            f0q += g * iq;
        }
        Ok(((f - f0).abs(), (f0 - f0q).abs()))
    }

    /// Whether `q` satisfies the patch-interior condition: every lattice point
    /// within distance `R` of `q` on the opposite side of the Fermi surface
    /// belongs to `alpha_q`.
    pub fn interior_condition(&self, q: Momentum3) -> bool {
        let Some(alpha) = self.alpha_of(q) else {
            return false;
        };
        let inside = self.geom.in_ball(q);
        self.geom.gamma_nor().iter().all(|&k| {
            [q + k, q - k]
                .iter()
                .all(|&p| self.geom.in_ball(p) == inside || self.lattice.owner(p) == Some(alpha))
        })
    }

    pub fn evaluate(&self, q: Momentum3, routes: Routes, series_terms: usize) -> Result<OccupationResult> {
        let alpha_q = self.alpha_of(q);
        let inside_fermi = self.geom.in_ball(q);
        let in_q_eps = self.geom.in_q_epsilon(q, self.epsilon);
        let mut res = OccupationResult {
            q,
            alpha_q,
            inside_fermi,
            in_q_eps,
            contributions: Vec::new(),
            nq_matrix: routes.matrix.then_some(0.0),
            nq_series: routes.series.then_some(0.0),
            nq_integral: routes.integral.then_some(0.0),
            nq_asymptotic: None,
            diag_eii: None,
            diag_eiii: None,
        };
        if routes.asymptotic && !q.is_zero() {
            res.nq_asymptotic = Some(self.nq_asymptotic(q)?);
        }
        let Some(alpha) = alpha_q else {
            return Ok(res);
        };
        for e in self.ctilde(q) {
            let kb = &self.kernels[&e.k].bundle;
            let n2 = kb.counts[e.plus_position];
            let matrix = 0.5 * kb.cosh2k_minus1[(e.position, e.position)] / n2 as f64;
            let series = if routes.series {
                let rho = self.rho(q, alpha, e.k, e.sign);
                Some(series_sum(&self.series_terms(e.k, e.position, series_terms)) * rho)
            } else {
                None
            };
            let integral = if routes.integral {
                Some(kb.g * self.integrals_q(e.k)?[e.plus_position])
            } else {
                None
            };
            res.contributions.push(Contribution {
                k: e.k,
                lambda_alpha: kb.lambdas[e.plus_position],
                lambda_q: lambda_qk(q, e.k),
                n2,
                g: kb.g,
                matrix,
                series,
                integral,
            });
        }
        let c = &res.contributions;
        if routes.matrix {
            res.nq_matrix = Some(clip(c.iter().map(|x| x.matrix).sum()));
        }
        if routes.series {
            res.nq_series = Some(clip(c.iter().map(|x| x.series.unwrap_or(0.0)).sum()));
        }
        if routes.integral {
            res.nq_integral = Some(clip(c.iter().map(|x| x.integral.unwrap_or(0.0)).sum()));
        }
        if routes.asymptotic {
            let (e2, e3) = self.error_diagnostics(q)?;
            res.diag_eii = Some(e2);
            res.diag_eiii = Some(e3);
        }
        Ok(res)
    }

    /// Evaluates every shell momentum that lies in a patch.
    pub fn scan(&self, routes: Routes, series_terms: usize) -> Result<Vec<OccupationResult>> {
        let qs: Vec<Momentum3> = self.geom.shell().iter().copied().filter(|&q| self.alpha_of(q).is_some()).collect();
        qs.par_iter().map(|&q| self.evaluate(q, routes, series_terms)).collect()
    }

    /// `sup_mu |Q_k(mu) - Q_k^(0)(mu)|` over the grid.
    pub fn qk_vs_q0_report(&self, k: Momentum3, mu_grid: &[f64]) -> Option<f64> {
        let kb = self.kernel(k)?;
        Some(mu_grid.iter().map(|&mu| (kb.q_finite(mu) - self.q0(mu, k)).abs()).fold(0.0, f64::max))
    }
}

/// The asymptotic formula for `n_q`; needs only the geometry and parameters.
///
/// Each `k` in `C^q` carries weight `N^{-2/3} V_k / (2 kappa |k|)`.
pub fn asymptotic_nq(geom: &FermiGeometry, params: &ModelParams, q: Momentum3, quad: &QuadratureSpec) -> Result<f64> {
    if q.is_zero() {
        return Err(Error::InvalidParameter("q must be nonzero".into()));
    }
    let kappa = params.kappa;
    let scale = (params.n as f64).powf(-2.0 / 3.0) / (2.0 * kappa);
    let mut total = 0.0;
    for k in geom.momentum_set_cq(q) {
        let v = params.vhat.value(k);
        if v == 0.0 {
            continue;
        }
        let l = lambda_qk(q, k);
        total += scale * v / k.norm() * signed_kernel_integral(l, |mu| q0(mu, kappa, v), &[1.0], quad)?;
    }
    Ok(clip(total))
}

fn series_sum(diag_terms: &[f64]) -> f64 {
    let mut coeff = 1.0;
    let mut total = 0.0;
    for (i, &t) in diag_terms.iter().enumerate() {
        let m = (i + 1) as f64;
        // 2^{2m-1} / (2m)!
        coeff *= if i == 0 { 1.0 } else { 4.0 / ((2.0 * m - 1.0) * (2.0 * m)) };
        total += coeff * t;
    }
    total
}

/// Half the smallest positive `lambda_{q,k}` over all shell momenta.
pub fn default_epsilon(geom: &FermiGeometry) -> f64 {
    let m = geom
        .shell()
        .par_iter()
        .filter_map(|&q| if q.is_zero() { None } else { geom.min_positive_lambda(q) })
        .reduce(|| f64::INFINITY, f64::min);
    if m.is_finite() {
        0.5 * m
    } else {
        0.5
    }
}

/// `Z = 1 - sup_{q in B_F} n_q - sup_{q not in B_F} n_q` for the given route.
pub fn quasiparticle_weight(results: &[OccupationResult], route: Route) -> f64 {
    let (mut inside, mut outside) = (0.0f64, 0.0f64);
    for r in results {
        let v = r.route(route).unwrap_or(0.0);
        if r.inside_fermi {
            inside = inside.max(v);
        } else {
            outside = outside.max(v);
        }
    }
    1.0 - inside - outside
}

/// Largest `n_q` on each side of the Fermi surface.
pub fn sup_by_side(results: &[OccupationResult], route: Route) -> (f64, f64) {
    let (mut inside, mut outside) = (0.0f64, 0.0f64);
    for r in results {
        let v = r.route(route).unwrap_or(0.0);
        if r.inside_fermi {
            inside = inside.max(v);
        } else {
            outside = outside.max(v);
        }
    }
    (inside, outside)
}
