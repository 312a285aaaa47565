//! Integer momenta, the discrete Fermi ball, and the momentum sets built on it.
//!
//! All ball membership decisions are made in integer arithmetic: `k` is in the
//! ball iff `|k|^2 <= floor(kF^2)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// A point of the dual lattice Z^3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Momentum3 {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl Momentum3 {
    pub const ZERO: Momentum3 = Momentum3 { x: 0, y: 0, z: 0 };

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Momentum3 { x, y, z }
    }

    pub fn norm_sq(self) -> i64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dot(self, o: Momentum3) -> i64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }

    pub fn to_array(self) -> [i64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_zero(self) -> bool {
        self == Momentum3::ZERO
    }

    /// Dot product with a real vector.
    pub fn dot_f64(self, v: &[f64; 3]) -> f64 {
        self.x as f64 * v[0] + self.y as f64 * v[1] + self.z as f64 * v[2]
    }
}

impl Add for Momentum3 {
    type Output = Momentum3;
    fn add(self, o: Momentum3) -> Momentum3 {
        Momentum3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Momentum3 {
    type Output = Momentum3;
    fn sub(self, o: Momentum3) -> Momentum3 {
        Momentum3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Momentum3 {
    type Output = Momentum3;
    fn neg(self) -> Momentum3 {
        Momentum3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Momentum3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// Integer bound `floor(r^2)` used for closed-ball membership.
///
/// Values of `r^2` within a few ulps of an integer are snapped to it, so that
/// `kF = sqrt(2)` includes the shell `|k|^2 = 2`.
pub fn squared_radius_bound(r: f64) -> i64 {
    let r2 = r * r;
    let nearest = r2.round();
    if (r2 - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as i64
    } else {
        r2.floor() as i64
    }
}

/// Largest integer strictly below `r^2`, for open-ball membership `|k| < r`.
fn strict_squared_radius_bound(r: f64) -> i64 {
    let r2 = r * r;
    let nearest = r2.round();
    if (r2 - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as i64 - 1
    } else {
        r2.floor() as i64
    }
}

/// Enumerates all lattice points in the closed ball of radius `r`, sorted.
pub fn lattice_ball(r: f64) -> Vec<Momentum3> {
    let bound = squared_radius_bound(r);
    ball_from_bound(bound)
}

fn ball_from_bound(bound: i64) -> Vec<Momentum3> {
    if bound < 0 {
        return Vec::new();
    }
    let m = (bound as f64).sqrt().floor() as i64 + 1;
    let mut out = Vec::new();
    for x in -m..=m {
        for y in -m..=m {
            for z in -m..=m {
                let k = Momentum3::new(x, y, z);
                if k.norm_sq() <= bound {
                    out.push(k);
                }
            }
        }
    }
    out
}

/// The discrete Fermi ball `{k in Z^3 : |k| <= kF}`, sorted.
pub fn enumerate_fermi_ball(kf: f64) -> Result<Vec<Momentum3>> {
    if !(kf.is_finite() && kf > 0.0) {
        return Err(Error::InvalidParameter(format!("kF must be positive, got {kf}")));
    }
    Ok(lattice_ball(kf))
}

/// Number of lattice points in the closed ball, counted by columns.
pub fn fermi_ball_count(kf: f64) -> u64 {
    let bound = squared_radius_bound(kf);
    if bound < 0 {
        return 0;
    }
    let m = (bound as f64).sqrt().floor() as i64 + 1;
    let mut count = 0u64;
    for x in -m..=m {
        for y in -m..=m {
            let rest = bound - x * x - y * y;
            if rest < 0 {
                continue;
            }
            let mut zmax = (rest as f64).sqrt().floor() as i64;
            while zmax * zmax > rest {
                zmax -= 1;
            }
            while (zmax + 1) * (zmax + 1) <= rest {
                zmax += 1;
            }
            count += (2 * zmax + 1) as u64;
        }
    }
    count
}

/// Membership in the closed half-space `H^nor`.
pub fn half_space_member(k: Momentum3) -> bool {
    k.z > 0 || (k.z == 0 && k.y > 0) || (k.z == 0 && k.y == 0 && k.x > 0)
}

/// `lambda_{q,k} = |k.q| / (|k||q|)`, the cosine between `q` and the line through `k`.
pub fn lambda_qk(q: Momentum3, k: Momentum3) -> f64 {
    let d = q.dot(k).unsigned_abs() as f64;
    d / ((q.norm_sq() as f64) * (k.norm_sq() as f64)).sqrt()
}

/// Fourier coefficients of the pair interaction, supported in `|k| < R`.
///
/// Entries must be non-negative and symmetric under `k -> -k`. The value at
/// `k = 0` plays no role and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionFourier {
    radius: f64,
    entries: BTreeMap<Momentum3, f64>,
}

impl InteractionFourier {
    pub fn new(radius: f64, entries: BTreeMap<Momentum3, f64>) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interaction radius must be positive, got {radius}"
            )));
        }
        let strict = strict_squared_radius_bound(radius);
        let mut clean = BTreeMap::new();
        for (&k, &v) in &entries {
            if k.is_zero() {
                continue;
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "interaction coefficient at {k} must be finite and non-negative, got {v}"
                )));
            }
            if k.norm_sq() > strict {
                return Err(Error::InteractionOutsideCutoff { k: k.to_array(), radius });
            }
            match entries.get(&-k) {
                Some(&w) if w == v => {}
                _ => return Err(Error::AsymmetricInteraction { k: k.to_array() }),
            }
            if v > 0.0 {
                clean.insert(k, v);
            }
        }
        Ok(InteractionFourier { radius, entries: clean })
    }

    /// `V(k) = f(|k|)` for every nonzero lattice point with `|k| < radius`.
    pub fn radial(radius: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interaction radius must be positive, got {radius}"
            )));
        }
        let strict = strict_squared_radius_bound(radius);
        let mut entries = BTreeMap::new();
        for k in ball_from_bound(strict) {
            if !k.is_zero() {
                entries.insert(k, f(k.norm()));
            }
        }
        InteractionFourier::new(radius, entries)
    }

    /// Constant coefficient `v` inside the cutoff.
    pub fn constant(v: f64, radius: f64) -> Result<Self> {
        Self::radial(radius, |_| v)
    }

    /// Coulomb-like coefficient `e2 / |k|^2` truncated at the cutoff.
    pub fn coulomb_truncated(e2: f64, radius: f64) -> Result<Self> {
        Self::radial(radius, |k| e2 / (k * k))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value(&self, k: Momentum3) -> f64 {
        self.entries.get(&k).copied().unwrap_or(0.0)
    }

    /// Nonzero entries in lattice order.
    pub fn support(&self) -> impl Iterator<Item = (Momentum3, f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        let entries = self.entries.iter().map(|(&k, &v)| (k, v * s)).collect();
        InteractionFourier::new(self.radius, entries)
    }

    pub fn max_value(&self) -> f64 {
        self.entries.values().copied().fold(0.0, f64::max)
    }
}

/// Soft-constraint report on the patch count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchCountCheck {
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

/// Scalar parameters of a closed-shell configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kf: f64,
    pub n: u64,
    pub kappa: f64,
    pub hbar: f64,
    pub m: usize,
    pub delta: f64,
    pub vhat: InteractionFourier,
    pub patch_count_check: PatchCountCheck,
}

/// Default belt exponent.
pub const DEFAULT_DELTA: f64 = 1.0 / 12.0;

/// Nearest positive even integer to `N^{1/3}`.
pub fn default_patch_count(n: u64) -> usize {
    let t = (n as f64).cbrt();
    let m = 2.0 * (t / 2.0).round();
    (m as usize).max(2)
}

impl ModelParams {
    pub fn r(&self) -> f64 {
        self.vhat.radius()
    }

    /// Belt width `N^{-delta}`.
    pub fn belt(&self) -> f64 {
        (self.n as f64).powf(-self.delta)
    }
}

/// Derives `N`, `kappa`, `hbar` and validates the patch parameters.
///
/// `m` and `delta` default to the nearest even integer to `N^{1/3}` and `1/12`.
pub fn closed_shell_params(
    kf: f64,
    m: Option<usize>,
    delta: Option<f64>,
    vhat: InteractionFourier,
) -> Result<ModelParams> {
    if !(kf.is_finite() && kf > 0.0) {
        return Err(Error::InvalidParameter(format!("kF must be positive, got {kf}")));
    }
    let delta = delta.unwrap_or(DEFAULT_DELTA);
    if !(delta > 0.0 && delta < 1.0 / 6.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1/6), got {delta}"
        )));
    }
    let n = fermi_ball_count(kf);
    let m = m.unwrap_or_else(|| default_patch_count(n));
    if m == 0 || m % 2 == 1 {
        return Err(Error::OddPatchCount(m));
    }
    let nf = n as f64;
    let lower = nf.powf(2.0 * delta);
    let upper = nf.powf(2.0 / 3.0 - 2.0 * delta);
    let mf = m as f64;
    Ok(ModelParams {
        kf,
        n,
        kappa: kf * nf.powf(-1.0 / 3.0),
        hbar: nf.powf(-1.0 / 3.0),
        m,
        delta,
        vhat,
        patch_count_check: PatchCountCheck { lower, upper, within: mf >= lower && mf <= upper },
    })
}

/// Lattice geometry shared by all later stages: ball bound, shell and `Gamma^nor`.
#[derive(Debug, Clone)]
pub struct FermiGeometry {
    pub kf: f64,
    pub r: f64,
    kf_bound: i64,
    n: u64,
    gamma_nor: Vec<Momentum3>,
    shell: Vec<Momentum3>,
}

impl FermiGeometry {
    pub fn new(kf: f64, r: f64) -> Result<Self> {
        if !(kf.is_finite() && kf > 0.0) {
            return Err(Error::InvalidParameter(format!("kF must be positive, got {kf}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("R must be positive, got {r}")));
        }
        let kf_bound = squared_radius_bound(kf);
        let strict = strict_squared_radius_bound(r);
        let mut gamma_nor: Vec<Momentum3> = ball_from_bound(strict)
            .into_iter()
            .filter(|&k| half_space_member(k))
            .collect();
        gamma_nor.sort_by_key(|k| (k.norm_sq(), *k));

        let lo = kf - r;
        let hi = kf + r;
        let shell: Vec<Momentum3> = ball_from_bound(squared_radius_bound(hi))
            .into_iter()
            .filter(|k| k.norm() >= lo)
            .collect();

        Ok(FermiGeometry { kf, r, kf_bound, n: fermi_ball_count(kf), gamma_nor, shell })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Integer bound `floor(kF^2)`.
    pub fn kf_bound(&self) -> i64 {
        self.kf_bound
    }

    pub fn in_ball(&self, k: Momentum3) -> bool {
        k.norm_sq() <= self.kf_bound
    }

    /// `Gamma^nor = H^nor cap B_R(0)`, ordered by `|k|^2` then lexicographically.
    pub fn gamma_nor(&self) -> &[Momentum3] {
        &self.gamma_nor
    }

    /// Lattice points with `kF - R <= |k| <= kF + R`, sorted.
    pub fn shell(&self) -> &[Momentum3] {
        &self.shell
    }

    /// Distance of `q` to the Fermi sphere of radius `kF`.
    pub fn sphere_distance(&self, q: Momentum3) -> f64 {
        (q.norm() - self.kf).abs()
    }

    /// `C^q`: momenta `k in Gamma^nor` that move `q` across the Fermi surface.
    pub fn momentum_set_cq(&self, q: Momentum3) -> Vec<Momentum3> {
        let inside = self.in_ball(q);
        self.gamma_nor
            .iter()
            .copied()
            .filter(|&k| {
                let a = self.in_ball(q + k);
                let b = self.in_ball(q - k);
                if inside {
                    !a || !b
                } else {
                    a || b
                }
            })
            .collect()
    }

    /// Smallest strictly positive `lambda_{q,k}` over nonzero `k` with `|k| < R`.
    pub fn min_positive_lambda(&self, q: Momentum3) -> Option<f64> {
        self.gamma_nor
            .iter()
            .map(|&k| lambda_qk(q, k))
            .filter(|&l| l > 0.0)
            .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))))
    }

    /// Whether `q` is in `Q_eps`: no nonzero `k` in `B_R` has `0 < lambda_{q,k} < eps`.
    pub fn in_q_epsilon(&self, q: Momentum3, eps: f64) -> bool {
        self.min_positive_lambda(q).is_none_or(|l| l >= eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple_loop_count(kf: f64) -> usize {
        let b = (kf * kf + 1e-9).floor() as i64;
        let m = kf.ceil() as i64 + 1;
        let mut c = 0;
        for x in -m..=m {
            for y in -m..=m {
                for z in -m..=m {
                    if x * x + y * y + z * z <= b {
                        c += 1;
                    }
                }
            }
        }
        c
    }

    #[test]
    fn ball_counts_small() {
        assert_eq!(fermi_ball_count(1.0), 7);
        assert_eq!(fermi_ball_count(2.0), 33);
        assert_eq!(fermi_ball_count(0.5), 1);
        assert_eq!(fermi_ball_count(5.0), 515);
        assert_eq!(fermi_ball_count(2f64.sqrt()), 19);
    }

    #[test]
    fn ball_count_matches_enumeration() {
        for &kf in &[0.5, 1.0, 1.7, 3.0, 4.2, 7.5, 10.0] {
            assert_eq!(fermi_ball_count(kf) as usize, triple_loop_count(kf));
            assert_eq!(enumerate_fermi_ball(kf).unwrap().len(), triple_loop_count(kf));
        }
    }

    #[test]
    fn gamma_nor_counts() {
        let g = FermiGeometry::new(10.0, 2.5).unwrap();
        assert_eq!(g.gamma_nor().len(), 40);
        assert!(g.gamma_nor().iter().all(|k| k.norm_sq() <= 6));
    }

    #[test]
    fn half_space_partitions() {
        for k in lattice_ball(3.0) {
            if k.is_zero() {
                assert!(!half_space_member(k));
            } else {
                assert!(half_space_member(k) ^ half_space_member(-k));
            }
        }
    }

    #[test]
    fn cq_examples() {
        let g = FermiGeometry::new(5.0, 2.5).unwrap();
        let q = Momentum3::new(0, 0, 6);
        let c = g.momentum_set_cq(q);
        assert!(c.contains(&Momentum3::new(0, 0, 1)));
        let far = Momentum3::new(0, 0, 8);
        assert!(g.momentum_set_cq(far).is_empty());
    }

    #[test]
    fn lambda_values() {
        let q = Momentum3::new(0, 0, 6);
        assert!((lambda_qk(q, Momentum3::new(0, 0, 1)) - 1.0).abs() < 1e-15);
        assert_eq!(lambda_qk(q, Momentum3::new(1, 0, 0)), 0.0);
        assert!((lambda_qk(q, Momentum3::new(1, 0, 1)) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn params_defaults_and_validation() {
        let v = InteractionFourier::constant(1.0, 2.5).unwrap();
        let p = closed_shell_params(5.0, None, None, v.clone()).unwrap();
        assert_eq!(p.n, 515);
        assert_eq!(p.m, 8);
        assert!((p.hbar - 515f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!(closed_shell_params(5.0, Some(7), None, v.clone()).is_err());
        assert!(closed_shell_params(5.0, None, Some(0.2), v.clone()).is_err());
        assert!(closed_shell_params(-1.0, None, None, v).is_err());
    }

    #[test]
    fn interaction_validation() {
        let mut e = BTreeMap::new();
        e.insert(Momentum3::new(1, 0, 0), 1.0);
        assert!(matches!(
            InteractionFourier::new(2.0, e.clone()),
            Err(Error::AsymmetricInteraction { .. })
        ));
        e.insert(Momentum3::new(-1, 0, 0), 1.0);
        assert!(InteractionFourier::new(2.0, e.clone()).is_ok());
        e.insert(Momentum3::new(2, 0, 0), 1.0);
        e.insert(Momentum3::new(-2, 0, 0), 1.0);
        assert!(matches!(
            InteractionFourier::new(2.0, e),
            Err(Error::InteractionOutsideCutoff { .. })
        ));
    }
}
