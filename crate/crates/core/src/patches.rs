//! Patch decomposition of the Fermi shell.
//!
//! The northern unit hemisphere is split into `M/2` cells by an equal-area
//! latitude-band layout. Each cell is shrunk by an angular margin
//! `asin(R / kF)` on every side, which leaves corridors of chordal width at
//! least `2R` between neighbouring patches. Southern patches are point
//! reflections of northern ones: patch `alpha + M/2` is patch `alpha` mirrored
//! through the origin. Indices are 0-based.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::lattice::{FermiGeometry, Momentum3};

/// One latitude band of the northern layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub sectors: usize,
    pub first: usize,
}

impl Band {
    fn sector_width(&self) -> f64 {
        TAU / self.sectors as f64
    }

    fn is_cap(&self) -> bool {
        self.theta_lo == 0.0
    }
}

/// A single patch with its unit center direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub alpha: usize,
    pub omega_hat: [f64; 3],
    pub band: usize,
    pub sector: usize,
    pub north: bool,
}

/// A complete patch layout.
#[derive(Debug, Clone)]
pub struct PatchSet {
    pub kf: f64,
    pub r: f64,
    pub m: usize,
    pub margin: f64,
    bands: Vec<Band>,
    patches: Vec<Patch>,
}

fn north_area_fraction(theta: f64) -> f64 {
    1.0 - theta.cos()
}

/// Candidate band counts for `n` cells, each summing to `n`.
fn candidate_layouts(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let max_bands = n.clamp(1, 64);
    for nb in 1..=max_bands {
        for cap in [false, true] {
            if let Some(c) = band_counts(n, nb, cap) {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

fn band_counts(n: usize, nb: usize, cap: bool) -> Option<Vec<usize>> {
    let (start, zones, mut counts) = if cap {
        if nb < 2 || n < 2 {
            return None;
        }
        let cap_theta = (1.0 - 1.0 / n as f64).acos();
        (cap_theta, nb - 1, vec![1usize])
    } else {
        (0.0, nb, Vec::new())
    };
    let height = (FRAC_PI_2 - start) / zones as f64;
    let mut carry = 0.0;
    let mut used: usize = counts.iter().sum();
    for i in 0..zones {
        let a = start + height * i as f64;
        let b = start + height * (i + 1) as f64;
        let c = if i + 1 == zones {
            n.checked_sub(used)?
        } else {
            let ideal = n as f64 * (north_area_fraction(b) - north_area_fraction(a)) + carry;
            let c = ideal.round().max(1.0);
            carry = ideal - c;
            c as usize
        };
        if c == 0 {
            return None;
        }
        used += c;
        counts.push(c);
    }
    if used != n {
        return None;
    }
    // a one-cell band away from the pole would be an annulus
    if counts.iter().skip(1).any(|&c| c == 1) {
        return None;
    }
    Some(counts)
}

fn bands_from_counts(counts: &[usize]) -> Vec<Band> {
    let n: usize = counts.iter().sum();
    let mut bands = Vec::with_capacity(counts.len());
    let mut cum = 0usize;
    let mut theta_lo = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let first = cum;
        cum += c;
        let theta_hi = if i + 1 == counts.len() {
            FRAC_PI_2
        } else {
            (1.0 - cum as f64 / n as f64).acos()
        };
        bands.push(Band { theta_lo, theta_hi, sectors: c, first });
        theta_lo = theta_hi;
    }
    bands
}

fn worst_aspect(bands: &[Band]) -> f64 {
    let mut worst: f64 = 1.0;
    for b in bands {
        if b.is_cap() && b.sectors == 1 {
            continue;
        }
        let h = b.theta_hi - b.theta_lo;
        let tc = (0.5 * (b.theta_lo.cos() + b.theta_hi.cos())).acos();
        let w = b.sector_width() * tc.sin();
        worst = worst.max((h / w).max(w / h));
    }
    worst
}

/// Center of cell `(b, sector)`: the equal-area midpoint latitude on the
/// sector's middle meridian, pulled toward the middle of the shrunk cell when
/// the margin leaves only a thin strip. `None` if the shrunk cell misses the
/// middle meridian.
fn center_angles(b: &Band, sector: usize, margin: f64) -> Option<(f64, f64)> {
    if b.is_cap() && b.sectors == 1 {
        return (b.theta_hi - margin >= 0.0).then_some((0.0, 0.0));
    }
    let mut lo = if b.is_cap() { 0.0 } else { b.theta_lo + margin };
    let hi = b.theta_hi - margin;
    if b.sectors > 1 {
        let half = (0.5 * b.sector_width()).sin();
        let s = margin.sin() / half;
        if s > 1.0 {
            return None;
        }
        lo = lo.max(s.asin());
    }
    if hi < lo {
        return None;
    }
    let ideal = (0.5 * (b.theta_lo.cos() + b.theta_hi.cos())).acos();
    let quarter = 0.25 * (hi - lo);
    let theta = ideal.clamp(lo + quarter, hi - quarter);
    let phi = (sector as f64 + 0.5) * b.sector_width();
    Some((theta, phi))
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Whether `(theta, phi)` lies in the shrunk cell `(band, sector)`.
fn in_shrunk(b: &Band, sector: usize, theta: f64, phi: f64, margin: f64, slack: f64) -> bool {
    if !b.is_cap() && theta < b.theta_lo + margin - slack {
        return false;
    }
    if theta > b.theta_hi - margin + slack {
        return false;
    }
    if b.sectors > 1 {
        let w = b.sector_width();
        let sm = margin.sin();
        let st = theta.sin();
        for edge in [sector as f64 * w, (sector + 1) as f64 * w] {
            if st * (phi - edge).sin().abs() < sm - slack {
                return false;
            }
        }
    }
    true
}

fn spherical(v: [f64; 3]) -> (f64, f64) {
    let rho = v[0].hypot(v[1]);
    let theta = rho.atan2(v[2]);
    let mut phi = v[1].atan2(v[0]);
    if phi < 0.0 {
        phi += TAU;
    }
    (theta, phi)
}

impl PatchSet {
    /// Builds the layout for `m` patches on the sphere of radius `kf` with cutoff `r`.
    pub fn new(kf: f64, r: f64, m: usize) -> Result<Self> {
        if m == 0 || m % 2 == 1 {
            return Err(Error::OddPatchCount(m));
        }
        if !(kf > 0.0 && r > 0.0) {
            return Err(Error::InvalidParameter(format!("need kF > 0 and R > 0, got {kf}, {r}")));
        }
        if r >= kf {
            return Err(Error::CorridorTooWide { alpha: 0, margin: FRAC_PI_2 });
        }
        let margin = (r / kf).asin();
        let n = m / 2;

        let mut candidates: Vec<(f64, Vec<Band>)> = candidate_layouts(n)
            .into_iter()
            .map(|c| {
                let bands = bands_from_counts(&c);
                (worst_aspect(&bands), bands)
            })
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())));

        let feasible = |bands: &[Band]| -> Option<usize> {
            for b in bands {
                for s in 0..b.sectors {
                    match center_angles(b, s, margin) {
                        Some((t, p)) if in_shrunk(b, s, t, p, margin, 0.0) => {}
                        _ => return Some(b.first + s),
                    }
                }
            }
            None
        };

        let mut first_failure = None;
        let bands = loop {
            match candidates.first() {
                None => {
                    return Err(Error::CorridorTooWide { alpha: first_failure.unwrap_or(0), margin });
                }
                Some((_, bands)) => match feasible(bands) {
                    None => break candidates.remove(0).1,
                    Some(a) => {
                        first_failure.get_or_insert(a);
                        candidates.remove(0);
                    }
                },
            }
        };

        let mut patches = Vec::with_capacity(m);
        for (bi, b) in bands.iter().enumerate() {
            for s in 0..b.sectors {
                let (t, p) = center_angles(b, s, margin).expect("feasible layout");
                patches.push(Patch { alpha: b.first + s, omega_hat: unit(t, p), band: bi, sector: s, north: true });
            }
        }
        for a in 0..n {
            let p = &patches[a];
            let w = p.omega_hat;
            patches.push(Patch {
                alpha: a + n,
                omega_hat: [-w[0], -w[1], -w[2]],
                band: p.band,
                sector: p.sector,
                north: false,
            });
        }
        Ok(PatchSet { kf, r, m, margin, bands, patches })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn omega_hat(&self, alpha: usize) -> [f64; 3] {
        self.patches[alpha].omega_hat
    }

    /// Patch center `omega_alpha = kF * omega_hat_alpha`.
    pub fn omega(&self, alpha: usize) -> [f64; 3] {
        let w = self.omega_hat(alpha);
        [self.kf * w[0], self.kf * w[1], self.kf * w[2]]
    }

    pub fn antipode(&self, alpha: usize) -> usize {
        (alpha + self.m / 2) % self.m
    }

    pub fn worst_aspect_ratio(&self) -> f64 {
        worst_aspect(&self.bands)
    }

    fn north_lookup(&self, v: [f64; 3]) -> Option<usize> {
        let (theta, phi) = spherical(v);
        let bi = self.bands.iter().position(|b| theta <= b.theta_hi)?;
        let b = &self.bands[bi];
        let s = if b.sectors == 1 {
            0
        } else {
            ((phi / b.sector_width()).floor() as usize).min(b.sectors - 1)
        };
        in_shrunk(b, s, theta, phi, self.margin, 0.0).then_some(b.first + s)
    }

    /// Patch index of a direction, or `None` inside a corridor.
    pub fn patch_of_direction(&self, v: [f64; 3]) -> Option<usize> {
        if v[2] > 0.0 {
            self.north_lookup(v)
        } else if v[2] < 0.0 {
            self.north_lookup([-v[0], -v[1], -v[2]]).map(|a| a + self.m / 2)
        } else {
            None
        }
    }

    /// Patch index of a lattice momentum, or `None` if it lies in no patch.
    pub fn patch_of(&self, q: Momentum3) -> Option<usize> {
        let r = q.norm();
        if r < self.kf - self.r || r > self.kf + self.r {
            return None;
        }
        self.patch_of_direction(q.to_f64())
    }

    /// Whether `omega_hat_alpha` lies in its own shrunk cell.
    pub fn center_inside(&self, alpha: usize) -> bool {
        let p = &self.patches[alpha];
        let w = if p.north { p.omega_hat } else { p.omega_hat.map(|x| -x) };
        let (t, ph) = spherical(w);
        in_shrunk(&self.bands[p.band], p.sector, t, ph, self.margin, 0.0)
    }

    /// Boundary samples of the unshrunk northern cell of `alpha`.
    fn cell_boundary(&self, alpha: usize, per_edge: usize) -> Vec<[f64; 3]> {
        let p = &self.patches[alpha % (self.m / 2)];
        let b = &self.bands[p.band];
        let w = b.sector_width();
        let (p0, p1) = (p.sector as f64 * w, (p.sector + 1) as f64 * w);
        let mut pts = Vec::with_capacity(4 * (per_edge + 1));
        for i in 0..=per_edge {
            let t = i as f64 / per_edge as f64;
            let phi = p0 + t * (p1 - p0);
            let theta = b.theta_lo + t * (b.theta_hi - b.theta_lo);
            pts.push(unit(b.theta_lo, phi));
            pts.push(unit(b.theta_hi, phi));
            if b.sectors > 1 {
                pts.push(unit(theta, p0));
                pts.push(unit(theta, p1));
            }
        }
        pts
    }

    /// Chordal diameter of the unshrunk cell of `alpha` on the sphere of radius `kF`.
    pub fn cell_diameter(&self, alpha: usize) -> f64 {
        let pts = self.cell_boundary(alpha, 48);
        let mut best: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let d = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
                best = best.max(d);
            }
        }
        self.kf * best.sqrt()
    }

    /// `max_alpha diam * sqrt(M) / kF`; bounded for a well-shaped layout.
    pub fn diameter_constant(&self) -> f64 {
        let n = self.m / 2;
        (0..n).map(|a| self.cell_diameter(a)).fold(0.0, f64::max) * (self.m as f64).sqrt() / self.kf
    }

    /// Fraction of the unit sphere covered by shrunk cells, on a `res x 4 res` grid.
    pub fn fill_fraction(&self, res: usize) -> f64 {
        let mut hit = 0usize;
        let nphi = 4 * res;
        for i in 0..res {
            let u = (i as f64 + 0.5) / res as f64;
            let st = (1.0 - u * u).sqrt();
            for j in 0..nphi {
                let phi = (j as f64 + 0.5) / nphi as f64 * TAU;
                if self.north_lookup([st * phi.cos(), st * phi.sin(), u]).is_some() {
                    hit += 1;
                }
            }
        }
        hit as f64 / (res * nphi) as f64
    }

    /// Grid samples of the shrunk cell of `alpha` on the unit sphere.
    pub fn shrunk_samples(&self, alpha: usize, res: usize) -> Vec<[f64; 3]> {
        let n = self.m / 2;
        let p = &self.patches[alpha % n];
        let b = &self.bands[p.band];
        let w = b.sector_width();
        let lo = if b.is_cap() { 0.0 } else { b.theta_lo + self.margin };
        let hi = b.theta_hi - self.margin;
        let mut out = Vec::new();
        if hi < lo {
            return out;
        }
        for i in 0..=res {
            let theta = lo + (hi - lo) * i as f64 / res as f64;
            for j in 0..=res {
                let phi = p.sector as f64 * w + w * j as f64 / res as f64;
                if in_shrunk(b, p.sector, theta, phi, self.margin, 0.0) {
                    let v = unit(theta, phi);
                    out.push(if alpha >= n { v.map(|x| -x) } else { v });
                }
            }
        }
        out
    }

    /// Smallest chordal distance, at radius `kF`, between samples of distinct patches.
    pub fn min_corridor_width(&self, res: usize) -> f64 {
        let samples: Vec<Vec<[f64; 3]>> = (0..self.m).map(|a| self.shrunk_samples(a, res)).collect();
        let mut best = f64::INFINITY;
        for a in 0..self.m {
            for b in a + 1..self.m {
                for x in &samples[a] {
                    for y in &samples[b] {
                        let d = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
                        best = best.min(d);
                    }
                }
            }
        }
        self.kf * best.sqrt()
    }

    /// `I_k^+` in ascending order and `I_k^-` as the antipodes of `I_k^+` in the same order.
    pub fn index_sets(&self, k: Momentum3, belt: f64) -> (Vec<usize>, Vec<usize>) {
        let plus: Vec<usize> = (0..self.m).filter(|&a| k.dot_f64(&self.omega_hat(a)) >= belt).collect();
        let minus = plus.iter().map(|&a| self.antipode(a)).collect();
        (plus, minus)
    }

    /// Assigns every shell lattice point to its patch.
    pub fn assign_lattice(&self, geom: &FermiGeometry) -> PatchLattice {
        let mut owner = HashMap::new();
        let mut particles = vec![Vec::new(); self.m];
        let mut holes = vec![Vec::new(); self.m];
        for &p in geom.shell() {
            if let Some(a) = self.patch_of(p) {
                owner.insert(p, a);
                if geom.in_ball(p) {
                    holes[a].push(p);
                } else {
                    particles[a].push(p);
                }
            }
        }
        PatchLattice { owner, particles, holes, kf_bound: geom.kf_bound() }
    }
}

/// Lattice points of each patch split into particles (outside the ball) and holes.
#[derive(Debug, Clone)]
pub struct PatchLattice {
    owner: HashMap<Momentum3, usize>,
    particles: Vec<Vec<Momentum3>>,
    holes: Vec<Vec<Momentum3>>,
    kf_bound: i64,
}

impl PatchLattice {
    pub fn owner(&self, p: Momentum3) -> Option<usize> {
        self.owner.get(&p).copied()
    }

    pub fn particles(&self, alpha: usize) -> &[Momentum3] {
        &self.particles[alpha]
    }

    pub fn holes(&self, alpha: usize) -> &[Momentum3] {
        &self.holes[alpha]
    }

    fn is_hole_in(&self, h: Momentum3, alpha: usize) -> bool {
        h.norm_sq() <= self.kf_bound && self.owner(h) == Some(alpha)
    }

    /// `n_{alpha,k}^2`: particle-hole pairs in patch `alpha` separated by `k`.
    ///
    /// With `sign = +1` pairs are `(p, p - k)`, with `sign = -1` they are `(p, p + k)`.
    pub fn pair_count(&self, alpha: usize, k: Momentum3, sign: i8) -> u64 {
        let step = if sign >= 0 { -k } else { k };
        self.particles[alpha].iter().filter(|&&p| self.is_hole_in(p + step, alpha)).count() as u64
    }

    pub fn patch_count(&self) -> usize {
        self.particles.len()
    }

    /// Every assigned lattice point with its patch, sorted by momentum.
    pub fn members(&self) -> Vec<(Momentum3, usize)> {
        let mut v: Vec<_> = self.owner.iter().map(|(&k, &a)| (k, a)).collect();
        v.sort();
        v
    }

    /// Membership table with columns `kx,ky,kz,alpha`.
    pub fn membership_csv(&self) -> String {
        let mut s = String::from("kx,ky,kz,alpha\n");
        for (k, a) in self.members() {
            s.push_str(&format!("{},{},{},{}\n", k.x, k.y, k.z, a));
        }
        s
    }
}

/// Outcome of counting pairs for one `k`, with zero-count patches removed in antipodal pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairData {
    pub k: Momentum3,
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    pub counts: Vec<u64>,
    pub pruned: Vec<usize>,
}

/// Counts pairs over `I_k^+` (which equal those of the antipodes in `I_k^-`).
pub fn pair_data(ps: &PatchSet, lat: &PatchLattice, k: Momentum3, belt: f64) -> PairData {
    let (plus, _) = ps.index_sets(k, belt);
    let mut kept = Vec::new();
    let mut counts = Vec::new();
    let mut pruned = Vec::new();
    for a in plus {
        let c = lat.pair_count(a, k, 1);
        if c == 0 {
            pruned.push(a);
        } else {
            kept.push(a);
            counts.push(c);
        }
    }
    let minus = kept.iter().map(|&a| ps.antipode(a)).collect();
    PairData { k, plus: kept, minus, counts, pruned }
}

/// Maximal angle between `omega_hat` and any direction of its shrunk cell.
pub fn angular_radius(ps: &PatchSet, alpha: usize) -> f64 {
    let w = ps.omega_hat(alpha);
    ps.shrunk_samples(alpha, 24)
        .iter()
        .map(|v| (v[0] * w[0] + v[1] * w[1] + v[2] * w[2]).clamp(-1.0, 1.0).acos())
        .fold(0.0, f64::max)
}
