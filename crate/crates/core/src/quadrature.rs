//! Adaptive Gauss-Kronrod quadrature on finite and semi-infinite intervals.
//!
//! Uses the 10-point Gauss / 21-point Kronrod pair with a global error queue:
//! the interval with the largest error estimate is always split next, and
//! ties are broken by position so results are reproducible.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208292213974,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Tolerances and limits for one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { abs_tol: 1e-10, rel_tol: 1e-9, max_subdivisions: 1 << 14 }
    }
}

impl QuadratureSpec {
    /// Tight tolerances used when comparing evaluation routes.
    pub fn tight() -> Self {
        QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-13, max_subdivisions: 1 << 14 }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff: f64,
}

fn gk21(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let eps = 50.0 * f64::EPSILON;
    let roundoff = eps * resabs;
    if resabs > f64::MIN_POSITIVE / eps {
        err = err.max(roundoff);
    }
    Segment { a, b, value, error: err, roundoff }
}

fn adaptive(mut f: impl FnMut(f64) -> f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<Integral> {
    let mut segs: Vec<Segment> = breaks.windows(2).map(|w| gk21(&mut f, w[0], w[1])).collect();
    let mut subdivisions = segs.len();
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureNonConvergence { value, error, subdivisions });
        }
        // splitting cannot push the estimate below the accumulated roundoff floor
        let floor: f64 = segs.iter().map(|s| s.roundoff).sum();
        let target = spec.abs_tol.max(spec.rel_tol * value.abs()).max(2.0 * floor);
        if error <= target {
            return Ok(Integral { value, error, subdivisions });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence { value, error, subdivisions });
        }
        let mut worst = 0;
        for (i, s) in segs.iter().enumerate() {
            if s.error > segs[worst].error {
                worst = i;
            }
        }
        let s = segs[worst];
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return Err(Error::QuadratureNonConvergence { value, error, subdivisions });
        }
        segs[worst] = gk21(&mut f, s.a, mid);
        segs.insert(worst + 1, gk21(&mut f, mid, s.b));
        subdivisions += 1;
    }
}

fn sorted_breaks(a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = interior.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    pts
}

/// Integrates `f` over `[a, b]`.
pub fn integrate_interval(f: impl FnMut(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    integrate_interval_with_breaks(f, a, b, &[], spec)
}

/// Integrates `f` over `[a, b]`, splitting first at the given interior points.
pub fn integrate_interval_with_breaks(
    f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, subdivisions: 0 });
    }
    if a > b {
        let r = integrate_interval_with_breaks(f, b, a, breaks, spec)?;
        return Ok(Integral { value: -r.value, ..r });
    }
    adaptive(f, &sorted_breaks(a, b, breaks), spec)
}

/// Integrates `f` over `[0, inf)` through the map `mu = t / (1 - t)`.
///
/// `breaks` are points in `mu` where the integrand changes scale; they are
/// mapped into `t` and used as initial subdivision points.
pub fn integrate_semi_infinite(mut f: impl FnMut(f64) -> f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<Integral> {
    let tb: Vec<f64> = breaks
        .iter()
        .filter(|&&m| m.is_finite() && m > 0.0)
        .map(|&m| m / (1.0 + m))
        .collect();
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let mu = t / s;
        let v = f(mu) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(g, &sorted_breaks(0.0, 1.0, &tb), spec)
}
