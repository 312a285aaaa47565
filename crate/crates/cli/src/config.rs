//! Run configuration, read from TOML.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use fermi_rpa::{InteractionFourier, Momentum3, QuadratureSpec, Routes};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Occupation,
    Scan,
    SweepN,
    QConvergence,
    DvCompare,
    GeometryAudit,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Occupation => "occupation",
            Mode::Scan => "scan",
            Mode::SweepN => "sweep-n",
            Mode::QConvergence => "q-convergence",
            Mode::DvCompare => "dv-compare",
            Mode::GeometryAudit => "geometry-audit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub routes: RouteSection,
    #[serde(default)]
    pub q: QSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub dv: DvSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { kf: 8.0, m: None, delta: None, epsilon: None }
    }
}

/// Exactly one of `preset`, `radial` or `explicit` is used, in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// `(|k|^2, V)` pairs; squared norms absent from the table get 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radial: Vec<(i64, f64)>,
    /// `(kx, ky, kz, V)`; both `k` and `-k` must be listed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub explicit: Vec<(i64, i64, i64, f64)>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection { preset: Some("const:1,2.5".into()), radius: None, radial: vec![], explicit: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSection {
    pub matrix: bool,
    pub series: bool,
    pub integral: bool,
    pub asymptotic: bool,
    pub series_terms: usize,
}

impl Default for RouteSection {
    fn default() -> Self {
        RouteSection { matrix: true, series: true, integral: true, asymptotic: true, series_terms: 25 }
    }
}

impl RouteSection {
    pub fn routes(&self) -> Routes {
        Routes { matrix: self.matrix, series: self.series, integral: self.integral, asymptotic: self.asymptotic }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QSection {
    #[serde(default)]
    pub list: Vec<[i64; 3]>,
    /// Evaluate the whole shell in `occupation` mode as well.
    #[serde(default)]
    pub shell: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kf: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { kf: vec![5.0, 8.0, 12.0, 17.0, 25.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvSection {
    pub kf: Vec<f64>,
    /// Offsets `|q| - kF`.
    pub offsets: Vec<f64>,
    pub e: f64,
    pub r: f64,
}

impl Default for DvSection {
    fn default() -> Self {
        DvSection { kf: vec![50.0, 100.0], offsets: vec![-1.5, -0.5, 0.5, 1.5], e: 1.0, r: 2.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub mu_max: f64,
    pub mu_points: usize,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection { mu_max: 10.0, mu_points: 400 }
    }
}

impl ConvergenceSection {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.mu_points.max(1);
        (0..n).map(|i| self.mu_max * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl From<QuadSection> for QuadratureSpec {
    fn from(q: QuadSection) -> Self {
        QuadratureSpec { abs_tol: q.abs_tol, rel_tol: q.rel_tol, max_subdivisions: q.max_subdivisions }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
    /// Extra files written by `geometry-audit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quadrature.map_or_else(QuadratureSpec::tight, Into::into)
    }

    pub fn preset(&self) -> Result<Option<Preset>, String> {
        self.potential.preset.as_deref().map(str::parse).transpose()
    }

    /// The lattice interaction for a configuration with Fermi momentum `kf`.
    pub fn interaction(&self, kf: f64, kappa: f64, hbar: f64) -> Result<InteractionFourier, String> {
        let p = &self.potential;
        let v = if let Some(preset) = self.preset()? {
            preset.interaction(kf, kappa, hbar)
        } else if !p.radial.is_empty() {
            let radius = p.radius.ok_or("potential.radius is required with a radial table")?;
            let table: BTreeMap<i64, f64> = p.radial.iter().copied().collect();
            InteractionFourier::radial(radius, |k| table.get(&((k * k).round() as i64)).copied().unwrap_or(0.0))
        } else if !p.explicit.is_empty() {
            let radius = p.radius.ok_or("potential.radius is required with an explicit list")?;
            let entries = p.explicit.iter().map(|&(x, y, z, v)| (Momentum3::new(x, y, z), v)).collect();
            InteractionFourier::new(radius, entries)
        } else {
            return Err("no potential given".into());
        };
        v.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `V = v` on `|k| < R`.
    Const { v: f64, r: f64 },
    /// `V = 8 kappa e^2 hbar kF^2 / (3 pi |k|^2)` on `|k| < R`.
    CoulombSr { e2: f64, r: f64 },
}

impl Preset {
    pub fn radius(&self) -> f64 {
        match *self {
            Preset::Const { r, .. } | Preset::CoulombSr { r, .. } => r,
        }
    }

    pub fn interaction(&self, kf: f64, kappa: f64, hbar: f64) -> fermi_rpa::Result<InteractionFourier> {
        match *self {
            Preset::Const { v, r } => InteractionFourier::constant(v, r),
            Preset::CoulombSr { e2, r } => {
                let c = 8.0 * kappa * e2 * hbar * kf * kf / (3.0 * PI);
                InteractionFourier::radial(r, |k| c / (k * k))
            }
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, args) = s.split_once(':').ok_or_else(|| format!("potential preset `{s}` lacks `name:args`"))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad number `{a}` in potential preset `{s}`")))
            .collect::<Result<_, _>>()?;
        let [a, r] = nums[..] else {
            return Err(format!("potential preset `{s}` needs exactly two numbers"));
        };
        if !(r.is_finite() && r > 0.0) {
            return Err(format!("potential radius must be positive in `{s}`"));
        }
        match name {
            "const" => Ok(Preset::Const { v: a, r }),
            "coulomb-sr" => Ok(Preset::CoulombSr { e2: a, r }),
            _ => Err(format!("unknown potential preset `{name}`")),
        }
    }
}
