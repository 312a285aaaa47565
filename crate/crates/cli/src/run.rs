//! Mode dispatch.

use std::fmt;

use fermi_rpa::lattice::fermi_ball_count;
use fermi_rpa::occupation::sup_by_side;
use fermi_rpa::thermo::{dv_nq, thermo_nq};
use fermi_rpa::{
    closed_shell_params, quasiparticle_weight, DvSide, Error, FermiGeometry, Model, ModelParams, OccupationResult,
    PatchSet, Route, ThermoParams,
};

use crate::config::{Mode, Preset, RunConfig};
use crate::table::{Cell, Table};

#[derive(Debug)]
pub enum RunError {
    /// Exit code 1.
    Config(String),
    /// Exit code 2; `op` names the failing operation.
    Numeric { op: String, source: Error },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric { .. } => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "invalid config: {m}"),
            RunError::Numeric { op, source } => write!(f, "numeric failure in {op}: {source}"),
        }
    }
}

/// Setup errors are configuration problems; anything else is numeric.
fn classify(op: impl Into<String>) -> impl FnOnce(Error) -> RunError {
    let op = op.into();
    move |e| match e {
        Error::InvalidParameter(_)
        | Error::AsymmetricInteraction { .. }
        | Error::InteractionOutsideCutoff { .. }
        | Error::OddPatchCount(_)
        | Error::CorridorTooWide { .. } => RunError::Config(format!("{op}: {e}")),
        source => RunError::Numeric { op, source },
    }
}

/// Result of a run: the main table, a short summary, and extra files.
#[derive(Debug, Default)]
pub struct Output {
    pub table: Option<Table>,
    pub summary: Vec<String>,
    pub extra_files: Vec<(String, String)>,
}

pub fn params_for(cfg: &RunConfig, kf: f64) -> Result<ModelParams, RunError> {
    if !(kf.is_finite() && kf > 0.0) {
        return Err(RunError::Config(format!("kF must be positive, got {kf}")));
    }
    let n = fermi_ball_count(kf) as f64;
    let hbar = n.powf(-1.0 / 3.0);
    let vhat = cfg.interaction(kf, kf * hbar, hbar).map_err(RunError::Config)?;
    closed_shell_params(kf, cfg.model.m, cfg.model.delta, vhat).map_err(classify("model parameters"))
}

fn model_for(cfg: &RunConfig, kf: f64) -> Result<Model, RunError> {
    let p = params_for(cfg, kf)?;
    Model::with_quadrature(p, cfg.quadrature(), cfg.model.epsilon).map_err(classify(format!("model setup at kF={kf}")))
}

pub fn run(mode: Mode, cfg: &RunConfig) -> Result<Output, RunError> {
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(RunError::Config(format!("config is for mode `{m}`, not `{mode}`")));
        }
    }
    match mode {
        Mode::Occupation => occupation(cfg, false),
        Mode::Scan => occupation(cfg, true),
        Mode::SweepN => sweep_n(cfg),
        Mode::QConvergence => q_convergence(cfg),
        Mode::DvCompare => dv_compare(cfg),
        Mode::GeometryAudit => geometry_audit(cfg),
    }
}

pub const OCCUPATION_COLUMNS: [&str; 14] = [
    "qx",
    "qy",
    "qz",
    "alpha",
    "inside",
    "in_q_eps",
    "n_contrib",
    "nq_matrix",
    "nq_series",
    "nq_integral",
    "nq_asymptotic",
    "diag_eii",
    "diag_eiii",
    "max_route_disagreement",
];

fn occupation_row(r: &OccupationResult) -> Vec<Cell> {
    let [x, y, z] = r.q.to_array();
    vec![
        x.into(),
        y.into(),
        z.into(),
        r.alpha_q.into(),
        r.inside_fermi.into(),
        r.in_q_eps.into(),
        r.contributions.len().into(),
        r.nq_matrix.into(),
        r.nq_series.into(),
        r.nq_integral.into(),
        r.nq_asymptotic.into(),
        r.diag_eii.into(),
        r.diag_eiii.into(),
        r.max_route_disagreement().into(),
    ]
}

fn occupation(cfg: &RunConfig, scan: bool) -> Result<Output, RunError> {
    let model = model_for(cfg, cfg.model.kf)?;
    let routes = cfg.routes.routes();
    let terms = cfg.routes.series_terms;
    let results = if scan || cfg.q.shell {
        model.scan(routes, terms).map_err(classify("shell scan"))?
    } else {
        if cfg.q.list.is_empty() {
            return Err(RunError::Config("occupation mode needs q.list or q.shell = true".into()));
        }
        cfg.q
            .list
            .iter()
            .map(|&[x, y, z]| {
                let q = fermi_rpa::Momentum3::new(x, y, z);
                model.evaluate(q, routes, terms).map_err(classify(format!("occupation at q = {q}")))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut table = Table::new(&OCCUPATION_COLUMNS);
    for r in &results {
        table.push(occupation_row(r));
    }
    let p = &model.params;
    let mut summary = vec![format!("kF = {} N = {} M = {} kappa = {:.6}", p.kf, p.n, p.m, p.kappa)];
    if routes.matrix {
        summary.push(format!("Z (matrix route) = {:.16e}", quasiparticle_weight(&results, Route::Matrix)));
    }
    Ok(Output { table: Some(table), summary, extra_files: vec![] })
}

pub const SWEEP_COLUMNS: [&str; 8] = ["kf", "N", "kappa", "M", "sup_in", "sup_out", "Z", "max_route_disagreement"];

fn sweep_n(cfg: &RunConfig) -> Result<Output, RunError> {
    if cfg.sweep.kf.is_empty() {
        return Err(RunError::Config("sweep.kf is empty".into()));
    }
    let mut routes = cfg.routes.routes();
    routes.matrix = true;
    let mut table = Table::new(&SWEEP_COLUMNS);
    for &kf in &cfg.sweep.kf {
        let model = model_for(cfg, kf)?;
        let res = model.scan(routes, cfg.routes.series_terms).map_err(classify(format!("shell scan at kF={kf}")))?;
        let (sin, sout) = sup_by_side(&res, Route::Matrix);
        let gap = res.iter().map(OccupationResult::max_route_disagreement).fold(0.0, f64::max);
        let p = &model.params;
        table.push(vec![
            kf.into(),
            p.n.into(),
            p.kappa.into(),
            p.m.into(),
            sin.into(),
            sout.into(),
            quasiparticle_weight(&res, Route::Matrix).into(),
            gap.into(),
        ]);
    }
    Ok(Output { table: Some(table), ..Default::default() })
}

pub const CONVERGENCE_COLUMNS: [&str; 6] = ["kx", "ky", "kz", "vhat", "index_size", "max_gap"];

fn q_convergence(cfg: &RunConfig) -> Result<Output, RunError> {
    let model = model_for(cfg, cfg.model.kf)?;
    let grid = cfg.convergence.grid();
    let mut table = Table::new(&CONVERGENCE_COLUMNS);
    let mut worst: f64 = 0.0;
    for kb in model.kernels() {
        let gap = model.qk_vs_q0_report(kb.k, &grid);
        worst = worst.max(gap.unwrap_or(0.0));
        let [x, y, z] = kb.k.to_array();
        table.push(vec![
            x.into(),
            y.into(),
            z.into(),
            model.params.vhat.value(kb.k).into(),
            kb.size().into(),
            gap.into(),
        ]);
    }
    let summary = vec![format!("max |Q_k - Q_k^(0)| over {} momenta = {worst:.6e}", table.rows.len())];
    Ok(Output { table: Some(table), summary, extra_files: vec![] })
}

pub const DV_COLUMNS: [&str; 7] = ["kf", "offset", "q_norm", "side", "dv_sr", "thermo", "ratio"];

fn dv_compare(cfg: &RunConfig) -> Result<Output, RunError> {
    // a coulomb-sr preset overrides the [dv] coupling and radius
    let (e, r) = match cfg.preset().map_err(RunError::Config)? {
        Some(Preset::CoulombSr { e2, r }) if e2 >= 0.0 => (e2.sqrt(), r),
        Some(Preset::CoulombSr { .. }) => return Err(RunError::Config("coulomb-sr needs e2 >= 0".into())),
        _ => (cfg.dv.e, cfg.dv.r),
    };
    let mut table = Table::new(&DV_COLUMNS);
    for &kf in &cfg.dv.kf {
        let mut tp = ThermoParams::matched_coulomb(kf, r, e);
        if let Some(q) = cfg.quadrature {
            tp.quad = q.into();
        }
        for &off in &cfg.dv.offsets {
            if off == 0.0 || off.abs() >= r {
                return Err(RunError::Config(format!("dv offset {off} must satisfy 0 < |offset| < R = {r}")));
            }
            let q = kf + off;
            let side = if off > 0.0 { DvSide::Outside } else { DvSide::Inside };
            let dv = dv_nq(q, side, &tp, Some(r)).map_err(classify(format!("dv_nq at kF={kf}, |q|={q}")))?;
            let th = thermo_nq(q, &tp).map_err(classify(format!("thermo_nq at kF={kf}, |q|={q}")))?;
            let label = if off > 0.0 { "outside" } else { "inside" };
            table.push(vec![kf.into(), off.into(), q.into(), label.into(), dv.into(), th.into(), (dv / th).into()]);
        }
    }
    Ok(Output { table: Some(table), ..Default::default() })
}

pub const AUDIT_COLUMNS: [&str; 11] = [
    "alpha",
    "band",
    "sector",
    "north",
    "omega_x",
    "omega_y",
    "omega_z",
    "particles",
    "holes",
    "cell_diameter",
    "center_inside",
];

fn geometry_audit(cfg: &RunConfig) -> Result<Output, RunError> {
    let p = params_for(cfg, cfg.model.kf)?;
    let r = p.r();
    let geom = FermiGeometry::new(p.kf, r).map_err(classify("geometry"))?;
    let ps = PatchSet::new(p.kf, r, p.m).map_err(classify("patch layout"))?;
    let lat = ps.assign_lattice(&geom);
    let mut table = Table::new(&AUDIT_COLUMNS);
    for patch in ps.patches() {
        let a = patch.alpha;
        let [x, y, z] = patch.omega_hat;
        table.push(vec![
            a.into(),
            patch.band.into(),
            patch.sector.into(),
            patch.north.into(),
            x.into(),
            y.into(),
            z.into(),
            lat.particles(a).len().into(),
            lat.holes(a).len().into(),
            ps.cell_diameter(a).into(),
            ps.center_inside(a).into(),
        ]);
    }
    let summary = vec![
        format!("kF = {} N = {} M = {} R = {r} margin = {:.6}", p.kf, p.n, p.m, ps.margin),
        format!("min corridor width = {:.6} (2R = {})", ps.min_corridor_width(30), 2.0 * r),
        format!("diameter constant = {:.6}", ps.diameter_constant()),
        format!("fill fraction = {:.6}", ps.fill_fraction(200)),
        format!("worst aspect ratio = {:.6}", ps.worst_aspect_ratio()),
        format!(
            "M within [N^(2 delta), N^(2/3 - 2 delta)] = [{:.3}, {:.3}]: {}",
            p.patch_count_check.lower, p.patch_count_check.upper, p.patch_count_check.within
        ),
    ];
    let mut extra_files = vec![];
    if let Some(path) = &cfg.output.membership {
        extra_files.push((path.clone(), lat.membership_csv()));
    }
    if let Some(path) = &cfg.output.kernels {
        let model = model_for(cfg, cfg.model.kf)?;
        let dump: String = model.kernels().map(|kb| kb.dump()).collect();
        extra_files.push((path.clone(), dump));
    }
    Ok(Output { table: Some(table), summary, extra_files })
}
