//! One function per command, each producing a [`Report`].

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dynperc::correlations::{
    alpha_zero, d_of_alpha, d_of_alpha_exact, fitting_torus, geometric_grid, correlation_curve, scan_exceptional,
    second_moment_integral, CorrelationCurve,
};
use dynperc::dynamics::{build_kernel, duality_check, Dynamics};
use dynperc::lattice::{AnnulusKind, CellId, Length, Model, Region, Side};
use dynperc::percolation::{estimate_alpha, estimate_event, fit_loglog, ArmSpec, ClusterEvent, Colour, Observable};
use dynperc::spectral_exact::{
    annulus_bound_check_measure, jp_identity_check, named_function, random_tiny_structure, walsh_transform,
    BooleanTable,
};
use dynperc::spectral_mc::{clustering_profile, conditioned_fourarm};
use dynperc::{Error, Estimate, RngStream};

use crate::config::{ConfigError, Command, ExperimentConfig, Geometry, KernelChoice};
use crate::output::{Cell, Report};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(Error),
    Io(std::io::Error),
}

impl RunError {
    /// 2 for invalid configurations, 3 for resource caps, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(Error::SizeCap { .. }) => 3,
            RunError::Core(
                Error::InvalidParameter(_)
                | Error::Geometry(_)
                | Error::InvalidStructure(_)
                | Error::OutOfDomain(_)
                | Error::DivergentHead(_)
                | Error::RegionMismatch(_)
                | Error::Overlap(_)
                | Error::Unsupported(_),
            ) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type Run = Result<Report, RunError>;

fn cfg_err(field: &str, message: impl Into<String>) -> RunError {
    RunError::Config(ConfigError { field: field.into(), line: None, message: message.into() })
}

fn length(field: &str, x: f64) -> Result<Length, RunError> {
    Length::from_f64(x).map_err(|e| cfg_err(field, e.to_string()))
}

fn est(e: &Estimate) -> [Cell; 2] {
    [e.mean.into(), e.std_error.into()]
}

fn stream(cfg: &ExperimentConfig) -> RngStream {
    RngStream::new(cfg.seed, 0)
}

pub fn run(cfg: &ExperimentConfig) -> Run {
    cfg.validate()?;
    match cfg.command {
        Command::Arm => arm(cfg),
        Command::Correlate => correlate(cfg),
        Command::Integrate => integrate(cfg),
        Command::SpectralExact => spectral_exact(cfg),
        Command::SpectralMc => spectral_mc(cfg),
        Command::Duality => duality(cfg),
        Command::Scan => scan(cfg),
        Command::StructureCheck => structure_check(cfg),
        Command::JpCheck => jp_check(cfg),
        Command::Constants => constants(),
    }
}

fn arm_spec(cfg: &ExperimentConfig) -> (ArmSpec, String) {
    let first = if cfg.first_open { Colour::Open } else { Colour::Closed };
    match cfg.geometry {
        Geometry::Plane => (ArmSpec::plane(cfg.k), format!("alpha_{}", cfg.k)),
        Geometry::Half => (ArmSpec::half_plane(cfg.k, cfg.side, first), format!("alpha_{}_halfplane", cfg.k)),
        Geometry::Quarter => (
            ArmSpec::quarter_plane(cfg.k, Side::Right, Side::Upper, first),
            format!("alpha_{}_quarterplane", cfg.k),
        ),
    }
}

fn arm(cfg: &ExperimentConfig) -> Run {
    let (spec, name) = arm_spec(cfg);
    let stderr = format!("{name}_stderr");
    let mut rep = Report::new(&["r", "R", &name, &stderr]);
    let r = length("r", cfg.r)?;
    let mut points = Vec::new();
    for (j, &big) in cfg.big_r.iter().enumerate() {
        let e = estimate_alpha(cfg.model, &spec, r, length("R", big)?, 0.5, cfg.samples, stream(cfg).substream(j as u64))?;
        points.push((big, e.mean));
        let [m, s] = est(&e);
        rep.row(vec![cfg.r.into(), big.into(), m, s]);
    }
    if let Some(fit) = fit_loglog(&points) {
        rep.note("loglog_slope", fit.slope);
        rep.note("loglog_rms_residual", fit.rms_residual());
    }
    Ok(rep)
}

fn torus_for(cfg: &ExperimentConfig, r: Length, default_side: u32) -> Result<Arc<Region>, RunError> {
    let region = match cfg.l {
        0 if default_side > 0 => Region::torus(cfg.model, default_side)?,
        0 => fitting_torus(cfg.model, r)?,
        l => Region::torus(cfg.model, l)?,
    };
    Ok(Arc::new(region))
}

fn dynamics_on(cfg: &ExperimentConfig, region: &Arc<Region>) -> Result<Dynamics, RunError> {
    Ok(match cfg.kernel {
        KernelChoice::Exclusion(family) => Dynamics::exclusion(build_kernel(family, region.clone())?),
        KernelChoice::Iid => Dynamics::iid(0.5),
    })
}

fn correlate(cfg: &ExperimentConfig) -> Run {
    let big = length("R", cfg.big_r[0])?;
    let region = torus_for(cfg, big, 0)?;
    let dynamics = dynamics_on(cfg, &region)?;
    let grid = geometric_grid(cfg.t_min, true).map_err(|e| cfg_err("t_min", e.to_string()))?;
    let f = Observable::event(ClusterEvent::one_arm(cfg.model, big));
    let curve = correlation_curve(&f, &dynamics, &region, &grid, cfg.samples, stream(cfg))?;
    let mut rep = Report::new(&["t", "fR_corr", "fR_corr_stderr"]);
    for (t, v) in curve.t_grid.iter().zip(&curve.values) {
        let [m, s] = est(v);
        rep.row(vec![(*t).into(), m, s]);
    }
    rep.note("torus_side", u64::from(region.torus_side().unwrap_or(0)));
    rep.note("dynamics", curve.dynamics);
    Ok(rep)
}

/// Reads a curve written by `correlate`: the first three columns are t,
/// mean and standard error.
pub fn read_curve(path: &std::path::Path) -> Result<CorrelationCurve, RunError> {
    let bad = |m: String| cfg_err("input", format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let (mut t_grid, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |k: usize| -> Result<f64, RunError> {
            rec.get(k)
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", i + 1, k + 1)))
        };
        t_grid.push(num(0)?);
        values.push(Estimate { mean: num(1)?, std_error: num(2)?, n_samples: 0, seed: RngStream::new(0, 0) });
    }
    Ok(CorrelationCurve { t_grid, values, dynamics: String::new(), f: String::new() })
}

fn integrate(cfg: &ExperimentConfig) -> Run {
    let curve = read_curve(cfg.input.as_deref().expect("validated"))?;
    let mut rep = Report::new(&["gamma", "integral", "error", "head", "quadrature_error", "mc_error"]);
    for &g in &cfg.gamma {
        let i = second_moment_integral(&curve, g)?;
        rep.row(vec![g.into(), i.value.into(), i.error.into(), i.head.into(), i.quadrature_error.into(), i.mc_error.into()]);
    }
    Ok(rep)
}

fn table_for(cfg: &ExperimentConfig) -> Result<BooleanTable, RunError> {
    Ok(named_function(cfg.model, &cfg.function)?)
}

fn spectral_exact(cfg: &ExperimentConfig) -> Run {
    let h = table_for(cfg)?;
    let m = walsh_transform(&h)?;
    let mut rep = Report::new(&["subset", "size", "coefficient", "weight"]);
    for (mask, size, c, w) in m.rows() {
        rep.row(vec![format!("{mask:#x}").into(), u64::from(size).into(), c.into(), w.into()]);
    }
    let cells: Vec<String> = h.cells().iter().map(|c| format!("{}:{}", c.a, c.b)).collect();
    rep.note("cells", cells.join(" "));
    rep.note("mean", h.mean());
    rep.note("total_mass", m.total_mass());
    Ok(rep)
}

fn spectral_mc(cfg: &ExperimentConfig) -> Run {
    match cfg.quantity.as_str() {
        "profile" => {
            let big_f = cfg.big_r[0];
            let big = length("R", big_f)?;
            let r0: Vec<Length> = if cfg.r0.is_empty() {
                [0.125, 0.25, 0.5, 1.0]
                    .iter()
                    .map(|q| Length::from_f64((q * big_f * 24.0).round() / 24.0))
                    .chain([Ok(big + Length::from_int(2))])
                    .collect::<Result<_, _>>()?
            } else {
                cfg.r0.iter().map(|&x| length("r0", x)).collect::<Result<_, _>>()?
            };
            let curve = clustering_profile(cfg.model, big, &r0, cfg.samples, stream(cfg).substream(0))?;
            let mut rep = Report::new(&["r0", "Q_inside", "Q_inside_stderr"]);
            for (r, e) in &curve {
                let [m, s] = est(e);
                rep.row(vec![r.to_f64().into(), m, s]);
            }
            let a1 = estimate_event(&ClusterEvent::one_arm(cfg.model, big), 0.5, cfg.samples, stream(cfg).substream(1));
            rep.note("alpha_1", a1.mean);
            rep.note("alpha_1_stderr", a1.std_error);
            Ok(rep)
        }
        "fourarm" => {
            let mut rep =
                Report::new(&["r", "R", "alpha_4", "alpha_4_stderr", "beta4_halfplane", "beta4_halfplane_stderr"]);
            let r = length("r", cfg.r)?;
            for (j, &big) in cfg.big_r.iter().enumerate() {
                let f = conditioned_fourarm(cfg.model, r, length("R", big)?, cfg.side, cfg.samples, stream(cfg).substream(j as u64))?;
                let [a, sa] = est(&f.alpha4);
                let [b, sb] = est(&f.beta4);
                rep.row(vec![cfg.r.into(), big.into(), a, sa, b, sb]);
            }
            Ok(rep)
        }
        q => Err(cfg_err("quantity", format!("`{q}` is not profile or fourarm"))),
    }
}

fn duality(cfg: &ExperimentConfig) -> Run {
    let KernelChoice::Exclusion(family) = cfg.kernel else {
        return Err(cfg_err("kernel", "duality needs an exclusion kernel"));
    };
    let region = torus_for(cfg, Length::ZERO, 8)?;
    let kernel = build_kernel(family, region)?;
    let mut rep = Report::new(&["t", "E_chiS_chiS", "E_chiS_chiS_stderr", "K_t", "K_t_stderr", "sigma_distance"]);
    for (j, &t) in cfg.t.iter().enumerate() {
        let (lhs, rhs) = duality_check(&cfg.cells, &cfg.cells, &kernel, t, cfg.samples, stream(cfg).substream(j as u64))?;
        let [a, sa] = est(&lhs);
        let [b, sb] = est(&rhs);
        rep.row(vec![t.into(), a, sa, b, sb, lhs.sigma_distance(&rhs).into()]);
    }
    Ok(rep)
}

fn scan(cfg: &ExperimentConfig) -> Run {
    let big = length("R", cfg.big_r[0])?;
    let region = torus_for(cfg, big, 0)?;
    let dynamics = dynamics_on(cfg, &region)?;
    let base = stream(cfg).substream(0);
    let records = (0..cfg.instances)
        .into_par_iter()
        .map(|i| scan_exceptional(big, &dynamics, &region, cfg.t_max, base.substream(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rep = Report::new(&["trajectory", "hold_fraction", "intervals", "N_m", "evaluations", "events"]);
    let mut fractions = dynperc::rng::Moments::new();
    for (i, rec) in records.iter().enumerate() {
        fractions.push(rec.fraction());
        rep.row(vec![
            i.into(),
            rec.fraction().into(),
            rec.intervals.len().into(),
            rec.hit_blocks(cfg.m).into(),
            rec.evaluations.into(),
            rec.events.into(),
        ]);
    }
    let a1 = estimate_event(&ClusterEvent::one_arm(cfg.model, big), 0.5, cfg.samples, stream(cfg).substream(1));
    rep.note("hold_fraction_mean", fractions.mean);
    rep.note("hold_fraction_stderr", fractions.std_error());
    rep.note("alpha_1_static", a1.mean);
    rep.note("alpha_1_static_stderr", a1.std_error);
    rep.note("torus_side", u64::from(region.torus_side().unwrap_or(0)));
    Ok(rep)
}

fn describe_structure(annuli: &[dynperc::lattice::Annulus]) -> String {
    annuli
        .iter()
        .map(|a| {
            let kind = match a.kind {
                AnnulusKind::Centered => "centered",
                AnnulusKind::Interior => "interior",
                AnnulusKind::Side => "side",
                AnnulusKind::Corner => "corner",
                AnnulusKind::R0Decorating => "decorating",
            };
            format!("{kind}({},{};{},{})", a.center.x, a.center.y, a.inner, a.outer)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn structure_check(cfg: &ExperimentConfig) -> Run {
    let h = table_for(cfg)?;
    let m = walsh_transform(&h)?;
    let mut g = ChaCha8Rng::seed_from_u64(dynperc::rng::mix64(cfg.seed));
    let mut rep = Report::new(&["structure", "r0", "annuli", "lhs", "rhs", "rhs_stderr", "holds_3sigma"]);
    let mut violations = 0u64;
    for i in 0..cfg.instances {
        let s = random_tiny_structure(cfg.model, &mut g);
        let b = annulus_bound_check_measure(&m, &s, cfg.samples, stream(cfg).substream(i))?;
        let ok = b.holds_within(3.0);
        violations += u64::from(!ok);
        rep.row(vec![
            i.into(),
            s.r0.to_f64().into(),
            describe_structure(&s.annuli).into(),
            b.lhs.into(),
            b.rhs.mean.into(),
            b.rhs.std_error.into(),
            ok.into(),
        ]);
    }
    rep.note("violations", violations);
    Ok(rep)
}

type JpInstance = (BooleanTable, Vec<Vec<CellId>>, Vec<CellId>);

/// A random Boolean table on up to 10 cells of a row, with up to four
/// disjoint hit sets and an avoided set drawn from its cells.
fn random_jp_instance<R: Rng>(model: Model, rng: &mut R) -> Result<JpInstance, Error> {
    let n = rng.random_range(1..=10usize);
    let cells: Vec<CellId> = (0..n as i64)
        .map(|q| match model {
            Model::TriangularSite => CellId::new(q, 0),
            Model::SquareBond => CellId::new(2 * q + 1, 0),
        })
        .collect();
    let values: Vec<f64> = (0..1u32 << n).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
    let h = BooleanTable::new(model, cells.clone(), values)?;
    let n_sets = rng.random_range(0..=4usize);
    let mut hit = vec![Vec::new(); n_sets];
    let mut avoid = Vec::new();
    for c in cells {
        // each cell joins a hit set, the avoided set, or neither
        let slot = rng.random_range(0..n_sets + 2);
        if slot < n_sets {
            hit[slot].push(c);
        } else if slot == n_sets {
            avoid.push(c);
        }
    }
    Ok((h, hit, avoid))
}

fn jp_check(cfg: &ExperimentConfig) -> Run {
    let mut rep = Report::new(&["instance", "n", "sets", "lhs", "rhs", "abs_diff"]);
    let mut worst = 0.0f64;
    for i in 0..cfg.instances {
        let mut g = stream(cfg).substream(i).rng();
        let (h, hit, avoid) = random_jp_instance(cfg.model, &mut g)?;
        let r = jp_identity_check(&h, &hit, &avoid)?;
        worst = worst.max(r.max_abs_diff);
        rep.row(vec![i.into(), h.n().into(), hit.len().into(), r.lhs.into(), r.rhs.into(), r.max_abs_diff.into()]);
    }
    rep.note("max_abs_diff", worst);
    Ok(rep)
}

fn constants() -> Run {
    let mut rep = Report::new(&["alpha", "d_alpha", "d_alpha_exact"]);
    let alphas =
        [Ratio::new(0, 1), Ratio::new(1, 20), Ratio::new(1, 10), Ratio::new(3, 20), Ratio::new(1, 5), Ratio::new(1, 4), alpha_zero()];
    for a in alphas {
        let exact = d_of_alpha_exact(a)?;
        let approx = d_of_alpha(*a.numer() as f64 / *a.denom() as f64)?;
        rep.row(vec![a.to_string().into(), approx.into(), exact.to_string().into()]);
    }
    rep.note("alpha_0", alpha_zero().to_string());
    rep.note("alpha_0_decimal", 217.0 / 816.0);
    rep.note("d_limit", d_of_alpha_exact(Ratio::new(0, 1))?.to_string());
    Ok(rep)
}
