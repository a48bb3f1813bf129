//! Time correlations of percolation observables under a dynamics, the
//! weighted time integrals of those correlations, the singular-operator
//! bound, the dimension constants d(α) and α₀, the η escape diagnostic and
//! scans of the times at which a one-arm event holds.

use std::collections::HashSet;
use std::sync::Arc;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, Kernel, KernelFamily, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{cell_center, origin_cell, CellId, Length, Model, Region};
use crate::percolation::{sample_config_with, CellState, ClusterEvent, Configuration, Observable};
use crate::rng::{replicate, replicate_vec, Estimate, RngStream};

/// t ↦ E[f(ω(0)) f(ω(t))] on a grid, ω(0) ~ P_{1/2}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<Estimate>,
    pub dynamics: String,
    pub f: String,
}

/// t_min·2^j for j = 0, 1, … up to 1 (t_min must be 2^{−m}), with 0
/// prepended when `with_zero` is set.
pub fn geometric_grid(t_min: f64, with_zero: bool) -> Result<Vec<f64>> {
    let m = -t_min.log2();
    if !(t_min > 0.0 && t_min <= 1.0) || m.fract() != 0.0 || m > 60.0 {
        return Err(Error::InvalidParameter(format!("t_min = {t_min} must be 2^-m with 0 ≤ m ≤ 60")));
    }
    let mut grid: Vec<f64> = (0..=m as i32).map(|j| t_min * f64::powi(2.0, j)).collect();
    if with_zero {
        grid.insert(0, 0.0);
    }
    Ok(grid)
}

/// Short description of an observable for output headers.
pub fn describe(f: &Observable) -> String {
    match f {
        Observable::Event(e) => format!("event(support={})", e.support().len()),
        Observable::Parity(c) => format!("parity({})", c.len()),
        Observable::Majority(c) => format!("majority({})", c.len()),
    }
}

/// Torus indices of `cells`, failing if two of them wrap onto the same cell.
fn embed_cells(region: &Region, cells: &[CellId]) -> Result<Vec<usize>> {
    let mut seen = HashSet::new();
    cells
        .iter()
        .map(|&c| {
            let i = region
                .locate(c)
                .ok_or_else(|| Error::Geometry(format!("{c:?} is not a cell of the region")))?;
            if !seen.insert(i) {
                return Err(Error::Geometry(format!("the support does not fit: {c:?} wraps onto another cell")));
            }
            Ok(i)
        })
        .collect()
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("time grid must be nonempty, finite and nonnegative".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Correlation curve from `n_samples` trajectories on `region`. Each
/// trajectory is evaluated at every grid time, so the values at different
/// times are correlated.
pub fn correlation_curve(
    f: &Observable,
    dynamics: &Dynamics,
    region: &Arc<Region>,
    t_grid: &[f64],
    n_samples: u64,
    rng: RngStream,
) -> Result<CorrelationCurve> {
    check_grid(t_grid)?;
    embed_cells(region, &f.support())?;
    // surfaces a region/kernel mismatch before the parallel loop
    Trajectory::new(dynamics, Configuration::uniform(region.clone(), false), rng)?;
    let moments = replicate_vec(rng, n_samples, t_grid.len(), |_, r, out| {
        let omega0 = sample_config_with(region.clone(), 0.5, r);
        let x = f.value(&omega0);
        if x == 0.0 {
            return;
        }
        let stream = RngStream::new(r.random(), 0);
        let mut path = Trajectory::new(dynamics, omega0, stream).expect("checked above");
        for (slot, &t) in out.iter_mut().zip(t_grid) {
            *slot = x * f.value(path.advance_to(t));
        }
    });
    Ok(CorrelationCurve {
        t_grid: t_grid.to_vec(),
        values: moments.iter().map(|m| m.estimate(rng)).collect(),
        dynamics: dynamics.to_string(),
        f: describe(f),
    })
}

/// ∫₀¹ t^{−γ} c(t) dt with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub gamma: f64,
    pub value: f64,
    /// Quadrature plus Monte Carlo error.
    pub error: f64,
    pub head: f64,
    pub quadrature_error: f64,
    pub mc_error: f64,
}

fn trapezoid_weights(ts: &[f64], gamma: f64) -> Vec<f64> {
    // in u = log t the integrand is t^{1−γ} c(t)
    let u: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let mut w = vec![0.0; ts.len()];
    for j in 0..ts.len() - 1 {
        let h = (u[j + 1] - u[j]) / 2.0;
        w[j] += h * ts[j].powf(1.0 - gamma);
        w[j + 1] += h * ts[j + 1].powf(1.0 - gamma);
    }
    w
}

/// Trapezoidal quadrature in log t over the positive grid points (which
/// must end at t = 1), plus the head t_min^{1−γ}/(1−γ)·c(t_min) for
/// [0, t_min]. The quadrature error is |I_h − I_2h| with I_2h on every
/// other point; the Monte Carlo error adds the weighted standard errors
/// linearly, since the curve values are correlated.
pub fn second_moment_integral(curve: &CorrelationCurve, gamma: f64) -> Result<Integral> {
    if gamma >= 1.0 {
        return Err(Error::DivergentHead(gamma));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must lie in [0, 1)")));
    }
    let pts: Vec<(f64, Estimate)> =
        curve.t_grid.iter().copied().zip(curve.values.iter().copied()).filter(|(t, _)| *t > 0.0).collect();
    if pts.len() < 2 || pts.last().map(|p| p.0) != Some(1.0) {
        return Err(Error::InvalidParameter("the grid needs at least two positive times and must end at 1".into()));
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let w = trapezoid_weights(&ts, gamma);
    let t_min = ts[0];
    let head_w = t_min.powf(1.0 - gamma) / (1.0 - gamma);
    let head = head_w * pts[0].1.mean;
    let fine: f64 = w.iter().zip(&pts).map(|(w, p)| w * p.1.mean).sum();

    // every other point counted from t = 1, keeping t_min
    let n = ts.len();
    let mut coarse_idx: Vec<usize> = (0..n).rev().step_by(2).collect();
    if *coarse_idx.last().unwrap() != 0 {
        coarse_idx.push(0);
    }
    coarse_idx.reverse();
    let coarse_ts: Vec<f64> = coarse_idx.iter().map(|&i| ts[i]).collect();
    let cw = trapezoid_weights(&coarse_ts, gamma);
    let coarse: f64 = cw.iter().zip(&coarse_idx).map(|(w, &i)| w * pts[i].1.mean).sum();

    let quadrature_error = (fine - coarse).abs();
    let mc_error = head_w * pts[0].1.std_error + w.iter().zip(&pts).map(|(w, p)| w * p.1.std_error).sum::<f64>();
    Ok(Integral {
        gamma,
        value: fine + head,
        error: quadrature_error + mc_error,
        head,
        quadrature_error,
        mc_error,
    })
}

/// Weights ν on a finite set E, a symmetric sub-stochastic matrix P and a
/// subset F.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularInstance {
    nu: Vec<f64>,
    p: Vec<Vec<f64>>,
    f: Vec<bool>,
}

const TOL: f64 = 1e-12;

impl SingularInstance {
    pub fn new(nu: Vec<f64>, p: Vec<Vec<f64>>, f: Vec<bool>) -> Result<SingularInstance> {
        let n = nu.len();
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if p.len() != n || f.len() != n || p.iter().any(|r| r.len() != n) {
            return bad("ν, P and F must have matching sizes");
        }
        if nu.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || nu.iter().sum::<f64>() > 1.0 + TOL {
            return bad("ν must be nonnegative with total mass at most 1");
        }
        for i in 0..n {
            if p[i].iter().any(|x| !(*x >= 0.0 && x.is_finite())) || p[i].iter().sum::<f64>() > 1.0 + TOL {
                return bad("P must be nonnegative with row sums at most 1");
            }
            if (0..n).any(|j| (p[i][j] - p[j][i]).abs() > TOL) {
                return bad("P must be symmetric");
            }
        }
        Ok(SingularInstance { nu, p, f })
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularReport {
    /// Σ_{x,y} √ν(x) √ν(y) P(x,y).
    pub lhs: f64,
    /// max_{x∈F} P(x, F), 0 for empty F.
    pub eta: f64,
    /// 1 − ν(F)/ν(E), 0 when ν(E) = 0.
    pub delta: f64,
    /// ν(E)(η + 2√δ).
    pub rhs: f64,
}

impl SingularReport {
    /// lhs ≤ rhs up to rounding.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-15
    }
}

pub fn singular_bound(inst: &SingularInstance) -> SingularReport {
    let n = inst.len();
    let root: Vec<f64> = inst.nu.iter().map(|x| x.sqrt()).collect();
    let mut lhs = 0.0;
    for i in 0..n {
        for j in 0..n {
            lhs += root[i] * root[j] * inst.p[i][j];
        }
    }
    let nu_e: f64 = inst.nu.iter().sum();
    let nu_f: f64 = (0..n).filter(|&i| inst.f[i]).map(|i| inst.nu[i]).sum();
    let delta = if nu_e > 0.0 { (1.0 - nu_f / nu_e).max(0.0) } else { 0.0 };
    let eta = (0..n)
        .filter(|&i| inst.f[i])
        .map(|i| (0..n).filter(|&j| inst.f[j]).map(|j| inst.p[i][j]).sum::<f64>())
        .fold(0.0, f64::max);
    SingularReport { lhs, eta, delta, rhs: nu_e * (eta + 2.0 * delta.sqrt()) }
}

/// A random instance: ν from normalized uniforms scaled by a uniform total
/// mass, P a random symmetric matrix scaled to a random maximal row sum,
/// F a random subset.
pub fn random_singular_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SingularInstance {
    let mut nu: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let total: f64 = nu.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let mass = rng.random::<f64>();
    nu.iter_mut().for_each(|x| *x *= mass / total);
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let x = if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() };
            p[i][j] = x;
            p[j][i] = x;
        }
    }
    let max_row = p.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    if max_row > 0.0 {
        let scale = rng.random::<f64>() / max_row;
        p.iter_mut().flatten().for_each(|x| *x *= scale);
    }
    let f = (0..n).map(|_| rng.random::<bool>()).collect();
    SingularInstance::new(nu, p, f).expect("valid by construction")
}

/// α₀ = 217/816.
pub fn alpha_zero() -> Ratio<i64> {
    Ratio::new(217, 816)
}

/// d(α) = 1 − (5/36)(1 − 68α/21)^{−1} in exact arithmetic.
pub fn d_of_alpha_exact(alpha: Ratio<i64>) -> Result<Ratio<i64>> {
    let one = Ratio::from_integer(1);
    if alpha < Ratio::from_integer(0) || alpha >= Ratio::new(21, 68) {
        return Err(Error::OutOfDomain(*alpha.numer() as f64 / *alpha.denom() as f64));
    }
    Ok(one - Ratio::new(5, 36) / (one - Ratio::new(68, 21) * alpha))
}

pub fn d_of_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..21.0 / 68.0).contains(&alpha) {
        return Err(Error::OutOfDomain(alpha));
    }
    Ok(1.0 - 5.0 / 36.0 / (1.0 - 68.0 / 21.0 * alpha))
}

/// Escape diagnostic for 2^k cells started in the box (−2^{kβ}, 2^{kβ})².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaReport {
    pub half_width: f64,
    /// Frequency of staying in the box at time t, per family of starting
    /// sets.
    pub families: Vec<(String, Estimate)>,
    /// The family with the largest frequency.
    pub max: Estimate,
}

/// Starting sets of `count` cells with centres in the open box: the cells
/// nearest the origin, a spread grid and a ring just inside the boundary.
fn eta_families(model: Model, box_cells: &[CellId], count: usize, half: f64) -> Vec<(String, Vec<CellId>)> {
    let pos = |c: CellId| {
        let (x, y) = cell_center(model, c);
        (x.to_f64(), y.to_f64())
    };
    let nearest = |targets: &[(f64, f64)]| -> Vec<CellId> {
        let mut taken = HashSet::new();
        for &(tx, ty) in targets {
            let best = box_cells
                .iter()
                .filter(|c| !taken.contains(*c))
                .min_by(|a, b| {
                    let (ax, ay) = pos(**a);
                    let (bx, by) = pos(**b);
                    ((ax - tx).hypot(ay - ty)).total_cmp(&(bx - tx).hypot(by - ty)).then(a.cmp(b))
                })
                .copied();
            if let Some(c) = best {
                taken.insert(c);
            }
        }
        let mut v: Vec<CellId> = taken.into_iter().collect();
        v.sort_unstable();
        v
    };
    let side = (count as f64).sqrt().ceil() as usize;
    let spacing = 2.0 * half / side as f64;
    let grid: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let (gx, gy) = (i % side, i / side);
            (-half + spacing * (gx as f64 + 0.5), -half + spacing * (gy as f64 + 0.5))
        })
        .collect();
    let inset = (half - 1.0).max(0.0);
    let ring: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            // walk the square of radius `inset` by arc length
            let s = 8.0 * inset * i as f64 / count as f64;
            let (leg, d) = ((s / (2.0 * inset)).floor(), s % (2.0 * inset));
            match leg as i32 {
                0 => (-inset + d, -inset),
                1 => (inset, -inset + d),
                2 => (inset - d, inset),
                _ => (-inset, inset - d),
            }
        })
        .collect();
    vec![
        ("clustered".to_string(), nearest(&[(0.0, 0.0)].repeat(count))),
        ("spread".to_string(), nearest(&grid)),
        ("boundary".to_string(), nearest(&ring)),
    ]
}

/// Frequency of π_t(S) ⊆ (−2^{kβ}, 2^{kβ})² for |S| = 2^k under the
/// exclusion dynamics of a power-law kernel, maximized over a few starting
/// sets. The set moves as 2^k particles jumping at rate one each, where a
/// jump onto another particle of the set leaves the set unchanged.
pub fn eta_bound_diag(kernel: &Kernel, k: u32, beta: f64, t: f64, n_samples: u64, rng: RngStream) -> Result<EtaReport> {
    if !matches!(kernel.family(), KernelFamily::PowerLaw { .. }) {
        return Err(Error::InvalidParameter("the η diagnostic needs a power-law kernel".into()));
    }
    if k > 16 || !(beta > 0.0 && beta.is_finite()) || !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("need k ≤ 16, β > 0 and t ≥ 0, got {k}, {beta}, {t}")));
    }
    let region = kernel.region();
    let model = region.model();
    let half = f64::powf(2.0, f64::from(k) * beta);
    let half_len = Length::from_f64((half * 24.0).ceil() / 24.0)?;
    let window = Region::window(model, half_len);
    let in_box = |c: CellId| {
        let (x, y) = cell_center(model, c);
        let (x, y) = (x.to_f64(), y.to_f64());
        x.abs() < half && y.abs() < half
    };
    let box_cells: Vec<CellId> = window.cells().iter().copied().filter(|&c| in_box(c)).collect();
    let box_idx = embed_cells(region, &box_cells).map_err(|_| {
        Error::Geometry(format!("the box of half-width {half} does not fit in the torus of side {:?}", region.torus_side()))
    })?;
    let count = 1usize << k;
    if box_cells.len() < count {
        return Err(Error::Geometry(format!("the box holds {} cells, fewer than 2^{k}", box_cells.len())));
    }
    let mut mask = vec![false; region.len()];
    box_idx.iter().for_each(|&i| mask[i] = true);

    let mut families = Vec::new();
    for (fi, (name, set)) in eta_families(model, &box_cells, count, half).into_iter().enumerate() {
        let start: Vec<usize> = set.iter().map(|&c| region.locate(c).expect("box cell")).collect();
        let est = if t == 0.0 {
            Estimate::exact(1.0, n_samples, rng.substream(fi as u64))
        } else {
            let exp = rand_distr::Exp::new(count as f64).expect("positive rate");
            replicate(rng.substream(fi as u64), n_samples, |_, r| {
                let mut pos = start.clone();
                let mut occupied: HashSet<usize> = start.iter().copied().collect();
                let mut now = 0.0;
                loop {
                    now += rand_distr::Distribution::sample(&exp, r);
                    if now > t {
                        break;
                    }
                    let j = r.random_range(0..count);
                    let to = kernel.sample_index(pos[j], r);
                    if occupied.insert(to) {
                        occupied.remove(&pos[j]);
                        pos[j] = to;
                    }
                }
                f64::from(u8::from(pos.iter().all(|&i| mask[i])))
            })
        };
        families.push((name, est));
    }
    let max = families.iter().map(|f| f.1).max_by(|a, b| a.mean.total_cmp(&b.mean)).expect("three families");
    Ok(EtaReport { half_width: half, families, max })
}

/// Times in [0, T] at which an event holds along one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldingRecord {
    pub t_max: f64,
    /// Maximal holding intervals, in time order.
    pub intervals: Vec<(f64, f64)>,
    /// Exchanges or resamplings applied.
    pub events: u64,
    /// Connectivity evaluations performed.
    pub evaluations: u64,
}

impl HoldingRecord {
    /// Lebesgue fraction of [0, T] during which the event holds.
    pub fn fraction(&self) -> f64 {
        if self.t_max == 0.0 {
            return f64::from(u8::from(!self.intervals.is_empty()));
        }
        self.intervals.iter().map(|(a, b)| b - a).sum::<f64>() / self.t_max
    }

    /// Number of k < ⌊mT⌋ such that [k/m, (k+1)/m] contains a holding time.
    pub fn hit_blocks(&self, m: u64) -> u64 {
        let blocks = (m as f64 * self.t_max).floor() as u64;
        let mut hit = vec![false; blocks as usize];
        for &(a, b) in &self.intervals {
            // closed blocks [k/m, (k+1)/m] meeting [a, b]
            let lo = ((a * m as f64).ceil() as u64).saturating_sub(1);
            let hi = (b * m as f64).floor() as u64;
            for k in lo..=hi.min(blocks.saturating_sub(1)) {
                let (s, e) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
                // holding intervals are [a, b); a single point counts at a
                if a <= e && (s < b || s == a) {
                    hit[k as usize] = true;
                }
            }
        }
        hit.iter().filter(|&&h| h).count() as u64
    }
}

/// Reads a configuration shifted by a lattice vector.
struct Shifted<'a> {
    state: &'a Configuration,
    by: CellId,
}

impl CellState for Shifted<'_> {
    fn is_open(&self, c: CellId) -> bool {
        self.state.is_open(c.translate(self.by))
    }
}

/// The lattice vector carrying the origin cell to `v`.
fn shift_to(model: Model, v: CellId) -> Result<CellId> {
    let o = origin_cell(model);
    let d = CellId::new(v.a - o.a, v.b - o.b);
    if model == Model::SquareBond && (d.a % 2 != 0 || d.b % 2 != 0) {
        return Err(Error::InvalidParameter(format!("{v:?} is not a translate of the origin edge")));
    }
    Ok(d)
}

/// Follows one trajectory from `omega0` over [0, T], re-evaluating the
/// event (translated by `shift`) exactly after every change that flips a
/// cell of its support.
pub fn holding_times(
    event: &ClusterEvent,
    shift: CellId,
    dynamics: &Dynamics,
    omega0: Configuration,
    t_max: f64,
    rng: RngStream,
) -> Result<HoldingRecord> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("T = {t_max} must be finite and nonnegative")));
    }
    let region = omega0.region().clone();
    let shifted: Vec<CellId> = event.support().iter().map(|c| c.translate(shift)).collect();
    let mut watched = vec![false; region.len()];
    embed_cells(&region, &shifted)?.into_iter().for_each(|i| watched[i] = true);
    let mut path = Trajectory::new(dynamics, omega0, rng)?;
    let eval = |s: &Configuration| event.holds(&Shifted { state: s, by: shift });
    let mut record = HoldingRecord { t_max, intervals: Vec::new(), events: 0, evaluations: 1 };
    let mut holding = eval(path.state()).then_some(0.0);
    while let Some(ch) = path.step(t_max) {
        record.events += 1;
        if !ch.flipped || !(watched[ch.a] || watched[ch.b]) {
            continue;
        }
        record.evaluations += 1;
        let now = eval(path.state());
        match (holding, now) {
            (None, true) => holding = Some(ch.t),
            (Some(start), false) => {
                record.intervals.push((start, ch.t));
                holding = None;
            }
            _ => {}
        }
    }
    if let Some(start) = holding {
        record.intervals.push((start, t_max));
    }
    Ok(record)
}

/// One trajectory from ω(0) ~ P_{1/2}, tracking the one-arm event of
/// [−R,R]².
pub fn scan_exceptional(
    r: Length,
    dynamics: &Dynamics,
    region: &Arc<Region>,
    t_max: f64,
    rng: RngStream,
) -> Result<HoldingRecord> {
    let mut g = rng.substream(0).rng();
    let omega0 = sample_config_with(region.clone(), 0.5, &mut g);
    let event = ClusterEvent::one_arm(region.model(), r);
    holding_times(&event, CellId::new(0, 0), dynamics, omega0, t_max, rng.substream(1))
}

/// Mean holding fraction over independent trajectories.
pub fn hold_fraction(
    r: Length,
    dynamics: &Dynamics,
    region: &Arc<Region>,
    t_max: f64,
    n_trajectories: u64,
    rng: RngStream,
) -> Result<Estimate> {
    let first = scan_exceptional(r, dynamics, region, t_max, rng.substream(0))?;
    Ok(replicate(rng, n_trajectories, |i, _| {
        if i == 0 {
            return first.fraction();
        }
        scan_exceptional(r, dynamics, region, t_max, rng.substream(i)).expect("checked on the first trajectory").fraction()
    }))
}

/// N_m(v): the number of blocks [k/m, (k+1)/m], k < ⌊mT⌋, containing a
/// time at which v is connected to ∂(v + [−R,R]²).
pub fn nm_counts(
    v: CellId,
    r: Length,
    dynamics: &Dynamics,
    region: &Arc<Region>,
    m: u64,
    t_max: f64,
    rng: RngStream,
) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let model = region.model();
    let shift = shift_to(model, v)?;
    let mut g = rng.substream(0).rng();
    let omega0 = sample_config_with(region.clone(), 0.5, &mut g);
    let event = ClusterEvent::one_arm(model, r);
    Ok(holding_times(&event, shift, dynamics, omega0, t_max, rng.substream(1))?.hit_blocks(m))
}

/// The smallest even torus side on which the support of the one-arm event
/// of [−R,R]² embeds without wrapping onto itself.
pub fn fitting_torus(model: Model, r: Length) -> Result<Region> {
    let support = ClusterEvent::one_arm(model, r).support().to_vec();
    let mut l = 4u32;
    loop {
        let region = Region::torus(model, l)?;
        if embed_cells(&region, &support).is_ok() {
            return Ok(region);
        }
        l += 2;
    }
}
