//! Exclusion dynamics: kernels, the graphical construction by pair
//! exchanges, evolved configurations, the set transition probabilities K_t
//! and the ε-sprinkled configuration.

mod events;
mod kernel;

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::lattice::{CellId, Region};
use crate::percolation::{sample_config_with, CellState, Configuration};
use crate::rng::{replicate, replicate_vec, Estimate, RngStream};

pub use events::{
    for_each_event, permutation_at, simulate_events, Event, EventLog, Permutation, PermutationCursor, EVENT_CAP,
};
pub use kernel::{build_kernel, kernel_row_sample, Kernel, KernelFamily, KERNEL_CELL_CAP};

/// A time evolution of configurations.
#[derive(Clone, Debug)]
pub enum Dynamics {
    /// Exchanges at rate K(e, f) for each pair; conserves the open count.
    Exclusion(Arc<Kernel>),
    /// Each cell resampled from the Bernoulli(p) law at the given rate.
    Iid { rate: f64, p: f64 },
}

impl Dynamics {
    pub fn exclusion(kernel: Kernel) -> Dynamics {
        Dynamics::Exclusion(Arc::new(kernel))
    }

    pub fn iid(p: f64) -> Dynamics {
        Dynamics::Iid { rate: 1.0, p }
    }

    /// A frozen dynamics: nothing ever changes.
    pub fn frozen() -> Dynamics {
        Dynamics::Iid { rate: 0.0, p: 0.5 }
    }

    fn check(&self, region: &Arc<Region>) -> Result<()> {
        match self {
            Dynamics::Exclusion(k) if !same_region(k.region(), region) => {
                Err(Error::RegionMismatch("configuration is not on the kernel's torus".into()))
            }
            Dynamics::Iid { rate, p } if !(*rate >= 0.0 && rate.is_finite() && (0.0..=1.0).contains(p)) => {
                Err(Error::InvalidParameter(format!("i.i.d. dynamics needs rate ≥ 0 and p in [0,1], got {rate}, {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for Dynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dynamics::Exclusion(k) => write!(f, "exclusion({})", k.family()),
            Dynamics::Iid { rate, p } => write!(f, "iid(rate={rate},p={p})"),
        }
    }
}

fn same_region(a: &Arc<Region>, b: &Arc<Region>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// One change of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Change {
    pub t: f64,
    /// Cell indices involved (equal for an i.i.d. resampling).
    pub a: usize,
    pub b: usize,
    /// Whether any state actually changed.
    pub flipped: bool,
}

/// A single path of a dynamics, generated event by event.
pub struct Trajectory<'d> {
    dynamics: &'d Dynamics,
    state: Configuration,
    t: f64,
    next: f64,
    clock: Option<Exp<f64>>,
    rng: ChaCha8Rng,
}

impl<'d> Trajectory<'d> {
    pub fn new(dynamics: &'d Dynamics, omega0: Configuration, rng: RngStream) -> Result<Self> {
        dynamics.check(omega0.region())?;
        let n = omega0.len() as f64;
        let rate = match dynamics {
            Dynamics::Exclusion(_) => n / 2.0,
            Dynamics::Iid { rate, .. } => n * rate,
        };
        let clock = (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"));
        let mut rng = rng.rng();
        let next = clock.map_or(f64::INFINITY, |c| c.sample(&mut rng));
        Ok(Trajectory { dynamics, state: omega0, t: 0.0, next, clock, rng })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &Configuration {
        &self.state
    }

    /// Applies the next change if it happens by `horizon`.
    pub fn step(&mut self, horizon: f64) -> Option<Change> {
        if self.next > horizon {
            return None;
        }
        let t = self.next;
        let n = self.state.len();
        let a = self.rng.random_range(0..n);
        let change = match self.dynamics {
            Dynamics::Exclusion(k) => {
                let b = k.sample_index(a, &mut self.rng);
                let (sa, sb) = (self.state.get(a), self.state.get(b));
                self.state.set(a, sb);
                self.state.set(b, sa);
                Change { t, a, b, flipped: sa != sb }
            }
            Dynamics::Iid { p, .. } => {
                let new = self.rng.random::<f64>() < *p;
                let old = self.state.get(a);
                self.state.set(a, new);
                Change { t, a, b: a, flipped: old != new }
            }
        };
        self.t = t;
        self.next = t + self.clock.expect("a clock when events happen").sample(&mut self.rng);
        Some(change)
    }

    /// Runs until time `t`.
    pub fn advance_to(&mut self, t: f64) -> &Configuration {
        while self.step(t).is_some() {}
        self.t = self.t.max(t);
        &self.state
    }
}

/// ω_t(e) = ω0(π_t^{-1}(e)) read lazily through a permutation.
pub struct PermutedView<'a> {
    pub omega0: &'a Configuration,
    pub perm: &'a Permutation,
}

impl CellState for PermutedView<'_> {
    #[inline]
    fn is_open(&self, c: CellId) -> bool {
        self.omega0.region().locate(c).is_some_and(|i| self.omega0.get(self.perm.inverse(i)))
    }
}

fn check_log_region(omega0: &Configuration, log: &EventLog) -> Result<()> {
    if same_region(omega0.region(), log.region()) {
        Ok(())
    } else {
        Err(Error::RegionMismatch("configuration and event log live on different regions".into()))
    }
}

/// ω_K(t): the configuration carried along the exchanges up to time t.
pub fn evolve(omega0: &Configuration, log: &EventLog, t: f64) -> Result<Configuration> {
    check_log_region(omega0, log)?;
    let perm = permutation_at(log, t)?;
    let mut out = omega0.clone();
    for e in 0..out.len() {
        out.set(e, omega0.get(perm.inverse(e)));
    }
    Ok(out)
}

/// i.i.d. dynamics at rate one: each cell is resampled from Bernoulli(p)
/// with probability 1 − e^{−t}.
pub fn iid_evolve<R: Rng + ?Sized>(omega0: &Configuration, t: f64, p: f64, rng: &mut R) -> Result<Configuration> {
    if !(t >= 0.0) || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("need t ≥ 0 and p in [0,1], got t = {t}, p = {p}")));
    }
    let touched = 1.0 - (-t).exp();
    let mut out = omega0.clone();
    for e in 0..out.len() {
        if rng.random::<f64>() < touched {
            out.set(e, rng.random::<f64>() < p);
        }
    }
    Ok(out)
}

/// ω0 with every cell involved in an exchange during (0, ε] forced open.
pub fn epsilon_sprinkle(omega0: &Configuration, log: &EventLog, eps: f64) -> Result<Configuration> {
    check_log_region(omega0, log)?;
    if !(0.0..=log.t_max()).contains(&eps) {
        return Err(Error::OutOfRange { t: eps, t_max: log.t_max() });
    }
    let mut out = omega0.clone();
    for (t, a, b) in log.raw() {
        if t > eps {
            break;
        }
        out.set(a, true);
        out.set(b, true);
    }
    Ok(out)
}

fn indices(region: &Region, cells: &[CellId]) -> Result<Vec<usize>> {
    let mut out = cells
        .iter()
        .map(|&c| region.locate(c).ok_or_else(|| Error::RegionMismatch(format!("{c:?} not in region"))))
        .collect::<Result<Vec<_>>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// K_t(S, S′) = P[π_t(S) = S′], by following the cells of S through
/// independent event logs.
pub fn estimate_kt(s: &[CellId], s2: &[CellId], kernel: &Kernel, t: f64, n_samples: u64, rng: RngStream) -> Result<Estimate> {
    let region = kernel.region();
    let from = indices(region, s)?;
    let to = indices(region, s2)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be finite and nonnegative")));
    }
    if from.len() != to.len() {
        return Ok(Estimate::exact(0.0, n_samples, rng));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(f64::from(u8::from(from == to)), n_samples, rng));
    }
    Ok(replicate(rng, n_samples, |_, r| {
        let mut pos = from.clone();
        for_each_event(kernel, t, r, |_, a, b| {
            for x in pos.iter_mut() {
                if *x == a {
                    *x = b;
                } else if *x == b {
                    *x = a;
                }
            }
        });
        pos.sort_unstable();
        f64::from(u8::from(pos == to))
    }))
}

fn parity(state: impl Fn(usize) -> bool, cells: &[usize]) -> f64 {
    if cells.iter().filter(|&&i| !state(i)).count() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Both sides of E[χ_S(ω(0)) χ_{S′}(ω(t))] = K_t(S, S′) under P_{1/2}, from
/// independent randomness: the left side from full evolved configurations,
/// the right side from [`estimate_kt`].
pub fn duality_check(
    s: &[CellId],
    s2: &[CellId],
    kernel: &Kernel,
    t: f64,
    n_samples: u64,
    rng: RngStream,
) -> Result<(Estimate, Estimate)> {
    let region = kernel.region().clone();
    let from = indices(&region, s)?;
    let to = indices(&region, s2)?;
    let rhs = estimate_kt(s, s2, kernel, t, n_samples, rng.substream(2))?;
    let lhs = replicate(rng.substream(1), n_samples, |_, r| {
        let omega0 = sample_config_with(region.clone(), 0.5, r);
        let mut perm = Permutation::identity(region.len());
        for_each_event(kernel, t, r, |_, a, b| perm.swap(a, b));
        parity(|i| omega0.get(i), &from) * parity(|i| omega0.get(perm.inverse(i)), &to)
    });
    Ok((lhs, rhs))
}

/// Frequency of an open target in the ε-sprinkled configuration given a
/// pattern on other cells, by rejection. `n_samples` counts all draws; the
/// estimate is over the accepted ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SprinkleReport {
    pub estimate: Estimate,
    pub accepted: u64,
    pub drawn: u64,
    /// p + (1 − p)ε/p.
    pub bound: f64,
}

pub fn sprinkle_conditional(
    kernel: &Kernel,
    p: f64,
    eps: f64,
    pattern: &[(CellId, bool)],
    target: CellId,
    n_samples: u64,
    rng: RngStream,
) -> Result<SprinkleReport> {
    if !(p > 0.0 && p <= 1.0) || !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("need p in (0,1] and ε ≥ 0, got {p}, {eps}")));
    }
    let region = kernel.region();
    let mut watched: Vec<CellId> = pattern.iter().map(|x| x.0).collect();
    watched.push(target);
    let idx = watched
        .iter()
        .map(|&c| region.locate(c).ok_or_else(|| Error::RegionMismatch(format!("{c:?} not in region"))))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != idx.len() {
        return Err(Error::Overlap("target and pattern cells must be distinct".into()));
    }
    let m = replicate_vec(rng, n_samples, 2, |_, r, out| {
        let mut open: Vec<bool> = idx.iter().map(|_| r.random::<f64>() < p).collect();
        for_each_event(kernel, eps, r, |_, a, b| {
            for (k, &i) in idx.iter().enumerate() {
                if i == a || i == b {
                    open[k] = true;
                }
            }
        });
        if pattern.iter().zip(&open).all(|(x, &o)| x.1 == o) {
            out[0] = 1.0;
            out[1] = f64::from(u8::from(open[idx.len() - 1]));
        }
    });
    let accepted = (m[0].mean * n_samples as f64).round() as u64;
    let hits = m[1].mean * n_samples as f64;
    let q = if accepted > 0 { hits / accepted as f64 } else { 0.0 };
    let se = if accepted > 1 { (q * (1.0 - q) / (accepted - 1) as f64).sqrt() } else { f64::INFINITY };
    Ok(SprinkleReport {
        estimate: Estimate { mean: q, std_error: se, n_samples: accepted, seed: rng },
        accepted,
        drawn: n_samples,
        bound: p + (1.0 - p) * eps / p,
    })
}
