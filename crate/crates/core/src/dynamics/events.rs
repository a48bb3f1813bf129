//! Timed exchange events, the permutation π_t they generate, and the
//! binary event-log format.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::lattice::{CellId, Model, Region};
use crate::rng::RngStream;

use super::kernel::Kernel;

/// Largest number of events a single log may hold.
pub const EVENT_CAP: usize = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub a: CellId,
    pub b: CellId,
}

/// A time-sorted list of pair exchanges on a torus, stored as cell indices.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    region: Arc<Region>,
    t_max: f64,
    rng: RngStream,
    times: Vec<f64>,
    pairs: Vec<(u32, u32)>,
}

/// Calls `f(t, a, b)` for each exchange up to `t_max`, in time order. The
/// exchange clock runs at total rate N/2: each ring picks a uniform cell a
/// and a partner b ~ K(a, ·), so each unordered pair rings at rate K(a, b).
pub fn for_each_event<R: Rng + ?Sized>(kernel: &Kernel, t_max: f64, rng: &mut R, mut f: impl FnMut(f64, usize, usize)) {
    let n = kernel.region().len();
    if n == 0 || t_max <= 0.0 {
        return;
    }
    let clock = Exp::new(n as f64 / 2.0).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += clock.sample(rng);
        if t > t_max {
            return;
        }
        let a = rng.random_range(0..n);
        let b = kernel.sample_index(a, rng);
        f(t, a, b);
    }
}

/// The event log of the exclusion dynamics on `[0, t_max]`.
pub fn simulate_events(kernel: &Kernel, t_max: f64, rng: RngStream) -> Result<EventLog> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max} must be finite and nonnegative")));
    }
    let expected = kernel.region().len() as f64 * t_max / 2.0;
    if expected > EVENT_CAP as f64 / 2.0 {
        return Err(Error::SizeCap { what: "expected events", size: expected as usize, cap: EVENT_CAP / 2 });
    }
    let mut log = EventLog {
        region: kernel.region().clone(),
        t_max,
        rng,
        times: Vec::with_capacity(expected as usize + 16),
        pairs: Vec::with_capacity(expected as usize + 16),
    };
    let mut r = rng.rng();
    for_each_event(kernel, t_max, &mut r, |t, a, b| {
        log.times.push(t);
        log.pairs.push((a as u32, b as u32));
    });
    Ok(log)
}

impl EventLog {
    /// A log from explicit events, which must be strictly increasing in time,
    /// inside (0, t_max], and join distinct cells of `region`.
    pub fn from_events(region: Arc<Region>, t_max: f64, events: &[Event]) -> Result<EventLog> {
        let mut log =
            EventLog { region: region.clone(), t_max, rng: RngStream::new(0, 0), times: Vec::new(), pairs: Vec::new() };
        let mut last = 0.0;
        for e in events {
            let a = region.locate(e.a).ok_or_else(|| Error::RegionMismatch(format!("{:?} not in region", e.a)))?;
            let b = region.locate(e.b).ok_or_else(|| Error::RegionMismatch(format!("{:?} not in region", e.b)))?;
            log.push(&mut last, e.t, a as u32, b as u32)?;
        }
        Ok(log)
    }

    fn push(&mut self, last: &mut f64, t: f64, a: u32, b: u32) -> Result<()> {
        if !(t > *last && t <= self.t_max) {
            return Err(Error::InvalidParameter(format!("event time {t} out of order or beyond {}", self.t_max)));
        }
        if a == b || a as usize >= self.region.len() || b as usize >= self.region.len() {
            return Err(Error::InvalidParameter(format!("bad event pair ({a}, {b})")));
        }
        *last = t;
        self.times.push(t);
        self.pairs.push((a, b));
        Ok(())
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn rng(&self) -> RngStream {
        self.rng
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Events as (time, index of a, index of b).
    pub fn raw(&self) -> impl Iterator<Item = (f64, usize, usize)> + '_ {
        self.times.iter().zip(&self.pairs).map(|(&t, &(a, b))| (t, a as usize, b as usize))
    }

    pub fn events(&self) -> impl Iterator<Item = Event> + '_ {
        self.raw().map(|(t, a, b)| Event { t, a: self.region.cell(a), b: self.region.cell(b) })
    }

    /// Number of events with time ≤ t.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Writes the log: a header (magic, model, torus side, t_max, stream,
    /// count) followed by one little-endian (f64 t, u32 a, u32 b) record per
    /// event.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let side = self.region.torus_side().unwrap_or(0);
        w.write_all(MAGIC)?;
        w.write_all(&model_code(self.region.model()).to_le_bytes())?;
        w.write_all(&side.to_le_bytes())?;
        w.write_all(&self.t_max.to_le_bytes())?;
        w.write_all(&self.rng.seed.to_le_bytes())?;
        w.write_all(&self.rng.stream_id.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (t, a, b) in self.raw() {
            w.write_all(&t.to_le_bytes())?;
            w.write_all(&(a as u32).to_le_bytes())?;
            w.write_all(&(b as u32).to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a log written by [`EventLog::write_to`], rebuilding its torus.
    pub fn read_from<R: Read>(mut r: R) -> Result<EventLog> {
        let io = |e: std::io::Error| Error::InvalidParameter(format!("event log: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::InvalidParameter("event log: bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut u32_ = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut b4).map_err(io)?;
            Ok(u32::from_le_bytes(b4))
        };
        let model = match u32_(&mut r)? {
            0 => Model::TriangularSite,
            1 => Model::SquareBond,
            m => return Err(Error::InvalidParameter(format!("event log: unknown model code {m}"))),
        };
        let side = u32_(&mut r)?;
        let mut u64_ = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8).map_err(io)?;
            Ok(u64::from_le_bytes(b8))
        };
        let t_max = f64::from_bits(u64_(&mut r)?);
        let rng = RngStream::new(u64_(&mut r)?, u64_(&mut r)?);
        let count = u64_(&mut r)? as usize;
        if count > EVENT_CAP {
            return Err(Error::SizeCap { what: "events", size: count, cap: EVENT_CAP });
        }
        let region = Arc::new(Region::torus(model, side)?);
        let mut log = EventLog { region, t_max, rng, times: Vec::with_capacity(count), pairs: Vec::with_capacity(count) };
        let mut rec = [0u8; 16];
        let mut last = 0.0;
        for _ in 0..count {
            r.read_exact(&mut rec).map_err(io)?;
            let t = f64::from_le_bytes(rec[0..8].try_into().unwrap());
            let a = u32::from_le_bytes(rec[8..12].try_into().unwrap());
            let b = u32::from_le_bytes(rec[12..16].try_into().unwrap());
            log.push(&mut last, t, a, b)?;
        }
        Ok(log)
    }
}

const MAGIC: &[u8; 8] = b"DPEVLOG1";

fn model_code(m: Model) -> u32 {
    match m {
        Model::TriangularSite => 0,
        Model::SquareBond => 1,
    }
}

/// π_t as index arrays: `forward[e]` is where the state that started at e
/// sits now, `inverse[f]` is where the state now at f started.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Permutation {
        let id: Vec<u32> = (0..n as u32).collect();
        Permutation { forward: id.clone(), inverse: id }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn forward(&self, e: usize) -> usize {
        self.forward[e] as usize
    }

    #[inline]
    pub fn inverse(&self, f: usize) -> usize {
        self.inverse[f] as usize
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &f)| i as u32 == f)
    }

    /// Exchanges the states at positions a and b.
    #[inline]
    pub fn swap(&mut self, a: usize, b: usize) {
        let ea = self.inverse[a];
        let eb = self.inverse[b];
        self.inverse.swap(a, b);
        self.forward[ea as usize] = b as u32;
        self.forward[eb as usize] = a as u32;
    }
}

/// π_t for a log; `t` must lie in [0, t_max].
pub fn permutation_at(log: &EventLog, t: f64) -> Result<Permutation> {
    let mut c = PermutationCursor::new(log);
    c.advance_to(t)?;
    Ok(c.into_permutation())
}

/// π_t advanced incrementally through a log, for increasing times.
#[derive(Clone, Debug)]
pub struct PermutationCursor<'a> {
    log: &'a EventLog,
    next: usize,
    t: f64,
    perm: Permutation,
}

impl<'a> PermutationCursor<'a> {
    pub fn new(log: &'a EventLog) -> Self {
        PermutationCursor { log, next: 0, t: 0.0, perm: Permutation::identity(log.region.len()) }
    }

    /// Applies the events in (current time, t]; times cannot go back.
    pub fn advance_to(&mut self, t: f64) -> Result<&Permutation> {
        if !(0.0..=self.log.t_max).contains(&t) {
            return Err(Error::OutOfRange { t, t_max: self.log.t_max });
        }
        if t < self.t {
            return Err(Error::InvalidParameter(format!("cursor at {} cannot move back to {t}", self.t)));
        }
        while self.next < self.log.len() && self.log.times[self.next] <= t {
            let (a, b) = self.log.pairs[self.next];
            self.perm.swap(a as usize, b as usize);
            self.next += 1;
        }
        self.t = t;
        Ok(&self.perm)
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn into_permutation(self) -> Permutation {
        self.perm
    }
}
