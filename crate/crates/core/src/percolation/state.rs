//! Percolation configurations and read-only views of cell states.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{CellId, Region};
use crate::rng::{cell_uniform53, threshold53, RngStream};

/// Anything that assigns open/closed to cells.
pub trait CellState {
    fn is_open(&self, c: CellId) -> bool;
}

impl<T: CellState + ?Sized> CellState for &T {
    fn is_open(&self, c: CellId) -> bool {
        (**self).is_open(c)
    }
}

/// Every cell has the same state.
#[derive(Clone, Copy, Debug)]
pub struct Uniform(pub bool);

impl CellState for Uniform {
    fn is_open(&self, _: CellId) -> bool {
        self.0
    }
}

/// State given by a closure.
pub struct FnState<F: Fn(CellId) -> bool>(pub F);

impl<F: Fn(CellId) -> bool> CellState for FnState<F> {
    fn is_open(&self, c: CellId) -> bool {
        (self.0)(c)
    }
}

/// A lazily evaluated P_p configuration on the whole plane: cell c is open
/// iff a keyed hash of c falls below p. Reads are order independent, so
/// large windows never need to be materialised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedConfig {
    pub key: u64,
    threshold: u64,
}

impl HashedConfig {
    pub fn new(key: u64, p: f64) -> Self {
        HashedConfig { key, threshold: threshold53(p) }
    }

    pub fn random<R: Rng>(rng: &mut R, p: f64) -> Self {
        Self::new(rng.random(), p)
    }
}

impl CellState for HashedConfig {
    #[inline]
    fn is_open(&self, c: CellId) -> bool {
        cell_uniform53(self.key, c.a, c.b) < self.threshold
    }
}

/// A ±1 assignment over a region, packed one bit per cell (1 = open).
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    region: Arc<Region>,
    bits: Vec<u64>,
}

impl Configuration {
    pub fn uniform(region: Arc<Region>, open: bool) -> Self {
        let n = region.len();
        let mut bits = vec![if open { u64::MAX } else { 0 }; n.div_ceil(64)];
        if open && !n.is_multiple_of(64) {
            if let Some(last) = bits.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        Configuration { region, bits }
    }

    pub fn from_fn(region: Arc<Region>, f: impl Fn(CellId) -> bool) -> Self {
        let mut c = Self::uniform(region.clone(), false);
        for (i, &cell) in region.cells().iter().enumerate() {
            if f(cell) {
                c.set(i, true);
            }
        }
        c
    }

    /// Copies another state onto this region.
    pub fn from_state(region: Arc<Region>, s: &impl CellState) -> Self {
        Self::from_fn(region, |c| s.is_open(c))
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.bits[i >> 6] >> (i & 63)) & 1 == 1
    }

    /// +1 for open, -1 for closed.
    pub fn spin(&self, i: usize) -> i8 {
        if self.get(i) {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, open: bool) {
        if open {
            self.bits[i >> 6] |= 1 << (i & 63);
        } else {
            self.bits[i >> 6] &= !(1 << (i & 63));
        }
    }

    pub fn set_cell(&mut self, c: CellId, open: bool) -> bool {
        match self.region.locate(c) {
            Some(i) => {
                self.set(i, open);
                true
            }
            None => false,
        }
    }

    pub fn open_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Pointwise order: every open cell of `self` is open in `other`.
    pub fn le(&self, other: &Configuration) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }
}

impl CellState for Configuration {
    /// Cells outside the region read as closed.
    #[inline]
    fn is_open(&self, c: CellId) -> bool {
        self.region.locate(c).is_some_and(|i| self.get(i))
    }
}

/// i.i.d. configuration with each cell open with probability p.
pub fn sample_config(region: Arc<Region>, p: f64, rng: RngStream) -> Configuration {
    let mut r = rng.rng();
    sample_config_with(region, p, &mut r)
}

pub fn sample_config_with<R: Rng>(region: Arc<Region>, p: f64, rng: &mut R) -> Configuration {
    let mut c = Configuration::uniform(region, false);
    for i in 0..c.len() {
        if rng.random::<f64>() < p {
            c.set(i, true);
        }
    }
    c
}
